"""First-order redistancing by fast sweeping."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import accel
from .errors import NoInterface, NotConverged
from .grid import GridSpec


@dataclass
class DistanceGrid:
    grid: GridSpec
    values: np.ndarray  # signed distance estimates; inf where unknown
    frozen: np.ndarray
    sign: np.ndarray
    rounds: int = 0
    change: float = math.inf

    @property
    def unsigned(self):
        return np.abs(self.values)


def _shifted(a, axis, step):
    """``a`` shifted by ``step`` along ``axis``; vacated cells hold NaN."""
    out = np.full(a.shape, np.nan)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if step > 0:
        src[axis] = slice(step, None)
        dst[axis] = slice(None, -step)
    else:
        src[axis] = slice(None, step)
        dst[axis] = slice(-step, None)
    out[tuple(dst)] = a[tuple(src)]
    return out


def initialize_interface(grid, phi_samples):
    """Freeze the nodes next to a sign change at interpolated distances.

    Along each axis the crossing with a neighbour of opposite sign is
    located by linear interpolation.  The per-axis distances ``d_k`` are
    combined as ``(sum 1/d_k^2)^(-1/2)``, the exact distance to a plane
    crossing the axes at those points.
    """
    phi = np.asarray(phi_samples, dtype=np.float64)
    shape = (grid.n_nodes,) * grid.dim
    if phi.shape != shape:
        phi = phi.reshape(shape)
    if not np.all(np.isfinite(phi)):
        raise ValueError("phi samples must be finite")
    sign = np.sign(phi)
    if not (np.any(sign > 0) and np.any(sign < 0)) and not np.any(sign == 0):
        raise NoInterface("phi does not change sign on the grid")
    h = grid.spacing
    inv2 = np.zeros(shape)
    for axis in range(grid.dim):
        best = np.full(shape, np.inf)
        for step in (-1, 1):
            nb = _shifted(phi, axis, step)
            with np.errstate(invalid="ignore", divide="ignore"):
                cross = (phi * nb < 0.0)
                theta = np.where(cross, phi / (phi - nb), np.inf)
            best = np.minimum(best, np.where(cross, theta * h, np.inf))
        with np.errstate(divide="ignore"):
            inv2 += np.where(np.isfinite(best), 1.0 / (best * best), 0.0)
    frozen = inv2 > 0.0
    values = np.full(shape, np.inf)
    with np.errstate(divide="ignore"):
        values[frozen] = 1.0 / np.sqrt(inv2[frozen])
    zero = sign == 0
    values[zero] = 0.0
    frozen |= zero
    return DistanceGrid(grid, np.where(zero, 0.0, sign * values), frozen, sign)


def default_tolerance(grid):
    return 1e-12 * 2.0 * grid.extent * math.sqrt(grid.dim)


def fast_sweep(dg, max_rounds=50, tol=None):
    """Gauss-Seidel sweeps over all 2^dim orderings until the update stalls.

    Returns a new :class:`DistanceGrid`; frozen nodes keep their values.
    """
    tol = default_tolerance(dg.grid) if tol is None else float(tol)
    u = np.where(dg.frozen, np.abs(dg.values), np.inf)
    u = np.ascontiguousarray(u)
    frozen = np.ascontiguousarray(dg.frozen)
    rounds, change = accel.sweep(u, frozen, dg.grid.spacing, int(max_rounds), tol)
    if change > tol:
        raise NotConverged(change, rounds)
    sign = np.where(dg.sign == 0, 1.0, dg.sign)
    return DistanceGrid(dg.grid, sign * u, dg.frozen.copy(), dg.sign.copy(), rounds, change)


def redistance(grid, phi_samples, max_rounds=50, tol=None):
    return fast_sweep(initialize_interface(grid, phi_samples), max_rounds, tol)


def godunov_residual(dg):
    """Largest |Godunov update - value| over the non-frozen nodes."""
    u = np.abs(dg.values)
    h = dg.grid.spacing
    mins = []
    for axis in range(u.ndim):
        lo = _shifted(u, axis, -1)
        hi = _shifted(u, axis, 1)
        mins.append(np.fmin(np.nan_to_num(lo, nan=np.inf), np.nan_to_num(hi, nan=np.inf)))
    worst = 0.0
    for idx in zip(*np.nonzero(~dg.frozen)):
        args = [float(m[idx]) for m in mins]
        if u.ndim == 2:
            new = accel.godunov_update(args[0], args[1], h)
        else:
            new = accel.godunov_update(args[0], args[1], h, args[2])
        worst = max(worst, abs(new - float(u[idx])))
    return worst


def sample_field(grid, field):
    """Node values of ``field`` shaped ``(n_nodes,) * dim``."""
    return np.asarray(field.phi(grid.points()), dtype=np.float64).reshape((grid.n_nodes,) * grid.dim)
