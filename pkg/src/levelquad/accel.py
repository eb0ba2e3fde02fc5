"""Hot numeric loops with a numba path and a pure-numpy fallback.

The backend is chosen at import time: numba when it imports and the
environment variable ``LEVELQUAD_DISABLE_NUMBA`` is unset (or "0"),
numpy otherwise.  ``set_backend`` switches at runtime for tests and
benchmarks.

Both backends accumulate band terms into exact non-overlapping partials
(Shewchuk expansions), so a sum never depends on how the band was split
into blocks or how many workers produced them.
"""
import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

BUMP = 0
SHIFTED_BUMP = 1

# exp(x) underflows to 0 well before x = -745; clamp a little earlier
EXP_CLAMP = -700.0

_PARTIALS_CAP = 128


def _env_disabled():
    return os.environ.get("LEVELQUAD_DISABLE_NUMBA", "").strip() not in ("", "0")


_backend = "numba" if (numba is not None and not _env_disabled()) else "numpy"


def backend():
    return _backend


def set_backend(name):
    """Select "numba" or "numpy"; returns the previous backend name."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and numba is None:
        raise RuntimeError("numba is not installed")
    prev, _backend = _backend, name
    return prev


def _maybe_njit(func):
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)


# ---------------------------------------------------------------------------
# scalar weight, shared by both backends


def _weight_scalar(family, rho, r):
    if family == BUMP:
        if r <= 0.0 or r >= 1.0:
            return 0.0
        # 2 / ((2r - 1)^2 - 1) written so it cannot round to a zero divisor
        e = 1.0 / (2.0 * r * (r - 1.0))
    else:
        if r <= rho or r >= 1.0:
            return 0.0
        e = 1.0 / (2.0 * (r - 1.0) * (r - rho))
    if e <= EXP_CLAMP:
        return 0.0
    return math.exp(e)


_nb_weight_scalar = _maybe_njit(_weight_scalar)


def weight_values(family, rho, r):
    """Vectorised weight on an array of scaled arguments."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros(r.shape)
    if family == BUMP:
        inside = (r > 0.0) & (r < 1.0)
        ri = r[inside]
        denom = 2.0 * ri * (ri - 1.0)
    else:
        inside = (r > rho) & (r < 1.0)
        ri = r[inside]
        denom = 2.0 * (ri - 1.0) * (ri - rho)
    # subnormal distances to a support end overflow to -inf, which the clamp drops
    with np.errstate(over="ignore"):
        e = 1.0 / denom
    vals = np.zeros(e.shape)
    keep = e > EXP_CLAMP
    vals[keep] = np.exp(e[keep])
    out[inside] = vals
    return out


# ---------------------------------------------------------------------------
# exact partials


def _grow(partials, n, x):
    i = 0
    for j in range(n):
        y = partials[j]
        if abs(x) < abs(y):
            x, y = y, x
        hi = x + y
        lo = y - (hi - x)
        if lo != 0.0:
            partials[i] = lo
            i += 1
        x = hi
    if i >= partials.shape[0]:
        raise ValueError("expansion buffer overflow")
    partials[i] = x
    return i + 1


_nb_grow = _maybe_njit(_grow)


if numba is not None:

    @numba.njit(cache=True, nogil=True)
    def _nb_partials(values):
        partials = np.zeros(_PARTIALS_CAP)
        n = 0
        for k in range(values.shape[0]):
            n = _nb_grow(partials, n, values[k])
        return partials[:n].copy()

    @numba.njit(cache=True, nogil=True)
    def _nb_kernel_partials(arg, mult, family, rho, coeffs, scale):
        partials = np.zeros(_PARTIALS_CAP)
        n = 0
        m = coeffs.shape[0]
        for k in range(arg.shape[0]):
            r = arg[k]
            w = _nb_weight_scalar(family, rho, r)
            if w == 0.0:
                continue
            p = coeffs[m - 1]
            for j in range(m - 2, -1, -1):
                p = p * r + coeffs[j]
            n = _nb_grow(partials, n, (mult[k] * (w * p)) * scale)
        return partials[:n].copy()


def _np_partials(values):
    # Each fsum returns the correctly rounded remainder of the exact sum,
    # so the collected remainders form an exact expansion.
    vals = np.asarray(values, dtype=np.float64).tolist()
    out = []
    for _ in range(_PARTIALS_CAP):
        s = math.fsum(vals + [-p for p in out])
        if s == 0.0:
            break
        out.append(s)
    else:  # pragma: no cover - cannot happen for finite doubles
        raise ValueError("expansion did not terminate")
    return np.array(out[::-1], dtype=np.float64)


def exact_partials(values):
    """Return float64 partials whose exact sum equals the exact sum of ``values``."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    if _backend == "numba":
        return _nb_partials(values)
    return _np_partials(values)


def merge_partials(parts):
    """Correctly rounded total of a sequence of partial arrays."""
    flat = []
    for p in parts:
        flat.extend(np.asarray(p, dtype=np.float64).tolist())
    return math.fsum(flat)


def kernel_partials(arg, mult, family, rho, coeffs, scale):
    """Exact partials of sum(mult * K(arg) * scale).

    ``K`` is weight(family, rho) times the polynomial with ascending
    coefficients ``coeffs``.
    """
    arg = np.ascontiguousarray(arg, dtype=np.float64)
    mult = np.ascontiguousarray(mult, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    if _backend == "numba":
        return _nb_kernel_partials(arg, mult, int(family), float(rho), coeffs, float(scale))
    w = weight_values(family, rho, arg)
    nz = w != 0.0
    r = arg[nz]
    p = np.full(r.shape, coeffs[-1])
    for c in coeffs[-2::-1]:
        p = p * r + c
    terms = (mult[nz] * (w[nz] * p)) * scale
    return _np_partials(terms)


# ---------------------------------------------------------------------------
# fast sweeping (Gauss-Seidel, Godunov upwind)


def _godunov2(a, b, h):
    if abs(a - b) >= h:
        return min(a, b) + h
    return 0.5 * (a + b + math.sqrt(2.0 * h * h - (a - b) * (a - b)))


_nb_godunov2 = _maybe_njit(_godunov2)


def _godunov3(a, b, c, h):
    # sort ascending
    if a > b:
        a, b = b, a
    if b > c:
        b, c = c, b
    if a > b:
        a, b = b, a
    x = a + h
    if x <= b:
        return x
    x = 0.5 * (a + b + math.sqrt(2.0 * h * h - (a - b) * (a - b)))
    if x <= c:
        return x
    s = a + b + c
    disc = s * s - 3.0 * (a * a + b * b + c * c - h * h)
    return (s + math.sqrt(max(disc, 0.0))) / 3.0


_nb_godunov3 = _maybe_njit(_godunov3)


def _make_sweep2d(godunov):
    def sweep2d(u, frozen, h, max_rounds, tol):
        nx, ny = u.shape
        inf = np.inf
        rounds = 0
        change = inf
        while rounds < max_rounds:
            change = 0.0
            for order in range(4):
                for ii in range(nx):
                    i = ii if (order & 1) == 0 else nx - 1 - ii
                    for jj in range(ny):
                        j = jj if (order & 2) == 0 else ny - 1 - jj
                        if frozen[i, j]:
                            continue
                        a = min(u[i - 1, j] if i > 0 else inf,
                                u[i + 1, j] if i < nx - 1 else inf)
                        b = min(u[i, j - 1] if j > 0 else inf,
                                u[i, j + 1] if j < ny - 1 else inf)
                        if a == inf and b == inf:
                            continue
                        new = godunov(a, b, h)
                        old = u[i, j]
                        if new < old:
                            if old - new > change:
                                change = old - new
                            u[i, j] = new
            rounds += 1
            if change <= tol:
                break
        return rounds, change
    return sweep2d


def _make_sweep3d(godunov):
    def sweep3d(u, frozen, h, max_rounds, tol):
        nx, ny, nz = u.shape
        inf = np.inf
        rounds = 0
        change = inf
        while rounds < max_rounds:
            change = 0.0
            for order in range(8):
                for ii in range(nx):
                    i = ii if (order & 1) == 0 else nx - 1 - ii
                    for jj in range(ny):
                        j = jj if (order & 2) == 0 else ny - 1 - jj
                        for kk in range(nz):
                            k = kk if (order & 4) == 0 else nz - 1 - kk
                            if frozen[i, j, k]:
                                continue
                            a = min(u[i - 1, j, k] if i > 0 else inf,
                                    u[i + 1, j, k] if i < nx - 1 else inf)
                            b = min(u[i, j - 1, k] if j > 0 else inf,
                                    u[i, j + 1, k] if j < ny - 1 else inf)
                            c = min(u[i, j, k - 1] if k > 0 else inf,
                                    u[i, j, k + 1] if k < nz - 1 else inf)
                            if a == inf and b == inf and c == inf:
                                continue
                            new = godunov(a, b, c, h)
                            old = u[i, j, k]
                            if new < old:
                                if old - new > change:
                                    change = old - new
                                u[i, j, k] = new
            rounds += 1
            if change <= tol:
                break
        return rounds, change
    return sweep3d


_py_sweep2d = _make_sweep2d(_godunov2)
_py_sweep3d = _make_sweep3d(_godunov3)
if numba is not None:
    _nb_sweep2d = numba.njit(cache=True, nogil=True)(_make_sweep2d(_nb_godunov2))
    _nb_sweep3d = numba.njit(cache=True, nogil=True)(_make_sweep3d(_nb_godunov3))


def sweep(u, frozen, h, max_rounds, tol):
    """Sweep ``u`` (unsigned distances, modified in place) to convergence.

    Returns ``(rounds, last_round_max_change)``.
    """
    if u.ndim not in (2, 3):
        raise ValueError("fast sweeping supports 2D and 3D grids")
    if _backend == "numba":
        fn = _nb_sweep2d if u.ndim == 2 else _nb_sweep3d
    else:
        fn = _py_sweep2d if u.ndim == 2 else _py_sweep3d
    rounds, change = fn(u, frozen, float(h), int(max_rounds), float(tol))
    return int(rounds), float(change)


def godunov_update(a, b, h, c=None):
    """Scalar Godunov solve for |grad d| = 1 from upwind neighbour minima."""
    if c is None:
        return _godunov2(a, b, h)
    return _godunov3(a, b, c, h)
