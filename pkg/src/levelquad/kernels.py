"""Compactly supported averaging kernels with vanishing moments.

A kernel is ``delta(r) = w(r) * P(r)`` on ``[rho, 1]``, with ``w`` a smooth
bump weight and ``P`` a polynomial of degree ``m`` fixed by the moment
conditions

    int delta(r) r^p dr = 1 (p = 0),  0 (p = 1..m).

Two weight families are provided:

* ``BUMP``:          w(r) = exp(2 / ((2r - 1)^2 - 1))          on (0, 1)
* ``SHIFTED_BUMP``:  w(r) = exp(1 / (2 (r - 1)(r - rho)))      on (rho, 1)

The shifted weight is the bump transplanted onto ``(rho, 1)``; with
``rho = 0`` it coincides with ``BUMP``.  Both vanish to all orders at the
ends of their support.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numpy.polynomial.legendre import leggauss

from . import accel
from .errors import SingularMomentSystem

GL_NODES = 64
GL_SUBINTERVALS = 8
COND_LIMIT = 1e14


class WeightFamily(enum.Enum):
    BUMP = "bump"
    SHIFTED_BUMP = "shifted"

    @property
    def code(self):
        return accel.BUMP if self is WeightFamily.BUMP else accel.SHIFTED_BUMP

    @classmethod
    def parse(cls, name):
        key = str(name).strip().lower()
        aliases = {"bump": cls.BUMP, "shifted": cls.SHIFTED_BUMP,
                   "shifted-bump": cls.SHIFTED_BUMP, "shiftedbump": cls.SHIFTED_BUMP}
        if key not in aliases:
            raise ValueError(f"unknown weight family {name!r}")
        return aliases[key]


@dataclass(frozen=True)
class Kernel:
    family: WeightFamily
    support_lo: float
    coeffs: tuple  # ascending powers c0..cm
    vanishing_moments: int
    amplitude_exponent: int = 1
    residual: float = 0.0
    condition: float = field(default=1.0, compare=False)

    support_hi = 1.0

    @property
    def rho(self):
        return self.support_lo

    @property
    def label(self):
        if self.family is WeightFamily.BUMP:
            return f"bump:{self.vanishing_moments}"
        return f"shifted:{self.vanishing_moments}:{self.support_lo:g}"

    def __call__(self, r):
        return kernel_eval(self, r)


def weight_eval(family, r, rho=0.0):
    """Weight of ``family`` at ``r``; exactly 0 outside the open support."""
    family = WeightFamily(family)
    if np.ndim(r) == 0:
        return accel._weight_scalar(family.code, float(rho), float(r))
    return accel.weight_values(family.code, float(rho), r)


def gauss_legendre_rule(lo, hi, nsub=GL_SUBINTERVALS, npts=GL_NODES):
    """Composite Gauss-Legendre nodes and weights on [lo, hi]."""
    x, w = leggauss(npts)
    edges = np.linspace(lo, hi, nsub + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def build_kernel(family, m, rho=0.0):
    """Solve the weighted moment system for a degree-``m`` kernel."""
    family = WeightFamily(family)
    if int(m) != m or m < 1:
        raise ValueError("vanishing-moment count must be an integer >= 1")
    m = int(m)
    if not 0.0 <= rho < 1.0:
        raise ValueError("support_lo must lie in [0, 1)")
    if family is WeightFamily.BUMP and rho != 0.0:
        raise ValueError("the bump family is supported on (0, 1); use rho = 0")
    x, w = gauss_legendre_rule(rho, 1.0)
    wx = w * weight_eval(family, x, rho)
    powers = np.vander(x, 2 * m + 1, increasing=True)
    mom = wx @ powers
    gram = np.array([[mom[p + q] for q in range(m + 1)] for p in range(m + 1)])
    rhs = np.zeros(m + 1)
    rhs[0] = 1.0
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularMomentSystem(
            f"moment matrix for {family.value}, m={m}, rho={rho} has condition {cond:.3e}")
    lu, piv = scipy.linalg.lu_factor(gram)
    coeffs = scipy.linalg.lu_solve((lu, piv), rhs)
    residual = float(np.max(np.abs(gram @ coeffs - rhs)))
    return Kernel(family=family, support_lo=float(rho), coeffs=tuple(float(c) for c in coeffs),
                  vanishing_moments=m, residual=residual, condition=float(cond))


def kernel_eval(kernel, r):
    """delta(r) = w(r) P(r) on [rho, 1], 0 elsewhere."""
    scalar = np.ndim(r) == 0
    r = np.asarray(r, dtype=np.float64)
    w = weight_eval(kernel.family, r, kernel.support_lo)
    p = np.polynomial.polynomial.polyval(r, kernel.coeffs)
    out = np.where(w != 0.0, w * p, 0.0)
    return float(out) if scalar else out


def kernel_moment(kernel, p):
    """int_0^1 delta(r) r^p dr using the construction quadrature rule."""
    if p < 0 or p > 8:
        raise ValueError("moment order must be in 0..8")
    x, w = gauss_legendre_rule(kernel.support_lo, 1.0)
    return float(np.sum(w * kernel_eval(kernel, x) * x ** p))


def moment_table(kernel, pmax=None):
    pmax = kernel.vanishing_moments + 2 if pmax is None else pmax
    return [(p, kernel_moment(kernel, p)) for p in range(pmax + 1)]


def eval_scaled(kernel, eta, eps):
    """eps^-1 delta(eta / eps).  One-sided: pass -eta for the inner band."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return kernel_eval(kernel, np.asarray(eta, dtype=np.float64) / eps) / eps


def sample_kernel(kernel, n):
    """``n`` uniformly spaced samples of delta over [0, 1] (inclusive)."""
    r = np.linspace(0.0, 1.0, int(n))
    return r, kernel_eval(kernel, r)


_NAMED = {}


def parse_kernel_spec(spec):
    """Parse ``family:m[:rho]`` (e.g. ``bump:2``, ``shifted:1:0.1``)."""
    parts = str(spec).strip().split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"kernel spec {spec!r} must look like family:m[:rho]")
    family = WeightFamily.parse(parts[0])
    try:
        m = int(parts[1])
        rho = float(parts[2]) if len(parts) == 3 else (0.1 if family is WeightFamily.SHIFTED_BUMP else 0.0)
    except ValueError as exc:
        raise ValueError(f"bad kernel spec {spec!r}") from exc
    return family, m, rho


def named_kernel(spec):
    """Build (and memoise) a kernel from a ``family:m[:rho]`` string."""
    key = parse_kernel_spec(spec)
    if key not in _NAMED:
        _NAMED[key] = build_kernel(*key)
    return _NAMED[key]


def delta_inf_1():
    return named_kernel("bump:1")


def delta_inf_2():
    return named_kernel("bump:2")


def delta_rho_inf_1(rho=0.1):
    return named_kernel(f"shifted:1:{rho!r}")
