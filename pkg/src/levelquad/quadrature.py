"""Narrow-band Riemann sums S_N and the level-set family diagnostic I(eta)."""
from __future__ import annotations

import enum
import math
import re
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import curve_fit

from . import accel
from .errors import (EmptyBand, EpsilonResolutionWarning, IllConditionedFit,
                     SingularOnBand)
from .geometry import ImplicitField, Integrand, make_integrand
from .grid import GridSpec, Side, iter_band_blocks
from .kernels import Kernel, named_kernel


# ---------------------------------------------------------------------------
# epsilon policies


class PolicyForm(enum.Enum):
    CONSTANT = "const"
    POWER_OF_H = "h"
    POWER_OF_N = "N"


_NUM = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_POLICY_RE = re.compile(
    rf"^\s*(?P<a>{_NUM})\s*(?:\*\s*(?P<var>[hN])\s*(?:\^\s*(?P<b>\(?\s*{_NUM}(?:\s*/\s*{_NUM})?\s*\)?))?)?\s*$")


def _exact(text):
    text = text.strip().strip("()").replace(" ", "")
    if "/" in text:
        num, den = text.split("/")
        return Fraction(num) / Fraction(den)
    return Fraction(text)


@dataclass(frozen=True)
class EpsilonPolicy:
    """eps = a (constant), a h^b, or a N^b.

    ``a`` and ``b`` are stored as exact fractions so that a policy string
    round-trips and ``-2/3`` means exactly minus two thirds.
    """
    form: PolicyForm
    a: Fraction
    b: Fraction = Fraction(0)

    @classmethod
    def parse(cls, text):
        if isinstance(text, EpsilonPolicy):
            return text
        if isinstance(text, (int, float)):
            text = repr(float(text))
        m = _POLICY_RE.match(str(text))
        if not m:
            raise ValueError(f"cannot parse eps policy {text!r}; expected a*h^b, a*N^b or a constant")
        a = _exact(m["a"])
        if a <= 0:
            raise ValueError("eps policy coefficient must be positive")
        if m["var"] is None:
            return cls(PolicyForm.CONSTANT, a)
        b = _exact(m["b"]) if m["b"] else Fraction(1)
        return cls(PolicyForm(m["var"]), a, b)

    @classmethod
    def constant(cls, c):
        return cls.parse(repr(float(c)))

    def evaluate(self, grid):
        n = grid.n_cells if isinstance(grid, GridSpec) else int(grid)
        if self.form is PolicyForm.CONSTANT:
            return float(self.a)
        base = 2.0 / n if self.form is PolicyForm.POWER_OF_H else float(n)
        return float(self.a) * base ** float(self.b)

    def __str__(self):
        if self.form is PolicyForm.CONSTANT:
            return _fmt(self.a)
        return f"{_fmt(self.a)}*{self.form.value}^{_fmt(self.b)}"


def _fmt(q):
    if q.denominator == 1:
        return str(q.numerator)
    as_float = float(q)
    if Fraction(repr(as_float)) == q:
        return repr(as_float)
    return f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# jobs


@dataclass(frozen=True)
class QuadratureJob:
    field: ImplicitField
    kernel: Kernel
    policy: EpsilonPolicy
    grid: GridSpec
    integrand: Integrand = None
    side: Side = Side.POSITIVE
    shift: float = 0.0
    workers: int = 1

    def __post_init__(self):
        if self.integrand is None:
            object.__setattr__(self, "integrand", make_integrand("one"))
        object.__setattr__(self, "side", Side.parse(self.side))
        object.__setattr__(self, "policy", EpsilonPolicy.parse(self.policy))
        if self.side is Side.BOTH:
            raise ValueError("a one-sided kernel needs side positive or negative")
        if self.field.dim != self.grid.dim:
            raise ValueError("field and grid dimensions differ")

    @property
    def eps(self):
        return self.policy.evaluate(self.grid)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    eps: float
    band_count: int
    wall_time: float


def _check_singular(job, eps):
    if job.kernel.support_lo > 0.0:
        return
    for c in job.integrand.singular_points:
        pt = np.asarray(c, dtype=np.float64)[None, :]
        level = float(job.field.phi(pt)[0]) - job.shift
        lo, hi = (0.0, eps) if job.side is Side.POSITIVE else (-eps, 0.0)
        if lo <= level <= hi:
            raise SingularOnBand(
                f"integrand is singular at {tuple(c)} inside the band; use a kernel with support_lo > 0")


def _block_partials(job, eps, block):
    if len(block) == 0:
        return np.zeros(0), 0
    sign = 1.0 if job.side is Side.POSITIVE else -1.0
    arg = sign * (block.phi - job.shift) / eps
    f = np.asarray(job.integrand(block.points), dtype=np.float64)
    g = np.asarray(job.field.grad_norm(block.points), dtype=np.float64)
    mult = f * g
    scale = job.grid.node_volume() / eps
    k = job.kernel
    parts = accel.kernel_partials(arg, mult, k.family.code, k.support_lo, k.coeffs, scale)
    return parts, len(block)


def run_job(job):
    """Evaluate S_N for ``job`` and return value, eps, band size and timing."""
    t0 = time.perf_counter()
    eps = job.eps
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    if eps < 2.0 * job.grid.spacing:
        warnings.warn(EpsilonResolutionWarning(
            f"eps={eps:.4g} is below 2h={2 * job.grid.spacing:.4g}; the band is under-resolved"),
            stacklevel=2)
    _check_singular(job, eps)
    blocks = iter_band_blocks(job.grid, job.field, eps, job.side, job.shift)
    if job.workers > 1:
        with ThreadPoolExecutor(max_workers=job.workers) as pool:
            results = list(pool.map(lambda b: _block_partials(job, eps, b), blocks))
    else:
        results = [_block_partials(job, eps, b) for b in blocks]
    count = sum(n for _, n in results)
    if count == 0:
        raise EmptyBand(f"no grid node within the band of width eps={eps:.4g}")
    value = accel.merge_partials(p for p, _ in results)
    return QuadratureResult(value, eps, count, time.perf_counter() - t0)


def integrate(job):
    """S_N = sum f eps^-1 delta(+-(phi - shift)/eps) |grad phi| h^dim over the band."""
    return run_job(job).value


def integrate_3d_surface(job):
    if job.grid.dim != 3:
        raise ValueError("integrate_3d_surface expects a 3D job")
    return integrate(job)


def integrate_singular(job):
    if not job.kernel.support_lo > 0.0:
        raise ValueError("singular integrands need a kernel whose support starts at rho > 0")
    return integrate(job)


# ---------------------------------------------------------------------------
# family functional I(eta)


@dataclass
class FitRecord:
    model: str
    coefficients: tuple
    residual: float
    degree: Optional[int] = None
    exponent: Optional[float] = None


@dataclass
class FamilyIntegralSamples:
    etas: np.ndarray
    values: np.ndarray
    fit: Optional[FitRecord] = None


def family_integral(field, integrand, eta, grid, probe_kernel=None, eps_probe=None,
                    symmetric=True, side=Side.POSITIVE, workers=1):
    """Estimate the integral of ``integrand`` over the ``eta`` level set.

    The default probe is the two-moment bump kernel at ``eps = 2 sqrt(h)``;
    narrower bands alias on the lattice.  ``eps_probe`` may also be a
    callable of ``eta``.  The estimate averages the two one-sided sums
    unless ``symmetric`` is off.
    """
    kernel = probe_kernel if probe_kernel is not None else named_kernel("bump:2")
    if eps_probe is None:
        eps = 2.0 * math.sqrt(grid.spacing)
    elif callable(eps_probe):
        eps = float(eps_probe(eta))
    else:
        eps = float(eps_probe)
    integrand = integrand if integrand is not None else make_integrand("one")
    policy = EpsilonPolicy.constant(eps)
    sides = (Side.POSITIVE, Side.NEGATIVE) if symmetric else (Side.parse(side),)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EpsilonResolutionWarning)
        vals = [integrate(QuadratureJob(field, kernel, policy, grid, integrand, s, eta, workers))
                for s in sides]
    return math.fsum(vals) / len(vals)


def sample_family(field, integrand, etas, grid, **kwargs):
    etas = np.asarray(etas, dtype=np.float64)
    vals = np.array([family_integral(field, integrand, float(e), grid, **kwargs) for e in etas])
    return FamilyIntegralSamples(etas, vals)


class FitModel(enum.Enum):
    POLYNOMIAL = "polynomial"
    POWER_LAW = "power-law"


def fit_family(samples, model=FitModel.POLYNOMIAL, degree=1, cond_limit=1e12):
    """Least-squares fit of I(eta).

    ``POLYNOMIAL`` fits ``sum A_i eta^i`` up to ``degree``.  ``POWER_LAW``
    fits ``c + B |eta|^gamma`` and reports ``gamma`` as the exponent.
    """
    model = FitModel(model)
    x = np.asarray(samples.etas, dtype=np.float64)
    y = np.asarray(samples.values, dtype=np.float64)
    if model is FitModel.POLYNOMIAL:
        if x.size < degree + 2:
            raise IllConditionedFit(f"need at least {degree + 2} samples for degree {degree}")
        vander = np.vander(x, degree + 1, increasing=True)
        if np.linalg.cond(vander) > cond_limit:
            raise IllConditionedFit("Vandermonde matrix is ill-conditioned")
        coef, *_ = np.linalg.lstsq(vander, y, rcond=None)
        resid = float(np.max(np.abs(vander @ coef - y)))
        rec = FitRecord("polynomial", tuple(float(c) for c in coef), resid, degree=degree)
    else:
        if x.size < 4:
            raise IllConditionedFit("need at least 4 samples for a power-law fit")
        ax = np.abs(x)
        if np.any(ax == 0.0):
            raise IllConditionedFit("power-law fit needs eta != 0")

        def law(t, c, b, g):
            return c + b * t ** g

        # start from a log-log slope of the increments
        dy = np.diff(y)
        guess_g = 0.5
        if np.all(dy != 0) and ax.size > 2:
            slopes = np.diff(np.log(np.abs(dy))) / np.diff(np.log(ax[1:]))
            if np.all(np.isfinite(slopes)):
                guess_g = float(np.clip(np.median(slopes) + 1.0, 0.05, 3.0))
        try:
            popt, pcov = curve_fit(law, ax, y, p0=(y[0], (y[-1] - y[0]) / (ax[-1] ** guess_g - ax[0] ** guess_g), guess_g),
                                   maxfev=20000)
        except (RuntimeError, ValueError) as exc:
            raise IllConditionedFit(f"power-law fit failed: {exc}") from exc
        if not np.all(np.isfinite(pcov)):
            raise IllConditionedFit("power-law fit covariance is not finite")
        resid = float(np.max(np.abs(law(ax, *popt) - y)))
        rec = FitRecord("power-law", tuple(float(c) for c in popt), resid, exponent=float(popt[2]))
    samples.fit = rec
    return rec


def with_workers(job, workers):
    return replace(job, workers=int(workers))
