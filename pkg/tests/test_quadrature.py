import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from levelquad import accel
from levelquad.errors import EmptyBand, EpsilonResolutionWarning, IllConditionedFit, SingularOnBand
from levelquad.geometry import (make_circle_quadratic, make_circle_sdf, make_cusp_star_sdf, make_integrand,
                                make_l1_ball, make_power_of_distance, make_sphere_sdf)
from levelquad.grid import GridSpec
from levelquad.kernels import named_kernel
from levelquad.quadrature import (EpsilonPolicy, FamilyIntegralSamples, FitModel, PolicyForm, QuadratureJob,
                                  family_integral, fit_family, integrate, integrate_3d_surface,
                                  integrate_singular, run_job, sample_family)

R0 = 0.501
CIRC = 2 * math.pi * R0


def _job(field, kernel="bump:1", policy="2*h^0.5", n=100, **kw):
    return QuadratureJob(field, named_kernel(kernel), policy, GridSpec(field.dim, n), **kw)


# --- policies ---------------------------------------------------------------

@pytest.mark.parametrize("text,n,expected", [
    ("2*h^0.5", 100, 2 * math.sqrt(0.02)),
    ("2*N^-0.5", 400, 0.1),
    ("3.4*N^-2/3", 1000, 0.034),
    ("3.4*N^(-2/3)", 1000, 0.034),
    ("0.05", 123, 0.05),
    ("1e-1", 10, 0.1),
    ("2*h", 100, 0.04),
])
def test_policy_evaluate(text, n, expected):
    assert EpsilonPolicy.parse(text).evaluate(n) == pytest.approx(expected, rel=1e-12)


def test_policy_exact_exponent_and_roundtrip():
    p = EpsilonPolicy.parse("3.4*N^-2/3")
    assert p.form is PolicyForm.POWER_OF_N and p.b == Fraction(-2, 3) and p.a == Fraction(17, 5)
    for text in ("2*h^0.5", "3.4*N^-2/3", "0.05", "2.97304624783949*N^-0.475"):
        assert EpsilonPolicy.parse(str(EpsilonPolicy.parse(text))) == EpsilonPolicy.parse(text)


@pytest.mark.parametrize("text", ["", "h^0.5", "2*x^2", "-1*h^0.5", "0", "2**h", "abc"])
def test_policy_rejects(text):
    with pytest.raises(ValueError):
        EpsilonPolicy.parse(text)


# --- sums -------------------------------------------------------------------

def test_table1_first_entry_within_five_percent():
    s = integrate(_job(make_circle_quadratic(R0)))
    assert abs(s / CIRC - 1) == pytest.approx(2.19034e-02, rel=0.05)


def test_smooth_circle_is_accurate_and_improves():
    errs = [abs(integrate(_job(make_circle_sdf(R0), n=n)) / CIRC - 1) for n in (100, 200, 400, 800)]
    assert max(errs) < 1e-6
    assert errs[-1] < 1e-7


def test_shift_consistency():
    f = make_circle_sdf(R0)
    for shift in (-0.1, 0.05, 0.1):
        for side in ("positive", "negative"):
            s = integrate(_job(f, n=400, side=side, shift=shift))
            assert s == pytest.approx(2 * math.pi * (R0 + shift), rel=2e-6)


def test_side_antisymmetry():
    f = make_circle_sdf(R0)
    for n in (100, 200, 400):
        sp = integrate(_job(f, n=n, side="positive"))
        sn = integrate(_job(f, n=n, side="negative"))
        assert abs(sp - sn) <= 2 * max(abs(sp - CIRC), abs(sn - CIRC))


def test_fixed_eps_refinement_guard():
    # from N=100 up; at N=50 (eps = 5h) the quadratic circle's lattice and
    # analytic errors cancel by accident, which would make any later rung look worse
    for field in (make_circle_sdf(R0), make_circle_quadratic(R0)):
        errs = [abs(integrate(_job(field, policy="0.2", n=n)) / CIRC - 1) for n in (100, 200, 400, 800, 1600)]
        assert all(b <= 2 * a for a, b in zip(errs, errs[1:]))


def test_star_outer_band_small_grid():
    s = integrate(_job(make_cusp_star_sdf(0.75), policy="0.05", n=400))
    assert abs(s / (1.5 * math.pi) - 1) < 1e-4


def test_workers_do_not_change_bits():
    jobs = [_job(make_l1_ball(3, 0.65), kernel="bump:2", policy="0.1", n=100),
            _job(make_cusp_star_sdf(0.75), policy="0.05", n=800)]
    for job in jobs:
        ref = run_job(job)
        for w in (2, 4, 7):
            res = run_job(QuadratureJob(job.field, job.kernel, job.policy, job.grid, job.integrand,
                                        job.side, job.shift, w))
            assert res.value == ref.value and res.band_count == ref.band_count


def test_backends_agree_on_sums():
    if accel.numba is None:
        pytest.skip("numba not installed")
    job = _job(make_circle_quadratic(R0), kernel="bump:2", n=400)
    got = {}
    for b in ("numba", "numpy"):
        prev = accel.set_backend(b)
        try:
            got[b] = integrate(job)
        finally:
            accel.set_backend(prev)
    assert got["numba"] == pytest.approx(got["numpy"], rel=1e-14)


def test_empty_band():
    f = make_circle_sdf(R0)
    g = GridSpec(2, 100)
    tiny = np.min(np.abs(f.phi(g.points()))) / 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(EmptyBand):
            integrate(QuadratureJob(f, named_kernel("bump:1"), repr(float(tiny)), g))


def test_under_resolved_eps_warns():
    with pytest.warns(EpsilonResolutionWarning):
        integrate(_job(make_circle_sdf(R0), policy="0.03", n=100))


def test_singular_point_in_band():
    f = make_circle_sdf(R0)
    inv = make_integrand("inv-sqrt", (0.6, 0.0))
    with pytest.raises(SingularOnBand):
        integrate(_job(f, policy="0.2", integrand=inv))
    # the shifted kernel skips the core of the band
    assert math.isfinite(integrate(_job(f, kernel="shifted:1:0.1", policy="0.2", integrand=inv)))
    # outside the active side it is harmless
    assert math.isfinite(integrate(_job(f, policy="0.2", integrand=inv, side="negative")))


def test_wrappers_validate():
    with pytest.raises(ValueError):
        integrate_3d_surface(_job(make_circle_sdf(R0)))
    with pytest.raises(ValueError):
        integrate_singular(_job(make_circle_sdf(R0)))
    area = integrate_3d_surface(_job(make_l1_ball(3, 0.65), kernel="bump:2", policy="0.1", n=200))
    assert abs(area / (4 * math.sqrt(3) * 0.65 ** 2) - 1) == pytest.approx(2.63126e-2, rel=1e-5)


def test_job_validation():
    with pytest.raises(ValueError):
        _job(make_circle_sdf(R0), side="both")
    with pytest.raises(ValueError):
        QuadratureJob(make_sphere_sdf(0.5), named_kernel("bump:1"), "0.1", GridSpec(2, 10))


# --- family functional ------------------------------------------------------

def test_family_integral_circle_examples():
    f = make_circle_sdf(R0)
    g = GridSpec(2, 400)
    assert family_integral(f, None, 0.0, g) == pytest.approx(CIRC, rel=1e-5)
    assert family_integral(f, None, 0.1, g) == pytest.approx(2 * math.pi * (R0 + 0.1), rel=1e-5)


def test_family_fit_circle_slope():
    samples = sample_family(make_circle_sdf(R0), None, np.linspace(-0.1, 0.1, 9), GridSpec(2, 400))
    fit = fit_family(samples, FitModel.POLYNOMIAL, 1)
    assert fit.coefficients[1] == pytest.approx(2 * math.pi, rel=0.01)
    assert fit.coefficients[0] == pytest.approx(CIRC, rel=1e-5)
    assert fit.residual <= 1e-6
    assert samples.fit is fit


def test_family_fit_sphere_quadratic():
    samples = sample_family(make_sphere_sdf(0.65), None, np.linspace(-0.05, 0.05, 7), GridSpec(3, 100))
    fit = fit_family(samples, "polynomial", 2)
    assert fit.coefficients[2] == pytest.approx(4 * math.pi, rel=0.02)
    assert fit.coefficients[1] == pytest.approx(8 * math.pi * 0.65, rel=0.02)


def test_family_power_law_for_cubed_distance():
    field = make_power_of_distance(make_circle_sdf(R0), 3)
    etas = np.geomspace(0.001, 0.03, 10)
    samples = sample_family(field, None, etas, GridSpec(2, 800), eps_probe=lambda e: 0.5 * e)
    fit = fit_family(samples, FitModel.POWER_LAW)
    assert fit.exponent == pytest.approx(1 / 3, rel=0.05)


def test_star_family_is_not_polynomial_near_cusps():
    # inner level sets of the star lose length like sqrt(|eta|); a low-degree fit degrades
    star = make_cusp_star_sdf(0.75)
    from levelquad.geometry import star_length
    far = np.linspace(-0.2, -0.1, 6)
    near = np.linspace(-0.06, -0.001, 6)
    def resid(etas):
        s = FamilyIntegralSamples(etas, np.array([star_length(0.75, e) for e in etas]))
        return fit_family(s, "polynomial", 2).residual
    assert resid(near) > 10 * resid(far)
    # the probe reproduces the offset-curve length away from the cusps
    g = GridSpec(2, 800)
    v = family_integral(star, None, -0.15, g, eps_probe=0.02)
    assert v == pytest.approx(star_length(0.75, -0.15), rel=1e-3)


def test_fit_errors():
    s = FamilyIntegralSamples(np.array([0.0, 0.1]), np.array([1.0, 2.0]))
    with pytest.raises(IllConditionedFit):
        fit_family(s, "polynomial", 1)
    s = FamilyIntegralSamples(np.array([0.0, 0.1, 0.2, 0.3]), np.ones(4))
    with pytest.raises(IllConditionedFit):
        fit_family(s, "power-law")
    s = FamilyIntegralSamples(np.full(5, 1e-9) + np.arange(5) * 1e-12, np.arange(5.0))
    with pytest.raises(IllConditionedFit):
        fit_family(s, "polynomial", 3)
