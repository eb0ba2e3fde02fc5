import math

import numpy as np
import pytest

from levelquad.errors import FitFailed, ResourceCap
from levelquad.reference import diamond_inv_sqrt_integral, reference_value, sawtooth_circle_integral
from levelquad.geometry import ShapeDescriptor, ShapeKind
from levelquad.studies import (CSV_COLUMNS, STUDIES, StudyId, check_resource, exponential_fit, get_study,
                               observed_orders, report_csv, run_study, summary_text)


def test_observed_orders_examples():
    assert observed_orders([4.0, 1.0], [100, 200]) == [2.0]
    assert observed_orders([3.0, 3.0], [100, 200]) == [0.0]
    assert math.isnan(observed_orders([1.0, 0.0], [100, 200])[0])
    with pytest.raises(ValueError):
        observed_orders([1.0, 0.5], [100, 300])


def test_table1_published_orders_from_published_errors():
    pub = get_study("table1").series[0].published_errors
    orders = observed_orders(pub, [100, 200, 400, 800, 1600, 3200])
    for got, printed in zip(orders, (0.8, 0.9, 0.9, 0.9, 0.9)):
        assert got == pytest.approx(printed, abs=0.05)


def test_exponential_fit_exact_model():
    n = np.array([100, 200, 400, 800])
    c, a = exponential_fit(3 * 0.99 ** n, n)
    assert a == pytest.approx(0.99, abs=1e-6) and c == pytest.approx(3.0, rel=1e-6)


def test_exponential_fit_failures():
    with pytest.raises(FitFailed):
        exponential_fit([1e-2, 1e-3], [100, 200])
    with pytest.raises(FitFailed):
        exponential_fit([1e-2, 2e-2, 1e-3], [100, 200, 400])
    with pytest.raises(FitFailed):
        exponential_fit([1e-2, 0.0, 1e-3], [100, 200, 400])


def test_published_table2_fit():
    pub = get_study("table2").series[0].published_errors
    _, a = exponential_fit(pub, [100, 200, 400, 800, 1600, 3200])
    assert 0.990 <= a <= 0.999


def test_registry_is_declarative():
    assert set(STUDIES) == set(StudyId)
    t5 = get_study("table5")
    assert t5.needs_a0 and {s.label for s in t5.series} == {"phi1", "phi2"}
    assert get_study("TABLE3").series[0].shift == -0.05
    with pytest.raises(ValueError):
        get_study("table9")


def test_references():
    assert reference_value(ShapeDescriptor(ShapeKind.CUSP_STAR_SDF, 0.75)) == pytest.approx(1.5 * math.pi)
    assert reference_value(ShapeDescriptor(ShapeKind.L1_BALL_3D, 0.65)) == pytest.approx(4 * math.sqrt(3) * 0.65 ** 2)
    assert sawtooth_circle_integral(1.0) == pytest.approx(math.pi ** 2)
    from scipy.integrate import quad
    saw = quad(lambda t: min(abs(t - 0.3), abs(t - 2 * math.pi - 0.3)), 0, 2 * math.pi, points=[0.3, math.pi + 0.3])[0]
    assert sawtooth_circle_integral(1.0) == pytest.approx(saw, rel=1e-12)


def test_singular_reference_against_independent_quadrature():
    from scipy.integrate import quad
    # the two upper edges pass through (0,1); the lower two do not
    upper = 2 * quad(lambda t: math.sqrt(2) * (2 * t * t) ** -0.25, 0, 1)[0]
    lower = 2 * quad(lambda t: math.sqrt(2) * (t * t + (t - 2) ** 2) ** -0.25, 0, 1, epsabs=1e-14)[0]
    assert diamond_inv_sqrt_integral() == pytest.approx(upper + lower, rel=1e-12)
    assert diamond_inv_sqrt_integral() == pytest.approx(6.986567423671652, rel=1e-14)


def test_resource_caps():
    check_resource(3, 400)
    check_resource(2, 6400)
    with pytest.raises(ResourceCap):
        check_resource(3, 800)
    check_resource(3, 800, allow_large=True)
    with pytest.raises(ResourceCap):
        check_resource(3, 1600, allow_large=True)
    with pytest.raises(ResourceCap):
        run_study("table4", ladder=(100, 200, 400, 800))


def test_table5_requires_a0():
    with pytest.raises(ValueError, match="a0"):
        run_study("table5", max_n=400)


def test_report_csv_is_deterministic_and_complete():
    a = run_study("table2", max_n=400, workers=1)
    b = run_study("table2", max_n=400, workers=3)
    assert report_csv(a) == report_csv(b)
    lines = report_csv(a).splitlines()
    assert lines[0].startswith("# schema=")
    assert lines[1] == ",".join(CSV_COLUMNS)
    assert len(lines) == 2 + 3
    assert lines[2].split(",")[7] == ""  # no order on the first rung
    assert lines[2].endswith(",")  # wall_time left empty
    assert "N=100" in summary_text(a)
    timed = report_csv(a, timing=True).splitlines()[2]
    assert float(timed.split(",")[-1]) >= 0


def test_table1_layout():
    r = run_study("table1", max_n=200)
    assert [s.label for s in r.series] == ["delta_inf_1", "delta_inf_2"]
    assert all(len(s.rows) == 2 for s in r.series)
    assert r["delta_inf_2"].rows[0].n == 100
