"""Registered convergence studies, observed orders and exponential fits."""
from __future__ import annotations

import csv
import enum
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import __version__
from .errors import FitFailed, ResourceCap
from .geometry import IntegrandKind, make_integrand, make_shape
from .grid import GridSpec, Side
from .kernels import named_kernel
from .quadrature import QuadratureJob, run_job
from .reference import reference_value

CSV_SCHEMA = "levelquad-convergence/1"
CSV_COLUMNS = ("series", "N", "h", "eps", "S_N", "reference", "rel_error",
               "observed_order", "band_count", "wall_time")

LADDER_2D = (100, 200, 400, 800, 1600, 3200)
MAX_3D_DEFAULT = 400
MAX_3D_HARD = 800


class StudyId(enum.Enum):
    TABLE1 = "table1"
    LIPSCHITZ_CIRCLE = "lipschitz-circle"
    TABLE2 = "table2"
    TABLE3 = "table3"
    TABLE4 = "table4"
    TABLE5 = "table5"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        if key in ("lipschitz", "lipschitzcircle"):
            key = "lipschitz-circle"
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown study {value!r}; choose from {names}") from None


@dataclass(frozen=True)
class SeriesDefinition:
    label: str
    shape: str
    r0: float
    kernel: str
    policy: str  # may contain the placeholders {a0} and {a0sq}
    side: str = "positive"
    shift: float = 0.0
    integrand: str = "one"
    center: Optional[tuple] = None
    extent: float = 1.0
    published_errors: tuple = ()


@dataclass(frozen=True)
class StudyDefinition:
    study: StudyId
    title: str
    ladder: tuple
    series: tuple
    fit_base: Optional[float] = None  # quoted base of an exponential error model
    needs_a0: bool = False


STUDIES = {
    StudyId.TABLE1: StudyDefinition(
        StudyId.TABLE1, "circle, quadratic level set, eps = 2 h^(1/2)", LADDER_2D,
        (SeriesDefinition("delta_inf_1", "circle-quadratic", 0.501, "bump:1", "2*h^0.5",
                          published_errors=(2.19034e-02, 1.22417e-02, 6.72509e-03, 3.61084e-03,
                                            1.90462e-03, 9.90744e-04)),
         SeriesDefinition("delta_inf_2", "circle-quadratic", 0.501, "bump:2", "2*h^0.5",
                          published_errors=(2.99384e-03, 1.53839e-03, 6.34199e-04, 2.55519e-04,
                                            9.96251e-05, 3.78689e-05)))),
    StudyId.LIPSCHITZ_CIRCLE: StudyDefinition(
        StudyId.LIPSCHITZ_CIRCLE, "circle distance, sawtooth integrand, eps = 2 N^(-1/2)", LADDER_2D,
        (SeriesDefinition("sawtooth", "circle-sdf", 0.501, "bump:2", "2*N^-0.5",
                          integrand="theta-sawtooth"),),
        fit_base=0.997),
    StudyId.TABLE2: StudyDefinition(
        StudyId.TABLE2, "cusped star, outer band, eps = 0.05", LADDER_2D,
        (SeriesDefinition("outer", "cusp-star", 0.75, "bump:1", "0.05",
                          published_errors=(7.04018e-3, 6.63514e-4, 4.43853e-5, 4.45564e-7,
                                            5.84085e-9, 3.74043e-12)),),
        fit_base=0.9954),
    StudyId.TABLE3: StudyDefinition(
        StudyId.TABLE3, "cornered inner offset of the star, eps = 3.4 N^(-2/3)", LADDER_2D,
        (SeriesDefinition("inner", "cusp-star", 0.75, "bump:2", "3.4*N^-2/3", side="negative",
                          shift=-0.05,
                          published_errors=(1.64925e-02, 8.63529e-03, 2.98334e-03, 1.08381e-03,
                                            3.34617e-04, 9.79520e-05)),)),
    StudyId.TABLE4: StudyDefinition(
        StudyId.TABLE4, "3D l1 ball, eps = 0.1", (100, 200, 400, 800),
        (SeriesDefinition("l1-ball", "l1-3d", 0.65, "bump:2", "0.1",
                          published_errors=(5.87232e-1, 2.63126e-2, 8.19894e-4, 5.23091e-6)),),
        fit_base=0.9875),
    StudyId.TABLE5: StudyDefinition(
        StudyId.TABLE5, "singular integrand on the l1 diamond", (200, 400, 800, 1600, 3200),
        (SeriesDefinition("phi1", "l1-2d", 1.0, "shifted:1:0.1", "{a0}*N^-0.475",
                          integrand="inv-sqrt", center=(0.0, 1.0), extent=1.5,
                          published_errors=(1.01552e-02, 8.84065e-03, 7.63649e-03, 6.55206e-03,
                                            5.59749e-03)),
         SeriesDefinition("phi2", "l1-squared", 1.0, "shifted:1:0.1", "{a0sq}*N^-0.95",
                          integrand="inv-sqrt", center=(0.0, 1.0), extent=1.5,
                          published_errors=(1.77161e-02, 9.47018e-03, 4.62084e-03, 1.51821e-03,
                                            4.30993e-04))),
        needs_a0=True),
}


def get_study(study):
    return STUDIES[StudyId.parse(study)]


# ---------------------------------------------------------------------------
# reports


@dataclass
class ReportRow:
    n: int
    h: float
    eps: float
    value: float
    reference: float
    rel_error: float
    observed_order: Optional[float]
    band_count: int
    wall_time: float


@dataclass
class SeriesReport:
    label: str
    policy: str
    rows: list = field(default_factory=list)
    published_errors: tuple = ()
    fit: Optional[tuple] = None  # (C, alpha)

    @property
    def ladder(self):
        return [r.n for r in self.rows]

    @property
    def errors(self):
        return [r.rel_error for r in self.rows]

    @property
    def orders(self):
        return observed_orders(self.errors, self.ladder)


@dataclass
class ConvergenceReport:
    study: StudyId
    title: str
    series: list

    def __getitem__(self, label):
        for s in self.series:
            if s.label == label:
                return s
        raise KeyError(label)


def observed_orders(errors, ladder):
    """log2(e_i / e_{i+1}) between consecutive rungs of a doubling ladder.

    Pairs with a non-positive error give NaN.
    """
    errors = list(errors)
    ladder = list(ladder)
    if len(errors) != len(ladder):
        raise ValueError("errors and ladder differ in length")
    for a, b in zip(ladder, ladder[1:]):
        if b != 2 * a:
            raise ValueError("ladder must double at every step")
    out = []
    for a, b in zip(errors, errors[1:]):
        if a > 0 and b > 0:
            out.append(math.log2(a / b))
        else:
            out.append(float("nan"))
    return out


def exponential_fit(errors, ladder, monotone_tol=0.05):
    """Fit ``e_N = C alpha^N`` by least squares on ``log e``; returns (C, alpha)."""
    e = np.asarray(errors, dtype=np.float64)
    n = np.asarray(ladder, dtype=np.float64)
    if e.size != n.size:
        raise ValueError("errors and ladder differ in length")
    if e.size < 3 or np.any(~(e > 0)):
        raise FitFailed("need at least three positive errors")
    if np.any(e[1:] > e[:-1] * (1.0 + monotone_tol)):
        raise FitFailed("errors do not decrease monotonically")
    slope, intercept = np.polyfit(n, np.log(e), 1)
    return float(math.exp(intercept)), float(math.exp(slope))


# ---------------------------------------------------------------------------
# running


def _policy_text(series, a0):
    if "{" not in series.policy:
        return series.policy
    if a0 is None:
        raise ValueError("this study needs a0 (see calibrate_a0)")
    return series.policy.format(a0=repr(float(a0)), a0sq=repr(float(a0) ** 2))


def _build_job(series, n, a0=None, workers=1):
    shape = make_shape(series.shape, series.r0)
    integrand = make_integrand(series.integrand, series.center)
    grid = GridSpec(shape.dim, n, series.extent)
    return QuadratureJob(shape, named_kernel(series.kernel), _policy_text(series, a0), grid,
                         integrand, Side.parse(series.side), series.shift, workers)


def series_reference(series):
    shape = make_shape(series.shape, series.r0)
    return reference_value(shape.shape, IntegrandKind(series.integrand), series.shift, series.center)


def check_resource(dim, n, allow_large=False):
    if dim == 3:
        if n > MAX_3D_HARD:
            raise ResourceCap(f"3D grids are capped at N={MAX_3D_HARD}")
        if n > MAX_3D_DEFAULT and not allow_large:
            raise ResourceCap(f"3D N={n} exceeds {MAX_3D_DEFAULT}; pass allow_large to opt in")


def run_series(series, ladder, a0=None, workers=1, allow_large=False):
    ref = series_reference(series)
    out = SeriesReport(series.label, _policy_text(series, a0),
                       published_errors=series.published_errors)
    prev = None
    for n in ladder:
        job = _build_job(series, n, a0, workers)
        check_resource(job.grid.dim, n, allow_large)
        res = run_job(job)
        err = abs(res.value - ref) / abs(ref)
        order = math.log2(prev / err) if prev and err > 0 else None
        out.rows.append(ReportRow(n, job.grid.spacing, res.eps, res.value, ref, err, order,
                                  res.band_count, res.wall_time))
        prev = err
    return out


def run_study(study, max_n=None, ladder=None, a0=None, workers=1, allow_large=False):
    """Run a registered study and tabulate errors, orders and (if quoted) a fit.

    ``ladder`` replaces the registered N values; ``max_n`` truncates them.
    Table 4 stops at N=400 unless ``allow_large`` is set.
    """
    definition = get_study(study)
    if definition.needs_a0 and a0 is None:
        raise ValueError(f"study {definition.study.value} needs a0; run calibrate_a0 first")
    rungs = tuple(ladder) if ladder is not None else definition.ladder
    if ladder is None and definition.study is StudyId.TABLE4 and not allow_large:
        rungs = tuple(n for n in rungs if n <= MAX_3D_DEFAULT)
    if max_n is not None:
        rungs = tuple(n for n in rungs if n <= max_n)
    if not rungs:
        raise ValueError("empty N ladder")
    report = ConvergenceReport(definition.study, definition.title, [])
    for series in definition.series:
        sr = run_series(series, rungs, a0, workers, allow_large)
        if definition.fit_base is not None and len(rungs) >= 3:
            try:
                sr.fit = exponential_fit(sr.errors, sr.ladder)
            except FitFailed as exc:
                warnings.warn(f"exponential fit for {sr.label} failed: {exc}", stacklevel=2)
        report.series.append(sr)
    return report


def calibrate_a0(target=1.01552e-02, n=200, bracket=(2.5, 3.5), xtol=1e-12):
    """Solve for the Table 5 constant so that the phi1 error at ``n`` equals ``target``."""
    series = STUDIES[StudyId.TABLE5].series[0]
    ref = series_reference(series)

    def gap(a0):
        res = run_job(_build_job(series, n, a0))
        return abs(res.value - ref) / ref - target

    lo, hi = bracket
    if gap(lo) * gap(hi) > 0:
        raise ValueError(f"target error is not bracketed by a0 in {bracket}")
    return brentq(gap, lo, hi, xtol=xtol)


# ---------------------------------------------------------------------------
# output


def _num(x):
    if x is None:
        return ""
    return repr(float(x))


def report_csv(report, timing=False):
    """CSV text for ``report``; ``wall_time`` stays empty unless ``timing``."""
    buf = io.StringIO()
    buf.write(f"# schema={CSV_SCHEMA} levelquad={__version__} study={report.study.value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in report.series:
        for r in s.rows:
            w.writerow((s.label, r.n, _num(r.h), _num(r.eps), _num(r.value), _num(r.reference),
                        _num(r.rel_error), _num(r.observed_order), r.band_count,
                        _num(r.wall_time) if timing else ""))
    return buf.getvalue()


def write_report_csv(report, path, timing=False):
    text = report_csv(report, timing)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def summary_text(report):
    """Plain-text table: one error row and one order row per series."""
    lines = [f"{report.study.value}: {report.title}"]
    for s in report.series:
        head = ["N=" + str(s.ladder[0])] + [str(n) for n in s.ladder[1:]]
        lines.append(f"  {s.label} (eps = {s.policy})")
        lines.append("    " + " ".join(f"{c:>12}" for c in head))
        lines.append("    " + " ".join(f"{e:12.5e}" for e in s.errors))
        orders = [""] + [f"{o:.1f}" for o in s.orders]
        lines.append("    " + " ".join(f"{o:>12}" for o in orders))
        if s.published_errors:
            pub = list(s.published_errors[:len(s.rows)])
            lines.append("    " + " ".join(f"{e:12.5e}" for e in pub) + "  (published)")
        if s.fit is not None:
            lines.append(f"    fit: error ~ {s.fit[0]:.3g} * {s.fit[1]:.5f}^N")
    return "\n".join(lines)
