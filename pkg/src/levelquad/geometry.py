"""Analytic level-set fields, closest-point maps and test integrands.

Fields take points as an array of shape ``(..., dim)`` and return arrays of
shape ``(...)``.  Every shape is negative inside the region it encloses.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateArc, UndefinedGradient


class ShapeKind(enum.Enum):
    CIRCLE_QUADRATIC = "circle-quadratic"
    CIRCLE_SDF = "circle-sdf"
    SPHERE_SDF = "sphere-sdf"
    CUSP_STAR_SDF = "cusp-star"
    L1_BALL_2D = "l1-2d"
    L1_BALL_3D = "l1-3d"
    SQUARED_L1 = "l1-squared"
    POWER_OF_DISTANCE = "power-of-distance"


@dataclass(frozen=True)
class ShapeDescriptor:
    kind: ShapeKind
    r0: float
    psi_exponent: int = 1
    signed: bool = False

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")


@dataclass(frozen=True)
class ImplicitField:
    dim: int
    phi: Callable[[np.ndarray], np.ndarray]
    grad_norm: Callable[[np.ndarray], np.ndarray]
    is_distance: bool
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    shape: Optional[ShapeDescriptor] = None
    name: str = ""


class IntegrandKind(enum.Enum):
    CONSTANT_ONE = "one"
    THETA_SAWTOOTH = "theta-sawtooth"
    INVERSE_SQRT_AT = "inv-sqrt"


@dataclass(frozen=True)
class Integrand:
    f: Callable[[np.ndarray], np.ndarray]
    kind: IntegrandKind = IntegrandKind.CONSTANT_ONE
    center: Optional[tuple] = None
    singular_points: tuple = field(default_factory=tuple)

    def __call__(self, pts):
        return self.f(pts)


def _pts(p):
    p = np.asarray(p, dtype=np.float64)
    return p


def _check_radius(r0):
    if not 0.0 < r0 < 1.0:
        raise ValueError("r0 must lie in (0, 1)")


# ---------------------------------------------------------------------------
# circles and spheres


def make_circle_quadratic(r0):
    """phi = x^2 + y^2 - r0^2 (not a distance function)."""
    _check_radius(r0)

    def phi(p):
        p = _pts(p)
        return p[..., 0] ** 2 + p[..., 1] ** 2 - r0 * r0

    def grad_norm(p):
        p = _pts(p)
        return 2.0 * np.sqrt(p[..., 0] ** 2 + p[..., 1] ** 2)

    def grad(p):
        return 2.0 * _pts(p)[..., :2]

    return ImplicitField(2, phi, grad_norm, False, grad,
                         ShapeDescriptor(ShapeKind.CIRCLE_QUADRATIC, r0), "circle-quadratic")


def _ball_sdf(dim, r0, kind, name):
    _check_radius(r0)

    def phi(p):
        return np.linalg.norm(_pts(p)[..., :dim], axis=-1) - r0

    def grad_norm(p):
        return np.ones(_pts(p).shape[:-1])

    def grad(p):
        p = _pts(p)[..., :dim]
        n = np.linalg.norm(p, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return p / n

    return ImplicitField(dim, phi, grad_norm, True, grad, ShapeDescriptor(kind, r0), name)


def make_circle_sdf(r0):
    return _ball_sdf(2, r0, ShapeKind.CIRCLE_SDF, "circle-sdf")


def make_sphere_sdf(r0):
    return _ball_sdf(3, r0, ShapeKind.SPHERE_SDF, "sphere-sdf")


# ---------------------------------------------------------------------------
# four-cusped star of quarter circles

_DIAGONALS = ((1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0))


def star_arcs(r0):
    """Centres and endpoints of the four concave arcs.

    Arc k is the quarter of the circle of radius ``r0`` about ``(sx r0, sy r0)``
    that faces the origin; it runs from ``(sx r0, 0)`` to ``(0, sy r0)``, so
    neighbouring arcs meet tangentially in cusps on the axes.
    """
    arcs = []
    for sx, sy in _DIAGONALS:
        c = (sx * r0, sy * r0)
        arcs.append((c, (sx, sy), (sx * r0, 0.0), (0.0, sy * r0)))
    return arcs


def _star_parts(p, r0):
    x = p[..., 0]
    y = p[..., 1]
    best = np.full(x.shape, np.inf)
    gx = np.zeros(x.shape)
    gy = np.zeros(x.shape)
    inside = (np.abs(x) < r0) & (np.abs(y) < r0)
    for (cx, cy), (sx, sy), (ax, ay), (bx, by) in star_arcs(r0):
        vx = x - cx
        vy = y - cy
        rad = np.hypot(vx, vy)
        inside &= rad > r0
        on_arc = (vx * sx <= 0.0) & (vy * sy <= 0.0)
        da = np.hypot(x - ax, y - ay)
        db = np.hypot(x - bx, y - by)
        d = np.where(on_arc, np.abs(rad - r0), np.minimum(da, db))
        with np.errstate(invalid="ignore", divide="ignore"):
            # gradient of the unsigned distance to this arc
            s = np.sign(rad - r0)
            ux = np.where(on_arc, s * vx / rad, np.where(da <= db, (x - ax) / da, (x - bx) / db))
            uy = np.where(on_arc, s * vy / rad, np.where(da <= db, (y - ay) / da, (y - by) / db))
        closer = d < best
        best = np.where(closer, d, best)
        gx = np.where(closer, ux, gx)
        gy = np.where(closer, uy, gy)
    sign = np.where(inside, -1.0, 1.0)
    return sign * best, sign[..., None] * np.stack([gx, gy], axis=-1)


def make_cusp_star_sdf(r0=0.75):
    """Signed distance to the closed four-cusped star of quarter circles."""
    if not r0 > 0.0:
        raise DegenerateArc("arc radius must be positive")
    if r0 >= 1.0:
        raise ValueError("star must fit inside [-1, 1]^2")

    def phi(p):
        return _star_parts(_pts(p), r0)[0]

    def grad_norm(p):
        return np.ones(_pts(p).shape[:-1])

    def grad(p):
        return _star_parts(_pts(p), r0)[1]

    return ImplicitField(2, phi, grad_norm, True, grad,
                         ShapeDescriptor(ShapeKind.CUSP_STAR_SDF, r0), "cusp-star")


def star_length(r0, shift=0.0):
    """Length of the ``shift``-level set of the star's signed distance.

    Outside (shift >= 0) the offset is four arcs of radius r0 - shift plus
    four half circles of radius shift around the cusp tips.  Inside, the
    arcs of radius r0 + |shift| meet in four corners on the axes.
    """
    if shift >= 0.0:
        if shift >= r0:
            raise ValueError("outer offset must stay below r0")
        return 2.0 * math.pi * (r0 - shift) + 4.0 * math.pi * shift
    big = r0 - shift
    s = math.sqrt(big * big - r0 * r0)
    theta = 0.5 * math.pi - 2.0 * math.atan2(s, r0)
    if theta <= 0.0:
        raise ValueError("inner offset has collapsed")
    return 4.0 * big * theta


# ---------------------------------------------------------------------------
# l1 balls and their reparameterisations


def make_l1_ball(dim, r0):
    """phi = sum |x_i| - r0 with the gradient norm fixed at sqrt(dim).

    ``r0 = 1`` is allowed: the ball then touches the unit box and bands
    outside it need a grid with ``extent > 1``.
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    if not 0.0 < r0 <= 1.0:
        raise ValueError("r0 must lie in (0, 1]")
    g = math.sqrt(dim)

    def phi(p):
        return np.sum(np.abs(_pts(p)[..., :dim]), axis=-1) - r0

    def grad_norm(p):
        return np.full(_pts(p).shape[:-1], g)

    def grad(p):
        return np.sign(_pts(p)[..., :dim])

    kind = ShapeKind.L1_BALL_2D if dim == 2 else ShapeKind.L1_BALL_3D
    return ImplicitField(dim, phi, grad_norm, False, grad, ShapeDescriptor(kind, r0), kind.value)


def make_squared_variant(base):
    """sgn(phi) phi^2 for the 2D l1 field, with |grad| = sqrt(8 |phi|)."""
    if base.shape is None or base.shape.kind is not ShapeKind.L1_BALL_2D:
        raise ValueError("the squared variant is defined for the 2D l1 field")

    def phi(p):
        b = base.phi(p)
        return np.sign(b) * b * b

    def grad_norm(p):
        return np.sqrt(8.0 * np.abs(phi(p)))

    shape = ShapeDescriptor(ShapeKind.SQUARED_L1, base.shape.r0, psi_exponent=2, signed=True)
    return ImplicitField(2, phi, grad_norm, False, None, shape, "l1-squared")


def make_power_of_distance(base_sdf, psi_exponent, signed=False):
    """phi = psi(d) with psi(d) = d^q (odd q) or sgn(d) |d|^q."""
    if not base_sdf.is_distance:
        raise ValueError("base field must be a signed distance function")
    q = int(psi_exponent)
    if q != psi_exponent or q < 1:
        raise ValueError("psi exponent must be an integer >= 1")
    if q == 1:
        return base_sdf
    if q % 2 == 0 and not signed:
        raise ValueError("even exponents need the signed form to stay monotone")

    def phi(p):
        d = base_sdf.phi(p)
        if q % 2:
            return d ** q
        return np.sign(d) * np.abs(d) ** q

    def grad_norm(p):
        return q * np.abs(base_sdf.phi(p)) ** (q - 1)

    shape = None
    if base_sdf.shape is not None:
        shape = ShapeDescriptor(ShapeKind.POWER_OF_DISTANCE, base_sdf.shape.r0, q, signed)
    return ImplicitField(base_sdf.dim, phi, grad_norm, False, None, shape, "power-of-distance")


# ---------------------------------------------------------------------------


def closest_point(field, x, grad=None, tol=1e-6):
    """Project ``x`` onto the zero level set: x - d(x) grad d(x)."""
    if not field.is_distance:
        raise ValueError("closest_point needs a signed distance field")
    grad = field.grad if grad is None else grad
    if grad is None:
        raise UndefinedGradient("field has no gradient")
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(grad(x), dtype=np.float64)
    gn = np.linalg.norm(g, axis=-1)
    if not np.all(np.isfinite(gn)) or np.any(np.abs(gn - 1.0) > tol):
        raise UndefinedGradient("|grad d| deviates from 1 at the query point")
    d = np.asarray(field.phi(x))
    return x - d[..., None] * g


# ---------------------------------------------------------------------------
# integrands


def theta_sawtooth(p):
    p = _pts(p)
    theta = np.mod(np.arctan2(p[..., 1], p[..., 0]), 2.0 * np.pi)
    return np.minimum(np.abs(theta - 0.3), np.abs(theta - 2.0 * np.pi - 0.3))


def make_integrand(kind, center=None, singular_value=1e9):
    """Test integrands: constant one, the theta sawtooth, and 1/sqrt(|x - c|)."""
    kind = IntegrandKind(kind)
    if kind is IntegrandKind.CONSTANT_ONE:
        return Integrand(lambda p: np.ones(_pts(p).shape[:-1]), kind)
    if kind is IntegrandKind.THETA_SAWTOOTH:
        return Integrand(theta_sawtooth, kind)
    if center is None:
        raise ValueError("inv-sqrt integrand needs a centre point")
    c = np.asarray(center, dtype=np.float64)

    def f(p):
        r = np.linalg.norm(_pts(p)[..., :c.size] - c, axis=-1)
        with np.errstate(divide="ignore"):
            return np.where(r > 0.0, 1.0 / np.sqrt(r), singular_value)

    return Integrand(f, kind, tuple(float(v) for v in c), (tuple(float(v) for v in c),))


# ---------------------------------------------------------------------------
# registry


SHAPES = tuple(k.value for k in ShapeKind)

DEFAULT_RADIUS = {
    ShapeKind.CIRCLE_QUADRATIC: 0.501,
    ShapeKind.CIRCLE_SDF: 0.501,
    ShapeKind.SPHERE_SDF: 0.65,
    ShapeKind.CUSP_STAR_SDF: 0.75,
    ShapeKind.L1_BALL_2D: 1.0,
    ShapeKind.L1_BALL_3D: 0.65,
    ShapeKind.SQUARED_L1: 1.0,
    ShapeKind.POWER_OF_DISTANCE: 0.501,
}


def make_shape(name, r0=None, psi_exponent=3, signed=False):
    """Build a field from its registry name."""
    try:
        kind = ShapeKind(name)
    except ValueError:
        raise ValueError(f"unknown shape {name!r}; choose from {', '.join(SHAPES)}") from None
    r0 = DEFAULT_RADIUS[kind] if r0 is None else float(r0)
    if kind is ShapeKind.CIRCLE_QUADRATIC:
        return make_circle_quadratic(r0)
    if kind is ShapeKind.CIRCLE_SDF:
        return make_circle_sdf(r0)
    if kind is ShapeKind.SPHERE_SDF:
        return make_sphere_sdf(r0)
    if kind is ShapeKind.CUSP_STAR_SDF:
        return make_cusp_star_sdf(r0)
    if kind is ShapeKind.L1_BALL_2D:
        return make_l1_ball(2, r0)
    if kind is ShapeKind.L1_BALL_3D:
        return make_l1_ball(3, r0)
    if kind is ShapeKind.SQUARED_L1:
        return make_squared_variant(make_l1_ball(2, r0))
    return make_power_of_distance(make_circle_sdf(r0), psi_exponent, signed)
