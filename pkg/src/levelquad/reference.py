"""Exact surface measures and integrals used as references in studies."""
from __future__ import annotations

import functools
import math

import mpmath

from .geometry import IntegrandKind, ShapeKind, star_length


def circle_length(r0, shift=0.0):
    return 2.0 * math.pi * (r0 + shift)


def sphere_area(r0, shift=0.0):
    return 4.0 * math.pi * (r0 + shift) ** 2


def l1_area_3d(r0):
    """Eight equilateral triangles with side r0 sqrt(2)."""
    return 4.0 * math.sqrt(3.0) * r0 * r0


def l1_length_2d(r0):
    return 4.0 * math.sqrt(2.0) * r0


def sawtooth_circle_integral(r0):
    """Integral of min(|t - 0.3|, |t - 2 pi - 0.3|) around a circle of radius r0.

    On [0, 2 pi) the integrand is a tent of height pi over a period of
    length 2 pi, whose mean is pi / 2.
    """
    return math.pi * math.pi * r0


@functools.lru_cache(maxsize=None)
def diamond_inv_sqrt_integral(r0=1.0, cx=0.0, cy=1.0, dps=30):
    """Integral of 1/sqrt(|x - c|) over the l1 circle |x| + |y| = r0.

    Each of the four segments is parameterised by arclength and integrated
    with tanh-sinh quadrature, split at the foot of the singular point when
    it lies on the segment.
    """
    with mpmath.workdps(dps):
        r = mpmath.mpf(r0)
        c = (mpmath.mpf(cx), mpmath.mpf(cy))
        corners = [(r, 0), (0, r), (-r, 0), (0, -r)]
        total = mpmath.mpf(0)
        for k in range(4):
            a = corners[k]
            b = corners[(k + 1) % 4]
            ax, ay = mpmath.mpf(a[0]), mpmath.mpf(a[1])
            dx, dy = mpmath.mpf(b[0]) - ax, mpmath.mpf(b[1]) - ay
            seg = mpmath.sqrt(dx * dx + dy * dy)

            def f(t, ax=ax, ay=ay, dx=dx, dy=dy):
                px = ax + t * dx - c[0]
                py = ay + t * dy - c[1]
                return (px * px + py * py) ** mpmath.mpf(-0.25)

            # parameter of the closest point to c on the segment
            foot = ((c[0] - ax) * dx + (c[1] - ay) * dy) / (dx * dx + dy * dy)
            pts = [0, 1]
            if 0 < foot < 1:
                pts = [0, foot, 1]
            total += seg * mpmath.quad(f, pts, method="tanh-sinh")
        return float(total)


def reference_value(shape, integrand_kind=IntegrandKind.CONSTANT_ONE, shift=0.0, center=None):
    """Analytic (or high-precision) value of the integral over the shifted level set.

    ``shape`` is a :class:`~levelquad.geometry.ShapeDescriptor`.  ``shift``
    is measured in distance units for distance fields; the quadratic circle
    maps a level shift ``s`` to the radius ``sqrt(r0^2 + s)``.
    """
    kind = shape.kind
    r0 = shape.r0
    integrand_kind = IntegrandKind(integrand_kind)
    if integrand_kind is IntegrandKind.INVERSE_SQRT_AT:
        if kind not in (ShapeKind.L1_BALL_2D, ShapeKind.SQUARED_L1) or shift != 0.0:
            raise NotImplementedError("inverse-sqrt reference is available for the 2D l1 zero set")
        cx, cy = center if center is not None else (0.0, 1.0)
        return diamond_inv_sqrt_integral(r0, float(cx), float(cy))
    if integrand_kind is IntegrandKind.THETA_SAWTOOTH:
        if kind is ShapeKind.CIRCLE_SDF:
            return sawtooth_circle_integral(r0 + shift)
        if kind is ShapeKind.CIRCLE_QUADRATIC:
            return sawtooth_circle_integral(math.sqrt(r0 * r0 + shift))
        raise NotImplementedError("sawtooth reference is available for circles only")
    if kind is ShapeKind.CIRCLE_SDF:
        return circle_length(r0, shift)
    if kind is ShapeKind.CIRCLE_QUADRATIC:
        return circle_length(math.sqrt(r0 * r0 + shift))
    if kind is ShapeKind.SPHERE_SDF:
        return sphere_area(r0, shift)
    if kind is ShapeKind.CUSP_STAR_SDF:
        return star_length(r0, shift)
    if kind is ShapeKind.L1_BALL_2D:
        return l1_length_2d(r0 + shift)
    if kind is ShapeKind.L1_BALL_3D:
        return l1_area_3d(r0 + shift)
    if kind is ShapeKind.SQUARED_L1 and shift == 0.0:
        return l1_length_2d(r0)
    if kind is ShapeKind.POWER_OF_DISTANCE:
        q = shape.psi_exponent
        d = math.copysign(abs(shift) ** (1.0 / q), shift)
        return circle_length(r0, d)
    raise NotImplementedError(f"no reference for {kind.value} with shift {shift}")
