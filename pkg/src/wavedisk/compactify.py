"""Poincare-type compactification of the plane onto the closed upper hemisphere.

The plane embeds as y = (phi, psi, 1)/Delta with Delta = sqrt(phi^2 +
psi^2 + 1); the equator y3 = 0 is the circle at infinity. Four boundary
charts U1, V1, U2, V2 cover neighborhoods of the equator. In every
chart the first coordinate lam1 >= 0 marks distance from infinity
(lam1 = 0 on the equator) and lam2 is the direction coordinate:

    U1: phi =  1/lam1, psi =  lam2/lam1   (covers phi > 0)
    V1: phi = -1/lam1, psi = -lam2/lam1   (covers phi < 0)
    U2: phi =  lam2/lam1, psi =  1/lam1   (covers psi > 0)
    V2: phi = -lam2/lam1, psi = -1/lam1   (covers psi < 0)

With these conventions lam2 is the plain slope ratio (psi/phi on the
k=1 charts, phi/psi on the k=2 charts) on the U and V sides alike, so
the chart field of an odd-symmetric system is literally identical on
a chart and its antipodal partner.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .polyfield import BivariatePolynomial, PlanarSystem

__all__ = [
    "ChartId",
    "ChartSystem",
    "DiskPoint",
    "ChartDomainError",
    "DesingularizationError",
    "chart_system",
    "disk_embed",
    "disk_from_chart",
    "chart_coords",
    "chart_of_disk",
    "transition",
    "plane_from_chart",
    "boundary_chart_coords",
]

_NORM_TOL = 1e-12


class ChartDomainError(ValueError):
    """A disk point fed to a chart whose half-sphere does not contain it."""


class DesingularizationError(ValueError):
    """No finite power of lam1 clears the chart field's denominators."""


class ChartId(Enum):
    U1 = "U1"
    V1 = "V1"
    U2 = "U2"
    V2 = "V2"
    FINITE = "FINITE"


# defining axis (0 -> y1, 1 -> y2) and hemisphere sign of each boundary chart
_CHART_AXIS = {ChartId.U1: 0, ChartId.V1: 0, ChartId.U2: 1, ChartId.V2: 1}
_CHART_SIGN = {ChartId.U1: 1, ChartId.V1: -1, ChartId.U2: 1, ChartId.V2: -1}

BOUNDARY_CHARTS = (ChartId.U1, ChartId.V1, ChartId.U2, ChartId.V2)


@dataclass
class ChartSystem:
    """Polynomial vector field on one boundary chart, after clearing the
    minimal power lam1^(-k) via the rescaled clock d(tau)/d(s_tilde) = lam1^(-k)."""

    chart: ChartId
    rhs: tuple[BivariatePolynomial, BivariatePolynomial]
    rescale_degree: int
    source_params: dict[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if self.chart not in _CHART_AXIS:
            raise ValueError("chart systems live on boundary charts only")
        for comp in self.rhs:
            if any(i < 0 or j < 0 for (i, j) in comp.coeffs):
                raise ValueError("chart field retains negative exponents")
        if self.rescale_degree < 0:
            raise ValueError("rescale degree must be nonnegative")

    def eval(self, p) -> tuple:
        l1, l2 = p
        return (self.rhs[0].eval(l1, l2), self.rhs[1].eval(l1, l2))

    def jacobian(self, p) -> tuple[tuple, tuple]:
        l1, l2 = p
        return tuple(
            (comp.diff(0).eval(l1, l2), comp.diff(1).eval(l1, l2)) for comp in self.rhs
        )


@dataclass
class DiskPoint:
    """Point on the closed upper hemisphere; y3 = 0 exactly on the circle
    at infinity."""

    y1: float
    y2: float
    y3: float

    def __post_init__(self):
        n = math.sqrt(self.y1**2 + self.y2**2 + self.y3**2)
        if abs(n - 1.0) > _NORM_TOL:
            raise ValueError(f"disk point has norm {n!r}, expected 1")
        if self.y3 < -_NORM_TOL:
            raise ValueError("disk point lies on the lower hemisphere")
        if -_NORM_TOL <= self.y3 < 0.0:
            self.y3 = 0.0

    @property
    def at_infinity(self) -> bool:
        return self.y3 == 0.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.y1, self.y2, self.y3)

    def to_json(self) -> list[float]:
        return [self.y1, self.y2, self.y3]


def disk_embed(p) -> DiskPoint:
    """Embed a finite plane point onto the upper hemisphere."""
    x, y = float(p[0]), float(p[1])
    delta = math.sqrt(x * x + y * y + 1.0)
    return DiskPoint(x / delta, y / delta, 1.0 / delta)


def _laurent_project(poly: BivariatePolynomial, chart: ChartId) -> dict[tuple[int, int], Fraction]:
    """Coefficients of poly(phi(lam), psi(lam)) as a Laurent series in lam1.

    Keys are (e1, e2) with e1 possibly negative; each monomial x^i y^j
    contributes sign^(i+j) * lam2^m * lam1^(-(i+j)) where m is i or j
    depending on which plane coordinate carries the 1/lam1 pole.
    """
    axis = _CHART_AXIS[chart]
    sign = _CHART_SIGN[chart]
    out: dict[tuple[int, int], Fraction] = {}
    for (i, j), c in poly.coeffs.items():
        m = j if axis == 0 else i
        coeff = c if sign > 0 or (i + j) % 2 == 0 else -c
        key = (-(i + j), m)
        out[key] = out.get(key, Fraction(0)) + coeff
    return {k: v for k, v in out.items() if v != 0}


def _laurent_combine(parts: list[tuple[Fraction, int, int, dict]]) -> dict[tuple[int, int], Fraction]:
    """Sum of scale * lam1^d1 * lam2^d2 * laurent for each part."""
    out: dict[tuple[int, int], Fraction] = {}
    for scale, d1, d2, laurent in parts:
        for (e1, e2), c in laurent.items():
            key = (e1 + d1, e2 + d2)
            out[key] = out.get(key, Fraction(0)) + scale * c
    return {k: v for k, v in out.items() if v != 0}


def chart_system(poly_sys: PlanarSystem, chart: ChartId) -> ChartSystem:
    """Push the desingularized plane field into a boundary chart.

    Substitutes the chart's change of variables, then multiplies by the
    minimal lam1^k that clears every negative power (the rescaled clock
    tau). The power k is discovered, not assumed.
    """
    if chart not in _CHART_AXIS:
        raise ValueError("chart_system needs a boundary chart")
    if poly_sys.time_frame != "s_tilde":
        raise ValueError("chart fields are built from the desingularized (s_tilde) system")
    if not poly_sys.is_polynomial:
        raise DesingularizationError("not desingularizable: field has non-constant denominators")
    f1, f2 = poly_sys.polynomial_components()
    sign = Fraction(_CHART_SIGN[chart])
    axis = _CHART_AXIS[chart]
    lf1 = _laurent_project(f1, chart)
    lf2 = _laurent_project(f2, chart)
    # chain rule for lam1 = sign/w, lam2 = ratio, where w is the defining
    # plane coordinate (phi on axis 0, psi on axis 1)
    pole_comp, ray_comp = (lf1, lf2) if axis == 0 else (lf2, lf1)
    d_lam1 = _laurent_combine([(-sign, 2, 0, pole_comp)])
    d_lam2 = _laurent_combine([(sign, 1, 0, ray_comp), (-sign, 1, 1, pole_comp)])
    k = 0
    for laurent in (d_lam1, d_lam2):
        for (e1, _e2) in laurent:
            k = max(k, -e1)
    rhs = []
    for laurent in (d_lam1, d_lam2):
        shifted = {(e1 + k, e2): c for (e1, e2), c in laurent.items()}
        if any(e1 < 0 for (e1, _) in shifted):
            raise DesingularizationError("not desingularizable")
        rhs.append(BivariatePolynomial(shifted))
    params = dict(poly_sys.params)
    if poly_sys.wave_speed is not None:
        params.setdefault("c", poly_sys.wave_speed)
    return ChartSystem(chart, (rhs[0], rhs[1]), k, params)


def disk_from_chart(chart: ChartId, coords) -> DiskPoint:
    """Inverse chart map; accepts lam1 = 0 (points on the equator)."""
    l1, l2 = float(coords[0]), float(coords[1])
    if l1 < -_NORM_TOL:
        raise ChartDomainError("wrong chart: lam1 must be nonnegative")
    l1 = max(l1, 0.0)
    sign = float(_CHART_SIGN[chart])
    if _CHART_AXIS[chart] == 0:
        v = (sign, sign * l2, l1)
    else:
        v = (sign * l2, sign, l1)
    n = math.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2)
    return DiskPoint(v[0] / n, v[1] / n, v[2] / n)


def chart_coords(d: DiskPoint, chart: ChartId) -> tuple[float, float]:
    """Chart coordinates (lam1, lam2) of a disk point."""
    if chart not in _CHART_AXIS:
        raise ValueError("chart_coords needs a boundary chart")
    axis = _CHART_AXIS[chart]
    sign = _CHART_SIGN[chart]
    yk = (d.y1, d.y2)[axis]
    if sign * yk <= _NORM_TOL:
        raise ChartDomainError("wrong chart")
    ym = (d.y2, d.y1)[axis]
    return (sign * d.y3 / yk, ym / yk)


def chart_of_disk(d: DiskPoint) -> ChartId:
    """Boundary chart owning a disk point: largest defining coordinate in
    absolute value, ties broken in the order U1, V1, U2, V2."""
    if abs(d.y1) >= abs(d.y2):
        return ChartId.U1 if d.y1 > 0 else ChartId.V1
    return ChartId.U2 if d.y2 > 0 else ChartId.V2


def transition(frm: ChartId, coords, to: ChartId) -> tuple[float, float]:
    """Convert chart coordinates between overlapping charts via the disk."""
    d = disk_from_chart(frm, coords)
    try:
        return chart_coords(d, to)
    except ChartDomainError:
        raise ChartDomainError("outside overlap") from None


def plane_from_chart(chart: ChartId, coords) -> tuple[float, float]:
    """Finite plane point of chart coordinates with lam1 > 0."""
    l1, l2 = float(coords[0]), float(coords[1])
    if l1 <= 0.0:
        raise ChartDomainError("point lies on the circle at infinity")
    sign = float(_CHART_SIGN[chart])
    if _CHART_AXIS[chart] == 0:
        return (sign / l1, sign * l2 / l1)
    return (sign * l2 / l1, sign / l1)


def boundary_chart_coords(p) -> tuple[ChartId, tuple[float, float]]:
    """Owning boundary chart and chart coordinates of a finite plane point."""
    d = disk_embed(p)
    chart = chart_of_disk(d)
    return chart, chart_coords(d, chart)
