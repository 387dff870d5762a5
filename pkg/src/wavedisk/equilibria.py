"""Location and classification of finite and boundary equilibria.

Boundary equilibria are the real roots of a chart field's second
component restricted to lam1 = 0; the sign of the discriminant
c^2 s^2 - 4 s decides how many exist and hence the parameter regime.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .compactify import ChartId, ChartSystem
from .polyfield import PlanarSystem, as_fraction, jacobian

__all__ = [
    "StabilityClass",
    "Regime",
    "Equilibrium",
    "regime_of",
    "finite_equilibria",
    "boundary_equilibria",
    "classify",
    "eigenvalues_2x2",
]

_ZERO_EIG_TOL = 1e-9
_RESIDUAL_TOL = 1e-10
_DEDUP_TOL = 1e-8


class StabilityClass:
    SOURCE = "source"
    SINK = "sink"
    SADDLE = "saddle"
    NONHYP_ONE_ZERO = "nonhyperbolic_one_zero"
    NONHYP_DOUBLE_ZERO = "nonhyperbolic_double_zero"
    CENTER_LIKE = "center_like"

    ALL = (SOURCE, SINK, SADDLE, NONHYP_ONE_ZERO, NONHYP_DOUBLE_ZERO, CENTER_LIKE)


@dataclass
class Regime:
    tag: str  # subcritical | critical | supercritical
    discriminant: float


def regime_of(s, c) -> Regime:
    """Parameter regime from the sign of c^2 s^2 - 4 s.

    Computed in exact rational arithmetic so that sweeps near the
    critical speed classify by sign, not by rounded eigenvalues.
    """
    s = as_fraction(s)
    c = as_fraction(c)
    if s <= 0 or c <= 0:
        raise ValueError("regime_of needs positive s and c")
    disc = c * c * s * s - 4 * s
    if abs(disc) <= Fraction(1, 10**12):
        tag = "critical"
    elif disc > 0:
        tag = "supercritical"
    else:
        tag = "subcritical"
    return Regime(tag, float(disc))


def eigenvalues_2x2(j) -> tuple[complex, complex]:
    """Eigenvalues of a 2x2 matrix by the trace/determinant formula."""
    a, b = float(j[0][0]), float(j[0][1])
    c, d = float(j[1][0]), float(j[1][1])
    tr = a + d
    det = a * d - b * c
    disc = tr * tr - 4.0 * det
    rt = cmath.sqrt(disc)
    return ((tr + rt) / 2.0, (tr - rt) / 2.0)


@dataclass
class Equilibrium:
    chart: ChartId
    coords: tuple[float, float]
    jacobian: tuple[tuple[float, float], tuple[float, float]]
    eigenvalues: tuple[complex, complex]
    stability: str
    label: str | None = None

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "chart": self.chart.value,
            "coords": [float(self.coords[0]), float(self.coords[1])],
            "eigenvalues": [[ev.real, ev.imag] for ev in self.eigenvalues],
            "stability": self.stability,
        }


def _classify_eigs(eigs: tuple[complex, complex]) -> str:
    zero = [abs(ev.real) <= _ZERO_EIG_TOL and abs(ev.imag) <= _ZERO_EIG_TOL for ev in eigs]
    if all(zero):
        return StabilityClass.NONHYP_DOUBLE_ZERO
    if any(zero):
        return StabilityClass.NONHYP_ONE_ZERO
    res = [ev.real for ev in eigs]
    if all(abs(r) <= _ZERO_EIG_TOL for r in res):
        return StabilityClass.CENTER_LIKE
    if all(r > _ZERO_EIG_TOL for r in res):
        return StabilityClass.SOURCE
    if all(r < -_ZERO_EIG_TOL for r in res):
        return StabilityClass.SINK
    if res[0] * res[1] < 0:
        return StabilityClass.SADDLE
    # one real part within tolerance of zero, the other not
    return StabilityClass.NONHYP_ONE_ZERO


def classify(e: Equilibrium) -> str:
    return _classify_eigs(e.eigenvalues)


def _make_equilibrium(chart, coords, jac, residual, label=None) -> Equilibrium:
    if residual > _RESIDUAL_TOL:
        raise ValueError(f"field residual {residual:g} at candidate equilibrium {coords}")
    eigs = eigenvalues_2x2(jac)
    # consistency: eigenvalues reproduce trace and determinant
    tr = jac[0][0] + jac[1][1]
    det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]
    scale = 1.0 + abs(tr) + abs(det)
    if abs((eigs[0] + eigs[1]).real - tr) > 1e-10 * scale or abs((eigs[0] * eigs[1]).real - det) > 1e-10 * scale:
        raise ValueError("eigenvalue/trace-determinant mismatch")
    eq = Equilibrium(
        chart=chart,
        coords=(float(coords[0]), float(coords[1])),
        jacobian=tuple(tuple(float(v) for v in row) for row in jac),
        eigenvalues=eigs,
        stability="",
        label=label,
    )
    eq.stability = classify(eq)
    return eq


# ----------------------------------------------------------------------
# Finite equilibria by damped Newton from a coarse grid
# ----------------------------------------------------------------------

def compile_float(poly) -> "callable":
    """Compile a BivariatePolynomial to a fast float-valued function of (x, y)."""
    if not poly.coeffs:
        return lambda x, y: 0.0
    terms = []
    for (i, j), c in sorted(poly.coeffs.items()):
        mono = "*".join([repr(float(c))] + ["x"] * i + ["y"] * j)
        terms.append(mono)
    return eval("lambda x, y: " + " + ".join(terms), {"__builtins__": {}})


def finite_equilibria(sys: PlanarSystem, box=((-10.0, 10.0), (-10.0, 10.0)),
                      grid: int = 50, max_iter: int = 100) -> list[Equilibrium]:
    """All roots of the polynomial field inside the box.

    Damped Newton (step halved while the residual grows) from a
    grid x grid lattice of starts, iterated until the step stalls so
    that degenerate (flat) roots are fully polished; converged roots
    are deduplicated at distance 1e-8. Coordinates within 1e-12 of an
    axis are snapped onto it so downstream exact arithmetic can engage.
    """
    if not sys.is_polynomial:
        raise ValueError("finite_equilibria expects a polynomial system")
    f1, f2 = sys.polynomial_components()
    fa = compile_float(f1)
    fb = compile_float(f2)
    d = [[compile_float(f1.diff(0)), compile_float(f1.diff(1))],
         [compile_float(f2.diff(0)), compile_float(f2.diff(1))]]

    def fval(p):
        return np.array([fa(p[0], p[1]), fb(p[0], p[1])])

    def jval(p):
        return np.array([[d[i][k](p[0], p[1]) for k in range(2)] for i in range(2)])

    (x0, x1), (y0, y1) = box
    xs = np.linspace(x0, x1, grid)
    ys = np.linspace(y0, y1, grid)
    found: list[tuple[float, float]] = []
    for sx in xs:
        for sy in ys:
            px, py = float(sx), float(sy)
            rx, ry = fa(px, py), fb(px, py)
            near_known = False
            for _ in range(max_iter):
                if any(math.hypot(px - qx, py - qy) <= 1e-6 * (1.0 + math.hypot(qx, qy))
                       for qx, qy in found):
                    near_known = True
                    break
                j00, j01 = d[0][0](px, py), d[0][1](px, py)
                j10, j11 = d[1][0](px, py), d[1][1](px, py)
                det = j00 * j11 - j01 * j10
                if det == 0.0 or not math.isfinite(det):
                    break
                sx_step = (-rx * j11 + ry * j01) / det
                sy_step = (rx * j10 - ry * j00) / det
                if not (math.isfinite(sx_step) and math.isfinite(sy_step)):
                    break
                rnorm = math.hypot(rx, ry)
                damp = 1.0
                for _ in range(30):
                    cx, cy = px + damp * sx_step, py + damp * sy_step
                    crx, cry = fa(cx, cy), fb(cx, cy)
                    if math.hypot(crx, cry) <= rnorm or damp < 1e-6:
                        break
                    damp *= 0.5
                px, py, rx, ry = cx, cy, crx, cry
                if damp * math.hypot(sx_step, sy_step) <= 1e-14 * (1.0 + math.hypot(px, py)):
                    break
            if near_known or not (math.isfinite(px) and math.isfinite(py)):
                continue
            if math.hypot(rx, ry) > _RESIDUAL_TOL:
                continue
            if not (x0 - 1e-9 <= px <= x1 + 1e-9 and y0 - 1e-9 <= py <= y1 + 1e-9):
                continue
            if any(math.hypot(px - qx, py - qy) <= _DEDUP_TOL for qx, qy in found):
                continue
            found.append((px, py))
    found.sort()
    out = []
    for px, py in found:
        px = 0.0 if abs(px) <= 1e-9 else px
        py = 0.0 if abs(py) <= 1e-9 else py
        res = math.hypot(fa(px, py), fb(px, py))
        label = "E0" if math.hypot(px, py) <= _DEDUP_TOL else None
        out.append(_make_equilibrium(ChartId.FINITE, (px, py), jacobian(sys, (px, py)), res, label))
    return out


# ----------------------------------------------------------------------
# Boundary equilibria from the univariate boundary polynomial
# ----------------------------------------------------------------------

def _boundary_polynomial(cs: ChartSystem) -> dict[int, Fraction]:
    """Exact coefficients of rhs2(0, lam2)."""
    out: dict[int, Fraction] = {}
    for (i, j), c in cs.rhs[1].coeffs.items():
        if i == 0:
            out[j] = out.get(j, Fraction(0)) + c
    return {k: v for k, v in out.items() if v != 0}


def _real_roots(coeffs: dict[int, Fraction]) -> list[tuple[float, int]]:
    """Real roots of an exact univariate polynomial as (root, multiplicity).

    A common lam2^m factor is stripped exactly; what remains is solved in
    closed form up to degree 2 and by companion-matrix eigenvalues above.
    """
    if not coeffs:
        return []
    shift = min(coeffs)
    deflated = {k - shift: v for k, v in coeffs.items()}
    roots: list[tuple[float, int]] = []
    if shift > 0:
        roots.append((0.0, shift))
    deg = max(deflated)
    if deg == 0:
        pass
    elif deg == 1:
        a, b = deflated.get(1, Fraction(0)), deflated.get(0, Fraction(0))
        roots.append((float(-b / a), 1))
    elif deg == 2:
        a = deflated.get(2, Fraction(0))
        b = deflated.get(1, Fraction(0))
        c = deflated.get(0, Fraction(0))
        disc = b * b - 4 * a * c
        if disc == 0:
            roots.append((float(-b / (2 * a)), 2))
        elif disc > 0:
            rt = math.sqrt(float(disc))
            roots.append((float((-float(b) - rt) / (2 * float(a))), 1))
            roots.append((float((-float(b) + rt) / (2 * float(a))), 1))
    else:
        poly = np.zeros(deg + 1)
        for k, v in deflated.items():
            poly[deg - k] = float(v)
        for r in np.roots(poly):
            if abs(r.imag) <= 1e-9 * (1.0 + abs(r.real)):
                roots.append((float(r.real), 1))
    merged: list[tuple[float, int]] = []
    for r, m in sorted(roots):
        if merged and abs(merged[-1][0] - r) <= _DEDUP_TOL:
            merged[-1] = (merged[-1][0], merged[-1][1] + m)
        else:
            merged.append((r, m))
    return merged


_U1_LABELS = {2: ("E1", "E2"), 1: ("E3",)}
_U2_NONZERO_LABELS = {2: ("E4", "E5"), 1: ("E7",)}


def boundary_equilibria(cs: ChartSystem) -> list[Equilibrium]:
    """Equilibria on the circle at infinity seen by one chart.

    Real roots of rhs2(0, lam2), each paired with the full chart
    Jacobian at (0, root). Labels follow the chart's root pattern:
    on U1 the roots sort ascending as E1 < E2 (or a single E3), on U2
    the nonzero roots sort as E4 < E5 (single: E7) and the root at the
    origin is E6.
    """
    roots = _real_roots(_boundary_polynomial(cs))
    nonzero = [r for r, _ in roots if abs(r) > _DEDUP_TOL]
    labels: dict[float, str] = {}
    if cs.chart == ChartId.U1:
        names = _U1_LABELS.get(len(nonzero), ())
        labels.update(dict(zip(sorted(nonzero), names)))
    elif cs.chart == ChartId.U2:
        names = _U2_NONZERO_LABELS.get(len(nonzero), ())
        labels.update(dict(zip(sorted(nonzero), names)))
        for r, _m in roots:
            if abs(r) <= _DEDUP_TOL:
                labels[r] = "E6"
    out = []
    for r, _mult in roots:
        jac = cs.jacobian((Fraction(0), as_fraction(r) if float(r).is_integer() else r))
        f = cs.eval((0.0, r))
        res = math.hypot(float(f[0]), float(f[1]))
        out.append(_make_equilibrium(cs.chart, (0.0, r), jac, res, labels.get(r)))
    return out
