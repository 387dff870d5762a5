"""Center-manifold reduction and directional blow-up of degenerate equilibria.

The center-manifold series is solved coefficient-by-coefficient from the
invariance equation in eigen-coordinates; when the equilibrium location,
field coefficients and eigendata are rational the whole computation stays
in exact rational arithmetic (the nonzero eigenvalue of a one-zero
Jacobian is its trace, so rational inputs give rational eigendata).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .compactify import ChartSystem
from .equilibria import Equilibrium, boundary_equilibria
from .polyfield import BivariatePolynomial, PlanarSystem, as_fraction

__all__ = [
    "EigenstructureError",
    "CenterManifold",
    "BlowupChart",
    "BlowupReport",
    "center_manifold",
    "blowup_chart",
    "nilpotent_sector_report",
    "BLOWUP_DIRECTIONS",
]

_ZERO_TOL = 1e-9

BLOWUP_DIRECTIONS = ("lam1_pos", "lam2_pos", "lam2_neg")


class EigenstructureError(ValueError):
    """Equilibrium does not have the eigenvalue pattern an operation needs."""


def _field_components(sys) -> tuple[BivariatePolynomial, BivariatePolynomial]:
    if isinstance(sys, ChartSystem):
        return sys.rhs
    if isinstance(sys, PlanarSystem):
        if not sys.is_polynomial:
            raise ValueError("center manifolds are computed on polynomial fields")
        return sys.polynomial_components()
    raise TypeError(f"unsupported system type {type(sys)!r}")


def _kernel_vector(m) -> tuple:
    """Nonzero v with M v = 0 for a rank-one 2x2 matrix, first nonzero
    component normalized to 1."""
    a, b = m[0][0], m[0][1]
    c, d = m[1][0], m[1][1]
    for (p, q) in ((b, -a), (d, -c)):
        if p != 0 or q != 0:
            v = (p, q)
            break
    else:
        raise EigenstructureError("matrix is zero; kernel is not one-dimensional")
    pivot = v[0] if v[0] != 0 else v[1]
    return (v[0] / pivot, v[1] / pivot)


@dataclass
class CenterManifold:
    """Graph representation of the center manifold at a one-zero equilibrium.

    ``series`` holds the graph coefficients a_2..a_order in eigen
    coordinates (the manifold is y~ = sum a_k x~^k); ``reduced`` maps
    degree to coefficient for the flow restricted to the manifold,
    written in the shifted center coordinate.
    """

    base: Equilibrium
    transform: tuple[tuple, tuple]       # P columns: (center vector, nonzero vector)
    transform_inv: tuple[tuple, tuple]
    nonzero_eigenvalue: float | Fraction
    series: dict[int, Fraction | float] = field(default_factory=dict)
    reduced: dict[int, Fraction | float] = field(default_factory=dict)
    order: int = 0

    def series_coefficient(self, k: int):
        return self.series.get(k, 0)

    def reduced_leading(self):
        for k in sorted(self.reduced):
            if self.reduced[k] != 0:
                return self.reduced[k]
        return 0

    def to_json(self) -> dict:
        return {
            "base": self.base.to_json(),
            "nonzero_eigenvalue": float(self.nonzero_eigenvalue),
            "series": {str(k): float(v) for k, v in sorted(self.series.items())},
            "reduced": {str(k): float(v) for k, v in sorted(self.reduced.items())},
            "order": self.order,
        }


def _trunc_mul(a: list, b: list, order: int) -> list:
    out = [0] * (order + 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            if i + j > order:
                break
            if bj == 0:
                continue
            out[i + j] = out[i + j] + ai * bj
    return out


def _poly_on_graph(w: BivariatePolynomial, h: list, order: int, exact: bool) -> list:
    """Coefficients of w(x, h(x)) truncated at the given order."""
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    ypow: list[list] = [[one] + [zero] * order]
    jmax = max((j for (_i, j) in w.coeffs), default=0)
    for _ in range(jmax):
        ypow.append(_trunc_mul(ypow[-1], h, order))
    out = [zero] * (order + 1)
    for (i, j), cf in w.coeffs.items():
        c = cf if exact else float(cf)
        if i > order:
            continue
        for m, hm in enumerate(ypow[j]):
            if i + m > order:
                break
            if hm == 0:
                continue
            out[i + m] = out[i + m] + c * hm
    return out


def center_manifold(sys, e: Equilibrium, order: int = 5) -> CenterManifold:
    """Solve the manifold graph and reduced flow at a one-zero equilibrium.

    The linear part is diagonalized by P = (v_center, v_nonzero) with the
    first nonzero component of each eigenvector set to 1. The invariance
    equation h'(x) * F_c(x, h(x)) = F_nc(x, h(x)) is then solved degree by
    degree up to ``order``; the reduced flow is F_c(x, h(x)) truncated at
    the same order.
    """
    if order < 3:
        raise ValueError("order must be at least 3")
    f1, f2 = _field_components(sys)
    eigs = e.eigenvalues
    zero_flags = [abs(ev) <= _ZERO_TOL for ev in eigs]
    if sum(zero_flags) != 1:
        raise EigenstructureError("not a one-zero equilibrium")
    nz = eigs[0] if zero_flags[1] else eigs[1]
    if abs(nz.imag) > _ZERO_TOL:
        raise EigenstructureError("not a one-zero equilibrium")

    # exact path when the location is (numerically) rational and the shifted
    # Jacobian is exactly rank one; otherwise floats all the way through
    cx, cy = as_fraction(e.coords[0]), as_fraction(e.coords[1])
    g1 = f1.shift(cx, cy)
    g2 = f2.shift(cx, cy)
    jac = ((g1.diff(0).coefficient(0, 0), g1.diff(1).coefficient(0, 0)),
           (g2.diff(0).coefficient(0, 0), g2.diff(1).coefficient(0, 0)))
    mu = jac[0][0] + jac[1][1]  # trace: the nonzero eigenvalue, exactly
    det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]
    exact = det == 0 and g1.coefficient(0, 0) == 0 and g2.coefficient(0, 0) == 0
    if not exact:
        # location is not exactly rational; carry the eigendata as floats
        if abs(float(det)) > _ZERO_TOL or abs(float(mu)) <= _ZERO_TOL:
            raise EigenstructureError("not a one-zero equilibrium")
        mu = float(mu)
        jac = tuple(tuple(float(v) for v in row) for row in jac)

    v_c = _kernel_vector(jac)
    mu_id = ((jac[0][0] - mu, jac[0][1]), (jac[1][0], jac[1][1] - mu))
    v_nz = _kernel_vector(mu_id)
    det_p = v_c[0] * v_nz[1] - v_c[1] * v_nz[0]
    if det_p == 0:
        raise EigenstructureError("eigenvectors are parallel")
    p = ((v_c[0], v_nz[0]), (v_c[1], v_nz[1]))
    pinv = ((v_nz[1] / det_p, -v_nz[0] / det_p), (-v_c[1] / det_p, v_c[0] / det_p))

    # transform the shifted field into eigen-coordinates
    fx = (p[0][0], p[0][1], 0)
    fy = (p[1][0], p[1][1], 0)
    if exact:
        t1 = g1.substitute_affine(fx, fy)
        t2 = g2.substitute_affine(fx, fy)
        w_c = t1 * pinv[0][0] + t2 * pinv[0][1]
        w_nc = t1 * pinv[1][0] + t2 * pinv[1][1]
    else:
        fxq = tuple(as_fraction(v) for v in fx)
        fyq = tuple(as_fraction(v) for v in fy)
        t1 = g1.substitute_affine(fxq, fyq)
        t2 = g2.substitute_affine(fxq, fyq)
        w_c = t1 * as_fraction(pinv[0][0]) + t2 * as_fraction(pinv[0][1])
        w_nc = t1 * as_fraction(pinv[1][0]) + t2 * as_fraction(pinv[1][1])

    # strip the linear parts; they must match diag(0, mu) up to roundoff
    def _strip_linear(w: BivariatePolynomial, expect_y) -> BivariatePolynomial:
        trimmed = {}
        scale = max((abs(float(c)) for c in w.coeffs.values()), default=1.0)
        for (i, j), c in w.coeffs.items():
            if i + j <= 1:
                expected = expect_y if (i, j) == (0, 1) else 0
                if abs(float(c - expected)) > 1e-7 * max(1.0, scale):
                    raise EigenstructureError("linear part does not diagonalize as expected")
                continue
            trimmed[(i, j)] = c
        return BivariatePolynomial(trimmed)

    w_c = _strip_linear(w_c, 0)
    w_nc = _strip_linear(w_nc, as_fraction(mu) if exact else as_fraction(float(mu)))

    zero = Fraction(0) if exact else 0.0
    h = [zero] * (order + 1)
    mu_val = mu if exact else float(mu)
    for k in range(2, order + 1):
        a_k = _graph_defect_coefficient(w_c, w_nc, h, mu_val, k, exact) / mu_val
        h[k] = a_k

    defect = _graph_defect(w_c, w_nc, h, mu_val, order, exact)
    tol = 0 if exact else 1e-8
    bad = [c for c in defect if abs(float(c)) > tol]
    if bad:
        raise EigenstructureError(f"center-manifold invariance defect {max(abs(float(c)) for c in bad):g}")

    reduced_list = _poly_on_graph(w_c, h, order, exact)
    series = {k: h[k] for k in range(2, order + 1)}
    if exact:
        reduced = {k: c for k, c in enumerate(reduced_list) if c != 0}
    else:
        scale = max((abs(float(c)) for c in reduced_list), default=1.0)
        reduced = {k: c for k, c in enumerate(reduced_list) if abs(float(c)) > 1e-10 * max(scale, 1.0)}
    return CenterManifold(
        base=e,
        transform=p,
        transform_inv=pinv,
        nonzero_eigenvalue=mu_val,
        series=series,
        reduced=reduced,
        order=order,
    )


def _graph_defect(w_c, w_nc, h, mu, order, exact) -> list:
    """Coefficients of h'(x)*F_c(x,h) - mu*h(x) - W_nc(x,h) through order."""
    a = _poly_on_graph(w_c, h, order, exact)
    b = _poly_on_graph(w_nc, h, order, exact)
    hprime = [(k + 1) * h[k + 1] for k in range(len(h) - 1)]
    lhs = _trunc_mul(hprime, a, order)
    out = []
    for k in range(order + 1):
        hk = h[k] if k < len(h) else 0
        out.append(lhs[k] - mu * hk - b[k])
    return out


def _graph_defect_coefficient(w_c, w_nc, h, mu, k, exact):
    """Degree-k defect coefficient with a_k held at zero (its only
    appearance at degree k is the -mu*a_k term)."""
    return _graph_defect(w_c, w_nc, h, mu, k, exact)[k] + mu * h[k]


# ----------------------------------------------------------------------
# Directional blow-up
# ----------------------------------------------------------------------

@dataclass
class BlowupChart:
    direction: str
    system: ChartSystem
    equilibria: list[Equilibrium]

    def to_json(self) -> dict:
        return {
            "direction": self.direction,
            "rescale_degree": self.system.rescale_degree,
            "equilibria": [e.to_json() for e in self.equilibria],
        }


@dataclass
class BlowupReport:
    parent: Equilibrium
    charts: list[BlowupChart]

    def sector_summary(self) -> list[str]:
        out = []
        for ch in self.charts:
            if not ch.equilibria:
                out.append("none")
            else:
                out.append(",".join(e.stability for e in ch.equilibria))
        return out

    def to_json(self) -> dict:
        return {
            "parent": self.parent.to_json(),
            "charts": [ch.to_json() for ch in self.charts],
            "summary": self.sector_summary(),
        }


def _check_nilpotent(cs: ChartSystem, e: Equilibrium) -> tuple[BivariatePolynomial, BivariatePolynomial]:
    jac = cs.jacobian((as_fraction(e.coords[0]), as_fraction(e.coords[1])))
    if any(abs(float(v)) > _ZERO_TOL for row in jac for v in row):
        raise EigenstructureError("not nilpotent")
    f1 = cs.rhs[0].shift(as_fraction(e.coords[0]), as_fraction(e.coords[1]))
    f2 = cs.rhs[1].shift(as_fraction(e.coords[0]), as_fraction(e.coords[1]))
    return f1, f2


def _divide_once_by_r(p: BivariatePolynomial) -> BivariatePolynomial:
    out = {}
    for (i, j), c in p.coeffs.items():
        if i == 0:
            raise ValueError("blow-up field is not divisible by r")
        out[(i - 1, j)] = c
    return BivariatePolynomial(out)


def blowup_chart(cs: ChartSystem, e: Equilibrium, direction: str) -> tuple[ChartSystem, int]:
    """One directional chart of the blow-up at a nilpotent equilibrium.

    Substitutes (lam1, lam2) = (r, r*b) for direction ``lam1_pos`` or
    (r*b, +-r) for ``lam2_pos``/``lam2_neg``, divides the field once by r
    (the blown-up clock d(eta)/d(tau) = r) and returns the polynomial
    field in (r, b) together with the rescale power 1.
    """
    if direction not in BLOWUP_DIRECTIONS:
        raise ValueError(f"unknown blow-up direction {direction!r}")
    f1, f2 = _check_nilpotent(cs, e)
    r = BivariatePolynomial.x()
    b = BivariatePolynomial.y()
    rb = r * b
    if direction == "lam1_pos":
        # lam1 = r, lam2 = r*b
        f1s = _compose(f1, r, rb)
        f2s = _compose(f2, r, rb)
        dr = f1s
        db = f2s - b * f1s
        dr_div = _divide_once_by_r(dr)
        db_div = _divide_once_by_r(_divide_once_by_r(db))
        rhs = (dr_div, db_div)
    else:
        sgn = 1 if direction == "lam2_pos" else -1
        # lam1 = r*b, lam2 = sgn*r
        f1s = _compose(f1, rb, r * sgn)
        f2s = _compose(f2, rb, r * sgn)
        dr = f2s * sgn
        db = f1s - b * dr
        dr_div = _divide_once_by_r(dr)
        db_div = _divide_once_by_r(_divide_once_by_r(db))
        rhs = (dr_div, db_div)
    blown = ChartSystem(cs.chart, rhs, 1, dict(cs.source_params))
    return blown, 1


def _compose(p: BivariatePolynomial, sub_x: BivariatePolynomial, sub_y: BivariatePolynomial) -> BivariatePolynomial:
    dmax = p.degree or 0
    xp = [BivariatePolynomial.constant(1)]
    yp = [BivariatePolynomial.constant(1)]
    for _ in range(dmax):
        xp.append(xp[-1] * sub_x)
        yp.append(yp[-1] * sub_y)
    out = BivariatePolynomial.zero()
    for (i, j), c in p.coeffs.items():
        out = out + xp[i] * yp[j] * c
    return out


def nilpotent_sector_report(cs: ChartSystem, e: Equilibrium) -> BlowupReport:
    """Blow up a double-zero equilibrium in all three directional charts
    and classify the equilibria found on the exceptional set {r = 0}."""
    charts = []
    for direction in BLOWUP_DIRECTIONS:
        blown, _k = blowup_chart(cs, e, direction)
        eqs = boundary_equilibria(blown)
        for eq in eqs:
            eq.label = None  # exceptional-set points carry no global labels
        charts.append(BlowupChart(direction, blown, eqs))
    return BlowupReport(parent=e, charts=charts)
