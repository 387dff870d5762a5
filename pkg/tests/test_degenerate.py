import random
from fractions import Fraction

import pytest

from wavedisk.compactify import ChartId, chart_system
from wavedisk.degenerate import (
    BLOWUP_DIRECTIONS,
    EigenstructureError,
    blowup_chart,
    center_manifold,
    nilpotent_sector_report,
)
from wavedisk.equilibria import boundary_equilibria, finite_equilibria
from wavedisk.polyfield import (
    BivariatePolynomial,
    desingularize,
    make_tw_system,
    parse_reaction,
)


def tw_desing(s, c):
    f = parse_reaction("u^3 / (1 + s*u^2)", {"s": s})
    return desingularize(make_tw_system(f, c))


def origin_eq(s, c):
    return finite_equilibria(tw_desing(s, c))[0]


def e3_eq(s, c):
    return boundary_equilibria(chart_system(tw_desing(s, c), ChartId.U1))[0]


def e6_eq(s, c):
    u2 = chart_system(tw_desing(s, c), ChartId.U2)
    return u2, [e for e in boundary_equilibria(u2) if e.label == "E6"][0]


class TestOriginManifold:
    @pytest.mark.parametrize("c", [1, 2, 3])
    def test_cubic_coefficient_is_exact(self, c):
        cm = center_manifold(tw_desing(1, c), origin_eq(1, c), order=5)
        assert cm.series_coefficient(2) == 0
        assert cm.series_coefficient(3) == Fraction(1, c * c)
        assert cm.reduced_leading() == Fraction(-1, c)

    def test_series_independent_of_saturation(self):
        # the cubic truncation only sees the speed
        for s in (Fraction(1, 2), 2, 5):
            cm = center_manifold(tw_desing(s, 2), origin_eq(s, 2), order=3)
            assert cm.series_coefficient(3) == Fraction(1, 4)

    def test_eigenvector_normalization(self):
        cm = center_manifold(tw_desing(1, 2), origin_eq(1, 2), order=3)
        assert cm.transform == ((1, 1), (0, -2))
        assert cm.nonzero_eigenvalue == -2

    @staticmethod
    def _series_mul(a, b, order):
        out = [Fraction(0)] * (order + 1)
        for i, ai in enumerate(a):
            if ai == 0:
                continue
            for j, bj in enumerate(b):
                if i + j > order:
                    break
                out[i + j] += ai * bj
        return out

    def test_tangency_of_graph_in_original_coordinates(self):
        # independent invariance check: along the curve
        # (phi, psi)(x) = P (x, h(x)) the field must equal the curve
        # tangent times the reduced flow, exactly through the order
        c = 3
        order = 5
        d = tw_desing(1, c)
        cm = center_manifold(d, origin_eq(1, c), order=order)
        h = [Fraction(0)] * (order + 1)
        for k, v in cm.series.items():
            h[k] = v
        hp = [Fraction(k + 1) * h[k + 1] for k in range(order)] + [Fraction(0)]
        red = [Fraction(0)] * (order + 1)
        for k, v in cm.reduced.items():
            red[k] = v
        p = cm.transform
        # graph components as series in x
        xs = [Fraction(0), Fraction(1)] + [Fraction(0)] * (order - 1)
        phi_s = [p[0][0] * xv + p[0][1] * hv for xv, hv in zip(xs, h)]
        psi_s = [p[1][0] * xv + p[1][1] * hv for xv, hv in zip(xs, h)]
        # field on the graph, truncated composition of the polynomial RHS
        f1, f2 = d.polynomial_components()

        def on_graph(poly):
            out = [Fraction(0)] * (order + 1)
            pow_cache = {(0, 0): [Fraction(1)] + [Fraction(0)] * order}
            for (i, j), cf in poly.coeffs.items():
                term = [Fraction(1)] + [Fraction(0)] * order
                for _ in range(i):
                    term = self._series_mul(term, phi_s, order)
                for _ in range(j):
                    term = self._series_mul(term, psi_s, order)
                for k in range(order + 1):
                    out[k] += cf * term[k]
            return out

        tangent_phi = [p[0][0] * xv + p[0][1] * hv
                       for xv, hv in zip([Fraction(1)] + [Fraction(0)] * order, hp)]
        tangent_psi = [p[1][0] * xv + p[1][1] * hv
                       for xv, hv in zip([Fraction(1)] + [Fraction(0)] * order, hp)]
        lhs1 = on_graph(f1)
        lhs2 = on_graph(f2)
        rhs1 = self._series_mul(tangent_phi, red, order)
        rhs2 = self._series_mul(tangent_psi, red, order)
        assert lhs1[: order + 1] == rhs1
        assert lhs2[: order + 1] == rhs2

    def test_attracts_along_center_direction(self):
        rng = random.Random(2)
        for _ in range(8):
            c = Fraction(rng.randint(1, 12), rng.randint(1, 3))
            cm = center_manifold(tw_desing(1, c), origin_eq(1, c), order=3)
            lead = cm.reduced_leading()
            assert lead == -1 / Fraction(c)
            assert lead < 0

    def test_rejects_wrong_eigenstructure(self):
        u2, e6 = e6_eq(1, 1)
        with pytest.raises(EigenstructureError, match="one-zero"):
            center_manifold(u2, e6, order=3)


class TestBoundaryManifold:
    def test_manifold_is_the_boundary_line(self):
        u1 = chart_system(tw_desing(1, 2), ChartId.U1)
        cm = center_manifold(u1, e3_eq(1, 2), order=5)
        assert all(v == 0 for v in cm.series.values())
        assert cm.reduced == {2: -1}

    def test_reduced_flow_matches_boundary_polynomial(self):
        # exact rational critical pairs: s a perfect square of a rational
        for s, c in ((Fraction(1), 2), (Fraction(4), 1), (Fraction(1, 4), 4)):
            u1 = chart_system(tw_desing(s, c), ChartId.U1)
            cm = center_manifold(u1, e3_eq(s, c), order=4)
            assert cm.reduced == {2: -s}

    def test_float_path_on_irrational_equilibrium(self):
        # x' = y, y' = -y - (x^2 - 2)^2 has one-zero equilibria at
        # x = +-sqrt(2); the location is not rational so the series solver
        # runs its floating path
        import math

        from wavedisk.equilibria import Equilibrium, eigenvalues_2x2
        from wavedisk.polyfield import PlanarSystem, RationalFunction

        f1 = BivariatePolynomial({(0, 1): 1})
        inner = BivariatePolynomial({(2, 0): 1, (0, 0): -2})
        f2 = BivariatePolynomial({(0, 1): -1}) - inner * inner
        sysd = PlanarSystem(RationalFunction(f1), RationalFunction(f2), Fraction(1), "s_tilde")
        jac = ((0.0, 1.0), (0.0, -1.0))
        eq = Equilibrium(ChartId.FINITE, (math.sqrt(2), 0.0), jac,
                         eigenvalues_2x2(jac), "nonhyperbolic_one_zero")
        cm = center_manifold(sysd, eq, order=4)
        assert abs(cm.nonzero_eigenvalue + 1.0) < 1e-12
        # in eigen-coordinates the graph opens with (x^2-2)^2 -> 8 u^2
        assert abs(float(cm.series_coefficient(2)) - 8.0) < 1e-7


def expected_blowup(direction, s, c):
    s, c = Fraction(s), Fraction(c)
    if direction == "lam1_pos":
        first = {(2, 0): c, (2, 2): c * s, (3, 3): 1}
        second = {(0, 0): 1, (0, 2): s}
    elif direction == "lam2_pos":
        first = {(1, 2): 1, (1, 0): s, (2, 2): c, (2, 0): c * s, (3, 0): 1}
        second = {(0, 3): -1, (0, 1): -s}
    else:
        first = {(1, 2): -1, (1, 0): -s, (2, 2): c, (2, 0): c * s, (3, 0): -1}
        second = {(0, 3): 1, (0, 1): s}
    return first, second


class TestBlowup:
    @pytest.mark.parametrize("direction", BLOWUP_DIRECTIONS)
    def test_fields_match_hand_expansion(self, direction):
        rng = random.Random(13)
        for _ in range(6):
            s = Fraction(rng.randint(1, 9), rng.randint(1, 3))
            c = Fraction(rng.randint(1, 9), rng.randint(1, 3))
            u2, e6 = e6_eq(s, c)
            blown, power = blowup_chart(u2, e6, direction)
            assert power == 1
            f1, f2 = expected_blowup(direction, s, c)
            assert blown.rhs[0].coeffs == f1
            assert blown.rhs[1].coeffs == f2

    def test_radial_direction_has_no_exceptional_equilibria(self):
        u2, e6 = e6_eq(1, 1)
        blown, _ = blowup_chart(u2, e6, "lam1_pos")
        assert boundary_equilibria(blown) == []

    def test_angular_flow_is_positive_on_exceptional_set(self):
        # d(b)/d(eta) = 1 + s b^2 > 0 for every s > 0
        for s in (Fraction(1, 3), 1, 7):
            u2, e6 = e6_eq(s, 1)
            blown, _ = blowup_chart(u2, e6, "lam1_pos")
            restricted = {j: v for (i, j), v in blown.rhs[1].coeffs.items() if i == 0}
            assert restricted == {0: 1, 2: s}

    @pytest.mark.parametrize("s", [1, 2, 3])
    def test_saddles_in_angular_charts(self, s):
        u2, e6 = e6_eq(s, 1)
        for direction in ("lam2_pos", "lam2_neg"):
            blown, _ = blowup_chart(u2, e6, direction)
            eqs = boundary_equilibria(blown)
            assert len(eqs) == 1
            assert eqs[0].coords == (0.0, 0.0)
            assert eqs[0].stability == "saddle"
            eigs = sorted(v.real for v in eqs[0].eigenvalues)
            assert abs(eigs[0] + s) < 1e-12 and abs(eigs[1] - s) < 1e-12

    def test_divisible_by_radius_exactly_once(self):
        u2, e6 = e6_eq(2, 3)
        for direction in BLOWUP_DIRECTIONS:
            blown, _ = blowup_chart(u2, e6, direction)
            min_power = min(min(i for (i, _j) in comp.coeffs) for comp in blown.rhs)
            assert min_power == 0  # a second joint division would fail

    def test_sector_report(self):
        for s, c in ((1, 1), (3, 5)):
            u2, e6 = e6_eq(s, c)
            rep = nilpotent_sector_report(u2, e6)
            assert [ch.direction for ch in rep.charts] == list(BLOWUP_DIRECTIONS)
            assert rep.sector_summary() == ["none", "saddle", "saddle"]

    def test_rejects_non_nilpotent(self):
        with pytest.raises(EigenstructureError, match="not nilpotent"):
            blowup_chart(chart_system(tw_desing(1, 3), ChartId.U1),
                         boundary_equilibria(chart_system(tw_desing(1, 3), ChartId.U1))[0],
                         "lam1_pos")

    def test_report_serialization(self):
        u2, e6 = e6_eq(1, 1)
        doc = nilpotent_sector_report(u2, e6).to_json()
        assert doc["summary"] == ["none", "saddle", "saddle"]
        assert len(doc["charts"]) == 3
