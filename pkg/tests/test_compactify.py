import math
import random
from fractions import Fraction

import pytest

from wavedisk.compactify import (
    ChartDomainError,
    ChartId,
    boundary_chart_coords,
    chart_coords,
    chart_of_disk,
    chart_system,
    disk_embed,
    disk_from_chart,
    plane_from_chart,
    transition,
)
from wavedisk.polyfield import desingularize, eval_field, make_tw_system, parse_reaction


def tw_desing(s, c):
    f = parse_reaction("u^3 / (1 + s*u^2)", {"s": s})
    return desingularize(make_tw_system(f, c))


def expected_u1(s, c):
    s, c = Fraction(s), Fraction(c)
    first = {(3, 1): -1, (1, 1): -s}
    second = {(2, 1): -c, (0, 1): -c * s, (0, 0): -1, (2, 2): -1, (0, 2): -s}
    return first, second


def expected_u2(s, c):
    s, c = Fraction(s), Fraction(c)
    first = {(3, 0): c, (1, 2): c * s, (1, 3): 1}
    second = {(2, 0): 1, (0, 2): s, (2, 1): c, (0, 3): c * s, (0, 4): 1}
    return first, second


class TestChartFields:
    def test_u1_field_for_unit_parameters(self):
        cs = chart_system(tw_desing(1, 1), ChartId.U1)
        assert cs.rescale_degree == 2
        f1, f2 = expected_u1(1, 1)
        assert cs.rhs[0].coeffs == {k: Fraction(v) for k, v in f1.items()}
        assert cs.rhs[1].coeffs == {k: Fraction(v) for k, v in f2.items()}

    def test_u2_field_for_unit_parameters(self):
        cs = chart_system(tw_desing(1, 1), ChartId.U2)
        assert cs.rescale_degree == 2
        f1, f2 = expected_u2(1, 1)
        assert cs.rhs[0].coeffs == {k: Fraction(v) for k, v in f1.items()}
        assert cs.rhs[1].coeffs == {k: Fraction(v) for k, v in f2.items()}

    def test_chart_fields_match_hand_expansion_at_random_parameters(self):
        rng = random.Random(5)
        for _ in range(10):
            s = Fraction(rng.randint(1, 9), rng.randint(1, 5))
            c = Fraction(rng.randint(1, 9), rng.randint(1, 5))
            d = tw_desing(s, c)
            u1 = chart_system(d, ChartId.U1)
            f1, f2 = expected_u1(s, c)
            assert u1.rhs[0].coeffs == f1 and u1.rhs[1].coeffs == f2
            u2 = chart_system(d, ChartId.U2)
            g1, g2 = expected_u2(s, c)
            assert u2.rhs[0].coeffs == g1 and u2.rhs[1].coeffs == g2

    def test_v_charts_equal_u_charts_for_odd_fields(self):
        rng = random.Random(9)
        for _ in range(5):
            s = Fraction(rng.randint(1, 9), rng.randint(1, 5))
            c = Fraction(rng.randint(1, 9), rng.randint(1, 5))
            d = tw_desing(s, c)
            assert chart_system(d, ChartId.V1).rhs == chart_system(d, ChartId.U1).rhs
            assert chart_system(d, ChartId.V2).rhs == chart_system(d, ChartId.U2).rhs

    def test_rescale_degree_is_discovered(self):
        # quadratic reaction ends up one degree lower at infinity
        fk = parse_reaction("a*u*(1 - u/K)", {"a": 1, "K": 1})
        cs = chart_system(desingularize(make_tw_system(fk, 2)), ChartId.U1)
        assert cs.rescale_degree == 1

    def test_requires_desingularized_input(self):
        f = parse_reaction("u^3 / (1 + s*u^2)", {"s": 1})
        with pytest.raises(ValueError, match="desingularized"):
            chart_system(make_tw_system(f, 1), ChartId.U1)

    def test_pushback_is_positive_multiple_of_plane_field(self):
        # the chart field equals lam1^k times the pushforward of the plane
        # field through the chart map; check exactly and as parallelism
        rng = random.Random(17)
        d = tw_desing(Fraction(3, 2), Fraction(5, 2))
        cs = chart_system(d, ChartId.U1)
        k = cs.rescale_degree
        for _ in range(100):
            l1 = Fraction(rng.randint(1, 20), rng.randint(21, 40))
            l2 = Fraction(rng.randint(-15, 15), rng.randint(1, 15))
            phi, psi = 1 / l1, l2 / l1
            fx, fy = eval_field(d, (phi, psi))
            push = (-l1 * l1 * fx, l1 * (fy - l2 * fx))
            got = cs.eval((l1, l2))
            assert got == (l1**k * push[0], l1**k * push[1])
            assert l1**k > 0


class TestDisk:
    def test_center_embedding(self):
        assert disk_embed((0, 0)).as_tuple() == (0.0, 0.0, 1.0)

    def test_unit_phi_embedding(self):
        d = disk_embed((1, 0))
        r = 1 / math.sqrt(2)
        assert abs(d.y1 - r) < 1e-15 and d.y2 == 0 and abs(d.y3 - r) < 1e-15

    def test_limit_toward_infinity(self):
        m = -0.7
        target = (1 / math.sqrt(1 + m * m), m / math.sqrt(1 + m * m), 0.0)
        d = disk_embed((1e9, m * 1e9))
        assert abs(d.y1 - target[0]) < 1e-9
        assert abs(d.y2 - target[1]) < 1e-9
        assert d.y3 < 2e-9

    def test_norm_and_hemisphere_invariant(self):
        rng = random.Random(23)
        for _ in range(200):
            x = rng.uniform(-1e4, 1e4)
            y = rng.uniform(-1e4, 1e4)
            d = disk_embed((x, y))
            assert abs(d.y1**2 + d.y2**2 + d.y3**2 - 1.0) <= 1e-12
            assert d.y3 >= 0.0


class TestChartCoords:
    def test_plane_point_in_u1(self):
        assert chart_coords(disk_embed((2, -1)), ChartId.U1) == (0.5, -0.5)

    def test_boundary_point(self):
        m = -0.7
        d = disk_from_chart(ChartId.U1, (0.0, m))
        assert d.at_infinity
        l1, l2 = chart_coords(d, ChartId.U1)
        assert l1 == 0.0 and abs(l2 - m) < 1e-15

    def test_wrong_chart(self):
        with pytest.raises(ChartDomainError, match="wrong chart"):
            chart_coords(disk_embed((0, 0)), ChartId.U1)

    def test_roundtrip_all_charts(self):
        rng = random.Random(31)
        for _ in range(100):
            x = rng.uniform(-20, 20)
            y = rng.uniform(-20, 20)
            if math.hypot(x, y) < 0.3:
                continue
            chart, lam = boundary_chart_coords((x, y))
            back = plane_from_chart(chart, lam)
            assert math.hypot(back[0] - x, back[1] - y) <= 1e-9 * max(1.0, math.hypot(x, y))


class TestTransition:
    def test_identity(self):
        assert transition(ChartId.U1, (0.5, -0.5), ChartId.U1) == (0.5, -0.5)

    def test_u1_to_u2(self):
        l1, l2 = transition(ChartId.U1, (0.5, 0.5), ChartId.U2)
        assert abs(l1 - 1.0) < 1e-14 and abs(l2 - 2.0) < 1e-14

    def test_outside_overlap(self):
        with pytest.raises(ChartDomainError, match="outside overlap"):
            transition(ChartId.U1, (0.5, -0.5), ChartId.U2)

    def test_chart_ownership_rule(self):
        assert chart_of_disk(disk_embed((5, 1))) is ChartId.U1
        assert chart_of_disk(disk_embed((-5, 1))) is ChartId.V1
        assert chart_of_disk(disk_embed((1, 5))) is ChartId.U2
        assert chart_of_disk(disk_embed((1, -5))) is ChartId.V2
        # tie goes to the first-coordinate charts
        assert chart_of_disk(disk_embed((3, 3))) is ChartId.U1

    def test_consistency_through_disk(self):
        rng = random.Random(41)
        for _ in range(50):
            x, y = rng.uniform(1, 10), rng.uniform(1, 10)
            a = transition(ChartId.U1, chart_coords(disk_embed((x, y)), ChartId.U1), ChartId.U2)
            b = chart_coords(disk_embed((x, y)), ChartId.U2)
            assert abs(a[0] - b[0]) < 1e-12 and abs(a[1] - b[1]) < 1e-12

    def test_disk_point_serialization(self):
        d = disk_embed((1, 0))
        assert d.to_json() == [d.y1, d.y2, d.y3]
