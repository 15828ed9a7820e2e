import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poissonpencil.catalog import akns_pencil, ch2_pencil
from poissonpencil.centralinv import (
    NonCanonicalChart,
    central_invariants,
    central_invariants_residue,
    invariant_degree,
    residue_inputs_from_pencil,
)
from poissonpencil.multivec import lie_derivative
from poissonpencil.pencils import SemisimpleChart, pencil_from_chart, standard_first_deformation
from poissonpencil.symfield import SymbolContext

from randgen import degree_two_field, invariant_polynomials


def _det(g):
    return g[0][0] * g[1][1] - g[0][1] * g[1][0]


class TestTwoBoson:
    def test_akns_both_paths(self):
        P, chart = akns_pencil()
        expected = [chart.ctx.const(Fraction(-1, 12))] * 2
        assert central_invariants(P, chart) == expected
        g, A = residue_inputs_from_pencil(P)
        assert central_invariants_residue(g, A, chart) == expected

    def test_akns_a_lambda(self):
        P, _ = akns_pencil()
        g, A = residue_inputs_from_pencil(P)
        det = _det(g)
        assert all(A[i][j] == g[i][j] / det for i in range(2) for j in range(2))

    def test_ch2_both_paths(self):
        P, chart = ch2_pencil()
        u1, u2 = chart.u(0), chart.u(1)
        expected = [-(u1**2) / 12, -(u2**2) / 12]
        assert central_invariants(P, chart) == expected
        g, A = residue_inputs_from_pencil(P)
        assert central_invariants_residue(g, A, chart) == expected

    def test_ch2_a_lambda(self):
        P, _ = ch2_pencil()
        g, A = residue_inputs_from_pencil(P)
        lam = P.space.ctx["lam"]
        det = _det(g)
        assert all(A[i][j] == lam**2 * g[i][j] / det for i in range(2) for j in range(2))

    def test_zero_deformation(self):
        _, chart = akns_pencil()
        P = pencil_from_chart(chart, 2)
        assert central_invariants(P, chart) == [0, 0]
        g, A = residue_inputs_from_pencil(P)
        assert central_invariants_residue(g, A, chart) == [0, 0]

    def test_foreign_dependence_detected(self):
        ctx = SymbolContext(["u1", "u2"], spectral="lam")
        chart = SemisimpleChart(ctx, ("u1", "u2"), (1, 1))
        P = pencil_from_chart(chart, 2)
        # an eps^2 delta''' entry mixing coordinates on the diagonal
        from poissonpencil.multivec import DistributionBivector, from_distribution

        sp = chart.space
        bad = DistributionBivector.from_table(
            sp, {(0, 0): {3: sp.u(1), 2: sp.u(1, 1).scale(Fraction(3, 2)), 1: sp.u(1, 2).scale(Fraction(3, 2)), 0: sp.u(1, 3).scale(Fraction(1, 2))}}
        )
        P = P.add_term(2, 2, from_distribution(bad))
        with pytest.raises(NonCanonicalChart):
            central_invariants(P, chart)


class TestDegree:
    def test_akns(self):
        _, chart = akns_pencil()
        c = [chart.ctx.const(Fraction(-1, 12))] * 2
        assert invariant_degree(c, chart.coords).as_dict() == {
            "max_degree": 0,
            "is_polynomial": True,
            "is_constant": True,
            "homogeneous_degree": 0,
        }

    def test_ch2(self):
        _, chart = ch2_pencil()
        c = [-(chart.u(0) ** 2) / 12, -(chart.u(1) ** 2) / 12]
        d = invariant_degree(c, chart.coords)
        assert (d.max_degree, d.is_polynomial, d.is_constant, d.homogeneous_degree) == (2, True, False, 2)

    def test_reciprocal(self):
        ctx = SymbolContext(["u1"])
        d = invariant_degree([1 / ctx["u1"]], ("u1",))
        assert (d.max_degree, d.is_polynomial, d.is_constant, d.homogeneous_degree) == (None, False, False, -1)


def _charts():
    out = []
    for n in (1, 2, 3):
        ctx = SymbolContext([f"u{i + 1}" for i in range(n)], spectral="lam")
        out.append(SemisimpleChart(ctx, ctx.names_of_kind("coordinate"), [1] * n))
    _, akns = akns_pencil()
    out.append(akns)
    return out


CHARTS = _charts()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(range(len(CHARTS))))
def test_round_trip_with_standard_form(seed, which):
    chart = CHARTS[which]
    rng = random.Random(seed)
    c = invariant_polynomials(chart, rng, degree=3)
    P = pencil_from_chart(chart, 2, check=False).add_term(2, 2, standard_first_deformation(chart, c))
    assert central_invariants(P, chart) == c


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_second_order_miura_invariance(seed):
    _, chart = akns_pencil()
    rng = random.Random(seed)
    c = invariant_polynomials(chart, rng)
    base = pencil_from_chart(chart, 2, check=False).add_term(2, 2, standard_first_deformation(chart, c))
    V = degree_two_field(chart.space, rng)
    moved = base.add_term(2, 2, lie_derivative(V, base.term(2, 0))).add_term(1, 2, lie_derivative(V, base.term(1, 0)))
    assert central_invariants(moved, chart) == c
