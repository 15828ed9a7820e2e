import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poissonpencil.catalog import akns_pencil, camassa_holm_liouville
from poissonpencil.jetcalc import JetSpace
from poissonpencil.multivec import (
    DistributionBivector,
    LocalMultivector,
    d_omega,
    from_distribution,
    functional,
    jacobi_check,
    lie_derivative,
    lie_derivative_components,
    schouten,
    skew_check,
    to_distribution,
)
from poissonpencil.pencils import SemisimpleChart, pencil_from_chart
from poissonpencil.symfield import SymbolContext

from randgen import density, multivector, operator_table, vector_field

seeds = st.integers(0, 10**6)


@pytest.fixture(scope="module")
def sp():
    return JetSpace(SymbolContext(["u"]), ("u",))


@pytest.fixture(scope="module")
def sp2():
    return JetSpace(SymbolContext(["u", "v"]), ("u", "v"))


def scalar(sp, table):
    return DistributionBivector.from_table(sp, {(0, 0): table})


def hydro(sp):
    return scalar(sp, {1: sp.u(0).scale(2), 0: sp.u(0, 1)})


def skew_part(D):
    return (D - D.adjoint()).scale(Fraction(1, 2))


class TestCorrespondence:
    def test_delta_prime(self, sp):
        P = from_distribution(scalar(sp, {1: 1}))
        assert P == LocalMultivector((sp.theta(0) * sp.theta(0, 1)).scale(Fraction(1, 2)), 2)
        assert to_distribution(P).table() == {(0, 0): {1: sp.one}}

    def test_hydrodynamic_scalar(self, sp):
        D = hydro(sp)
        t, tx = sp.theta(0), sp.theta(0, 1)
        expected = t * (sp.u(0) * tx + (sp.u(0, 1) * t).scale(Fraction(1, 2)))
        assert from_distribution(D) == LocalMultivector(expected, 2)
        assert to_distribution(from_distribution(D)).table() == D.table()

    def test_akns_off_diagonal_entry(self, sp2):
        v = sp2.u(1)
        D = DistributionBivector.from_table(sp2, {(0, 1): {1: v}, (1, 0): {1: v, 0: sp2.u(1, 1)}})
        T = to_distribution(from_distribution(D)).table()
        assert T == {(0, 1): {1: v}, (1, 0): {0: sp2.u(1, 1), 1: v}}

    def test_akns_omega2_round_trip(self):
        P, _ = akns_pencil()
        D = P.meta["tables"]["leg2"][0]
        assert skew_check(D)
        assert to_distribution(from_distribution(D)).table() == D.table()

    @settings(max_examples=60, deadline=None)
    @given(seeds)
    def test_random_round_trip(self, sp2, seed):
        S = skew_part(operator_table(sp2, random.Random(seed)))
        assert not (to_distribution(from_distribution(S)) - S).ops

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_theta_side_round_trip(self, sp2, seed):
        P = multivector(sp2, random.Random(seed), 2)
        assert from_distribution(to_distribution(P)) == P


class TestSkew:
    def test_examples(self, sp):
        assert skew_check(scalar(sp, {1: 1}))
        assert skew_check(hydro(sp))
        assert not skew_check(scalar(sp, {0: sp.u(0)}))


class TestSchouten:
    def test_constant_metric(self, sp):
        w = from_distribution(scalar(sp, {1: 1}))
        assert schouten(w, w).is_zero()

    def test_akns_compatibility(self):
        P, _ = akns_pencil()
        assert schouten(P.term(1, 0), P.term(2, 0)).is_zero()

    def test_scalar_metrics_are_poisson(self, sp):
        # every 1-D metric is flat: g = u^2 gives g delta' + g'/2 u_x delta
        u2 = sp.u(0) * sp.u(0)
        P = from_distribution(scalar(sp, {1: u2, 0: (sp.u(0) * sp.u(0, 1))}))
        assert jacobi_check(P)

    def test_non_flat_metric_fails(self, sp2):
        # diag(1, u) in two components has nonzero curvature
        D = skew_part(DistributionBivector.from_table(sp2, {(0, 0): {1: 1}, (1, 1): {1: sp2.u(0)}}))
        P = from_distribution(D)
        assert not schouten(P, P).is_zero()
        assert not jacobi_check(P)

    def test_ch2_at_lambda_zero(self):
        from poissonpencil.catalog import ch2_pencil

        P, _ = ch2_pencil()
        assert jacobi_check(P.at_lambda(0)[0])

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_graded_antisymmetry(self, sp2, seed):
        rng = random.Random(seed)
        for p, q in ((1, 2), (2, 2), (1, 1), (0, 2)):
            A, B = multivector(sp2, rng, p), multivector(sp2, rng, q)
            sign = -((-1) ** ((p - 1) * (q - 1)))
            assert schouten(A, B) == schouten(B, A).scale(sign)

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_graded_jacobi(self, sp2, seed):
        rng = random.Random(seed)
        Z = vector_field(sp2, rng, terms=2, order=1).as_multivector()
        A = multivector(sp2, rng, 2, terms=2, order=1)
        B = multivector(sp2, rng, 2, terms=2, order=1)
        lhs = schouten(Z, schouten(A, B))
        rhs = schouten(schouten(Z, A), B) + schouten(A, schouten(Z, B))
        assert lhs == rhs


class TestLie:
    def test_ch_liouville(self, sp):
        e = camassa_holm_liouville(sp)
        w1 = from_distribution(scalar(sp, {1: 1}))
        w2 = from_distribution(hydro(sp))
        assert lie_derivative(e, w1).is_zero()
        assert lie_derivative(e, w2) == w1

    def test_euler_field_on_homogeneous_metric(self):
        ctx = SymbolContext(["u1", "u2"])
        chart = SemisimpleChart(ctx, ("u1", "u2"), (ctx["u1"], ctx["u2"]))
        P = pencil_from_chart(chart, 0)
        E = chart.euler()
        assert lie_derivative(E, P.term(1, 0)) == P.term(1, 0).scale(-1)

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_matches_component_formula(self, sp2, seed):
        rng = random.Random(seed)
        Z = vector_field(sp2, rng)
        K = skew_part(operator_table(sp2, rng))
        via_bracket = to_distribution(lie_derivative(Z, from_distribution(K)))
        assert not (via_bracket - lie_derivative_components(Z, K)).ops


class TestDifferentials:
    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_d_squared_vanishes(self, seed):
        P, _ = akns_pencil()
        sp = P.space
        V = vector_field(sp, random.Random(seed)).as_multivector()
        for w in (P.term(1, 0), P.term(2, 0)):
            assert d_omega(w, d_omega(w, V)).is_zero()

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_differentials_anticommute(self, seed):
        P, _ = akns_pencil()
        w1, w2 = P.term(1, 0), P.term(2, 0)
        H = functional(density(P.space, random.Random(seed), 0))
        total = d_omega(w1, d_omega(w2, H)) + d_omega(w2, d_omega(w1, H))
        assert total.is_zero()

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_liouville_intertwines(self, sp, seed):
        e = camassa_holm_liouville(sp)
        w1 = from_distribution(scalar(sp, {1: 1}))
        w2 = from_distribution(hydro(sp))
        V = vector_field(sp, random.Random(seed)).as_multivector()
        lhs = lie_derivative(e, d_omega(w2, V)) - d_omega(w2, lie_derivative(e, V))
        assert lhs == d_omega(w1, V)
