"""Built-in pencils: two-boson (AKNS), CH2, Camassa-Holm and two-component CH."""

from __future__ import annotations

from fractions import Fraction

from .deform import SubstitutionMiura, geometric_inverse_series, miura_apply, sandwich
from .epsseries import DEFAULT_ORDER, EpsPencil
from .jetcalc import JetSpace
from .multivec import (
    DiffOperator,
    DistributionBivector,
    EvolutionaryField,
    LocalMultivector,
    from_distribution,
    lie_derivative,
)
from .pencils import SemisimpleChart
from .symfield import SymbolContext


def two_boson_context() -> SymbolContext:
    return SymbolContext(["u1", "u2", "u", "v"], spectral="lam")


def two_boson_chart(ctx: SymbolContext | None = None) -> SemisimpleChart:
    """Canonical chart ``u^{1,2} = v +- sqrt(-4u)`` with the rational inverse map."""
    ctx = ctx or two_boson_context()
    u1, u2 = ctx["u1"], ctx["u2"]
    return SemisimpleChart(
        ctx,
        ("u1", "u2"),
        (8 / (u2 - u1), 8 / (u1 - u2)),
        ("u", "v"),
        (-(u1 - u2) ** 2 / 16, (u1 + u2) / 2),
    )


def _dispersionless_two_boson(sp: JetSpace) -> dict:
    u, v = sp.u(0), sp.u(1)
    return {
        (0, 0): {1: u.scale(2), 0: sp.u(0, 1)},
        (0, 1): {1: v},
        (1, 0): {1: v, 0: sp.u(1, 1)},
        (1, 1): {1: sp.const(-2)},
    }


def akns_pencil(order: int = 2) -> tuple[EpsPencil, SemisimpleChart]:
    chart = two_boson_chart()
    sp = chart.alt_space()
    T = lambda t: DistributionBivector.from_table(sp, t)  # noqa: E731
    leg2 = {0: T(_dispersionless_two_boson(sp)), 1: T({(0, 1): {2: -1}, (1, 0): {2: 1}})}
    leg1 = {0: T({(0, 1): {1: 1}, (1, 0): {1: 1}})}
    return EpsPencil.from_tables(sp, leg2, leg1, order, tables={"leg2": leg2, "leg1": leg1}), chart


def ch2_pencil(order: int = 2) -> tuple[EpsPencil, SemisimpleChart]:
    chart = two_boson_chart()
    sp = chart.alt_space()
    T = lambda t: DistributionBivector.from_table(sp, t)  # noqa: E731
    leg2 = {0: T(_dispersionless_two_boson(sp))}
    leg1 = {0: T({(0, 1): {1: 1}, (1, 0): {1: 1}}), 1: T({(0, 1): {2: -1}, (1, 0): {2: 1}})}
    return EpsPencil.from_tables(sp, leg2, leg1, order, tables={"leg2": leg2, "leg1": leg1}), chart


def scalar_context(extra: tuple[str, ...] = ()) -> SymbolContext:
    return SymbolContext(["u", *extra], spectral="lam")


# ---------------------------------------------------------------------------
# Camassa-Holm
# ---------------------------------------------------------------------------


def camassa_holm_context() -> SymbolContext:
    return SymbolContext(["m", "u"], spectral="lam")


def camassa_holm_m_pencil(order: int = DEFAULT_ORDER, ctx: SymbolContext | None = None) -> EpsPencil:
    """Pencil ``2m delta' + m_x delta - lambda (delta' - eps^2 delta''')`` in the coordinate ``m``."""
    ctx = ctx or camassa_holm_context()
    sp = JetSpace(ctx, ("m",))
    T = lambda t: DistributionBivector.from_table(sp, t)  # noqa: E731
    leg2 = {0: T({(0, 0): {1: sp.u(0).scale(2), 0: sp.u(0, 1)}})}
    leg1 = {0: T({(0, 0): {1: 1}}), 2: T({(0, 0): {3: -1}})}
    return EpsPencil.from_tables(sp, leg2, leg1, order)


def camassa_holm_substitution(order: int = DEFAULT_ORDER, ctx: SymbolContext | None = None) -> SubstitutionMiura:
    """``m = u + eps u_x`` with inverse ``u = sum_k (-eps d_x)^k m``."""
    ctx = ctx or camassa_holm_context()
    old, new = JetSpace(ctx, ("m",)), JetSpace(ctx, ("u",))
    return SubstitutionMiura(
        old,
        new,
        [{0: new.u(0), 1: new.u(0, 1)}],
        [geometric_inverse_series(old, 0, order)],
    )


def camassa_holm_u_pencil(order: int = DEFAULT_ORDER) -> EpsPencil:
    ctx = camassa_holm_context()
    return miura_apply(camassa_holm_m_pencil(order, ctx), camassa_holm_substitution(order, ctx), order)


def camassa_holm_expected_series(space: JetSpace, order: int) -> dict[int, DistributionBivector]:
    """Leg 2 in the u-chart as printed: even powers add the two sandwiches, odd powers subtract them."""
    u = space.u(0)
    one = lambda op: DistributionBivector(space, {(0, 0): op})  # noqa: E731
    out = {0: one(DiffOperator(space, {1: u.scale(2), 0: space.u(0, 1)}))}
    for k in range(1, order + 1):
        a = sandwich(space, 1, u, k)
        b = sandwich(space, k, u, 1)
        out[k] = one(a + b if k % 2 == 0 else a - b)
    return out


def camassa_holm_liouville(space: JetSpace) -> EvolutionaryField:
    """``e = 1/2 d/du``, scaled so that ``Lie_e omega2 = omega1``."""
    return EvolutionaryField((space.const(Fraction(1, 2)),))


# ---------------------------------------------------------------------------
# two-component CH
# ---------------------------------------------------------------------------


def two_component_ch_context() -> SymbolContext:
    return SymbolContext(["u", "v", "xi", "eta"], spectral="lam")


def two_component_ch_pencil(order: int = DEFAULT_ORDER, ctx: SymbolContext | None = None) -> EpsPencil:
    """CH2 pencil in ``(u, v)``; its first leg is ``delta' -+ eps delta''`` off the diagonal."""
    ctx = ctx or two_component_ch_context()
    sp = JetSpace(ctx, ("u", "v"))
    T = lambda t: DistributionBivector.from_table(sp, t)  # noqa: E731
    leg2 = {0: T(_dispersionless_two_boson(sp))}
    leg1 = {0: T({(0, 1): {1: 1}, (1, 0): {1: 1}}), 1: T({(0, 1): {2: -1}, (1, 0): {2: 1}})}
    return EpsPencil.from_tables(sp, leg2, leg1, order)


def two_component_ch_substitution(order: int = DEFAULT_ORDER, ctx: SymbolContext | None = None) -> SubstitutionMiura:
    """``u = xi``, ``v = eta + eps eta_x``."""
    ctx = ctx or two_component_ch_context()
    old, new = JetSpace(ctx, ("u", "v")), JetSpace(ctx, ("xi", "eta"))
    return SubstitutionMiura(
        old,
        new,
        [{0: new.u(0)}, {0: new.u(1), 1: new.u(1, 1)}],
        [{0: old.u(0)}, geometric_inverse_series(old, 1, order)],
    )


def two_component_ch_series_pencil(order: int = DEFAULT_ORDER) -> EpsPencil:
    ctx = two_component_ch_context()
    return miura_apply(two_component_ch_pencil(order, ctx), two_component_ch_substitution(order, ctx), order)


def two_component_ch_expected_series(space: JetSpace, order: int) -> dict[int, DistributionBivector]:
    """Leg 2 of the series pencil in ``(xi, eta)``, read off term by term."""
    xi, eta, eta_x = space.u(0), space.u(1), space.u(1, 1)
    out: dict[int, DistributionBivector] = {}

    def put(k, ij, op):
        if k > order:
            return
        piece = DistributionBivector(space, {ij: op})
        out[k] = out[k] + piece if k in out else piece

    put(0, (0, 0), DiffOperator(space, {1: xi.scale(2), 0: space.u(0, 1)}))
    for k in range(order + 1):
        # (eta + eps eta_x) sum_k eps^k delta^(k+1)
        put(k, (0, 1), DiffOperator(space, {k + 1: eta}))
        put(k + 1, (0, 1), DiffOperator(space, {k + 1: eta_x}))
        # sum_k (-eps)^k d^(k+1) [(eta + eps eta_x) delta]
        put(k, (1, 0), sandwich(space, k + 1, eta.scale((-1) ** k), 0))
        put(k + 1, (1, 0), sandwich(space, k + 1, eta_x.scale((-1) ** k), 0))
        if k % 2 == 0:
            put(k, (1, 1), DiffOperator(space, {k + 1: space.const(-2)}))
    return out


def two_component_ch_field(space: JetSpace) -> EvolutionaryField:
    """``X = (0 d; d 0) grad H`` for ``H = -int eta^3/12``, i.e. ``X = (-eta eta_x/2, 0)``."""
    return EvolutionaryField(((space.u(1) * space.u(1, 1)).scale(Fraction(-1, 2)), space.zero))


def two_component_ch_omega2(space: JetSpace) -> LocalMultivector:
    return from_distribution(DistributionBivector.from_table(space, _dispersionless_two_boson(space)))


def two_component_ch_printed_eps2(space: JetSpace) -> DistributionBivector:
    """Matrix part of the eps^2 coefficient after the order-eps normalization."""
    eta = space.u(1)
    return DistributionBivector.from_table(
        space,
        {
            (0, 1): {3: eta, 2: space.u(1, 1)},
            (1, 0): {3: eta, 2: space.u(1, 1).scale(2), 1: space.u(1, 2)},
            (1, 1): {3: space.const(-2)},
        },
    )


def two_component_ch_normalized(space: JetSpace, sign: int = 1) -> LocalMultivector:
    """``matrix + sign/2 Lie_X^2 omega2``; the displayed form has ``sign = +1``."""
    X = two_component_ch_field(space)
    w2 = two_component_ch_omega2(space)
    LL = lie_derivative(X, lie_derivative(X, w2).normalized()).normalized()
    return (from_distribution(two_component_ch_printed_eps2(space)) + LL.scale(Fraction(sign, 2))).normalized()


def two_component_ch_liouville(space: JetSpace) -> EvolutionaryField:
    """``Z = d/d eta``."""
    return EvolutionaryField((space.zero, space.one))
