"""Epsilon-graded deformations: Miura maps, normal forms, Q-map, homogeneity, scalar eps^6 pencil."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import factorial
from typing import Mapping, Sequence

from .epsseries import DEFAULT_ORDER, EpsPencil, series_bracket, series_self_bracket
from .jetcalc import JetSpace, SuperDiffPoly, total_derivative
from .multivec import (
    DiffOperator,
    DistributionBivector,
    EvolutionaryField,
    LocalMultivector,
    from_distribution,
    lie_derivative,
    schouten,
    skew_check,
    to_distribution,
)
from .symfield import RatFunc, SymbolContext, SymfieldError, poly_antiderivative

__all__ = [
    "EpsPencil",
    "CanonicalMiura",
    "SubstitutionMiura",
    "InverseMismatch",
    "NotNormalForm",
    "miura_apply",
    "exactness_degree_check",
    "q_map",
    "homogeneity_law_check",
    "build_scalar_eps6",
    "scalar_eps6_data",
]

Series = dict  # eps power -> SuperDiffPoly


class InverseMismatch(SymfieldError):
    pass


class NotNormalForm(SymfieldError):
    pass


# ---------------------------------------------------------------------------
# series helpers
# ---------------------------------------------------------------------------


def _s_add(a: Series, b: Series) -> Series:
    out = dict(a)
    for k, v in b.items():
        out[k] = out[k] + v if k in out else v
    return {k: v for k, v in out.items() if v}


def _s_mul(a: Series, b: Series, order: int) -> Series:
    out: Series = {}
    for i, x in a.items():
        for j, y in b.items():
            if i + j > order:
                continue
            t = x * y
            out[i + j] = out[i + j] + t if i + j in out else t
    return {k: v for k, v in out.items() if v}


def _s_dx(a: Series) -> Series:
    return {k: d for k, v in a.items() if (d := total_derivative(v))}


def _op_series_compose(A: dict, B: dict, order: int) -> dict:
    out: dict = {}
    for i, x in A.items():
        for j, y in B.items():
            if i + j > order:
                continue
            t = x @ y
            out[i + j] = out[i + j] + t if i + j in out else t
    return out


# ---------------------------------------------------------------------------
# Miura transformations
# ---------------------------------------------------------------------------


@dataclass
class CanonicalMiura:
    """``exp(eps^m Lie_Z)`` acting on both legs."""

    generator: EvolutionaryField
    degree: int = 1


@dataclass
class SubstitutionMiura:
    """Change of dependent variables given in both directions.

    ``forward[a]`` expresses old coordinate ``a`` as an eps-series of
    differential polynomials in the new space; ``inverse[b]`` expresses new
    coordinate ``b`` as a series in the old space.
    """

    old: JetSpace
    new: JetSpace
    forward: Sequence[Mapping[int, SuperDiffPoly]]
    inverse: Sequence[Mapping[int, SuperDiffPoly]]
    _cache: dict = field(default_factory=dict, repr=False)

    def substitute(self, p: SuperDiffPoly, order: int) -> Series:
        """Rewrite a theta-free polynomial of the old space as a series in the new space."""
        new = self.new
        out: Series = {}
        for (odd, even), c in p.terms.items():
            if odd:
                raise ValueError("only theta-free polynomials can be substituted")
            term = self._coefficient(c, order)
            for s, i in even:
                term = _s_mul(term, self._jet(i, s, order), order)
            out = _s_add(out, term)
        return out

    def _jet(self, i: int, s: int, order: int) -> Series:
        key = ("jet", i, s, order)
        if key not in self._cache:
            if s == 0:
                val = {k: v for k, v in self.forward[i].items() if k <= order}
            else:
                val = _s_dx(self._jet(i, s - 1, order))
            self._cache[key] = val
        return self._cache[key]

    def _coefficient(self, c: RatFunc, order: int) -> Series:
        """Taylor expansion of ``c(old)`` around the eps^0 part of the forward map."""
        new, old = self.new, self.old
        base = {}
        delta = []
        for a in range(old.n):
            f0 = self.forward[a].get(0, new.zero)
            extra = [k for k in f0.terms if k != ((), ())]
            if extra:
                raise ValueError("eps^0 part of the forward map must be a point transformation")
            base[old.coords[a]] = f0.terms.get(((), ()), new.ctx.zero)
            delta.append({k: v for k, v in self.forward[a].items() if 0 < k <= order})
        out: Series = {}
        pow_cache: dict = {}

        def dpow(a, e):
            if (a, e) not in pow_cache:
                pow_cache[(a, e)] = {0: new.one} if e == 0 else _s_mul(dpow(a, e - 1), delta[a], order)
            return pow_cache[(a, e)]

        for alpha in product(range(order + 1), repeat=old.n):
            if sum(alpha) > order:
                continue
            if any(e and not delta[a] for a, e in enumerate(alpha)):
                continue
            d = c
            for a, e in enumerate(alpha):
                for _ in range(e):
                    d = d.diff(old.coords[a])
            if not d:
                continue
            coeff = d.subs(base)
            denom = 1
            for e in alpha:
                denom *= factorial(e)
            term = {0: new.const(coeff / denom)}
            for a, e in enumerate(alpha):
                if e:
                    term = _s_mul(term, dpow(a, e), order)
            out = _s_add(out, term)
        return out

    def frechet_inverse(self, order: int) -> dict:
        """eps-series of ``G'`` (Frechet derivative of the inverse map) with coefficients in the new space."""
        old = self.old
        out: dict = {}
        for b in range(old.n):
            for k, gk in self.inverse[b].items():
                if k > order:
                    continue
                for a in range(old.n):
                    from .jetcalc import max_var_order, partial

                    top = max_var_order(gk, a)
                    for s in range(top + 1):
                        coeff = partial(gk, a, s)
                        if not coeff:
                            continue
                        for j, cj in self.substitute(coeff, order - k).items():
                            op = DistributionBivector(self.new, {(b, a): DiffOperator(self.new, {s: cj})})
                            out[k + j] = out[k + j] + op if k + j in out else op
        return out

    def check_inverse(self, order: int) -> None:
        new = self.new
        for b in range(new.n):
            total: Series = {}
            for k, gk in self.inverse[b].items():
                if k > order:
                    continue
                for j, v in self.substitute(gk, order - k).items():
                    total = _s_add(total, {k + j: v})
            if total != {0: new.u(b)}:
                raise InverseMismatch(f"inverse(forward(w)) differs from w in component {new.coords[b]}")


def _exp_lie(series: Mapping[int, LocalMultivector], Z: EvolutionaryField, m: int, order: int) -> dict[int, LocalMultivector]:
    out: dict[int, LocalMultivector] = {}
    for i, P in series.items():
        cur = P
        j = 0
        while i + m * j <= order:
            term = cur.scale(Fraction(1, factorial(j)))
            k = i + m * j
            out[k] = out[k] + term if k in out else term
            j += 1
            if i + m * j > order:
                break
            cur = lie_derivative(Z, cur).normalized()
    return {k: v.normalized() for k, v in out.items()}


def miura_apply(P: EpsPencil, T, order: int | None = None) -> EpsPencil:
    order = P.order if order is None else order
    if isinstance(T, CanonicalMiura):
        return P.with_legs(
            _exp_lie(P.leg2, T.generator, T.degree, order),
            _exp_lie(P.leg1, T.generator, T.degree, order),
            order,
        )
    if isinstance(T, SubstitutionMiura):
        if P.space.coords != T.old.coords:
            raise ValueError("pencil is not written in the substitution's old coordinates")
        T.check_inverse(order)
        G = T.frechet_inverse(order)
        Gadj = {k: v.adjoint() for k, v in G.items()}
        legs = []
        for leg in (P.leg2, P.leg1):
            K: dict = {}
            for i, term in leg.items():
                D = to_distribution(term)
                for (a, b), op in D.ops.items():
                    for m, coeff in op.coeffs.items():
                        for j, cj in T.substitute(coeff, order - i).items():
                            piece = DistributionBivector(T.new, {(a, b): DiffOperator(T.new, {m: cj})})
                            K[i + j] = K[i + j] + piece if i + j in K else piece
            newK = _op_series_compose(_op_series_compose(G, K, order), Gadj, order)
            legs.append({k: from_distribution(v) for k, v in newK.items() if v.ops})
        return EpsPencil(T.new, legs[0], legs[1], order, dict(P.meta))
    raise TypeError(f"unknown Miura transformation {T!r}")


def geometric_inverse_series(space: JetSpace, i: int, order: int, sign: int = -1) -> dict[int, SuperDiffPoly]:
    """``sum_k (sign eps d_x)^k u^i`` truncated; inverts ``w = u + eps u_x`` for ``sign = -1``."""
    out = {}
    cur = space.u(i)
    for k in range(order + 1):
        out[k] = cur.scale(sign**k)
        cur = total_derivative(cur)
    return out


# ---------------------------------------------------------------------------
# normal forms and the Q-map
# ---------------------------------------------------------------------------


def _lie_power(e, P: LocalMultivector, j: int) -> LocalMultivector:
    for _ in range(j):
        P = lie_derivative(e, P).normalized()
    return P


def exactness_degree_check(P: EpsPencil, e: EvolutionaryField, n: int, K: int) -> dict:
    """Minimal ``j`` with ``Lie_e^j P2^(2k) = 0`` for ``k = 1..K`` (``None`` past ``nk-k+2``)."""
    rows = []
    ok = True
    for k in range(1, K + 1):
        bound = n * k - k + 2
        term = P.leg2.get(2 * k)
        j = None
        if term is None or term.is_zero():
            j = 0
        else:
            cur = term
            for t in range(1, bound + 1):
                cur = lie_derivative(e, cur).normalized()
                if cur.is_zero():
                    j = t
                    break
        good = j is not None and j <= n * k - k + 1
        ok = ok and good
        rows.append({"k": k, "j": j, "bound": n * k - k + 1, "ok": good})
    return {"normal_form": ok, "n": n, "terms": rows}


def q_map(P: EpsPencil, e: EvolutionaryField, n: int, K: int, chart=None, check_jacobi: bool = True) -> EpsPencil:
    """``Q^(2k) = Lie_e^{nk-k} P^(2k) / (k(n-1))!`` with leg 1 and the eps^0 part kept."""
    report = exactness_degree_check(P, e, n, K)
    if not report["normal_form"]:
        raise NotNormalForm(f"exactness degrees exceed nk-k+1: {report['terms']}")
    leg2 = {0: P.leg2[0]} if 0 in P.leg2 else {}
    for k in range(1, K + 1):
        term = P.leg2.get(2 * k)
        if term is None:
            continue
        q = _lie_power(e, term, n * k - k).scale(Fraction(1, factorial(k * (n - 1))))
        leg2[2 * k] = q
    out = P.with_legs(leg2, P.leg1, min(P.order, 2 * K))
    out.meta["q_map"] = {"n": n, "K": K}
    if check_jacobi:
        rep = out.jacobi_report()
        out.meta["jacobi"] = rep
    if chart is not None:
        from .centralinv import central_invariants

        c = central_invariants(out, chart)
        out.meta["central_invariants"] = [str(x) for x in c]
        out.meta["constant_invariants"] = all(not x.free_names() & set(chart.coords) for x in c)
    return out


# ---------------------------------------------------------------------------
# homogeneity
# ---------------------------------------------------------------------------


def tensor_lie(E: EvolutionaryField, A: list[list[RatFunc]], coords: Sequence[str]) -> list[list[RatFunc]]:
    """Lie derivative of a contravariant 2-tensor along a field with point-dependent components."""
    n = len(coords)
    comps = []
    for x in E.components:
        extra = [k for k in x.terms if k != ((), ())]
        if extra:
            raise ValueError("tensor Lie derivative needs a point field")
        comps.append(x.terms.get(((), ()), x.space.ctx.zero))
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = sum((comps[k] * A[i][j].diff(coords[k]) for k in range(n)), A[i][j].ctx.zero)
            for k in range(n):
                acc = acc - comps[i].diff(coords[k]) * A[k][j] - comps[j].diff(coords[k]) * A[i][k]
            row.append(acc)
        out.append(row)
    return out


def homogeneity_law_check(P: EpsPencil, E: EvolutionaryField, d, D, K: int) -> dict:
    """``Lie_E P2^(2k) = [(k+1)(d-1) + kD] P2^(2k)`` and its leading-tensor form, for ``k = 1..K``."""
    d, D = Fraction(d), Fraction(D)
    sp = P.space
    rows = []
    for k in range(1, K + 1):
        coef = (k + 1) * (d - 1) + k * D
        term = P.leg2.get(2 * k)
        if term is None:
            rows.append({"k": k, "coefficient": str(coef), "ok": True, "tensor_ok": True, "residual": "0"})
            continue
        residual = lie_derivative(E, term) - term.scale(coef)
        ok = residual.is_zero()
        lead = to_distribution(term).leading(2 * k + 1)
        A = [[_point_value(lead.get((i, j)), sp) for j in range(sp.n)] for i in range(sp.n)]
        LA = tensor_lie(E, A, sp.coords)
        tensor_ok = all(LA[i][j] == A[i][j] * coef for i in range(sp.n) for j in range(sp.n))
        rows.append(
            {
                "k": k,
                "coefficient": str(coef),
                "ok": ok,
                "tensor_ok": tensor_ok,
                "residual": "0" if ok else str(residual.normalized().body),
            }
        )
    return {"ok": all(r["ok"] and r["tensor_ok"] for r in rows), "terms": rows}


def _point_value(c: SuperDiffPoly | None, sp: JetSpace) -> RatFunc:
    if c is None:
        return sp.ctx.zero
    extra = [k for k in c.terms if k != ((), ())]
    if extra:
        raise ValueError(f"leading coefficient {c} is not a function of the coordinates")
    return c.terms.get(((), ()), sp.ctx.zero)


# ---------------------------------------------------------------------------
# the scalar eps^6 pencil
# ---------------------------------------------------------------------------

# (coefficient, [powers of c', c'', ... as exponent tuple over derivative orders 0..6])
# each entry: rational, {derivative order: exponent}
H_SLOTS: dict[str, list[tuple[Fraction, dict[int, int]]]] = {
    "h1": [
        (Fraction(97, 60), {0: 1, 2: 2}),
        (Fraction(8, 3), {1: 2, 2: 1}),
        (Fraction(21, 40), {0: 2, 4: 1}),
        (Fraction(49, 15), {0: 1, 3: 1, 1: 1}),
    ],
    "h2": [
        (Fraction(254, 3), {1: 2, 4: 1}),
        (Fraction(17, 5), {0: 2, 6: 1}),
        (Fraction(176, 3), {0: 1, 3: 2}),
        (Fraction(4018, 45), {0: 1, 4: 1, 2: 1}),
        (Fraction(1684, 45), {0: 1, 5: 1, 1: 1}),
        (Fraction(14512, 45), {1: 1, 2: 1, 3: 1}),
    ],
    "h3": [
        (Fraction(3, 10), {0: 2, 4: 1}),
        (Fraction(2, 3), {1: 2, 2: 1}),
        (Fraction(1, 15), {0: 1, 2: 2}),
        (Fraction(28, 15), {0: 1, 3: 1, 1: 1}),
    ],
    "h4": [
        (Fraction(139, 10), {1: 1, 2: 2}),
        (Fraction(178, 15), {1: 2, 3: 1}),
        (Fraction(21, 20), {0: 2, 5: 1}),
        (Fraction(259, 30), {0: 1, 4: 1, 1: 1}),
        (Fraction(13), {0: 1, 2: 1, 3: 1}),
    ],
}

# jet monomial multiplying each h_i, as a sorted tuple of (order, index)
H_JETS = {
    "h1": ((2, 0), (2, 0)),
    "h2": ((1, 0), (1, 0), (1, 0), (1, 0)),
    "h3": ((1, 0), (3, 0)),
    "h4": ((1, 0), (1, 0), (2, 0)),
}

G_SLOTS = [(Fraction(3, 2), {0: 2, 3: 1}), (Fraction(1), {1: 3}), (Fraction(19, 3), {0: 1, 2: 1, 1: 1})]


@dataclass
class ScalarEps6Data:
    c2: RatFunc
    c4: RatFunc
    c6: RatFunc
    g: RatFunc
    h: SuperDiffPoly
    h_parts: dict[str, SuperDiffPoly]


def _derivs(c: RatFunc, var: str, top: int) -> list[RatFunc]:
    out = [c]
    for _ in range(top):
        out.append(out[-1].diff(var))
    return out


def _slot_value(ders: list[RatFunc], powers: dict[int, int]) -> RatFunc:
    acc = ders[0].ctx.one
    for o, e in powers.items():
        acc = acc * ders[o] ** e
    return acc


def transcribed_slots() -> dict[str, Fraction]:
    """Every rational of the eps^6 formulas, keyed by slot name.

    ``c6`` is the prefactor of ``d_u(c2^2 c2')``; ``g0..g2`` already include
    the overall 1/2 in front of the integral.
    """
    out = {"c6": Fraction(-1, 2)}
    for i, (q, _) in enumerate(G_SLOTS):
        out[f"g{i}"] = q / 2
    for name, slots in H_SLOTS.items():
        for i, (q, _) in enumerate(slots):
            out[f"{name}_{i}"] = q
    return out


def scalar_eps6_data(c2, space: JetSpace, slots: Mapping[str, object] | None = None) -> ScalarEps6Data:
    """Coefficient functions of the eps^6 pencil; ``slots`` overrides any transcribed rational."""
    ctx = space.ctx
    var = space.coords[0]
    c2 = ctx.coerce(c2)
    if not c2.is_polynomial:
        from .symfield import NonPolynomialIntegrand

        raise NonPolynomialIntegrand("c2 must be polynomial in u")
    val = dict(transcribed_slots())
    val.update(slots or {})
    val = {k: ctx.coerce(v) for k, v in val.items()}
    ders = _derivs(c2, var, 6)
    c4 = -(c2 * c2).diff(var)
    c6 = (c2 * c2 * ders[1]).diff(var) * val["c6"]
    integrand = ctx.zero
    for i, (_, powers) in enumerate(G_SLOTS):
        integrand = integrand + _slot_value(ders, powers) * val[f"g{i}"]
    g = poly_antiderivative(integrand, var)
    parts = {}
    for name, hslots in H_SLOTS.items():
        coeff = ctx.zero
        for i, (_, powers) in enumerate(hslots):
            coeff = coeff + _slot_value(ders, powers) * val[f"{name}_{i}"]
        parts[name] = SuperDiffPoly(space, {((), H_JETS[name]): coeff} if coeff else {})
    h = space.zero
    for v in parts.values():
        h = h + v
    return ScalarEps6Data(c2, c4, c6, g, h, parts)


def sandwich(space: JetSpace, k: int, a: SuperDiffPoly, m: int) -> DiffOperator:
    """Operator ``d_x^k o a o d_x^m``, the reading of ``d_x^k (a delta^(m)(x-y))``."""
    dk = DiffOperator(space, {k: space.one})
    return dk @ DiffOperator(space, {m: a})


def _c_block(space: JetSpace, c: SuperDiffPoly, k: int) -> DiffOperator:
    """``d^k(c delta') + c delta^(k+1) + (d c) delta^(k)``."""
    return sandwich(space, k, c, 1) + DiffOperator(space, {k + 1: c, k: total_derivative(c)})


def scalar_eps6_blocks(data: ScalarEps6Data, space: JetSpace) -> dict[str, DiffOperator]:
    C = lambda f: space.const(f)  # noqa: E731
    g2 = total_derivative(C(data.g), 2)
    g3 = total_derivative(g2)
    h = data.h
    return {
        "eps2": -_c_block(space, C(data.c2), 2),
        "eps4": -_c_block(space, C(data.c4), 4),
        "eps6_c6": -_c_block(space, C(data.c6), 6),
        "eps6_h": DiffOperator(space, {3: h, 2: total_derivative(h)}) + sandwich(space, 2, h, 1),
        "eps6_g": sandwich(space, 3, g2, 2) + sandwich(space, 1, g3, 3) + DiffOperator(space, {5: g2, 4: g3}),
    }


def build_scalar_eps6(c2, ctx: SymbolContext | None = None, order: int = DEFAULT_ORDER, slots=None) -> EpsPencil:
    """Scalar pencil ``u delta' + 1/2 u_x delta - lambda delta'`` with its eps^2, eps^4, eps^6 blocks."""
    if ctx is None:
        ctx = c2.ctx if isinstance(c2, RatFunc) else SymbolContext(["u"], spectral="lam")
    space = JetSpace(ctx, ctx.names_of_kind("coordinate")[:1])
    data = scalar_eps6_data(c2, space, slots)
    blocks = scalar_eps6_blocks(data, space)
    one = lambda op: DistributionBivector(space, {(0, 0): op})  # noqa: E731
    w2 = one(DiffOperator(space, {1: space.u(0), 0: space.u(0, 1).scale(Fraction(1, 2))}))
    w1 = one(DiffOperator(space, {1: space.one}))
    tables2 = {0: w2, 2: one(blocks["eps2"]), 4: one(blocks["eps4"]), 6: one(blocks["eps6_c6"] + blocks["eps6_h"] + blocks["eps6_g"])}
    pencil = EpsPencil.from_tables(space, tables2, {0: w1}, order)
    pencil.meta.update(
        {
            "data": data,
            "blocks": blocks,
            "block_skew": {k: skew_check(one(v)) for k, v in blocks.items()},
        }
    )
    return pencil


def scalar_eps6_jacobi(pencil: EpsPencil, order: int = 7) -> dict:
    """``[Q2, Q2]`` and ``[omega1, Q2]`` order by order below ``eps^(order+1)``."""
    failures = []
    w1 = {0: pencil.leg1[0]}
    for k in range(order + 1):
        for name, val in (("[Q2,Q2]", series_self_bracket(pencil.leg2, k)), ("[omega1,Q2]", series_bracket(w1, pencil.leg2, k))):
            if val is not None and not val.is_zero():
                failures.append({"bracket": name, "order": k, "residual": str(val.body)})
    return {"ok": not failures, "failures": failures}


LOCALIZATION_PROBES = ("u", "u**2", "u**3", "u**4", "u**5", "u**6", "u**3 + u**5", "u**4 + u**7")


def _eps6_equations(free: Sequence[str], probes: Sequence[str] = LOCALIZATION_PROBES, fixed: Mapping | None = None):
    """Linear equations on the ``free`` slots from the eps^6 Jacobi identities, over several ``c2``."""
    import sympy

    ctx = SymbolContext(["u"], parameters=list(free), spectral="lam")
    space = JetSpace(ctx, ("u",))
    slots = {k: ctx[k] for k in free}
    slots.update(fixed or {})
    eqs = []
    for text in probes:
        P = build_scalar_eps6(ctx.parse(text), ctx, 6, slots)
        w1 = {0: P.leg1[0]}
        for val in (series_self_bracket(P.leg2, 6), series_bracket(w1, P.leg2, 6)):
            if val is None:
                continue
            from .jetcalc import ODD, variational_derivative

            for c in variational_derivative(val.body, 0, ODD).terms.values():
                eqs.extend(sympy.Poly(c.num.as_expr(), sympy.Symbol("u")).coeffs())
    return eqs


def localize_eps6_failure(probes: Sequence[str] = LOCALIZATION_PROBES) -> dict:
    """Locate which transcribed rationals keep the eps^6 Jacobi identities from holding.

    Every slot becomes an unknown and the identities are solved over the
    probe central invariants. Reported: the general solution, slots that no
    solution allows at their transcribed value, whether any single slot can
    be repaired alone, and the best two-factor rescaling (c6 slot by ``mu``,
    all g and h slots by ``kappa``).
    """
    import sympy

    trans = transcribed_slots()
    names = list(trans)
    syms = [sympy.Symbol(n) for n in names]
    rat = lambda q: sympy.Rational(q.numerator, q.denominator)  # noqa: E731
    eqs = _eps6_equations(names, probes)
    A, b = sympy.linear_eq_to_matrix(eqs, syms)
    sol = sympy.linsolve((A, b), syms)
    if not sol:
        return {"solvable": False, "family": {}, "offending": names, "single_slot_repairs": [], "rescaling": None}
    (vec,) = tuple(sol)
    family = {n: str(v) for n, v in zip(names, vec)}
    offending = []
    for n, v in zip(names, vec):
        if not v.free_symbols and v != rat(trans[n]):
            offending.append({"slot": n, "transcribed": str(trans[n]), "required": str(v)})
    # single slot repair: residual must be a multiple of that slot's column
    x0 = sympy.Matrix([rat(trans[n]) for n in names])
    r = b - A * x0
    repairs = []
    for k, n in enumerate(names):
        col = A[:, k]
        if r.is_zero_matrix:
            break
        piv = next((i for i in range(col.rows) if col[i] != 0), None)
        if piv is None:
            continue
        delta = r[piv] / col[piv]
        if (r - col * delta).is_zero_matrix:
            repairs.append({"slot": n, "value": str(rat(trans[n]) + delta)})
    kappa, mu = sympy.symbols("kappa mu")
    scaled = {s: (mu if n == "c6" else kappa) * rat(trans[n]) for s, n in zip(syms, names)}
    fit = sympy.solve([e for e in (sympy.expand(e.subs(scaled)) for e in eqs) if e != 0], [kappa, mu], dict=True)
    rescaling = {"c6_factor": str(fit[0][mu]), "g_h_factor": str(fit[0][kappa])} if fit else None
    return {
        "solvable": True,
        "family": family,
        "offending": offending,
        "single_slot_repairs": repairs,
        "rescaling": rescaling,
    }


# ---------------------------------------------------------------------------
# lemma checks
# ---------------------------------------------------------------------------


def auxiliary_lemma(space: JetSpace, l: int, D: int) -> bool:
    """``sum_{s<=l} (d^s u) d/du_(s) (d^l u^D) = D d^l u^D``."""
    from .jetcalc import partial

    u = space.u(0)
    f = total_derivative(u**D, l)
    lhs = space.zero
    for s in range(l + 1):
        lhs = lhs + total_derivative(u, s) * partial(f, 0, s)
    return lhs == f.scale(D)


def auxiliary_formula(f: SuperDiffPoly, s: int, l: int) -> bool:
    """``d/du_(s) d_x^l f = sum_t C(l,t) d_x^t d/du_(s-l+t) f`` (terms with negative order vanish)."""
    from math import comb

    from .jetcalc import partial

    lhs = partial(total_derivative(f, l), 0, s)
    rhs = f.space.zero
    for t in range(l + 1):
        o = s - l + t
        if o < 0:
            continue
        rhs = rhs + total_derivative(partial(f, 0, o), t).scale(comb(l, t))
    return lhs == rhs


# ---------------------------------------------------------------------------
# point transformations
# ---------------------------------------------------------------------------


def point_transform(
    P: LocalMultivector,
    old: JetSpace,
    new: JetSpace,
    forward: Sequence[RatFunc],
    jacobian: Sequence[Sequence[RatFunc]],
) -> LocalMultivector:
    """Rewrite a bivector under ``old^a = forward[a](new)``.

    ``jacobian[i][a]`` is ``d new^i / d old^a`` expressed in the new
    coordinates; the kernel transforms as ``J K J^T``.
    """
    sub = SubstitutionMiura(old, new, [{0: new.const(f)} for f in forward], [])
    D = to_distribution(P)
    out = DistributionBivector(new, {})
    for (a, b), op in D.ops.items():
        coeffs = {}
        for m, c in op.coeffs.items():
            val = sub.substitute(c, 0).get(0)
            if val:
                coeffs[m] = val
        if not coeffs:
            continue
        K = DiffOperator(new, coeffs)
        for i in range(new.n):
            if not jacobian[i][a]:
                continue
            left = DiffOperator(new, {0: new.const(jacobian[i][a])})
            for j in range(new.n):
                if not jacobian[j][b]:
                    continue
                right = DiffOperator(new, {0: new.const(jacobian[j][b])})
                out = out + DistributionBivector(new, {(i, j): left @ K @ right})
    return from_distribution(out)
