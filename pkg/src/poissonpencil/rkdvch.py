"""The r-KdV-CH multi-Hamiltonian family in the w-chart and the root (lambda) chart."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import Sequence

import sympy

from .centralinv import central_invariants
from .deform import point_transform
from .epsseries import EpsPencil, series_bracket, series_self_bracket
from .jetcalc import JetSpace, SuperDiffPoly
from .multivec import (
    DiffOperator,
    DistributionBivector,
    EvolutionaryField,
    LocalMultivector,
    from_distribution,
    lie_derivative,
    to_distribution,
)
from .pencils import SemisimpleChart
from .symfield import RatFunc, SymbolContext, SymfieldError

Matrix = list[list[RatFunc]]


class BadSpec(SymfieldError):
    pass


@dataclass
class RkdvchSpec:
    """``r`` and the coefficients ``a_0..a_r`` of the polynomial ``a(lambda)``.

    Entries of ``a`` may be rationals or parameter names; names become
    parameters of the context.
    """

    r: int
    a: Sequence
    ctx: SymbolContext = field(init=False, repr=False)

    def __post_init__(self):
        if self.r < 1:
            raise BadSpec("r must be a positive integer")
        if len(self.a) != self.r + 1:
            raise BadSpec(f"need {self.r + 1} coefficients a_0..a_r, got {len(self.a)}")
        params = [x for x in self.a if isinstance(x, str)]
        if not params and all(Fraction(x) == 0 for x in self.a):
            raise BadSpec("a(lambda) must not vanish identically")
        coords = [*self.w_names, *self.lambda_names]
        self.ctx = SymbolContext(coords, parameters=params, spectral="lam")

    @property
    def w_names(self) -> tuple[str, ...]:
        return tuple(f"w{i}" for i in range(self.r))

    @property
    def lambda_names(self) -> tuple[str, ...]:
        return tuple(f"lambda{i + 1}" for i in range(self.r))

    def coefficient(self, i: int) -> RatFunc:
        if i < 0 or i > self.r:
            return self.ctx.zero
        x = self.a[i]
        return self.ctx[x] if isinstance(x, str) else self.ctx.const(Fraction(x))

    def w_space(self) -> JetSpace:
        return JetSpace(self.ctx, self.w_names)

    def lambda_space(self) -> JetSpace:
        return JetSpace(self.ctx, self.lambda_names)

    def lam(self, i: int) -> RatFunc:
        return self.ctx[self.lambda_names[i]]

    def frak_a(self, x: RatFunc) -> RatFunc:
        acc = self.ctx.zero
        for i in range(self.r, -1, -1):
            acc = acc * x + self.coefficient(i)
        return acc

    def frak_a_prime(self, x: RatFunc) -> RatFunc:
        acc = self.ctx.zero
        for i in range(self.r, 0, -1):
            acc = acc * x + self.coefficient(i) * i
        return acc

    def p_prime(self, i: int) -> RatFunc:
        """``P'(lambda_i) = prod_{j != i} (lambda_i - lambda_j)``."""
        acc = self.ctx.one
        for j in range(self.r):
            if j != i:
                acc = acc * (self.lam(i) - self.lam(j))
        return acc

    def w_of_lambda(self) -> list[RatFunc]:
        """``w^k = (-1)^(r-k) e_{r-k}(lambda)``."""
        out = []
        lams = [self.lam(i) for i in range(self.r)]
        for k in range(self.r):
            deg = self.r - k
            e = self.ctx.zero
            for combo in combinations(lams, deg):
                t = self.ctx.one
                for x in combo:
                    t = t * x
                e = e + t
            out.append(e * (-1) ** deg)
        return out


def sign_table(k: int, l: int, m: int) -> int:
    if k < m and l < m:
        return 1
    if k >= m and l >= m:
        return -1
    return 0


# ---------------------------------------------------------------------------
# structures in the w-chart
# ---------------------------------------------------------------------------


def _w(spec: RkdvchSpec, sp: JetSpace, i: int, s: int = 0) -> SuperDiffPoly:
    if i == spec.r:
        return sp.one if s == 0 else sp.zero
    if i < 0 or i > spec.r:
        return sp.zero
    return sp.u(i, s)


def structure_tables(spec: RkdvchSpec, m: int) -> dict[int, DistributionBivector]:
    """eps^0 and eps^2 kernels of ``P_m^{ij} = f^{ij}_m D_{i+j+1-m}``."""
    if not 0 <= m <= spec.r:
        raise BadSpec(f"m must lie in 0..{spec.r}")
    sp = spec.w_space()
    t0, t2 = {}, {}
    for i in range(spec.r):
        for j in range(spec.r):
            f = sign_table(i, j, m)
            c = i + j + 1 - m
            if not f:
                continue
            e0 = {}
            w, wx = _w(spec, sp, c), _w(spec, sp, c, 1)
            if w:
                e0[1] = w.scale(2 * f)
            if wx:
                e0[0] = wx.scale(f)
            if e0:
                t0[(i, j)] = e0
            a = spec.coefficient(c)
            if a:
                t2[(i, j)] = {3: sp.const(a * Fraction(-f, 2))}
    out = {0: DistributionBivector.from_table(sp, t0)}
    if t2:
        out[2] = DistributionBivector.from_table(sp, t2)
    return out


def build_structure(spec: RkdvchSpec, m: int) -> dict[int, LocalMultivector]:
    return {k: from_distribution(v) for k, v in structure_tables(spec, m).items()}


def structure_pair(spec: RkdvchSpec, k: int, l: int) -> EpsPencil:
    """``P_l - lambda P_k`` in the w-chart, through eps^2."""
    if not 0 <= k < l <= spec.r:
        raise BadSpec("need 0 <= k < l <= r")
    sp = spec.w_space()
    return EpsPencil(sp, build_structure(spec, l), build_structure(spec, k), 2, {"k": k, "l": l, "r": spec.r})


def compatibility_report(spec: RkdvchSpec, ms: Sequence[int] | None = None, orders: Sequence[int] = (0, 1, 2, 3, 4)) -> dict:
    ms = list(range(spec.r + 1)) if ms is None else list(ms)
    legs = {m: build_structure(spec, m) for m in ms}
    failures = []
    for a in ms:
        for k in orders:
            val = series_self_bracket(legs[a], k)
            if val is not None and not val.is_zero():
                failures.append({"pair": (a, a), "order": k})
        for b in ms:
            if b <= a:
                continue
            for k in orders:
                val = series_bracket(legs[a], legs[b], k)
                if val is not None and not val.is_zero():
                    failures.append({"pair": (a, b), "order": k})
    return {"ok": not failures, "failures": failures}


# ---------------------------------------------------------------------------
# root chart
# ---------------------------------------------------------------------------


def lambda_jacobian(spec: RkdvchSpec) -> Matrix:
    """``d lambda_i / d w^k = -lambda_i^k / P'(lambda_i)``."""
    return [[-(spec.lam(i) ** k) / spec.p_prime(i) for k in range(spec.r)] for i in range(spec.r)]


def to_lambda_chart(T: Matrix, spec: RkdvchSpec) -> Matrix:
    """Transport a contravariant 2-tensor from the w-chart to the root chart."""
    J = lambda_jacobian(spec)
    sub = dict(zip(spec.w_names, spec.w_of_lambda()))
    Tl = [[x.subs(sub) if x else x for x in row] for row in T]
    r = spec.r
    out = []
    for i in range(r):
        row = []
        for j in range(r):
            acc = spec.ctx.zero
            for a in range(r):
                for b in range(r):
                    if Tl[a][b]:
                        acc = acc + J[i][a] * Tl[a][b] * J[j][b]
            row.append(acc)
        out.append(row)
    return out


def leading_w_tensor(spec: RkdvchSpec, m: int, eps: int) -> Matrix:
    """Coefficient of ``delta'`` (eps = 0) or ``delta'''`` (eps = 2) of ``P_m`` in the w-chart."""
    t = structure_tables(spec, m).get(eps)
    order = 1 if eps == 0 else 3
    ctx = spec.ctx
    out = []
    for i in range(spec.r):
        row = []
        for j in range(spec.r):
            c = t.coefficient(i, j, order) if t is not None else None
            row.append(c.terms.get(((), ()), ctx.zero) if c else ctx.zero)
        out.append(row)
    return out


def metric_formula(spec: RkdvchSpec, k: int, l: int, m: int) -> list[RatFunc]:
    """Diagonal of ``g_m`` in canonical coordinates ``u^i = lambda_i^(l-k)`` for ``m in (k, l)``.

    Valid when ``l = k + 1``, where canonical coordinates coincide with the roots.
    """
    q = l - k
    exp = 2 * l - k - 2 if m == k else 3 * l - 2 * k - 2
    return [spec.ctx.const(-2 * q * q) * spec.lam(i) ** exp / spec.p_prime(i) for i in range(spec.r)]


def e_formula(spec: RkdvchSpec, m: int) -> list[RatFunc]:
    """``E^{ii}_m = (lambda^m a'(lambda) - m lambda^(m-1) a(lambda)) / (2 P'^2)`` in the root chart."""
    out = []
    for i in range(spec.r):
        x = spec.lam(i)
        num = x**m * spec.frak_a_prime(x)
        if m:
            num = num - spec.frak_a(x) * x ** (m - 1) * m
        out.append(num / (spec.p_prime(i) ** 2 * 2))
    return out


def root_chart(spec: RkdvchSpec, k: int, l: int) -> SemisimpleChart:
    if l != k + 1:
        raise BadSpec("canonical coordinates are the roots only for l = k + 1")
    return SemisimpleChart(spec.ctx, spec.lambda_names, metric_formula(spec, k, l, k), spec.w_names, spec.w_of_lambda())


def closed_form_invariants(spec: RkdvchSpec, k: int, l: int) -> list[RatFunc]:
    """``c^i = lambda_i^(1-l) a(lambda_i) / (24 (k - l))`` as functions of the roots."""
    if l <= k:
        raise BadSpec("need l > k")
    out = []
    for i in range(spec.r):
        x = spec.lam(i)
        p = x ** (1 - l) if l <= 1 else spec.ctx.one / x ** (l - 1)
        out.append(p * spec.frak_a(x) / (24 * (k - l)))
    return out


def machine_invariants(spec: RkdvchSpec, k: int, l: int) -> list[RatFunc]:
    """Central invariants from the built structures, transported by the chart's own Jacobian."""
    return central_invariants(structure_pair(spec, k, l), root_chart(spec, k, l))


def classify_pair(spec: RkdvchSpec, k: int, l: int) -> dict:
    """Rationality and polynomiality of ``c^i`` in ``u^i = lambda_i^(l-k)``.

    ``rational``/``polynomial`` follow the headline statements; the
    ``exponents`` reading checks every exponent ``(1 - l + j)/(l - k)`` that
    actually occurs for the given coefficients, and ``passing_condition`` is
    the integrality of ``(1 - l)/(l - k)^(r+1)``.
    """
    if not 0 <= k < l <= spec.r:
        raise BadSpec("need 0 <= k < l <= r")
    q = l - k
    rational = l == k + 1
    polynomial = k == 0 and l == 1
    exps = [Fraction(1 - l + j, q) for j in range(spec.r + 1) if isinstance(spec.a[j], str) or Fraction(spec.a[j]) != 0]
    ex_rat = all(e.denominator == 1 for e in exps)
    ex_poly = ex_rat and all(e >= 0 for e in exps)
    passing = Fraction(1 - l, q ** (spec.r + 1)).denominator == 1
    return {
        "rational": rational,
        "polynomial": polynomial,
        "exponents": {"rational": ex_rat, "polynomial": ex_poly},
        "passing_condition": passing,
        "flag": (ex_rat, ex_poly) != (rational, polynomial) or passing != rational,
    }


# ---------------------------------------------------------------------------
# normalization and the parameter shift
# ---------------------------------------------------------------------------


def structure_in_roots(spec: RkdvchSpec, m: int) -> dict[int, LocalMultivector]:
    old, new = spec.w_space(), spec.lambda_space()
    J = lambda_jacobian(spec)
    fw = spec.w_of_lambda()
    return {k: point_transform(v, old, new, fw, J) for k, v in build_structure(spec, m).items()}


def _leading(P: LocalMultivector | None, order: int, sp: JetSpace) -> Matrix:
    z = sp.ctx.zero
    if P is None:
        return [[z] * sp.n for _ in range(sp.n)]
    lead = to_distribution(P).leading(order)
    out = []
    for i in range(sp.n):
        row = []
        for j in range(sp.n):
            c = lead.get((i, j))
            if c is None:
                row.append(z)
                continue
            extra = [key for key in c.terms if key != ((), ())]
            if extra:
                raise ValueError(f"leading coefficient [{i},{j}] depends on jets: {c}")
            row.append(c.terms.get(((), ()), z))
        out.append(row)
    return out


def normalizing_field(spec: RkdvchSpec, k: int) -> EvolutionaryField:
    """``z`` with ``Lie_z P_k^(0) = -P_k^(2)`` through the delta''' and delta'' slots.

    Ansatz ``z^i = sum_j B^i_j lambda_j,xx + sum_{j<=m} C^i_jm lambda_j,x lambda_m,x``.
    ``B g + g B^T = E`` is solved with ``B g`` symmetric, then ``C`` from the
    delta'' slot (free components set to zero).
    """
    sp = spec.lambda_space()
    legs = structure_in_roots(spec, k)
    w, E = legs[0], legs.get(2)
    g = _leading(w, 1, sp)
    Em = _leading(E, 3, sp)
    r = spec.r
    B = [[Em[i][j] / (g[j][j] * 2) if Em[i][j] else spec.ctx.zero for j in range(r)] for i in range(r)]
    pairs = [(j, m) for j in range(r) for m in range(j, r)]
    # C as parameters: delta'' slot is algebraic in C
    names = [f"C_{i}_{j}_{m}" for i in range(r) for (j, m) in pairs]
    pctx = SymbolContext(
        [*spec.ctx.names_of_kind("coordinate")],
        parameters=[*spec.ctx.names_of_kind("parameter"), *names],
        spectral="lam",
    )
    psp = JetSpace(pctx, spec.lambda_names)
    lift = lambda x: pctx.parse(str(x.as_expr()))  # noqa: E731

    def field_with(Cvals) -> EvolutionaryField:
        comps = []
        for i in range(r):
            zi = psp.zero
            for j in range(r):
                if B[i][j]:
                    zi = zi + psp.u(j, 2).scale(lift(B[i][j]))
            for j, m in pairs:
                c = Cvals(i, j, m)
                if c:
                    zi = zi + (psp.u(j, 1) * psp.u(m, 1)).scale(c)
            comps.append(zi)
        return EvolutionaryField(tuple(comps))

    def lift_mv(P: LocalMultivector) -> LocalMultivector:
        return LocalMultivector(SuperDiffPoly(psp, {key: lift(c) for key, c in P.body.terms.items()}), P.degree)

    trial = field_with(lambda i, j, m: pctx[f"C_{i}_{j}_{m}"])
    res = lie_derivative(trial, lift_mv(w))
    if E is not None:
        res = res + lift_mv(E)
    D = to_distribution(res.normalized())
    eqs = []
    syms = [sympy.Symbol(n) for n in names]
    for (i, j), op in D.ops.items():
        c = op.coeffs.get(2)
        if c is None:
            continue
        for key, coeff in c.terms.items():
            eqs.append(coeff.as_expr())
    sol = sympy.solve(eqs, syms, dict=True) if eqs else [{}]
    chosen = sol[0] if sol else {}
    values = {}
    for s in syms:
        v = chosen.get(s, sympy.Integer(0)).subs({x: 0 for x in syms})
        values[str(s)] = spec.ctx.from_sympy(sympy.together(v))
    comps = []
    for i in range(r):
        zi = sp.zero
        for j in range(r):
            if B[i][j]:
                zi = zi + sp.u(j, 2).scale(B[i][j])
        for j, m in pairs:
            c = values[f"C_{i}_{j}_{m}"]
            if c:
                zi = zi + (sp.u(j, 1) * sp.u(m, 1)).scale(c)
        comps.append(zi)
    return EvolutionaryField(tuple(comps))


def normalize_and_shift(spec: RkdvchSpec, k: int = 0, l: int = 1) -> dict:
    """Normalize ``P_k`` at eps^2 with the field of :func:`normalizing_field`, then shift parameters.

    (i) the delta''' coefficient of ``P_k^(2) + Lie_z P_k^(0)`` vanishes;
    (ii) that of ``P_l^(2) + Lie_z P_l^(0)`` is ``(k-l) lambda^(l-1) a / (2 P'^2)`` on the diagonal;
    (iii) ``(1/r!) Lie_e^r`` of it, ``e = sum_h d/d lambda_h``, equals the same
    coefficient for the parameters ``(a_r, 0, ..., 0)``.
    """
    sp = spec.lambda_space()
    r = spec.r
    z = normalizing_field(spec, k)
    Pk, Pl = structure_in_roots(spec, k), structure_in_roots(spec, l)

    def normalized(legs):
        out = lie_derivative(z, legs[0])
        if 2 in legs:
            out = out + legs[2]
        return out.normalized()

    Nk, Nl = normalized(Pk), normalized(Pl)
    Lk = _leading(Nk, 3, sp)
    ok_i = all(not x for row in Lk for x in row)
    full_i = Nk.is_zero()
    Ll = _leading(Nl, 3, sp)
    expected = []
    for i in range(r):
        x = spec.lam(i)
        p = x ** (l - 1) if l >= 1 else spec.ctx.one
        expected.append(p * spec.frak_a(x) * (k - l) / (spec.p_prime(i) ** 2 * 2))
    ok_ii = all(Ll[i][i] == expected[i] for i in range(r))
    e = EvolutionaryField(tuple(sp.one for _ in range(r)))
    shifted = Nl
    for _ in range(r):
        shifted = lie_derivative(e, shifted).normalized()
    shifted = shifted.scale(Fraction(1, factorial(r)))
    top = spec.a[r]
    if isinstance(top, str) or Fraction(top):
        target_spec = RkdvchSpec(r, [top, *([0] * r)])
        target = [
            [spec.ctx.parse(str(x.as_expr())) for x in row]
            for row in _target_leading(target_spec, k, l)
        ]
    else:
        # parameters (0, ..., 0): nothing survives at eps^2
        target = [[spec.ctx.zero] * r for _ in range(r)]
    Ls = _leading(shifted, 3, sp)
    ok_iii = all(Ls[i][j] == target[i][j] for i in range(r) for j in range(r))
    return {
        "field": [str(c) for c in z.components],
        "cancels_leading": ok_i,
        "cancels_full": full_i,
        "transformed_leading": [str(Ll[i][i]) for i in range(r)],
        "transformed_matches": ok_ii,
        "shift_matches": ok_iii,
        "shifted_leading": [[str(x) for x in row] for row in Ls],
        "ok": ok_i and ok_ii and ok_iii,
        "normalized_k": Nk,
        "normalized_l": Nl,
        "field_obj": z,
    }


def _target_leading(spec: RkdvchSpec, k: int, l: int) -> Matrix:
    """delta''' coefficient of the normalized ``P_l`` at eps^2 (only the leading part of ``z`` matters)."""
    sp = spec.lambda_space()
    z = normalizing_field(spec, k)
    Pl = structure_in_roots(spec, l)
    N = lie_derivative(z, Pl[0])
    if 2 in Pl:
        N = N + Pl[2]
    return _leading(N.normalized(), 3, sp)


def normalized_pencil(spec: RkdvchSpec, k: int = 0, l: int = 1) -> tuple[EpsPencil, EvolutionaryField]:
    """Root-chart pencil ``P_l - lambda P_k`` after the eps^2 normalization, with ``e = sum d/d lambda_h``.

    Only sensible when the normalization cancels the whole eps^2 part of ``P_k``.
    """
    rep = normalize_and_shift(spec, k, l)
    if not rep["cancels_full"]:
        raise SymfieldError("normalizing field does not cancel the eps^2 part of P_k")
    sp = spec.lambda_space()
    Pk, Pl = structure_in_roots(spec, k), structure_in_roots(spec, l)
    P = EpsPencil(sp, {0: Pl[0], 2: rep["normalized_l"]}, {0: Pk[0]}, 2, {"k": k, "l": l, "r": spec.r})
    e = EvolutionaryField(tuple(sp.one for _ in range(spec.r)))
    return P, e
