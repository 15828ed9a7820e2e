"""Semisimple hydrodynamic pencils in canonical coordinates."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import sympy

from .epsseries import DEFAULT_ORDER, EpsPencil
from .jetcalc import JetSpace, SuperDiffPoly, total_derivative
from .multivec import (
    DistributionBivector,
    EvolutionaryField,
    LocalMultivector,
    from_distribution,
    jacobi_check,
    lie_derivative,
    schouten,
)
from .symfield import RatFunc, SymbolContext, SymfieldError


class FlatnessFailure(SymfieldError):
    pass


class BadCentralInvariant(SymfieldError):
    pass


@dataclass
class SemisimpleChart:
    """Canonical coordinates with ``g1 = diag(f)``, ``g2 = diag(u f)``.

    ``alt_coords``/``inverse`` optionally describe another chart: ``inverse[a]``
    expresses the alternate coordinate ``alt_coords[a]`` as a rational function
    of the canonical ones.
    """

    ctx: SymbolContext
    coords: tuple[str, ...]
    f: tuple[RatFunc, ...]
    alt_coords: tuple[str, ...] = ()
    inverse: tuple[RatFunc, ...] = ()
    space: JetSpace = field(init=False)

    def __post_init__(self):
        self.coords = tuple(self.coords)
        self.f = tuple(self.ctx.coerce(x) for x in self.f)
        self.alt_coords = tuple(self.alt_coords)
        self.inverse = tuple(self.ctx.coerce(x) for x in self.inverse)
        if len(self.f) != len(self.coords):
            raise ValueError("one metric entry per canonical coordinate")
        if len(set(self.coords)) != len(self.coords):
            raise ValueError("canonical coordinates must be distinct")
        if any(not x for x in self.f):
            raise ValueError("metric entries must be nonzero")
        if len(self.inverse) != len(self.alt_coords):
            raise ValueError("inverse map must list every alternate coordinate")
        self.space = JetSpace(self.ctx, self.coords)

    @property
    def n(self) -> int:
        return len(self.coords)

    def u(self, i: int) -> RatFunc:
        return self.ctx[self.coords[i]]

    def g1(self) -> list[list[RatFunc]]:
        z = self.ctx.zero
        return [[self.f[i] if i == j else z for j in range(self.n)] for i in range(self.n)]

    def g2(self) -> list[list[RatFunc]]:
        z = self.ctx.zero
        return [[self.u(i) * self.f[i] if i == j else z for j in range(self.n)] for i in range(self.n)]

    def alt_space(self) -> JetSpace:
        return JetSpace(self.ctx, self.alt_coords)

    def liouville(self) -> EvolutionaryField:
        return EvolutionaryField(tuple(self.space.one for _ in range(self.n)))

    def euler(self) -> EvolutionaryField:
        return EvolutionaryField(tuple(self.space.u(i) for i in range(self.n)))

    def inverse_jacobian(self) -> list[list[RatFunc]]:
        """``J = (d alt / d canonical)^(-1)``, i.e. ``d canonical / d alt`` as functions of canonical coordinates."""
        if not self.alt_coords:
            raise ValueError("chart has no alternate coordinates")
        M = sympy.Matrix([[q.diff(c).as_expr() for c in self.coords] for q in self.inverse])
        Minv = M.inv()
        return [[self.ctx.from_sympy(Minv[i, j]) for j in range(self.n)] for i in range(self.n)]

    def to_canonical(self, value: RatFunc) -> RatFunc:
        """Rewrite a function of the alternate coordinates in canonical ones."""
        return value.subs(dict(zip(self.alt_coords, self.inverse)))


# ---------------------------------------------------------------------------
# hydrodynamic brackets
# ---------------------------------------------------------------------------


def christoffel_contravariant(ctx: SymbolContext, coords: Sequence[str], g: list[list[RatFunc]]) -> list[list[list[RatFunc]]]:
    """``Gamma^{ij}_k = -g^{is} Gamma^j_{sk}`` for the Levi-Civita connection of the contravariant metric ``g``."""
    n = len(coords)
    G = sympy.Matrix([[g[i][j].as_expr() for j in range(n)] for i in range(n)]).inv()
    cov = [[ctx.from_sympy(G[i, j]) for j in range(n)] for i in range(n)]
    dcov = [[[cov[i][j].diff(coords[k]) for k in range(n)] for j in range(n)] for i in range(n)]
    # Gamma^j_{sk} = 1/2 g^{jl} (d_s G_{lk} + d_k G_{ls} - d_l G_{sk})
    low = [[[ctx.zero] * n for _ in range(n)] for _ in range(n)]
    for j in range(n):
        for s in range(n):
            for k in range(n):
                acc = ctx.zero
                for l in range(n):
                    if not g[j][l]:
                        continue
                    acc = acc + g[j][l] * (dcov[l][k][s] + dcov[l][s][k] - dcov[s][k][l])
                low[j][s][k] = acc * Fraction(1, 2)
    out = [[[ctx.zero] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                acc = ctx.zero
                for s in range(n):
                    if g[i][s]:
                        acc = acc - g[i][s] * low[j][s][k]
                out[i][j][k] = acc
    return out


def hydrodynamic_bivector(space: JetSpace, g: list[list[RatFunc]]) -> DistributionBivector:
    """``g^{ij} delta' + Gamma^{ij}_k u^k_x delta`` for a contravariant metric."""
    gam = christoffel_contravariant(space.ctx, space.coords, g)
    n = space.n
    table = {}
    for i in range(n):
        for j in range(n):
            entry = {}
            if g[i][j]:
                entry[1] = space.const(g[i][j])
            low = space.zero
            for k in range(n):
                if gam[i][j][k]:
                    low = low + space.u(k, 1).scale(gam[i][j][k])
            if low:
                entry[0] = low
            if entry:
                table[(i, j)] = entry
    return DistributionBivector.from_table(space, table)


def pencil_from_chart(chart: SemisimpleChart, order: int = DEFAULT_ORDER, check: bool = True) -> EpsPencil:
    sp = chart.space
    w1 = from_distribution(hydrodynamic_bivector(sp, chart.g1()))
    w2 = from_distribution(hydrodynamic_bivector(sp, chart.g2()))
    if check:
        for name, P in (("omega1", w1), ("omega2", w2), ("omega2 - omega1", w2 - w1)):
            if not jacobi_check(P):
                raise FlatnessFailure(f"{name} fails the Jacobi identity")
        if not schouten(w1, w2).is_zero():
            raise FlatnessFailure("omega1 and omega2 are not compatible")
    return EpsPencil(sp, {0: w2}, {0: w1}, order)


def exactness_check(chart: SemisimpleChart) -> bool:
    return all(not sum((fi.diff(c) for c in chart.coords), chart.ctx.zero) for fi in chart.f)


def homogeneity_check(chart: SemisimpleChart, d) -> bool:
    d = chart.ctx.coerce(Fraction(d))
    for fi in chart.f:
        euler = sum((chart.u(k) * fi.diff(c) for k, c in enumerate(chart.coords)), chart.ctx.zero)
        if euler != fi * d:
            return False
    return True


# ---------------------------------------------------------------------------
# standard first deformation
# ---------------------------------------------------------------------------


def _check_invariants(chart: SemisimpleChart, c: Sequence[RatFunc]) -> list[RatFunc]:
    c = [chart.ctx.coerce(x) for x in c]
    if len(c) != chart.n:
        raise BadCentralInvariant("one central invariant per canonical coordinate")
    for i, ci in enumerate(c):
        foreign = ci.free_names() & (set(chart.coords) - {chart.coords[i]})
        if foreign:
            raise BadCentralInvariant(f"c{i + 1} depends on {sorted(foreign)}")
    return c


def standard_vector_field(chart: SemisimpleChart, c: Sequence[RatFunc]) -> EvolutionaryField:
    """The vector field ``X_c`` of the standard form, built from its canonical components."""
    c = _check_invariants(chart, c)
    sp, n, f = chart.space, chart.n, chart.f
    half = Fraction(1, 2)
    ux = [sp.u(j, 1) for j in range(n)]
    cu = [ux[j].scale(c[j]) for j in range(n)]
    dcu = [total_derivative(x) for x in cu]
    comps = []
    for i in range(n):
        xi = sp.zero
        for j in range(n):
            # A^{ij} and L^{ij}
            A = sp.zero
            if i != j:
                A = ux[j].scale(f[i] / f[j] * f[j].diff(chart.coords[i]) * half) - ux[i].scale(
                    f[j] / f[i] * f[i].diff(chart.coords[j]) * half
                )
            L = (chart.u(i) - chart.u(j)) * f[i] / (f[j] * 2) * f[j].diff(chart.coords[i])
            if i == j:
                A = A + total_derivative(sp.const(f[i])).scale(half)
                L = L + f[i] * half
                lcoef = f[i] * 2 - L
            else:
                lcoef = -L
            xi = xi + A * cu[j] + dcu[j].scale(lcoef)
        comps.append(xi)
    return EvolutionaryField(tuple(comps))


def standard_first_deformation(chart: SemisimpleChart, c: Sequence[RatFunc]) -> LocalMultivector:
    """Epsilon^2 term of leg 2 in standard form with central invariants ``c``.

    Equal to ``-Lie_X omega1`` for the field ``X_c`` of :func:`standard_vector_field`;
    see the project notes for the sign.
    """
    X = standard_vector_field(chart, c)
    w1 = from_distribution(hydrodynamic_bivector(chart.space, chart.g1()))
    return -lie_derivative(X, w1)


# ---------------------------------------------------------------------------
# tensor transport
# ---------------------------------------------------------------------------


def transport_tensor(chart: SemisimpleChart, T: list[list[RatFunc]]) -> list[list[RatFunc]]:
    """Contravariant 2-tensor from the alternate chart to canonical coordinates, ``J T J^T``."""
    J = chart.inverse_jacobian()
    n = chart.n
    Tc = [[chart.to_canonical(T[a][b]) for b in range(n)] for a in range(n)]
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = chart.ctx.zero
            for a in range(n):
                if not J[i][a]:
                    continue
                for b in range(n):
                    if Tc[a][b] and J[j][b]:
                        acc = acc + J[i][a] * Tc[a][b] * J[j][b]
            row.append(acc)
        out.append(row)
    return out
