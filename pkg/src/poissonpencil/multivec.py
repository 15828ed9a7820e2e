"""Local multivectors in the theta-formalism, Schouten bracket and operator views.

A bivector ``P = 1/2 int theta_i K^{ij} theta_j`` corresponds to the matrix
differential operator ``K^{ij} = sum_m A^{ij}_m d_x^m``, i.e. to the kernel
``sum_m A^{ij}_m(x) delta^(m)(x-y)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence

from .jetcalc import (
    EVEN,
    ODD,
    JetSpace,
    SuperDiffPoly,
    is_zero_mod_dx,
    max_var_order,
    partial,
    total_derivative,
    variational_derivative,
)


class _DerivCache:
    """Memoised iterated total derivatives of one polynomial."""

    __slots__ = ("seq",)

    def __init__(self, p: SuperDiffPoly):
        self.seq = [p]

    def __getitem__(self, s: int) -> SuperDiffPoly:
        while len(self.seq) <= s:
            self.seq.append(total_derivative(self.seq[-1]))
        return self.seq[s]


# --------------------------------------------------------------------------
# scalar differential operators and matrices of them
# --------------------------------------------------------------------------


class DiffOperator:
    """``sum_m coeffs[m] * d_x^m`` with theta-free coefficients."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: JetSpace, coeffs: Mapping[int, SuperDiffPoly] | None = None):
        self.space = space
        self.coeffs = {m: c for m, c in (coeffs or {}).items() if c}

    @classmethod
    def multiplication(cls, a: SuperDiffPoly) -> DiffOperator:
        return cls(a.space, {0: a})

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self.coeffs == other.coeffs

    @property
    def order(self) -> int:
        return max(self.coeffs) if self.coeffs else -1

    def __add__(self, other: DiffOperator) -> DiffOperator:
        d = dict(self.coeffs)
        for m, c in other.coeffs.items():
            d[m] = d[m] + c if m in d else c
        return DiffOperator(self.space, d)

    def __neg__(self) -> DiffOperator:
        return DiffOperator(self.space, {m: -c for m, c in self.coeffs.items()})

    def __sub__(self, other: DiffOperator) -> DiffOperator:
        return self + (-other)

    def scale(self, c) -> DiffOperator:
        return DiffOperator(self.space, {m: a.scale(c) for m, a in self.coeffs.items()})

    def __matmul__(self, other: DiffOperator) -> DiffOperator:
        """Composition ``self o other``."""
        out: dict[int, SuperDiffPoly] = {}
        for n, b in other.coeffs.items():
            db = _DerivCache(b)
            for m, a in self.coeffs.items():
                for t in range(m + 1):
                    term = a * db[t]
                    if not term:
                        continue
                    if t and comb(m, t) != 1:
                        term = term.scale(comb(m, t))
                    k = m + n - t
                    out[k] = out[k] + term if k in out else term
        return DiffOperator(self.space, out)

    def adjoint(self) -> DiffOperator:
        """Formal adjoint ``sum_m (-d_x)^m o c_m``."""
        out: dict[int, SuperDiffPoly] = {}
        for m, c in self.coeffs.items():
            dc = _DerivCache(c)
            for t in range(m + 1):
                term = dc[t]
                f = comb(m, t) * (-1) ** m
                if f != 1:
                    term = term.scale(f)
                k = m - t
                out[k] = out[k] + term if k in out else term
        return DiffOperator(self.space, out)

    def apply(self, f: SuperDiffPoly) -> SuperDiffPoly:
        df = _DerivCache(f)
        out = self.space.zero
        for m, c in self.coeffs.items():
            out = out + c * df[m]
        return out

    def map(self, fn) -> DiffOperator:
        return DiffOperator(self.space, {m: fn(c) for m, c in self.coeffs.items()})

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        return " + ".join(f"({c})*D^{m}" for m, c in sorted(self.coeffs.items(), reverse=True))

    __repr__ = __str__


def power_of_dx(space: JetSpace, m: int, coeff: SuperDiffPoly | None = None) -> DiffOperator:
    return DiffOperator(space, {m: coeff if coeff is not None else space.one})


class DistributionBivector:
    """Matrix ``(i, j) -> DiffOperator``; coefficient of ``delta^(m)(x-y)`` is ``ops[i,j].coeffs[m]``."""

    __slots__ = ("space", "ops")

    def __init__(self, space: JetSpace, ops: Mapping[tuple[int, int], DiffOperator] | None = None):
        self.space = space
        self.ops = {k: v for k, v in (ops or {}).items() if v}

    @classmethod
    def from_table(cls, space: JetSpace, table: Mapping[tuple[int, int], Mapping[int, SuperDiffPoly]]):
        return cls(space, {k: DiffOperator(space, {m: space.coerce(c) for m, c in v.items()}) for k, v in table.items()})

    def entry(self, i: int, j: int) -> DiffOperator:
        return self.ops.get((i, j), DiffOperator(self.space))

    def coefficient(self, i: int, j: int, m: int) -> SuperDiffPoly:
        return self.entry(i, j).coeffs.get(m, self.space.zero)

    def table(self) -> dict[tuple[int, int], dict[int, SuperDiffPoly]]:
        return {k: dict(sorted(v.coeffs.items())) for k, v in sorted(self.ops.items())}

    def __eq__(self, other) -> bool:
        if not isinstance(other, DistributionBivector):
            return NotImplemented
        return self.ops == other.ops

    def __add__(self, other: DistributionBivector) -> DistributionBivector:
        d = dict(self.ops)
        for k, v in other.ops.items():
            d[k] = d[k] + v if k in d else v
        return DistributionBivector(self.space, d)

    def __neg__(self) -> DistributionBivector:
        return DistributionBivector(self.space, {k: -v for k, v in self.ops.items()})

    def __sub__(self, other: DistributionBivector) -> DistributionBivector:
        return self + (-other)

    def scale(self, c) -> DistributionBivector:
        return DistributionBivector(self.space, {k: v.scale(c) for k, v in self.ops.items()})

    def __matmul__(self, other: DistributionBivector) -> DistributionBivector:
        n = self.space.n
        out = {}
        for i in range(n):
            for j in range(n):
                acc = DiffOperator(self.space)
                for k in range(n):
                    a, b = self.ops.get((i, k)), other.ops.get((k, j))
                    if a and b:
                        acc = acc + (a @ b)
                out[(i, j)] = acc
        return DistributionBivector(self.space, out)

    def adjoint(self) -> DistributionBivector:
        """``(K*)^{ij} = (K^{ji})^dagger``."""
        return DistributionBivector(self.space, {(j, i): v.adjoint() for (i, j), v in self.ops.items()})

    def leading(self, m: int) -> dict[tuple[int, int], SuperDiffPoly]:
        return {k: v.coeffs[m] for k, v in self.ops.items() if m in v.coeffs}

    def map(self, fn) -> DistributionBivector:
        return DistributionBivector(self.space, {k: v.map(fn) for k, v in self.ops.items()})

    def __str__(self) -> str:
        rows = []
        for (i, j), op in sorted(self.ops.items()):
            for m, c in sorted(op.coeffs.items(), reverse=True):
                rows.append(f"[{i + 1},{j + 1}] delta^({m}): {c}")
        return "\n".join(rows) if rows else "0"

    __repr__ = __str__


# --------------------------------------------------------------------------
# multivectors
# --------------------------------------------------------------------------


class LocalMultivector:
    """Class of a theta-homogeneous density modulo total derivatives."""

    __slots__ = ("body", "degree")

    def __init__(self, body: SuperDiffPoly, degree: int | None = None):
        degs = body.theta_degrees()
        if degree is None:
            if len(degs) > 1:
                raise ValueError(f"inhomogeneous theta-degree {sorted(degs)}")
            degree = degs.pop() if degs else 0
        elif degs and degs != {degree}:
            raise ValueError(f"body has theta-degrees {sorted(degs)}, expected {degree}")
        self.body = body
        self.degree = degree

    @property
    def space(self) -> JetSpace:
        return self.body.space

    def __bool__(self) -> bool:
        return not self.is_zero()

    def is_zero(self) -> bool:
        return is_zero_mod_dx(self.body)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LocalMultivector):
            return NotImplemented
        return self.degree == other.degree and is_zero_mod_dx(self.body - other.body)

    def __add__(self, other: LocalMultivector) -> LocalMultivector:
        _check_degree(self, other)
        return LocalMultivector(self.body + other.body, self.degree)

    def __sub__(self, other: LocalMultivector) -> LocalMultivector:
        _check_degree(self, other)
        return LocalMultivector(self.body - other.body, self.degree)

    def __neg__(self) -> LocalMultivector:
        return LocalMultivector(-self.body, self.degree)

    def scale(self, c) -> LocalMultivector:
        return LocalMultivector(self.body.scale(c), self.degree)

    def normalized(self) -> LocalMultivector:
        """Canonical representative; bivectors go through their operator form."""
        if self.degree == 2:
            return from_distribution(to_distribution(self))
        return self

    def __str__(self) -> str:
        return f"int[{self.body}]"

    __repr__ = __str__


def _check_degree(a: LocalMultivector, b: LocalMultivector) -> None:
    if a.degree != b.degree:
        raise ValueError(f"theta-degrees differ: {a.degree} vs {b.degree}")


@dataclass(frozen=True)
class EvolutionaryField:
    components: tuple[SuperDiffPoly, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def space(self) -> JetSpace:
        return self.components[0].space

    @classmethod
    def from_multivector(cls, X: LocalMultivector) -> EvolutionaryField:
        if X.degree != 1:
            raise ValueError("a vector field has theta-degree 1")
        return cls(tuple(variational_derivative(X.body, i, ODD) for i in range(X.space.n)))

    def as_multivector(self) -> LocalMultivector:
        sp = self.space
        body = sp.zero
        for i, x in enumerate(self.components):
            body = body + x * sp.theta(i)
        return LocalMultivector(body, 1)

    def __add__(self, other: EvolutionaryField) -> EvolutionaryField:
        return EvolutionaryField(tuple(a + b for a, b in zip(self.components, other.components)))

    def scale(self, c) -> EvolutionaryField:
        return EvolutionaryField(tuple(a.scale(c) for a in self.components))

    def prolong(self, p: SuperDiffPoly) -> SuperDiffPoly:
        """``pr X (p) = sum_{i,s} d_x^s X^i dp/du^i_(s)``."""
        out = p.space.zero
        for i, x in enumerate(self.components):
            top = max_var_order(p, i, EVEN)
            if top < 0 or not x:
                continue
            dx = _DerivCache(x)
            for s in range(top + 1):
                dp = partial(p, i, s, EVEN)
                if dp:
                    out = out + dx[s] * dp
        return out

    def frechet(self) -> DistributionBivector:
        """Linearisation ``(X')^{ik} = sum_s dX^i/du^k_(s) d_x^s``."""
        sp = self.space
        ops = {}
        for i, x in enumerate(self.components):
            for k in range(sp.n):
                top = max_var_order(x, k, EVEN)
                coeffs = {s: partial(x, k, s, EVEN) for s in range(top + 1)}
                ops[(i, k)] = DiffOperator(sp, coeffs)
        return DistributionBivector(sp, ops)


def as_vector_multivector(Z) -> LocalMultivector:
    if isinstance(Z, EvolutionaryField):
        return Z.as_multivector()
    if isinstance(Z, LocalMultivector) and Z.degree == 1:
        return Z
    raise TypeError("expected an evolutionary field or a theta-degree-1 multivector")


# --------------------------------------------------------------------------
# distribution <-> theta correspondence
# --------------------------------------------------------------------------


def from_distribution(D: DistributionBivector) -> LocalMultivector:
    sp = D.space
    half = Fraction(1, 2)
    body = sp.zero
    for (i, j), op in D.ops.items():
        for m, a in op.coeffs.items():
            body = body + (a * (sp.theta(i) * sp.theta(j, m))).scale(half)
    return LocalMultivector(body, 2)


def to_distribution(P: LocalMultivector) -> DistributionBivector:
    """Skew operator ``K`` with ``P = 1/2 int theta K theta``."""
    if P.degree != 2:
        raise ValueError("to_distribution needs a bivector")
    sp = P.space
    M: dict[tuple[int, int], DiffOperator] = {}
    for (odd, even), c in P.body.terms.items():
        (s, i), (t, j) = odd
        coeff = SuperDiffPoly(sp, {((), even): c})
        # int theta_i^(s) c theta_j^(t) = int theta_i (-d)^s (c theta_j^(t))
        dc = _DerivCache(coeff)
        ops = {}
        for r in range(s + 1):
            term = dc[r]
            f = comb(s, r) * (-1) ** s
            if f != 1:
                term = term.scale(f)
            k = s - r + t
            ops[k] = ops[k] + term if k in ops else term
        op = DiffOperator(sp, ops)
        M[(i, j)] = M[(i, j)] + op if (i, j) in M else op
    Mb = DistributionBivector(sp, M)
    return Mb - Mb.adjoint()


def skew_check(D: DistributionBivector) -> bool:
    return not (D + D.adjoint()).ops


# --------------------------------------------------------------------------
# Schouten bracket and Lie derivative
# --------------------------------------------------------------------------


def _theta_varder(P: LocalMultivector) -> list[SuperDiffPoly]:
    return [variational_derivative(P.body, i, ODD) for i in range(P.space.n)]


def _pairing(A: Sequence[SuperDiffPoly], Q: SuperDiffPoly, left: bool) -> SuperDiffPoly:
    """Density of ``int A_i dQ/du^i`` (``left``) or ``int dQ/du^i A_i``, integrated by parts."""
    sp = Q.space
    out = sp.zero
    for i, a in enumerate(A):
        if not a:
            continue
        top = max_var_order(Q, i, EVEN)
        if top < 0:
            continue
        da = _DerivCache(a)
        for s in range(top + 1):
            dq = partial(Q, i, s, EVEN)
            if dq:
                out = out + (da[s] * dq if left else dq * da[s])
    return out


def schouten(P: LocalMultivector, Q: LocalMultivector) -> LocalMultivector:
    """Schouten bracket of local multivectors of theta-degrees ``p`` and ``q``.

    With left theta derivatives ``L`` the density is
    ``(-1)^(p-1) * (L_P . dQ/du + (-1)^p dP/du . L_Q)``, which is the usual
    variational formula written with right derivatives.  This normalisation
    gives ``[P, Q] = -(-1)^((p-1)(q-1)) [Q, P]`` and ``[X, P] = Lie_X P``.
    """
    p, q = P.degree, Q.degree
    if p + q < 1:
        raise ValueError("bracket of two functionals")
    body = _pairing(_theta_varder(P), Q.body, left=True)
    second = _pairing(_theta_varder(Q), P.body, left=False)
    body = body - second if p & 1 else body + second
    if not p & 1:
        body = -body
    return LocalMultivector(body, p + q - 1)


def lie_derivative(Z, P: LocalMultivector) -> LocalMultivector:
    return schouten(as_vector_multivector(Z), P)


def lie_derivative_components(Z: EvolutionaryField, K: DistributionBivector) -> DistributionBivector:
    """Operator form ``Z(K) - Z' o K - K o Z'^dagger`` of the Lie derivative of a bivector."""
    lin = Z.frechet()
    return K.map(Z.prolong) - (lin @ K) - (K @ lin.adjoint())


def jacobi_check(P: LocalMultivector) -> bool:
    return schouten(P, P).is_zero()


def d_omega(omega: LocalMultivector, V: LocalMultivector) -> LocalMultivector:
    """The differential ``d_omega V = [omega, V]``."""
    return schouten(omega, V)


def functional(density: SuperDiffPoly) -> LocalMultivector:
    return LocalMultivector(density, 0)
