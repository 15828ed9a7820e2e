"""Central invariants of deformed semisimple pencils."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import sympy

from .epsseries import EpsPencil
from .pencils import SemisimpleChart, transport_tensor
from .symfield import RatFunc, SymfieldError, residue_simple

Matrix = list[list[RatFunc]]


class NonCanonicalChart(SymfieldError):
    pass


@dataclass
class LeadingTensors:
    g1: Matrix
    g2: Matrix
    P1: Matrix
    P2: Matrix
    Q1: Matrix
    Q2: Matrix


def _coefficient_matrix(pencil: EpsPencil, which: int, k: int, m: int) -> Matrix:
    """Coefficients of ``eps^k delta^(m)`` of one leg; they must be functions of the coordinates only."""
    sp = pencil.space
    n = sp.n
    table = pencil.table(which, k)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            c = table.coefficient(i, j, m)
            extra = [key for key in c.terms if key != ((), ())]
            if extra:
                raise ValueError(f"eps^{k} delta^({m}) coefficient [{i + 1},{j + 1}] is not a tensor: {c}")
            row.append(c.terms.get(((), ()), sp.ctx.zero))
        out.append(row)
    return out


def leading_tensors(pencil: EpsPencil) -> LeadingTensors:
    get = lambda w, k, m: _coefficient_matrix(pencil, w, k, m)  # noqa: E731
    return LeadingTensors(get(1, 0, 1), get(2, 0, 1), get(1, 1, 2), get(2, 1, 2), get(1, 2, 3), get(2, 2, 3))


def _in_canonical(pencil: EpsPencil, chart: SemisimpleChart) -> LeadingTensors:
    lt = leading_tensors(pencil)
    coords = pencil.space.coords
    if coords == chart.coords:
        return lt
    if coords != chart.alt_coords:
        raise NonCanonicalChart(f"pencil coordinates {coords} match neither chart")
    return LeadingTensors(*(transport_tensor(chart, M) for M in (lt.g1, lt.g2, lt.P1, lt.P2, lt.Q1, lt.Q2)))


def _assert_canonical(chart: SemisimpleChart, c: list[RatFunc]) -> list[RatFunc]:
    for i, ci in enumerate(c):
        foreign = ci.free_names() & (set(chart.coords) - {chart.coords[i]})
        if foreign:
            raise NonCanonicalChart(f"c{i + 1} = {ci} depends on {sorted(foreign)}")
    return c


def central_invariants(pencil: EpsPencil, chart: SemisimpleChart) -> list[RatFunc]:
    """``c_i = 1/(3 f_i^2) [Q2^ii - u^i Q1^ii + 2 sum_{k != i} (P2^ki - u^i P1^ki)^2 / (f^k (u^k - u^i))]``.

    Leading tensors are read from the pencil and, if it lives in the chart's
    alternate coordinates, transported to canonical ones first.
    """
    if pencil.order < 2:
        raise ValueError("central invariants need the pencil through eps^2")
    lt = _in_canonical(pencil, chart)
    f, n = chart.f, chart.n
    out = []
    for i in range(n):
        ui = chart.u(i)
        acc = lt.Q2[i][i] - ui * lt.Q1[i][i]
        for k in range(n):
            if k == i:
                continue
            p = lt.P2[k][i] - ui * lt.P1[k][i]
            if p:
                acc = acc + p * p * 2 / (f[k] * (chart.u(k) - ui))
        out.append(acc / (f[i] * f[i] * 3))
    return _assert_canonical(chart, out)


def residue_inputs_from_pencil(pencil: EpsPencil) -> tuple[Matrix, Matrix]:
    """``g_lambda`` and ``A_lambda = Q_lambda + (g_lambda^-1)_{lk} P_lambda^{li} P_lambda^{kj}`` in the pencil's chart."""
    ctx = pencil.space.ctx
    lam_name = ctx.spectral
    if lam_name is None:
        raise ValueError("context has no spectral symbol")
    lam = ctx[lam_name]
    lt = leading_tensors(pencil)
    n = pencil.space.n
    comb = lambda A, B: [[A[i][j] - lam * B[i][j] for j in range(n)] for i in range(n)]  # noqa: E731
    g, P, Q = comb(lt.g2, lt.g1), comb(lt.P2, lt.P1), comb(lt.Q2, lt.Q1)
    ginv = matrix_inverse(g)
    A = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = Q[i][j]
            for l in range(n):
                for k in range(n):
                    if ginv[l][k] and P[l][i] and P[k][j]:
                        acc = acc + ginv[l][k] * P[l][i] * P[k][j]
            row.append(acc)
        A.append(row)
    return g, A


def matrix_inverse(M: Matrix) -> Matrix:
    ctx = M[0][0].ctx
    n = len(M)
    S = sympy.Matrix([[M[i][j].as_expr() for j in range(n)] for i in range(n)])
    Sinv = S.inv(method="ADJ")
    return [[ctx.from_sympy(Sinv[i, j]) for j in range(n)] for i in range(n)]


def central_invariants_residue(g_lam: Matrix, A_lam: Matrix, chart: SemisimpleChart) -> list[RatFunc]:
    """``c_i = -1/(3 f^i) Res_{lambda = u^i} Tr(g_lambda^-1 A_lambda)``.

    The trace is chart independent, so inputs may be given in the chart's
    alternate coordinates; they are rewritten in canonical ones before taking
    residues.
    """
    ginv = matrix_inverse(g_lam)
    n = len(g_lam)
    ctx = chart.ctx
    tr = ctx.zero
    for i in range(n):
        for k in range(n):
            if ginv[i][k] and A_lam[k][i]:
                tr = tr + ginv[i][k] * A_lam[k][i]
    if chart.alt_coords and (tr.free_names() & set(chart.alt_coords)):
        tr = chart.to_canonical(tr)
    out = []
    for i in range(chart.n):
        if not tr:
            out.append(ctx.zero)
            continue
        res = residue_simple(tr, chart.u(i))
        out.append(-res / (chart.f[i] * 3))
    return _assert_canonical(chart, out)


@dataclass(frozen=True)
class InvariantDegree:
    max_degree: int | None
    is_polynomial: bool
    is_constant: bool
    homogeneous_degree: int | None

    def as_dict(self) -> dict:
        return {
            "max_degree": self.max_degree,
            "is_polynomial": self.is_polynomial,
            "is_constant": self.is_constant,
            "homogeneous_degree": self.homogeneous_degree,
        }


def invariant_degree(c: Sequence[RatFunc], coords: Sequence[str]) -> InvariantDegree:
    """Degree data of central invariants ``c[i]`` in their own coordinate ``coords[i]``."""
    poly = all(ci.den.degree(ci.ctx.gen(x)) == 0 for ci, x in zip(c, coords))
    const = all(not ci.depends_on(x) for ci, x in zip(c, coords))
    maxdeg = max((ci.degree(x) if ci else 0) for ci, x in zip(c, coords)) if poly else None
    degs = {ci.total_degree([x]) for ci, x in zip(c, coords) if ci}
    hom = degs.pop() if len(degs) == 1 else (0 if not degs else None)
    return InvariantDegree(maxdeg, poly, const, hom)
