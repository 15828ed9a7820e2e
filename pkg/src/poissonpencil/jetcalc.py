"""Differential superpolynomials on the jet space of a loop space.

A term is ``c(u) * theta-monomial * jet-monomial`` where

* the odd monomial is a sorted tuple of ``(s, i)`` pairs standing for
  ``theta_i^(s)`` (sorting by order first puts underived thetas on the left),
* the even monomial is a sorted tuple of ``(s, i)`` pairs with ``s >= 1``,
  repeated according to multiplicity,
* ``c`` is a :class:`RatFunc` in the order-zero coordinates (and parameters).
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from itertools import groupby
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .symfield import NonPolynomialIntegrand, RatFunc, SymbolContext, SymfieldError

EVEN, ODD = "even", "odd"

Key = tuple  # (odd, even)


class Resonance(SymfieldError):
    def __init__(self, m):
        super().__init__(f"resonant Euler weight {m}")
        self.m = m


class JetSpace:
    """Jet variables ``u^i_(s)`` and ``theta_i^(s)`` over coordinates of a context."""

    def __init__(self, ctx: SymbolContext, coords: Sequence[str] | None = None):
        self.ctx = ctx
        self.coords = tuple(coords if coords is not None else ctx.names_of_kind("coordinate"))
        if not self.coords:
            raise ValueError("a jet space needs at least one coordinate")
        for c in self.coords:
            ctx.index(c)
        self.n = len(self.coords)
        self.zero = SuperDiffPoly(self, {})
        self.one = SuperDiffPoly(self, {((), ()): ctx.one})

    def __repr__(self) -> str:
        return f"JetSpace({', '.join(self.coords)})"

    def u(self, i: int, s: int = 0) -> SuperDiffPoly:
        if s == 0:
            return SuperDiffPoly(self, {((), ()): self.ctx[self.coords[i]]})
        return SuperDiffPoly(self, {((), ((s, i),)): self.ctx.one})

    def theta(self, i: int, s: int = 0) -> SuperDiffPoly:
        return SuperDiffPoly(self, {(((s, i),), ()): self.ctx.one})

    def const(self, c) -> SuperDiffPoly:
        c = self.ctx.coerce(c)
        return SuperDiffPoly(self, {((), ()): c} if c else {})

    def coerce(self, x) -> SuperDiffPoly:
        if isinstance(x, SuperDiffPoly):
            return x
        return self.const(x)

    def var_name(self, i: int, s: int, parity: str = EVEN) -> str:
        base = self.coords[i] if parity == EVEN else f"theta_{self.coords[i]}"
        return base if s == 0 else f"{base}_{'x' * s}"


def _acc(d: dict, k, c: RatFunc) -> None:
    old = d.get(k)
    if old is None:
        d[k] = c
    else:
        s = old + c
        if s:
            d[k] = s
        else:
            del d[k]


def _odd_merge(a: tuple, b: tuple):
    """Concatenate odd monomials ``a*b``; returns ``(sign, sorted)`` or ``None`` if a theta repeats."""
    if not a:
        return 1, b
    if not b:
        return 1, a
    out = []
    sign = 1
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        x, y = a[i], b[j]
        if x < y:
            out.append(x)
            i += 1
        elif y < x:
            out.append(y)
            j += 1
            if (la - i) & 1:
                sign = -sign
        else:
            return None
    out.extend(a[i:])
    out.extend(b[j:])
    return sign, tuple(out)


def _even_merge(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(a + b))


def _even_insert(e: tuple, v) -> tuple:
    lst = list(e)
    lo, hi = 0, len(lst)
    while lo < hi:
        mid = (lo + hi) // 2
        if lst[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    lst.insert(lo, v)
    return tuple(lst)


class SuperDiffPoly:
    __slots__ = ("space", "terms")

    def __init__(self, space: JetSpace, terms: dict):
        self.space = space
        self.terms = terms

    # basic structure -------------------------------------------------------
    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def items(self):
        return self.terms.items()

    def theta_degrees(self) -> set[int]:
        return {len(k[0]) for k in self.terms}

    @property
    def theta_degree(self) -> int:
        degs = self.theta_degrees()
        if len(degs) > 1:
            raise ValueError(f"inhomogeneous theta-degree {sorted(degs)}")
        return degs.pop() if degs else 0

    def theta_part(self, k: int) -> SuperDiffPoly:
        return SuperDiffPoly(self.space, {key: c for key, c in self.terms.items() if len(key[0]) == k})

    def max_order(self, parity: str | None = None) -> int:
        """Largest jet order present (-1 for a polynomial free of such variables)."""
        best = -1
        for (odd, even), c in self.terms.items():
            if parity in (None, ODD) and odd:
                best = max(best, max(s for s, _ in odd))
            if parity in (None, EVEN):
                if even:
                    best = max(best, even[-1][0])
                elif best < 0 and c.free_names() & set(self.space.coords):
                    best = 0
        return best

    def differential_degree(self) -> int | None:
        """Common value of the summed jet orders, or ``None`` if mixed."""
        degs = {sum(s for s, _ in odd) + sum(s for s, _ in even) for odd, even in self.terms}
        if len(degs) > 1:
            return None
        return degs.pop() if degs else 0

    def coefficients(self) -> Iterator[RatFunc]:
        return iter(self.terms.values())

    # equality --------------------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, SuperDiffPoly):
            try:
                other = self.space.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset((k, hash(c)) for k, c in self.terms.items()))

    # arithmetic ------------------------------------------------------------
    def __neg__(self) -> SuperDiffPoly:
        return SuperDiffPoly(self.space, {k: -c for k, c in self.terms.items()})

    def __add__(self, other) -> SuperDiffPoly:
        other = self.space.coerce(other)
        if len(other.terms) > len(self.terms):
            a, b = other, self
        else:
            a, b = self, other
        d = dict(a.terms)
        for k, c in b.terms.items():
            _acc(d, k, c)
        return SuperDiffPoly(self.space, d)

    __radd__ = __add__

    def __sub__(self, other) -> SuperDiffPoly:
        return self + (-self.space.coerce(other))

    def __rsub__(self, other) -> SuperDiffPoly:
        return self.space.coerce(other) - self

    def scale(self, c) -> SuperDiffPoly:
        c = self.space.ctx.coerce(c)
        if not c:
            return self.space.zero
        return SuperDiffPoly(self.space, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other) -> SuperDiffPoly:
        if not isinstance(other, SuperDiffPoly):
            if isinstance(other, RatFunc) or isinstance(other, (int, Fraction)):
                return self.scale(other)
            return NotImplemented
        d: dict = {}
        for (o1, e1), c1 in self.terms.items():
            for (o2, e2), c2 in other.terms.items():
                m = _odd_merge(o1, o2)
                if m is None:
                    continue
                sign, odd = m
                c = c1 * c2
                _acc(d, (odd, _even_merge(e1, e2)), c if sign > 0 else -c)
        return SuperDiffPoly(self.space, d)

    def __rmul__(self, other) -> SuperDiffPoly:
        if isinstance(other, RatFunc) or isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int) -> SuperDiffPoly:
        out = self.space.one
        for _ in range(k):
            out = out * self
        return out

    def map_coefficients(self, f: Callable[[RatFunc], RatFunc]) -> SuperDiffPoly:
        d = {}
        for k, c in self.terms.items():
            v = f(c)
            if v:
                d[k] = v
        return SuperDiffPoly(self.space, d)

    # display ---------------------------------------------------------------
    def __str__(self) -> str:
        if not self.terms:
            return "0"
        sp = self.space
        parts = []
        for (odd, even), c in sorted(self.terms.items(), key=lambda kv: _sort_key(kv[0])):
            factors = []
            for v, grp in groupby(even):
                e = len(list(grp))
                name = sp.var_name(v[1], v[0])
                factors.append(name if e == 1 else f"{name}**{e}")
            factors += [sp.var_name(i, s, ODD) for s, i in odd]
            cs = str(c)
            if not factors:
                parts.append(cs)
            elif cs == "1":
                parts.append("*".join(factors))
            elif cs == "-1":
                parts.append("-" + "*".join(factors))
            else:
                if not (c.is_polynomial and len(c.num) == 1):
                    cs = f"({cs})"
                parts.append(cs + "*" + "*".join(factors))
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"SuperDiffPoly({self})"


def _sort_key(key):
    odd, even = key
    return (len(odd), odd, len(even), even)


# calculus ------------------------------------------------------------------


def coefficient_dx(c: RatFunc, space: JetSpace) -> list[tuple[int, RatFunc]]:
    """Nonzero ``(i, dc/du^i)`` pairs, so that ``d_x c = sum dc/du^i u^i_x``."""
    out = []
    for i, name in enumerate(space.coords):
        if c.is_constant:
            break
        dc = c.diff(name)
        if dc:
            out.append((i, dc))
    return out


def total_derivative(p: SuperDiffPoly, times: int = 1) -> SuperDiffPoly:
    for _ in range(times):
        p = _dx(p)
    return p


def _dx(p: SuperDiffPoly) -> SuperDiffPoly:
    space = p.space
    d: dict = {}
    for (odd, even), c in p.terms.items():
        for i, dc in coefficient_dx(c, space):
            _acc(d, (odd, _even_insert(even, (1, i))), dc)
        if even:
            start = 0
            for v, grp in groupby(even):
                e = len(list(grp))
                rest = even[:start] + even[start + 1 :]
                start += e
                _acc(d, (odd, _even_insert(rest, (v[0] + 1, v[1]))), c * e if e != 1 else c)
        for k, (s, i) in enumerate(odd):
            w = (s + 1, i)
            rest = odd[:k] + odd[k + 1 :]
            if w in rest:
                continue
            # w sits right of position k; count how many later entries it passes
            passed = 0
            for x in odd[k + 1 :]:
                if x < w:
                    passed += 1
                else:
                    break
            lst = list(rest)
            lst.insert(k + passed, w)
            _acc(d, (tuple(lst), even), -c if passed & 1 else c)
    return SuperDiffPoly(space, d)


def partial(p: SuperDiffPoly, i: int, s: int, parity: str = EVEN) -> SuperDiffPoly:
    """Partial derivative in ``u^i_(s)``, or the left derivative in ``theta_i^(s)``."""
    space = p.space
    d: dict = {}
    v = (s, i)
    if parity == ODD:
        for (odd, even), c in p.terms.items():
            if v in odd:
                k = odd.index(v)
                _acc(d, (odd[:k] + odd[k + 1 :], even), -c if k & 1 else c)
        return SuperDiffPoly(space, d)
    if s == 0:
        name = space.coords[i]
        for key, c in p.terms.items():
            dc = c.diff(name)
            if dc:
                _acc(d, key, dc)
        return SuperDiffPoly(space, d)
    for (odd, even), c in p.terms.items():
        e = even.count(v)
        if e:
            k = even.index(v)
            _acc(d, (odd, even[:k] + even[k + 1 :]), c * e if e != 1 else c)
    return SuperDiffPoly(space, d)


def max_var_order(p: SuperDiffPoly, i: int, parity: str = EVEN) -> int:
    best = -1
    for (odd, even), c in p.terms.items():
        seq = odd if parity == ODD else even
        for s, j in seq:
            if j == i and s > best:
                best = s
        if parity == EVEN and best < 0 and c.depends_on(p.space.coords[i]):
            best = 0
    return best


def variational_derivative(p: SuperDiffPoly, i: int, parity: str = EVEN) -> SuperDiffPoly:
    """Euler operator ``sum_s (-d_x)^s d p / d z^i_(s)`` by a Horner scheme."""
    top = max_var_order(p, i, parity)
    if top < 0:
        return p.space.zero
    v = partial(p, i, top, parity)
    for s in range(top - 1, -1, -1):
        v = partial(p, i, s, parity) - _dx(v)
    return v


def is_zero_mod_dx(p: SuperDiffPoly, verify: bool = False) -> bool:
    """Whether ``p`` is a total x-derivative.

    Components of positive theta-degree are tested by their theta variational
    derivatives; the theta-free component by its u variational derivatives and
    its constant term.  With ``verify`` the answer is cross-checked against
    :func:`dx_integrate`.
    """
    space = p.space
    answer = True
    for k in sorted(p.theta_degrees()):
        part = p.theta_part(k)
        if k == 0:
            const = part.terms.get(((), ()))
            if const is not None and const.is_constant:
                answer = False
                break
            parity = EVEN
        else:
            parity = ODD
        if any(variational_derivative(part, i, parity) for i in range(space.n)):
            answer = False
            break
    if verify:
        q = dx_integrate(p)
        constructive = q is not None and total_derivative(q) == p
        if constructive != answer:
            raise ArithmeticError(f"variational and constructive exactness tests disagree on {p}")
    return answer


def dx_integrate(p: SuperDiffPoly, max_steps: int = 10_000) -> SuperDiffPoly | None:
    """Find ``q`` with ``d_x q = p`` by repeated integration by parts, or ``None``."""
    space = p.space
    q = space.zero
    rest = p
    steps = 0
    while rest:
        steps += 1
        if steps > max_steps:
            return None
        cands = set()
        for (odd, even), _ in rest.terms.items():
            cands.update((s, 1, i) for s, i in odd)
            cands.update((s, 0, i) for s, i in even)
        if not cands:
            # only order-zero data left: a nonzero function of u is never a derivative
            return None
        top, flag, i = max(cands)
        var = (ODD if flag else EVEN, i)
        parity, i = var
        if top == 0:
            return None
        a = partial(rest, i, top, parity)
        if parity == EVEN:
            if max_var_order(a, i, EVEN) >= top:
                return None
            step = _antiderivative_even(a, i, top - 1)
            if step is None:
                return None
        else:
            if top - 1 >= 0 and partial(a, i, top - 1, ODD):
                return None
            step = space.theta(i, top - 1) * a
        new_rest = rest - total_derivative(step)
        if max_var_order(new_rest, i, parity) >= top and partial(new_rest, i, top, parity):
            return None
        q = q + step
        rest = new_rest
    return q


def _antiderivative_even(a: SuperDiffPoly, i: int, s: int) -> SuperDiffPoly | None:
    space = a.space
    d: dict = {}
    v = (s, i)
    if s == 0:
        name = space.coords[i]
        for key, c in a.terms.items():
            from .symfield import poly_antiderivative

            try:
                _acc(d, key, poly_antiderivative(c, name))
            except NonPolynomialIntegrand:
                return None
        return SuperDiffPoly(space, d)
    for (odd, even), c in a.terms.items():
        e = even.count(v) + 1
        _acc(d, (odd, _even_insert(even, v)), c / e)
    return SuperDiffPoly(space, d)


def euler_weight_operator(p: SuperDiffPoly, C=0) -> SuperDiffPoly:
    """``sum_i [u^i d/du^i + sum_s u^i_(s) d/du^i_(s)] p + C p`` (polynomial coefficients)."""
    return _monomialwise(p, lambda m: m + Fraction(C))


def euler_transport_solve(k: SuperDiffPoly, C) -> SuperDiffPoly:
    """Solve the Euler transport equation monomial by monomial; see :func:`euler_weight_operator`."""
    C = Fraction(C)

    def factor(m):
        if m + C == 0:
            raise Resonance(m)
        return 1 / (m + C)

    return _monomialwise(k, factor)


def _monomialwise(p: SuperDiffPoly, factor) -> SuperDiffPoly:
    space = p.space
    ctx = space.ctx
    ring = ctx.ring
    cidx = [ctx.index(n) for n in space.coords]
    d: dict = {}
    for (odd, even), c in p.terms.items():
        if any(c.den.degree(ctx.gen(n)) > 0 for n in space.coords):
            raise NonPolynomialIntegrand(f"coefficient {c} is not polynomial in the coordinates")
        jets = len(even)
        acc = {}
        for monom, q in c.num.items():
            m = sum(monom[j] for j in cidx) + jets
            f = Fraction(factor(m))
            if f:
                acc[monom] = q * ring.domain.convert(f.numerator) / ring.domain.convert(f.denominator)
        if acc:
            coeff = RatFunc(ctx, ring.from_dict(acc), c.den)
            if coeff:
                _acc(d, (odd, even), coeff)
    return SuperDiffPoly(space, d)


def from_sympy(space: JetSpace, expr) -> SuperDiffPoly:
    """Build a theta-free differential polynomial from a sympy expression.

    Jet variables are recognised by name, e.g. ``u_xx``; coefficients may be
    rational in the coordinates and parameters.
    """
    import sympy

    expr = sympy.sympify(expr)
    jetsyms = {}
    for sym in expr.free_symbols:
        name = sym.name
        for i, c in enumerate(space.coords):
            if name.startswith(c + "_") and set(name[len(c) + 1 :]) == {"x"}:
                jetsyms[sym] = (len(name) - len(c) - 1, i)
    if not jetsyms:
        return space.const(space.ctx.from_sympy(expr))
    gens = sorted(jetsyms, key=lambda s: jetsyms[s])
    num, den = sympy.fraction(sympy.together(expr))
    if den.free_symbols & set(gens):
        raise ValueError("jet variables of positive order must enter polynomially")
    poly = sympy.Poly(sympy.together(expr), *gens)
    d: dict = {}
    for monom, coeff in poly.terms():
        even = []
        for g, e in zip(gens, monom):
            even += [jetsyms[g]] * e
        _acc(d, ((), tuple(sorted(even))), space.ctx.from_sympy(coeff))
    return SuperDiffPoly(space, d)


def substitute_jets(p: SuperDiffPoly, images: Sequence[SuperDiffPoly]) -> SuperDiffPoly:
    """Replace each jet ``u^i_(s)`` (s >= 1) by ``d_x^s images[i]`` in a theta-free polynomial.

    Coefficients (functions of order-zero coordinates) are left untouched; the
    caller handles order-zero substitution.
    """
    space = p.space
    cache: dict = {}

    def jet(i, s):
        if (i, s) not in cache:
            cache[(i, s)] = total_derivative(images[i], s)
        return cache[(i, s)]

    out = space.zero
    for (odd, even), c in p.terms.items():
        term = SuperDiffPoly(space, {(odd, ()): c})
        for s, i in even:
            term = term * jet(i, s)
        out = out + term
    return out
