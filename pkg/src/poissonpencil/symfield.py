"""Exact rational-function arithmetic over QQ.

Values live in a :class:`SymbolContext`, which owns one sparse polynomial ring
(graded lexicographic order over the registration order of its symbols).  A
:class:`RatFunc` is a reduced quotient of two ring elements whose denominator
has leading coefficient 1, so structural equality is value equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import sympy
from sympy.polys.domains import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, PolyRing

Rational = Union[int, Fraction]


class SymfieldError(ArithmeticError):
    pass


class DivisionByZero(SymfieldError, ZeroDivisionError):
    pass


class NotASimplePole(SymfieldError):
    pass


class NonPolynomialIntegrand(SymfieldError):
    pass


@dataclass(frozen=True)
class Symbol:
    name: str
    kind: str  # "coordinate" | "parameter" | "spectral"


class SymbolContext:
    """A registry of symbols together with the polynomial ring they generate."""

    KINDS = ("coordinate", "parameter", "spectral")

    def __init__(
        self,
        coordinates: Sequence[str] = (),
        parameters: Sequence[str] = (),
        spectral: str | None = None,
    ):
        symbols: list[Symbol] = [Symbol(n, "coordinate") for n in coordinates]
        symbols += [Symbol(n, "parameter") for n in parameters]
        if spectral is not None:
            symbols.append(Symbol(spectral, "spectral"))
        names = [s.name for s in symbols]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate symbol names in {names}")
        for n in names:
            if not n.isidentifier():
                raise ValueError(f"symbol name {n!r} is not an identifier")
        self.symbols: tuple[Symbol, ...] = tuple(symbols)
        self.names: tuple[str, ...] = tuple(names)
        # sympy rings need at least one generator
        ring_names = names if names else ["_unit"]
        self.ring: PolyRing = PolyRing(ring_names, QQ, grlex)
        self._index = {n: i for i, n in enumerate(names)}
        self.zero = RatFunc(self, self.ring.zero, self.ring.one, _reduced=True)
        self.one = RatFunc(self, self.ring.one, self.ring.one, _reduced=True)

    def __repr__(self) -> str:
        return f"SymbolContext({', '.join(self.names)})"

    @property
    def spectral(self) -> str | None:
        for s in self.symbols:
            if s.kind == "spectral":
                return s.name
        return None

    def names_of_kind(self, kind: str) -> tuple[str, ...]:
        return tuple(s.name for s in self.symbols if s.kind == kind)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown symbol {name!r} in {self!r}") from None

    def gen(self, name: str) -> PolyElement:
        return self.ring.gens[self.index(name)]

    def __getitem__(self, name: str) -> RatFunc:
        return RatFunc(self, self.gen(name), self.ring.one, _reduced=True)

    def const(self, value) -> RatFunc:
        return RatFunc(self, self.ring.ground_new(_qq(value)), self.ring.one, _reduced=True)

    def coerce(self, value) -> RatFunc:
        if isinstance(value, RatFunc):
            if value.ctx is not self:
                raise ValueError("RatFunc belongs to a different SymbolContext")
            return value
        if isinstance(value, PolyElement):
            return RatFunc(self, value, self.ring.one, _reduced=True)
        if isinstance(value, str):
            return self.parse(value)
        if isinstance(value, sympy.Basic):
            return self.from_sympy(value)
        return self.const(value)

    def from_sympy(self, expr: sympy.Expr) -> RatFunc:
        expr = sympy.together(sympy.sympify(expr))
        num, den = sympy.fraction(expr)
        unknown = (num.free_symbols | den.free_symbols) - {sympy.Symbol(n) for n in self.names}
        if unknown:
            raise ValueError(f"unknown symbols {sorted(map(str, unknown))}")
        return RatFunc(self, self.ring.from_expr(num), self.ring.from_expr(den))

    def parse(self, text: str) -> RatFunc:
        local = {n: sympy.Symbol(n) for n in self.names}
        try:
            expr = sympy.parse_expr(text, local_dict=local, evaluate=True)
        except (SyntaxError, TypeError, sympy.SympifyError) as exc:
            raise ValueError(f"cannot parse {text!r}: {exc}") from None
        return self.from_sympy(expr)


def _qq(value):
    if isinstance(value, Fraction):
        return QQ(value.numerator, value.denominator)
    if isinstance(value, str):
        f = Fraction(value)
        return QQ(f.numerator, f.denominator)
    return QQ.convert(value)


class RatFunc:
    """Reduced quotient ``num/den`` of polynomials in a :class:`SymbolContext`."""

    __slots__ = ("ctx", "num", "den", "_dcache")

    def __init__(self, ctx: SymbolContext, num: PolyElement, den: PolyElement, _reduced: bool = False):
        if not den:
            raise DivisionByZero("zero denominator")
        if not _reduced:
            num, den = _reduce(num, den)
        self.ctx = ctx
        self.num = num
        self.den = den
        self._dcache = None

    # construction helpers -------------------------------------------------
    def _new(self, num: PolyElement, den: PolyElement) -> RatFunc:
        return RatFunc(self.ctx, num, den)

    def _poly(self, num: PolyElement) -> RatFunc:
        return RatFunc(self.ctx, num, self.ctx.ring.one, _reduced=True)

    def _coerce(self, other) -> RatFunc | None:
        if isinstance(other, RatFunc):
            if other.ctx is not self.ctx:
                raise ValueError("mixing RatFuncs from different contexts")
            return other
        if isinstance(other, (int, Fraction)) or type(other).__name__ in ("mpq", "mpz", "PythonMPQ"):
            return self.ctx.const(other)
        return None

    # predicates -----------------------------------------------------------
    def __bool__(self) -> bool:
        return bool(self.num)

    @property
    def is_polynomial(self) -> bool:
        return self.den.is_ground

    @property
    def is_constant(self) -> bool:
        return self.num.is_ground and self.den.is_ground

    def free_names(self) -> set[str]:
        used = set()
        for poly in (self.num, self.den):
            for monom in poly.itermonoms():
                for i, e in enumerate(monom):
                    if e:
                        used.add(self.ctx.ring.symbols[i].name)
        return used & set(self.ctx.names)

    def depends_on(self, name: str) -> bool:
        i = self.ctx.index(name)
        return any(m[i] for p in (self.num, self.den) for m in p.itermonoms())

    def as_constant(self) -> Fraction:
        if not self.is_constant:
            raise ValueError(f"{self} is not constant")
        q = self.num.LC if self.num else QQ(0)
        return Fraction(int(q.numerator), int(q.denominator))

    # equality -------------------------------------------------------------
    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self) -> int:
        return hash((tuple(sorted(self.num.items())), tuple(sorted(self.den.items()))))

    # arithmetic -----------------------------------------------------------
    def __neg__(self) -> RatFunc:
        return RatFunc(self.ctx, -self.num, self.den, _reduced=True)

    def __add__(self, other) -> RatFunc:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not o.num:
            return self
        if not self.num:
            return o
        if self.den == o.den:
            if self.den.is_ground:
                return self._poly(self.num + o.num)
            return self._new(self.num + o.num, self.den)
        if o.den.is_ground:
            return self._new(self.num * o.den + o.num * self.den, self.den * o.den)
        return self._new(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __sub__(self, other) -> RatFunc:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other) -> RatFunc:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other) -> RatFunc:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not self.num or not o.num:
            return self.ctx.zero
        if self.den.is_ground and o.den.is_ground:
            return self._poly(self.num * o.num)
        if o.is_constant:
            return RatFunc(self.ctx, self.num * o.num.LC, self.den, _reduced=True)
        if self.is_constant:
            return RatFunc(self.ctx, o.num * self.num.LC, o.den, _reduced=True)
        return self._new(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> RatFunc:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not o.num:
            raise DivisionByZero(f"division of {self} by zero")
        if o.is_constant:
            return RatFunc(self.ctx, self.num * (1 / o.num.LC), self.den, _reduced=True)
        return self._new(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other) -> RatFunc:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, k: int) -> RatFunc:
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.ctx.one / (self ** (-k))
        return RatFunc(self.ctx, self.num**k, self.den**k, _reduced=True)

    # calculus -------------------------------------------------------------
    def diff(self, name: str) -> RatFunc:
        cache = self._dcache
        if cache is not None and name in cache:
            return cache[name]
        x = self.ctx.gen(name)
        if self.den.is_ground:
            out = self._poly(self.num.diff(x))
        else:
            num = self.num.diff(x) * self.den - self.num * self.den.diff(x)
            out = self._new(num, self.den * self.den) if num else self.ctx.zero
        if cache is None:
            self._dcache = cache = {}
        cache[name] = out
        return out

    def subs(self, mapping: Mapping[str, "RatFunc | Rational"]) -> RatFunc:
        """Substitute symbols by rational functions of the same context."""
        images = {self.ctx.index(k): self.ctx.coerce(v) for k, v in mapping.items()}
        return _eval_poly(self.num, images, self.ctx) / _eval_poly(self.den, images, self.ctx)

    def degree(self, name: str) -> int:
        """Degree of the numerator minus degree of the denominator in ``name``."""
        x = self.ctx.gen(name)
        return self.num.degree(x) - self.den.degree(x)

    def total_degree(self, names: Iterable[str]) -> int | None:
        """Homogeneous degree in ``names`` or ``None`` when not homogeneous."""
        idx = [self.ctx.index(n) for n in names]
        degs = []
        for poly in (self.num, self.den):
            ds = {sum(m[i] for i in idx) for m in poly.itermonoms()}
            if len(ds) > 1:
                return None
            degs.append(ds.pop() if ds else 0)
        if not self.num:
            return None
        return degs[0] - degs[1]

    # display --------------------------------------------------------------
    def as_expr(self) -> sympy.Expr:
        return self.num.as_expr() / self.den.as_expr()

    def __str__(self) -> str:
        if self.den == self.ctx.ring.one:
            return _fmt(self.num.as_expr())
        return f"({_fmt(self.num.as_expr())})/({_fmt(self.den.as_expr())})"

    def __repr__(self) -> str:
        return f"RatFunc({self})"


def _fmt(expr) -> str:
    return sympy.sstr(expr, order="grlex")


def _reduce(num: PolyElement, den: PolyElement) -> tuple[PolyElement, PolyElement]:
    if not num:
        return num, den.ring.one
    if den.is_ground:
        return num * (1 / den.LC), den.ring.one
    num, den = num.cancel(den)
    lc = den.LC
    if lc != 1:
        inv = 1 / lc
        num, den = num * inv, den * inv
    return num, den


def _eval_poly(poly: PolyElement, images: dict[int, RatFunc], ctx: SymbolContext) -> RatFunc:
    out = ctx.zero
    for monom, coeff in poly.items():
        term = ctx.const(1) * RatFunc(ctx, ctx.ring.ground_new(coeff), ctx.ring.one, _reduced=True)
        rest = [0] * len(monom)
        for i, e in enumerate(monom):
            if not e:
                continue
            if i in images:
                term = term * images[i] ** e
            else:
                rest[i] = e
        if any(rest):
            term = term * RatFunc(ctx, ctx.ring.from_dict({tuple(rest): QQ(1)}), ctx.ring.one, _reduced=True)
        out = out + term
    return out


def arith(a: RatFunc, b: RatFunc, op: str) -> RatFunc:
    """Exact binary operation selected by name (``add``, ``sub``, ``mul``, ``div``)."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def residue_simple(f: RatFunc, pole: RatFunc, var: str | None = None) -> RatFunc:
    """Residue of ``f`` at a simple pole ``var = pole``.

    ``var`` defaults to the context's spectral symbol.  The pole must be free of
    ``var``.  Raises :class:`NotASimplePole` unless the reduced denominator
    vanishes there to exactly first order.
    """
    ctx = f.ctx
    var = var or ctx.spectral
    if var is None:
        raise ValueError("no spectral symbol in context and no variable given")
    pole = ctx.coerce(pole)
    if pole.depends_on(var):
        raise ValueError("pole must not depend on the residue variable")
    den = RatFunc(ctx, f.den, ctx.ring.one, _reduced=True)
    num = RatFunc(ctx, f.num, ctx.ring.one, _reduced=True)
    at = {var: pole}
    if den.subs(at):
        raise NotASimplePole(f"denominator does not vanish at {var} = {pole}")
    dden = den.diff(var).subs(at)
    if not dden:
        raise NotASimplePole(f"pole at {var} = {pole} has order > 1")
    return num.subs(at) / dden


def poly_antiderivative(f: RatFunc, var: str) -> RatFunc:
    """Antiderivative in ``var`` with zero integration constant."""
    ctx = f.ctx
    x = ctx.index(var)
    if f.den.degree(ctx.gen(var)) > 0:
        raise NonPolynomialIntegrand(f"{f} is not polynomial in {var}")
    terms = {}
    for monom, coeff in f.num.items():
        m = list(monom)
        m[x] += 1
        terms[tuple(m)] = coeff / m[x]
    num = ctx.ring.from_dict(terms) if terms else ctx.ring.zero
    return RatFunc(ctx, num, f.den, _reduced=True)
