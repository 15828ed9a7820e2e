"""Truncated epsilon-series of bivectors and pencils built from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from .jetcalc import JetSpace
from .multivec import DistributionBivector, LocalMultivector, from_distribution, schouten, to_distribution

DEFAULT_ORDER = 6


def _clean(series: Mapping[int, LocalMultivector], order: int) -> dict[int, LocalMultivector]:
    return {k: v for k, v in sorted(series.items()) if k <= order and v.body}


def series_bracket(a: Mapping[int, LocalMultivector], b: Mapping[int, LocalMultivector], k: int) -> LocalMultivector | None:
    """epsilon^k coefficient of ``[a, b]`` or ``None`` when no pair contributes."""
    out = None
    for i, x in a.items():
        y = b.get(k - i)
        if y is None:
            continue
        t = schouten(x, y)
        out = t if out is None else out + t
    return out


def series_self_bracket(a: Mapping[int, LocalMultivector], k: int) -> LocalMultivector | None:
    """epsilon^k coefficient of ``[a, a]`` for a series of bivectors (symmetric in its slots)."""
    out = None
    for i, x in a.items():
        j = k - i
        if j < i or j not in a:
            continue
        t = schouten(x, a[j])
        if j != i:
            t = t.scale(2)
        out = t if out is None else out + t
    return out


@dataclass
class EpsPencil:
    """``P_lambda = leg2(eps) - lambda * leg1(eps)``, valid modulo ``eps^(order+1)``."""

    space: JetSpace
    leg2: dict[int, LocalMultivector]
    leg1: dict[int, LocalMultivector]
    order: int = DEFAULT_ORDER
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.leg2 = _clean(self.leg2, self.order)
        self.leg1 = _clean(self.leg1, self.order)

    @classmethod
    def from_tables(cls, space, leg2: Mapping[int, DistributionBivector], leg1: Mapping[int, DistributionBivector], order=DEFAULT_ORDER, **meta):
        return cls(
            space,
            {k: from_distribution(v) for k, v in leg2.items()},
            {k: from_distribution(v) for k, v in leg1.items()},
            order,
            dict(meta),
        )

    def leg(self, which: int) -> dict[int, LocalMultivector]:
        return self.leg2 if which == 2 else self.leg1

    def term(self, which: int, k: int) -> LocalMultivector:
        return self.leg(which).get(k, LocalMultivector(self.space.zero, 2))

    def table(self, which: int, k: int) -> DistributionBivector:
        return to_distribution(self.term(which, k))

    def truncate(self, order: int) -> EpsPencil:
        return EpsPencil(self.space, self.leg2, self.leg1, min(order, self.order), dict(self.meta))

    def with_legs(self, leg2=None, leg1=None, order=None) -> EpsPencil:
        return EpsPencil(
            self.space,
            self.leg2 if leg2 is None else leg2,
            self.leg1 if leg1 is None else leg1,
            self.order if order is None else order,
            dict(self.meta),
        )

    def map_legs(self, fn: Callable[[LocalMultivector], LocalMultivector]) -> EpsPencil:
        return self.with_legs({k: fn(v) for k, v in self.leg2.items()}, {k: fn(v) for k, v in self.leg1.items()})

    def add_term(self, which: int, k: int, value: LocalMultivector) -> EpsPencil:
        leg = dict(self.leg(which))
        leg[k] = leg[k] + value if k in leg else value
        return self.with_legs(leg, None) if which == 2 else self.with_legs(None, leg)

    def at_lambda(self, lam) -> dict[int, LocalMultivector]:
        """The single bivector series ``leg2 - lam * leg1``."""
        out = dict(self.leg2)
        for k, v in self.leg1.items():
            w = v.scale(-self.space.ctx.coerce(lam))
            out[k] = out[k] + w if k in out else w
        return out

    def is_equal(self, other: EpsPencil, order: int | None = None) -> bool:
        order = min(self.order, other.order) if order is None else order
        for which in (1, 2):
            for k in range(order + 1):
                if not self.term(which, k) == other.term(which, k):
                    return False
        return True

    def jacobi_report(self, order: int | None = None) -> dict:
        """Order-by-order residuals of ``[P2,P2]``, ``[P1,P1]`` and ``[P1,P2]``."""
        order = self.order if order is None else order
        failures = []
        for k in range(order + 1):
            for name, val in (
                ("[P2,P2]", series_self_bracket(self.leg2, k)),
                ("[P1,P1]", series_self_bracket(self.leg1, k)),
                ("[P1,P2]", series_bracket(self.leg1, self.leg2, k)),
            ):
                if val is not None and not val.is_zero():
                    failures.append({"bracket": name, "order": k, "residual": str(val.body)})
        return {"ok": not failures, "order": order, "failures": failures}

    def skew_report(self) -> bool:
        from .multivec import skew_check

        return all(skew_check(v) for which in (1, 2) for v in (to_distribution(t) for t in self.leg(which).values()))
