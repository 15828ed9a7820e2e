"""Command-line front end: pencil files, builtin suites and reports."""

from __future__ import annotations

import json
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import click
import yaml

from .epsseries import DEFAULT_ORDER, EpsPencil
from .jetcalc import JetSpace, SuperDiffPoly, from_sympy
from .multivec import DistributionBivector, EvolutionaryField, LocalMultivector, skew_check, to_distribution
from .pencils import SemisimpleChart
from .symfield import RatFunc, SymbolContext


class ParseError(ValueError):
    def __init__(self, message: str, mark=None):
        self.line = mark.line + 1 if mark is not None else None
        self.column = mark.column + 1 if mark is not None else None
        where = f"line {self.line}, column {self.column}: " if mark is not None else ""
        super().__init__(where + message)


class TaskError(RuntimeError):
    pass


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def table_rows(D: DistributionBivector) -> list[list]:
    """``[i, j, m, coefficient]`` rows (1-based indices) ordered by ``(i, j, m)``."""
    rows = []
    for (i, j), op in sorted(D.ops.items()):
        for m in sorted(op.coeffs):
            rows.append([i + 1, j + 1, m, str(op.coeffs[m])])
    return rows


def serialize_expr(x: Any) -> Any:
    """Canonical, re-parseable text (or nested lists of it) for domain values."""
    if isinstance(x, (RatFunc, SuperDiffPoly)):
        return str(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, DistributionBivector):
        return table_rows(x)
    if isinstance(x, LocalMultivector):
        if x.degree == 2:
            return table_rows(to_distribution(x))
        return str(x.body)
    if isinstance(x, EvolutionaryField):
        return [str(c) for c in x.components]
    if isinstance(x, EpsPencil):
        return {
            "order": x.order,
            "leg2": {k: serialize_expr(v) for k, v in sorted(x.leg2.items())},
            "leg1": {k: serialize_expr(v) for k, v in sorted(x.leg1.items())},
        }
    if isinstance(x, dict):
        return {str(k): serialize_expr(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [serialize_expr(v) for v in x]
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    return str(x)


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def parse_diffpoly(space: JetSpace, text: str) -> SuperDiffPoly:
    import sympy

    local = {}
    for tok in _IDENT.findall(str(text)):
        if tok in space.ctx.names or any(tok.startswith(c + "_") and set(tok[len(c) + 1 :]) == {"x"} for c in space.coords):
            local[tok] = sympy.Symbol(tok)
    try:
        expr = sympy.parse_expr(str(text), local_dict=local)
    except (SyntaxError, TypeError, sympy.SympifyError) as exc:
        raise ValueError(f"cannot parse {text!r}: {exc}") from None
    return from_sympy(space, expr)


# ---------------------------------------------------------------------------
# pencil files
# ---------------------------------------------------------------------------


@dataclass
class PencilFile:
    ctx: SymbolContext
    space: JetSpace
    order: int
    leg2: dict[int, DistributionBivector]
    leg1: dict[int, DistributionBivector]
    chart: SemisimpleChart | None = None
    fields: dict = field(default_factory=dict)
    tasks: list[dict] = field(default_factory=list)

    def pencil(self, order: int | None = None) -> EpsPencil:
        o = self.order if order is None else order
        return EpsPencil.from_tables(self.space, self.leg2, self.leg1, o)

    def to_data(self) -> dict:
        ctx = self.ctx
        data: dict = {
            "symbols": {
                "coordinates": list(ctx.names_of_kind("coordinate")),
                "parameters": list(ctx.names_of_kind("parameter")),
                "spectral": ctx.spectral,
            },
            "pencil": {
                "coordinates": list(self.space.coords),
                "order": self.order,
                "leg2": {k: table_rows(v) for k, v in sorted(self.leg2.items())},
                "leg1": {k: table_rows(v) for k, v in sorted(self.leg1.items())},
            },
        }
        if self.chart is not None:
            ch = {"coordinates": list(self.chart.coords), "f": [str(x) for x in self.chart.f]}
            if self.chart.alt_coords:
                ch["alt_coordinates"] = list(self.chart.alt_coords)
                ch["inverse"] = [str(x) for x in self.chart.inverse]
            data["chart"] = ch
        fl = {}
        for key in ("e", "E"):
            if self.fields.get(key) is not None:
                fl[key] = [str(c) for c in self.fields[key].components]
        for key in ("d", "D"):
            if self.fields.get(key) is not None:
                fl[key] = str(self.fields[key])
        if fl:
            data["fields"] = fl
        data["tasks"] = [dict(t) for t in self.tasks]
        return data

    def dump(self) -> str:
        return yaml.safe_dump(self.to_data(), sort_keys=False, default_flow_style=None, width=120)


class _Doc:
    """Plain data plus the source position of every node, keyed by path."""

    def __init__(self, text: str):
        try:
            node = yaml.compose(text)
        except yaml.YAMLError as exc:
            raise ParseError(str(getattr(exc, "problem", exc)), getattr(exc, "problem_mark", None)) from None
        self.marks: dict[tuple, Any] = {}
        self.data = self._convert(node, ()) if node is not None else {}

    def _convert(self, node, path):
        self.marks[path] = node.start_mark
        if isinstance(node, yaml.MappingNode):
            out = {}
            for k, v in node.value:
                key = yaml.safe_load(yaml.serialize(k)) if isinstance(k, yaml.ScalarNode) else None
                out[key] = self._convert(v, path + (key,))
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self._convert(v, path + (i,)) for i, v in enumerate(node.value)]
        return yaml.safe_load(yaml.serialize(node))

    def error(self, path: tuple, message: str) -> ParseError:
        while path and path not in self.marks:
            path = path[:-1]
        return ParseError(message, self.marks.get(path))


def _need(doc: _Doc, obj, key, path, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise doc.error(path, f"missing '{key}'")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise doc.error(path + (key,), f"'{key}' must be a {kind.__name__}")
    return val


def parse_pencil_file(text: str) -> PencilFile:
    doc = _Doc(text)
    data = doc.data
    if not isinstance(data, dict):
        raise doc.error((), "top level must be a mapping")
    sym = _need(doc, data, "symbols", (), dict)
    coords = _need(doc, sym, "coordinates", ("symbols",), list)
    params = sym.get("parameters") or []
    spectral = sym.get("spectral")
    try:
        ctx = SymbolContext([str(c) for c in coords], parameters=[str(p) for p in params], spectral=spectral)
    except (ValueError, KeyError) as exc:
        raise doc.error(("symbols",), str(exc)) from None

    def rat(value, path) -> RatFunc:
        try:
            return ctx.parse(str(value))
        except ValueError as exc:
            raise doc.error(path, str(exc)) from None

    chart = None
    if "chart" in data:
        ch = data["chart"]
        cc = _need(doc, ch, "coordinates", ("chart",), list)
        fs = _need(doc, ch, "f", ("chart",), list)
        alt = ch.get("alt_coordinates") or []
        inv = ch.get("inverse") or []
        try:
            chart = SemisimpleChart(
                ctx,
                tuple(map(str, cc)),
                tuple(rat(x, ("chart", "f", i)) for i, x in enumerate(fs)),
                tuple(map(str, alt)),
                tuple(rat(x, ("chart", "inverse", i)) for i, x in enumerate(inv)),
            )
        except (ValueError, KeyError) as exc:
            raise doc.error(("chart",), str(exc)) from None

    pen = _need(doc, data, "pencil", (), dict)
    pcoords = _need(doc, pen, "coordinates", ("pencil",), list)
    try:
        space = JetSpace(ctx, [str(c) for c in pcoords])
    except (ValueError, KeyError) as exc:
        raise doc.error(("pencil", "coordinates"), f"unknown coordinate: {exc}") from None
    order = pen.get("order", DEFAULT_ORDER)
    if not isinstance(order, int) or order < 0:
        raise doc.error(("pencil", "order"), "order must be a non-negative integer")

    def leg(name) -> dict[int, DistributionBivector]:
        raw = pen.get(name) or {}
        if not isinstance(raw, dict):
            raise doc.error(("pencil", name), f"'{name}' must map eps powers to tables")
        out = {}
        for k, rows in raw.items():
            path = ("pencil", name, k)
            if not isinstance(k, int) or k < 0:
                raise doc.error(path, "eps power must be a non-negative integer")
            table: dict = {}
            for r_i, row in enumerate(rows or []):
                rp = path + (r_i,)
                if not (isinstance(row, list) and len(row) == 4):
                    raise doc.error(rp, "table rows are [i, j, m, coefficient]")
                i, j, m, c = row
                if not all(isinstance(x, int) for x in (i, j, m)) or not (1 <= i <= space.n and 1 <= j <= space.n) or m < 0:
                    raise doc.error(rp, "indices must be 1..n and m >= 0")
                try:
                    coeff = parse_diffpoly(space, c)
                except ValueError as exc:
                    raise doc.error(rp + (3,), str(exc)) from None
                entry = table.setdefault((i - 1, j - 1), {})
                entry[m] = entry[m] + coeff if m in entry else coeff
            out[k] = DistributionBivector.from_table(space, table)
        return out

    leg2, leg1 = leg("leg2"), leg("leg1")
    fields = {}
    fl = data.get("fields") or {}
    for key in ("e", "E"):
        if key in fl:
            comps = fl[key]
            if not isinstance(comps, list) or len(comps) != space.n:
                raise doc.error(("fields", key), f"'{key}' needs {space.n} components")
            try:
                fields[key] = EvolutionaryField(tuple(parse_diffpoly(space, c) for c in comps))
            except ValueError as exc:
                raise doc.error(("fields", key), str(exc)) from None
    for key in ("d", "D"):
        if key in fl:
            try:
                fields[key] = Fraction(str(fl[key]))
            except ValueError:
                raise doc.error(("fields", key), f"'{key}' must be rational") from None
    tasks = data.get("tasks") or []
    if not isinstance(tasks, list):
        raise doc.error(("tasks",), "tasks must be a list")
    for t_i, t in enumerate(tasks):
        if not isinstance(t, dict) or "check" not in t:
            raise doc.error(("tasks", t_i), "each task needs a 'check'")
        if t["check"] not in FILE_CHECKS:
            raise doc.error(("tasks", t_i, "check"), f"unknown check '{t['check']}'")
        t.setdefault("name", t["check"])
    return PencilFile(ctx, space, order, leg2, leg1, chart, fields, tasks)


# ---------------------------------------------------------------------------
# tasks and reports
# ---------------------------------------------------------------------------


@dataclass
class Task:
    name: str
    fn: Callable[[], tuple[bool, Any]]


@dataclass
class TaskResult:
    name: str
    status: str
    witness: Any
    wall_time: float

    def as_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "witness": self.witness, "wall_time": round(self.wall_time, 3)}


def run_tasks(tasks: Sequence[Task], only: Sequence[str] | None = None) -> list[TaskResult]:
    out = []
    for t in tasks:
        if only and t.name not in only:
            continue
        start = time.perf_counter()
        try:
            ok, witness = t.fn()
            status = "pass" if ok else "fail"
            witness = serialize_expr(witness)
        except Exception as exc:  # reported per task, siblings keep running
            status, witness = "error", f"{type(exc).__name__}: {exc}"
        out.append(TaskResult(t.name, status, witness, time.perf_counter() - start))
    return out


def report_json(target: str, order: int, results: Sequence[TaskResult]) -> str:
    body = {
        "target": target,
        "order": order,
        "status": "pass" if all(r.status == "pass" for r in results) else "fail",
        "tasks": [r.as_dict() for r in results],
    }
    return json.dumps(body, indent=2, sort_keys=True)


def report_text(target: str, results: Sequence[TaskResult]) -> str:
    lines = [f"# {target}"]
    for r in results:
        w = r.witness if isinstance(r.witness, str) else json.dumps(r.witness, sort_keys=True)
        if len(w) > 400:
            w = w[:400] + "..."
        lines.append(f"{r.status.upper():5} {r.name} ({r.wall_time:.2f}s): {w}")
    total = sum(r.status == "pass" for r in results)
    lines.append(f"{total}/{len(results)} passed")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# checks available in pencil files
# ---------------------------------------------------------------------------


def _rats(ctx: SymbolContext, values) -> list[RatFunc]:
    return [ctx.parse(str(v)) for v in values]


def _check_skew(pf: PencilFile, t: dict):
    bad = [f"leg{w} eps^{k}" for w, leg in ((2, pf.leg2), (1, pf.leg1)) for k, D in sorted(leg.items()) if not skew_check(D)]
    return not bad, bad or "all tables skew"


def _check_jacobi(pf: PencilFile, t: dict, order: int):
    rep = pf.pencil(order).jacobi_report(t.get("order"))
    return rep["ok"], rep["failures"] or "all orders vanish"


def _need_chart(pf: PencilFile):
    if pf.chart is None:
        raise TaskError("this check needs a chart section")
    return pf.chart


def _check_cinv(pf: PencilFile, t: dict, order: int):
    from .centralinv import central_invariants

    c = central_invariants(pf.pencil(max(order, 2)), _need_chart(pf))
    if "expect" in t:
        return c == _rats(pf.ctx, t["expect"]), c
    return True, c


def _check_cinv_residue(pf: PencilFile, t: dict, order: int):
    from .centralinv import central_invariants_residue, residue_inputs_from_pencil

    g, A = residue_inputs_from_pencil(pf.pencil(max(order, 2)))
    c = central_invariants_residue(g, A, _need_chart(pf))
    if "expect" in t:
        return c == _rats(pf.ctx, t["expect"]), c
    return True, c


def _check_cinv_agree(pf: PencilFile, t: dict, order: int):
    a = _check_cinv(pf, {}, order)[1]
    b = _check_cinv_residue(pf, {}, order)[1]
    return a == b, {"formula": a, "residue": b}


def _check_chart_flat(pf: PencilFile, t: dict, order: int):
    from .pencils import FlatnessFailure, pencil_from_chart

    try:
        pencil_from_chart(_need_chart(pf), 0, check=True)
    except FlatnessFailure as exc:
        return False, str(exc)
    return True, "flat and compatible"


def _check_chart_exact(pf: PencilFile, t: dict, order: int):
    from .pencils import exactness_check

    return exactness_check(_need_chart(pf)), "sum_k d_k f^i = 0"


def _check_chart_homogeneous(pf: PencilFile, t: dict, order: int):
    from .pencils import homogeneity_check

    d = Fraction(str(t.get("d", pf.fields.get("d", 0))))
    return homogeneity_check(_need_chart(pf), d), f"d = {d}"


def _field(pf: PencilFile, key: str) -> EvolutionaryField:
    if key not in pf.fields:
        raise TaskError(f"this check needs fields.{key}")
    return pf.fields[key]


def _check_exactness_degree(pf: PencilFile, t: dict, order: int):
    from .deform import exactness_degree_check

    rep = exactness_degree_check(pf.pencil(order), _field(pf, "e"), int(t.get("n", 1)), int(t.get("K", 1)))
    if "expect_j" in t:
        return [r["j"] for r in rep["terms"]] == list(t["expect_j"]), rep
    return rep["normal_form"], rep


def _check_homogeneity(pf: PencilFile, t: dict, order: int):
    from .deform import homogeneity_law_check

    d = Fraction(str(t.get("d", pf.fields.get("d", 0))))
    D = Fraction(str(t.get("D", pf.fields.get("D", 0))))
    rep = homogeneity_law_check(pf.pencil(order), _field(pf, "E"), d, D, int(t.get("K", 1)))
    return rep["ok"], rep["terms"]


def _check_q_map(pf: PencilFile, t: dict, order: int):
    from .deform import q_map

    Q = q_map(pf.pencil(order), _field(pf, "e"), int(t.get("n", 1)), int(t.get("K", 1)), pf.chart)
    ok = Q.meta["jacobi"]["ok"] and Q.meta.get("constant_invariants", True)
    return ok, {"q": Q, "central_invariants": Q.meta.get("central_invariants")}


FILE_CHECKS: dict[str, Callable] = {
    "skew": lambda pf, t, o: _check_skew(pf, t),
    "jacobi": _check_jacobi,
    "central_invariants": _check_cinv,
    "central_invariants_residue": _check_cinv_residue,
    "invariants_agree": _check_cinv_agree,
    "chart_flat": _check_chart_flat,
    "chart_exact": _check_chart_exact,
    "chart_homogeneous": _check_chart_homogeneous,
    "exactness_degree": _check_exactness_degree,
    "homogeneity": _check_homogeneity,
    "q_map": _check_q_map,
}


def file_tasks(pf: PencilFile, order: int | None = None) -> list[Task]:
    o = pf.order if order is None else order
    return [Task(t["name"], (lambda t=t: FILE_CHECKS[t["check"]](pf, t, o))) for t in pf.tasks]


# ---------------------------------------------------------------------------
# builtins
# ---------------------------------------------------------------------------


@dataclass
class Builtin:
    name: str
    summary: str
    defaults: dict
    build: Callable[[dict, int | None], tuple[list[Task], PencilFile | None]]


def _pf_from_pencil(P: EpsPencil, chart=None, fields=None, tasks=None) -> PencilFile:
    return PencilFile(
        P.space.ctx,
        P.space,
        P.order,
        {k: to_distribution(v) for k, v in P.leg2.items()},
        {k: to_distribution(v) for k, v in P.leg1.items()},
        chart,
        fields or {},
        tasks or [],
    )


def _two_boson(which: str, params: dict, order: int | None):
    from .catalog import akns_pencil, ch2_pencil

    P, chart = (akns_pencil if which == "akns" else ch2_pencil)(2 if order is None else max(order, 2))
    ctx = chart.ctx
    expect = ["-1/12", "-1/12"] if which == "akns" else ["-u1**2/12", "-u2**2/12"]
    file_tasks_ = [
        {"name": "skew", "check": "skew"},
        {"name": "jacobi", "check": "jacobi"},
        {"name": "chart-flat", "check": "chart_flat"},
        {"name": "central-invariants", "check": "central_invariants", "expect": expect},
        {"name": "central-invariants-residue", "check": "central_invariants_residue", "expect": list(expect)},
    ]
    if which == "akns":
        file_tasks_.insert(3, {"name": "chart-exact", "check": "chart_exact"})
    pf = _pf_from_pencil(P, chart, {}, file_tasks_)
    pf.leg2 = P.meta["tables"]["leg2"]
    pf.leg1 = P.meta["tables"]["leg1"]
    return file_tasks(pf, order), pf


def _ch_scalar(params: dict, order: int | None):
    from .catalog import (
        camassa_holm_expected_series,
        camassa_holm_liouville,
        camassa_holm_m_pencil,
        camassa_holm_u_pencil,
    )
    from .multivec import from_distribution, lie_derivative

    N = DEFAULT_ORDER if order is None else order
    P = camassa_holm_u_pencil(N)
    sp = P.space
    e = camassa_holm_liouville(sp)
    w1, w2 = P.term(1, 0), P.term(2, 0)

    def series():
        exp = camassa_holm_expected_series(sp, N)
        bad = [k for k in range(N + 1) if not P.term(2, k) == from_distribution(exp[k])]
        leg1_ok = set(P.leg1) == {0} and to_distribution(w1) == DistributionBivector.from_table(sp, {(0, 0): {1: 1}})
        return not bad and leg1_ok, {"mismatched_orders": bad, "leg1_is_delta_prime": leg1_ok}

    def lie_e_w1():
        r = lie_derivative(e, w1)
        return r.is_zero(), r

    def lie_e_w2():
        r = lie_derivative(e, w2) - w1
        return r.is_zero(), r

    def lie_e2():
        r = lie_derivative(e, lie_derivative(e, P.term(2, 2)).normalized())
        return r.is_zero(), r

    def lie_e_p2():
        S = {k: lie_derivative(e, v).normalized() for k, v in P.leg2.items()}
        tables = {k: to_distribution(v) for k, v in S.items()}
        const = all(
            set(c.terms) <= {((), ())} and all(not r.depends_on("u") for r in c.terms.values())
            for D in tables.values()
            for op in D.ops.values()
            for c in op.coeffs.values()
        )
        skew = all(skew_check(D) for D in tables.values())
        jac = EpsPencil(sp, S, {}, N).jacobi_report()
        return const and skew and jac["ok"], {"series": tables, "constant": const, "skew": skew, "jacobi": jac["failures"]}

    tasks = [
        Task("substitution-series", series),
        Task("lie-e-omega1", lie_e_w1),
        Task("lie-e-omega2", lie_e_w2),
        Task("lie-e-squared-P2", lie_e2),
        Task("lie-e-P-constant-poisson", lie_e_p2),
    ]
    pf = _pf_from_pencil(camassa_holm_m_pencil(N), None, {}, [{"name": "skew", "check": "skew"}, {"name": "jacobi", "check": "jacobi"}])
    return tasks, pf


def _scalar_eps6(params: dict, order: int | None):
    from .catalog import scalar_context
    from .centralinv import central_invariants
    from .deform import build_scalar_eps6, homogeneity_law_check, localize_eps6_failure, scalar_eps6_jacobi

    D = int(params.get("D", 2))
    if D < 0:
        raise InputError("D must be a non-negative integer")
    ctx = scalar_context()
    c2 = ctx["u"] ** D if D else ctx.one
    P = build_scalar_eps6(c2, ctx, 6)
    E = EvolutionaryField((P.space.u(0),))

    def hom(k):
        def fn():
            rep = homogeneity_law_check(P, E, 0, D, 3)
            row = rep["terms"][k - 1]
            return row["ok"] and row["tensor_ok"], row

        return fn

    def jac():
        rep = scalar_eps6_jacobi(P)
        if rep["ok"]:
            return True, "all orders vanish"
        loc = localize_eps6_failure()
        return False, {"failing_orders": sorted({(f["bracket"], f["order"]) for f in rep["failures"]}), "localization": loc}

    def cinv():
        chart = SemisimpleChart(ctx, ("u",), (1,))
        c = central_invariants(P, chart)
        return c[0] == c2 * Fraction(-2, 3), {"central_invariant": c, "c2": c2}

    tasks = [Task(f"homogeneity-k{k}", hom(k)) for k in (1, 2, 3)]
    tasks += [Task("eps2-central-invariant", cinv), Task("jacobi-eps6", jac)]
    fields = {"E": E, "d": Fraction(0), "D": Fraction(D)}
    ptasks = [{"name": "homogeneity", "check": "homogeneity", "K": 3}]
    return tasks, _pf_from_pencil(P, None, fields, ptasks)


def _parse_a(value) -> list:
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [x for x in re.split(r"[,;\s]+", str(value)) if x]
    out = []
    for x in items:
        try:
            out.append(Fraction(str(x)))
        except ValueError:
            if not _IDENT.fullmatch(str(x)):
                raise InputError(f"bad coefficient {x!r}") from None
            out.append(str(x))
    return out


def _rkdvch(params: dict, order: int | None):
    from . import rkdvch

    try:
        r, k, l = int(params.get("r", 1)), int(params.get("k", 0)), int(params.get("l", 1))
        a = params.get("a", "generic")
        if a == "generic":
            a = ",".join(f"a{i}" for i in range(r + 1))
        spec = rkdvch.RkdvchSpec(r, _parse_a(a))
        if not 0 <= k < l <= r:
            raise InputError("need 0 <= k < l <= r")
    except rkdvch.BadSpec as exc:
        raise InputError(str(exc)) from None

    def end_to_end():
        c = rkdvch.machine_invariants(spec, k, l)
        cf = rkdvch.closed_form_invariants(spec, k, l)
        return c == cf, {"machine": c, "closed_form": cf}

    def classify():
        rep = rkdvch.classify_pair(spec, k, l)
        return not rep["flag"], rep

    def compat():
        rep = rkdvch.compatibility_report(spec, [k, l], orders=(0, 1, 2, 3, 4) if r <= 2 else (0, 2))
        return rep["ok"], rep["failures"] or "all brackets vanish"

    def shift():
        rep = rkdvch.normalize_and_shift(spec, k, l)
        keep = {x: rep[x] for x in ("field", "cancels_leading", "cancels_full", "transformed_matches", "shift_matches", "shifted_leading")}
        return rep["ok"], keep

    tasks = [Task("jacobi-compatibility", compat)]
    if l == k + 1:
        tasks.append(Task("central-invariants-closed-form", end_to_end))
    tasks.append(Task("classify-pair", classify))
    if (k, l) == (0, 1):
        tasks.append(Task("normalize-and-shift", shift))
    pf = None
    if l == k + 1:
        P = rkdvch.structure_pair(spec, k, l)
        pf = _pf_from_pencil(P, rkdvch.root_chart(spec, k, l), {}, [{"name": "central-invariants", "check": "central_invariants"}])
    return tasks, pf


def _two_component_ch(params: dict, order: int | None):
    from .catalog import (
        two_component_ch_expected_series,
        two_component_ch_liouville,
        two_component_ch_normalized,
        two_component_ch_omega2,
        two_component_ch_series_pencil,
    )
    from .deform import exactness_degree_check
    from .multivec import from_distribution

    N = 4 if order is None else order
    P = two_component_ch_series_pencil(N)
    sp = P.space

    def series():
        exp = two_component_ch_expected_series(sp, N)
        bad = [k for k in range(N + 1) if not P.term(2, k) == from_distribution(exp[k])]
        return not bad, {"mismatched_orders": bad}

    def degree(sign):
        def fn():
            Q = EpsPencil(sp, {0: two_component_ch_omega2(sp), 2: two_component_ch_normalized(sp, sign)}, {0: P.term(1, 0)}, 2)
            rep = exactness_degree_check(Q, two_component_ch_liouville(sp), 3, 1)
            return rep["terms"][0]["j"] == 3, rep

        return fn

    tasks = [Task("substitution-series", series), Task("exactness-degree-printed", degree(1)), Task("exactness-degree-miura", degree(-1))]
    return tasks, _pf_from_pencil(P, None, {}, [{"name": "skew", "check": "skew"}])


BUILTINS: dict[str, Builtin] = {
    "akns": Builtin("akns", "two-boson (AKNS) pencil: structure checks and central invariants", {}, lambda p, o: _two_boson("akns", p, o)),
    "ch2": Builtin("ch2", "CH2 pencil: central invariants by both formulas", {}, lambda p, o: _two_boson("ch2", p, o)),
    "ch-scalar": Builtin("ch-scalar", "Camassa-Holm pencil in the u-chart: exactness and normal form", {}, _ch_scalar),
    "scalar-eps6": Builtin("scalar-eps6", "scalar eps^6 pencil with c2 = u^D: homogeneity law and Jacobi", {"D": 2}, _scalar_eps6),
    "rkdvch": Builtin("rkdvch", "r-KdV-CH pair (P_k, P_l): invariants, classification, parameter shift", {"r": 1, "k": 0, "l": 1, "a": "generic"}, _rkdvch),
    "two-component-ch": Builtin("two-component-ch", "two-component CH: substitution series and exactness degree", {}, _two_component_ch),
}

_CALL = re.compile(r"^([A-Za-z0-9_-]+)(?:\((.*)\))?$")


def parse_target(target: str, extra: Sequence[str]) -> tuple[str, dict]:
    m = _CALL.match(target.strip())
    if not m:
        raise InputError(f"cannot parse target {target!r}")
    name, inner = m.group(1), m.group(2)
    params: dict = {}
    items = []
    if inner:
        items += [x for x in re.split(r"\s*[|]\s*|\s+(?=\w+=)", inner.replace(", ", " ")) if x]
    items += list(extra)
    for item in items:
        if "=" not in item:
            raise InputError(f"parameter {item!r} is not KEY=VALUE")
        key, value = item.split("=", 1)
        params[key.strip()] = value.strip()
    return name, params


def resolve(target: str, params: Sequence[str], order: int | None) -> tuple[str, list[Task], PencilFile | None]:
    import os

    if target not in BUILTINS and os.path.exists(target):
        with open(target, encoding="utf-8") as fh:
            pf = parse_pencil_file(fh.read())
        return target, file_tasks(pf, order), pf
    name, p = parse_target(target, params)
    if name not in BUILTINS:
        raise InputError(f"unknown builtin or missing file {target!r}")
    b = BUILTINS[name]
    unknown = set(p) - set(b.defaults)
    if unknown:
        raise InputError(f"{name} takes parameters {sorted(b.defaults)}, got {sorted(unknown)}")
    merged = {**b.defaults, **p}
    tasks, pf = b.build(merged, order)
    label = name + ("(" + " ".join(f"{k}={merged[k]}" for k in sorted(merged)) + ")" if merged else "")
    return label, tasks, pf


# ---------------------------------------------------------------------------
# click
# ---------------------------------------------------------------------------


@click.group()
@click.version_option(package_name="poissonpencil")
def main():
    """Verify deformed bi-Hamiltonian pencils exactly."""


@main.command()
@click.argument("target")
@click.option("--order", "order", type=click.IntRange(0), default=None, help="eps truncation order")
@click.option("--json", "as_json", is_flag=True, help="machine-readable report")
@click.option("--task", "only", multiple=True, help="run only the named task (repeatable)")
@click.option("-p", "--param", "params", multiple=True, help="builtin parameter KEY=VALUE (repeatable)")
def run(target, order, as_json, only, params):
    """Run a builtin suite or the tasks of a pencil file."""
    try:
        label, tasks, _ = resolve(target, params, order)
    except (ParseError, InputError) as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(2)
    if only:
        missing = set(only) - {t.name for t in tasks}
        if missing:
            click.echo(f"input error: no task named {sorted(missing)}", err=True)
            sys.exit(2)
    results = run_tasks(tasks, only)
    click.echo(report_json(label, order if order is not None else -1, results) if as_json else report_text(label, results))
    sys.exit(0 if all(r.status == "pass" for r in results) else 1)


@main.command("list-builtins")
def list_builtins():
    """List builtin suites with their default parameters."""
    for b in BUILTINS.values():
        defaults = " ".join(f"{k}={v}" for k, v in b.defaults.items())
        click.echo(f"{b.name:18} {b.summary}" + (f" [{defaults}]" if defaults else ""))


@main.command("print")
@click.argument("target")
@click.option("--order", "order", type=click.IntRange(0), default=None, help="eps truncation order")
@click.option("-p", "--param", "params", multiple=True, help="builtin parameter KEY=VALUE (repeatable)")
def print_cmd(target, order, params):
    """Print a builtin's pencil as a pencil file."""
    try:
        _, _, pf = resolve(target, params, order)
    except (ParseError, InputError) as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(2)
    if pf is None:
        click.echo("input error: this target has no single pencil to print", err=True)
        sys.exit(2)
    click.echo(pf.dump(), nl=False)


if __name__ == "__main__":
    main()
