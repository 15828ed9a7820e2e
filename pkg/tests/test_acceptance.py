"""Acceptance criteria, one test each.

Every test prints a single ``criterion N PASS|FAIL`` line with its wall time
against the limit, whether or not pytest captures output.
"""

import random
import time
from fractions import Fraction

from poissonpencil.catalog import (
    akns_pencil,
    camassa_holm_expected_series,
    camassa_holm_liouville,
    camassa_holm_u_pencil,
    ch2_pencil,
    scalar_context,
    two_component_ch_expected_series,
    two_component_ch_liouville,
    two_component_ch_normalized,
    two_component_ch_omega2,
    two_component_ch_series_pencil,
)
from poissonpencil.centralinv import central_invariants, central_invariants_residue, residue_inputs_from_pencil
from poissonpencil.deform import (
    auxiliary_lemma,
    build_scalar_eps6,
    exactness_degree_check,
    homogeneity_law_check,
    localize_eps6_failure,
    q_map,
    scalar_eps6_jacobi,
)
from poissonpencil.epsseries import EpsPencil
from poissonpencil.jetcalc import EVEN, ODD, JetSpace, euler_transport_solve, euler_weight_operator, total_derivative, variational_derivative
from poissonpencil.multivec import (
    EvolutionaryField,
    from_distribution,
    jacobi_check,
    lie_derivative,
    schouten,
    skew_check,
    to_distribution,
)
from poissonpencil.pencils import SemisimpleChart, exactness_check, pencil_from_chart, standard_first_deformation
from poissonpencil.rkdvch import (
    RkdvchSpec,
    classify_pair,
    closed_form_invariants,
    machine_invariants,
    normalize_and_shift,
    normalized_pencil,
    root_chart,
)
from poissonpencil.symfield import SymbolContext

from randgen import degree_two_field, density, invariant_polynomials, multivector, operator_table, vector_field

CASES = 50


def judge(capsys, number, title, limit, fn):
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        raised = exc
    else:
        raised = None
    took = time.perf_counter() - start
    in_time = took < limit
    verdict = "PASS" if ok and in_time else "FAIL"
    with capsys.disabled():
        print(f"\ncriterion {number:2d} {verdict}  {title}  ({took:.1f} s, limit {limit} s)  {detail}")
    if raised is not None:
        raise raised
    assert ok, detail
    assert in_time, f"took {took:.1f} s, limit {limit} s"


def test_criterion_01_akns_central_invariants(capsys):
    def run():
        P, chart = akns_pencil()
        a = central_invariants(P, chart)
        b = central_invariants_residue(*residue_inputs_from_pencil(P), chart)
        want = [chart.ctx.const(Fraction(-1, 12))] * 2
        return a == want and b == want, f"canonical {[str(x) for x in a]}, residue {[str(x) for x in b]}"

    judge(capsys, 1, "AKNS central invariants, both formulas", 10, run)


def test_criterion_02_ch2_central_invariants(capsys):
    def run():
        P, chart = ch2_pencil()
        a = central_invariants(P, chart)
        b = central_invariants_residue(*residue_inputs_from_pencil(P), chart)
        want = [-(chart.u(0) ** 2) / 12, -(chart.u(1) ** 2) / 12]
        return a == want and b == want, f"canonical {[str(x) for x in a]}, residue {[str(x) for x in b]}"

    judge(capsys, 2, "CH2 central invariants, both formulas", 10, run)


def test_criterion_03_akns_structure(capsys):
    def run():
        P, _ = akns_pencil()
        w1, w2 = P.term(1, 0), P.term(2, 0)
        checks = {
            "skew": P.skew_report(),
            "jacobi w1": jacobi_check(w1),
            "jacobi w2": jacobi_check(w2),
            "compat": schouten(w1, w2).is_zero(),
            "pencil with eps leg": P.jacobi_report(2)["ok"],
        }
        return all(checks.values()), checks

    judge(capsys, 3, "AKNS skew, Jacobi and compatibility", 30, run)


def test_criterion_04_rkdvch_end_to_end(capsys):
    def run():
        rows = {}
        for r, pairs in ((1, [(0, 1)]), (2, [(0, 1), (1, 2)])):
            spec = RkdvchSpec(r, [f"a{i}" for i in range(r + 1)])
            for k, l in pairs:
                rows[f"r={r} ({k},{l})"] = machine_invariants(spec, k, l) == closed_form_invariants(spec, k, l)
        spec = RkdvchSpec(2, ["a0", "a1", "a2"])
        for (k, l), want in {(0, 1): (True, True), (1, 2): (True, False), (0, 2): (False, False)}.items():
            rep = classify_pair(spec, k, l)
            rows[f"classify ({k},{l})"] = (rep["rational"], rep["polynomial"]) == want and not rep["flag"]
        return all(rows.values()), rows

    judge(capsys, 4, "r-KdV-CH invariants match closed form, classification", 120, run)


def test_criterion_05_camassa_holm(capsys):
    def run():
        P = camassa_holm_u_pencil(6)
        sp = P.space
        e = camassa_holm_liouville(sp)
        w1, w2 = P.term(1, 0), P.term(2, 0)
        exp = camassa_holm_expected_series(sp, 6)
        S = {k: lie_derivative(e, v).normalized() for k, v in P.leg2.items()}
        tables = [to_distribution(v) for v in S.values()]
        constant = all(
            set(c.terms) <= {((), ())} and all(not x.depends_on("u") for x in c.terms.values())
            for D in tables
            for op in D.ops.values()
            for c in op.coeffs.values()
        )
        checks = {
            "series": all(P.term(2, k) == from_distribution(exp[k]) for k in range(7)),
            "Lie_e w1 = 0": lie_derivative(e, w1).is_zero(),
            "Lie_e w2 = w1": (lie_derivative(e, w2) - w1).is_zero(),
            "Lie_e^2 P2(2) = 0": lie_derivative(e, lie_derivative(e, P.term(2, 2)).normalized()).is_zero(),
            "Lie_e P2 constant": constant,
            "Lie_e P2 skew": all(skew_check(D) for D in tables),
            "Lie_e P2 Jacobi to eps^6": EpsPencil(sp, S, {}, 6).jacobi_report()["ok"],
        }
        return all(checks.values()), checks

    judge(capsys, 5, "Camassa-Holm exactness and normal form through eps^6", 60, run)


def test_criterion_06_two_component_ch(capsys):
    def run():
        P = two_component_ch_series_pencil(4)
        sp = P.space
        exp = two_component_ch_expected_series(sp, 4)
        checks = {"series to eps^4": all(P.term(2, k) == from_distribution(exp[k]) for k in range(5))}
        for sign, label in ((1, "printed"), (-1, "exp(Lie)")):
            Q = EpsPencil(sp, {0: two_component_ch_omega2(sp), 2: two_component_ch_normalized(sp, sign)}, {0: P.term(1, 0)}, 2)
            j = exactness_degree_check(Q, two_component_ch_liouville(sp), 3, 1)["terms"][0]["j"]
            checks[f"j ({label})"] = j
        ok = checks["series to eps^4"] and checks["j (printed)"] == 3 and checks["j (exp(Lie))"] == 3
        return ok, checks

    judge(capsys, 6, "two-component CH series and exactness degree", 120, run)


def test_criterion_07_scalar_homogeneity(capsys):
    def run():
        ctx = scalar_context()
        rows = {}
        for D in range(4):
            P = build_scalar_eps6(ctx["u"] ** D if D else ctx.one, ctx)
            rep = homogeneity_law_check(P, EvolutionaryField((P.space.u(0),)), 0, D, 3)
            want = [str(k * D - k - 1) for k in (1, 2, 3)]
            good = rep["ok"] and all(t["tensor_ok"] for t in rep["terms"]) and [t["coefficient"] for t in rep["terms"]] == want
            rows[f"D={D}"] = good
        return all(rows.values()), rows

    judge(capsys, 7, "scalar eps^6 homogeneity law", 120, run)


def test_criterion_08_scalar_eps6_jacobi(capsys):
    def run():
        ctx = scalar_context()
        failing = {}
        for c2 in ("u", "u**2"):
            rep = scalar_eps6_jacobi(build_scalar_eps6(ctx.parse(c2), ctx))
            if not rep["ok"]:
                failing[c2] = sorted({(f["bracket"], f["order"]) for f in rep["failures"]})
        if not failing:
            return True, "all orders below eps^8 vanish"
        loc = localize_eps6_failure()
        return False, {
            "failing": failing,
            "offending_slots": loc["offending"],
            "single_slot_repairs": loc["single_slot_repairs"],
            "rescaling": loc["rescaling"],
        }

    judge(capsys, 8, "scalar eps^6 Jacobi for c2 = u, u^2", 600, run)


def test_criterion_09_round_trip_and_miura(capsys):
    ctx1 = SymbolContext(["u"], spectral="lam")
    charts = [SemisimpleChart(ctx1, ("u",), (1,)), akns_pencil()[1]]

    def run():
        bad = []
        assert all(exactness_check(ch) for ch in charts)
        for seed in range(CASES):
            chart = charts[seed % 2]
            rng = random.Random(seed)
            c = invariant_polynomials(chart, rng, degree=2)
            base = pencil_from_chart(chart, 2, check=False).add_term(2, 2, standard_first_deformation(chart, c))
            V = degree_two_field(chart.space, rng)
            moved = base.add_term(2, 2, lie_derivative(V, base.term(2, 0))).add_term(1, 2, lie_derivative(V, base.term(1, 0)))
            if central_invariants(base, chart) != c or central_invariants(moved, chart) != c:
                bad.append(seed)
        return not bad, f"{CASES} cases (n=1 and n=2), failing seeds {bad}"

    judge(capsys, 9, "central invariant round trip and Miura invariance", 300, run)


def test_criterion_10_q_map(capsys):
    def run():
        spec = RkdvchSpec(1, ["a0", "a1"])
        P, e = normalized_pencil(spec)
        Q = q_map(P, e, 2, 1, root_chart(spec, 0, 1))
        leading = to_distribution(Q.term(2, 2)).table()[(0, 0)][3]
        shifted = normalize_and_shift(spec)["shifted_leading"][0][0]
        checks = {
            "constant invariants": Q.meta["constant_invariants"],
            "invariants": Q.meta["central_invariants"],
            "pencil Jacobi": Q.meta["jacobi"]["ok"],
            "leading": str(leading),
            "shift": shifted,
        }
        ok = checks["constant invariants"] and checks["pencil Jacobi"] and str(leading) == shifted == str(-spec.ctx["a1"] / 2)
        return ok, checks

    judge(capsys, 10, "q_map on normalized KdV-CH agrees with parameter shift", 120, run)


def test_criterion_11_property_suites(capsys):
    sp2 = JetSpace(SymbolContext(["u", "v"]), ("u", "v"))
    sp1 = JetSpace(SymbolContext(["u"]), ("u",))

    def graded_jacobi(rng):
        Z = vector_field(sp2, rng, terms=2, order=1).as_multivector()
        A = multivector(sp2, rng, 2, terms=2, order=1)
        B = multivector(sp2, rng, 2, terms=2, order=1)
        return schouten(Z, schouten(A, B)) == schouten(schouten(Z, A), B) + schouten(A, schouten(Z, B))

    def varder(rng):
        for deg in (0, 1, 2):
            dq = total_derivative(density(sp2, rng, deg))
            for i in range(2):
                if variational_derivative(dq, i, EVEN if deg == 0 else ODD):
                    return False
        return True

    def euler(rng):
        k, C = density(sp2, rng, 0, terms=5), rng.randint(1, 4)
        return euler_weight_operator(euler_transport_solve(k, C), C) == k

    def correspondence(rng):
        D = operator_table(sp2, rng)
        S = (D - D.adjoint()).scale(Fraction(1, 2))
        P = multivector(sp2, rng, 2)
        return not (to_distribution(from_distribution(S)) - S).ops and from_distribution(to_distribution(P)) == P

    def run():
        counts = {}
        for name, prop in (("graded Jacobi", graded_jacobi), ("varder", varder), ("Euler transport", euler), ("distribution/theta", correspondence)):
            counts[name] = sum(bool(prop(random.Random(seed))) for seed in range(CASES))
        counts["auxiliary lemma"] = sum(auxiliary_lemma(sp1, l, D) for l in range(10) for D in range(5))
        return all(v == CASES for v in counts.values()), {k: f"{v}/{CASES}" for k, v in counts.items()}

    judge(capsys, 11, "operator-algebra property suites", 300, run)

