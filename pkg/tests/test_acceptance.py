"""Acceptance criteria, one function per criterion.

Each criterion returns a list of ``(clause, ok, detail)``.  Under pytest every
clause is its own test and a one-line PASS/FAIL summary per criterion is
printed at the end of the session (see ``conftest.pytest_terminal_summary``).
Run ``python tests/test_acceptance.py`` to get the same lines without pytest.
"""

import contextlib
import io
import math
import random
import sys
import tempfile
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from conftest import load_entry  # noqa: E402
from pertfix.axioms import audit_metric_axioms  # noqa: E402
from pertfix.cli import run  # noqa: E402
from pertfix.comparison import DEFAULT_T_GRID, audit_comparison  # noqa: E402
from pertfix.contraction import (  # noqa: E402
    estimate_min_lambda, probe_continuity, verify, verify_banach_perturbed,
    verify_kannan_exact, verify_kannan_perturbed, verify_phi_contraction,
)
from pertfix.expr import (  # noqa: E402
    BinOp, Call, Compare, Cond, Const, Neg, Var, evaluate, parse_source, to_source,
)
from pertfix.solver import PhiSeries, SolverParams, apriori_bound_kannan, apriori_bound_phi, iterate  # noqa: E402
from pertfix.space import build_map, build_space, sample_points  # noqa: E402

SEED = 42
STARTS_BRANCH = (-5.0, 0.5, 2.0, 9.0)
STARTS_STEP = (-3.0, 1.9, 2.0, 5.0)

# tolerances pinned by the criteria
TIGHT_MARGIN = 1e-12
JUMP_TOL = 1e-6
ENVELOPE_TOL = 1e-9
PHI2_SUM_TOL = 1e-6
LAMBDA_TARGET, LAMBDA_TOL = 0.200, 0.005


def _samples(cfg):
    return sample_points(cfg.space, cfg.counts, SEED, cfg.T)


def _quiet_run(argv):
    with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
        return run(argv)


def criterion_1():
    cfg = load_entry("jleli-phi")
    s = _samples(cfg)
    out = []
    axioms = audit_metric_axioms(cfg.space, s)
    out.append(("axioms pass on 4096 triples", axioms.passed and len(s.triples) == 4096,
                f"{len(s.triples)} triples, failing: {[a for a, v in axioms.verdicts.items() if v != 'pass']}"))
    v = verify_phi_contraction(cfg.space, cfg.T, cfg.phi, s.pairs)
    w = v.witness
    out.append(("phi contraction holds on 4096 sampled pairs", v.holds and len(s.pairs) == 4096,
                f"{v.status}; worst pair ({w.x!r}, {w.y!r}) lhs={w.lhs:.6g} rhs={w.rhs:.6g}"
                if w else v.status))
    t = verify_phi_contraction(cfg.space, cfg.T, cfg.phi, [(0.0, 3.0)]).tightest
    out.append(("tight pair (0, 3)", abs(t.lhs - t.rhs) <= TIGHT_MARGIN,
                f"lhs={t.lhs!r} rhs={t.rhs!r}"))
    runs = [iterate(cfg.space, cfg.T, SolverParams(x0, "phi", phi=cfg.phi)) for x0 in STARTS_BRANCH]
    ok = all(r.converged and r.x_star == 0 and r.residual_d == 0 and r.residual_D == 0 for r in runs)
    out.append(("Picard converges to 0 with zero residuals", ok,
                str([(r.x0, r.x_star, r.residual_D, r.residual_d) for r in runs])))
    p = probe_continuity(cfg.space, cfg.T, 1.0)
    out.append(("continuity jump at 1", abs(p.jump - 1 / 3) <= JUMP_TOL, f"jump={p.jump!r}"))
    return out


def criterion_2():
    cfg = load_entry("kannan-step")
    s = _samples(cfg)
    out = []
    v = verify_kannan_perturbed(cfg.space, cfg.T, 0.45, s.pairs)
    out.append(("perturbed Kannan holds at 0.45 on 4096 pairs", v.holds and len(s.pairs) == 4096,
                f"{v.status}, {v.pairs_checked} pairs"))
    e = verify_kannan_exact(cfg.space, cfg.T, 0.45, [(1.0, 2.0)])
    ok = (e.status == "counterexample" and e.witness.lhs == 1
          and abs(e.witness.rhs - 0.9) <= TIGHT_MARGIN)
    full = verify_kannan_exact(cfg.space, cfg.T, 0.45, s.pairs)
    out.append(("exact Kannan counterexample at (1, 2)", ok and full.status == "counterexample",
                f"lhs={e.witness.lhs!r} rhs={e.witness.rhs!r}; sampled: {full.status}"))
    p = probe_continuity(cfg.space, cfg.T, 2.0)
    out.append(("continuity jump at 2", abs(p.jump - 1) <= JUMP_TOL, f"jump={p.jump!r}"))
    runs = [iterate(cfg.space, cfg.T, SolverParams(x0, "kannan", lam=0.45)) for x0 in STARTS_STEP]
    out.append(("Picard from 4 starts converges to 0", all(r.converged and r.x_star == 0 for r in runs),
                str([(r.x0, r.x_star) for r in runs])))
    return out


def criterion_3():
    out = []
    kan = load_entry("kannan-step")
    gamma = 0.45 / 0.55
    worst_env = worst_post = -math.inf
    for x0 in STARTS_STEP:
        r = iterate(kan.space, kan.T, SolverParams(x0, "kannan", lam=0.45))
        for row in r.trace:
            worst_env = max(worst_env, row.D_step - gamma**row.n * r.D0)
            worst_post = max(worst_post, oracles.d(row.x, r.x_star) - apriori_bound_kannan(0.45, r.D0, row.n))
    out.append(("Kannan step envelope", worst_env <= ENVELOPE_TOL, f"max excess {worst_env:.3g}"))
    out.append(("Kannan posterior bound", worst_post <= ENVELOPE_TOL, f"max excess {worst_post:.3g}"))
    br = load_entry("jleli-phi")
    worst_env = worst_post = -math.inf
    for x0 in STARTS_BRANCH:
        r = iterate(br.space, br.T, SolverParams(x0, "phi", phi=br.phi))
        series = PhiSeries(lambda t: t / 3, r.D0)
        for row in r.trace:
            worst_env = max(worst_env, row.D_step - series[row.n])
            bound, _ = apriori_bound_phi(br.phi, r.D0, row.n)
            worst_post = max(worst_post, oracles.d(row.x, r.x_star) - bound)
    out.append(("phi step envelope", worst_env <= ENVELOPE_TOL, f"max excess {worst_env:.3g}"))
    out.append(("phi posterior bound", worst_post <= ENVELOPE_TOL, f"max excess {worst_post:.3g}"))
    return out


def _random_instance(rng):
    a, b = rng.choice([0.0, 0.5, 1.0, 2.0]), rng.choice([0.0, 0.25, 1.0])
    lo = rng.uniform(-10, 0)
    hi = lo + rng.uniform(1, 15)
    space = build_space({"domain": [lo, hi], "D": f"abs(x-y) + {a!r}*x^2*y^2 + {b!r}*(x-y)^2",
                         "P": f"{a!r}*x^2*y^2 + {b!r}*(x-y)^2"})
    c, k = rng.uniform(-1.2, 1.2), rng.uniform(-2, 2)
    thr = rng.uniform(lo, hi)
    T = build_map({"T": rng.choice([
        f"{c!r}*x + {k!r}",
        f"if(x>={thr!r}, {c!r}*x, {k!r})",
        f"{c!r}*sqrt(abs(x))",
        f"min({c!r}*x, {k!r})",
    ])})
    return space, T, rng.uniform(0.01, 0.99)


def criterion_4():
    rng = random.Random(SEED)
    mismatches, holding = [], 0
    for i in range(100):
        space, T, lam = _random_instance(rng)
        s = sample_points(space, (32, 256, 1), rng.randrange(2**31), T)
        b = verify_banach_perturbed(space, T, lam, s.pairs)
        p = verify_phi_contraction(space, T, f"{lam!r}*t", s.pairs)
        fields = ("status", "witness", "first_violation", "tightest", "pairs_checked",
                  "violations", "indeterminate")
        if any(getattr(b, f) != getattr(p, f) for f in fields):
            mismatches.append(i)
        holding += b.holds
    return [("banach == phi(t) = lambda t on 100 instances", not mismatches,
             f"{holding} hold, {100 - holding} refuted, mismatches at {mismatches}")]


def criterion_5():
    out = []
    third = audit_comparison("t/3")
    sums = {v.t: v.partial_sum for v in third.phi2}
    sum_ok = all(abs(sums[t] - t / 2) <= PHI2_SUM_TOL for t in DEFAULT_T_GRID)
    rus = third.rus
    ok = (third.phi1.passed and third.phi2_status == "converged" and sum_ok
          and rus.a_passed and rus.b_passed and rus.c_passed)
    out.append(("t/3 passes every check", ok, f"phi2={third.phi2_status}, sums={sums}"))
    ident = audit_comparison("t")
    out.append(("t diverges and fails phi(t) < t",
                ident.phi2_status == "diverging" and not ident.rus.b_passed,
                f"phi2={ident.phi2_status}, rus b={ident.rus.b_passed}"))
    slow = audit_comparison("t/(1+t)")
    out.append(("t/(1+t) not certified summable", slow.phi2_status != "converged" and slow.rus.b_passed,
                f"phi2={slow.phi2_status}, rus b={slow.rus.b_passed}"))
    return out


def criterion_6():
    space = build_space({"domain": [-3, 5], "D": "abs(x-y)+x^2*y^2", "P": "x^2*y^2"})
    T = build_map({"T": "if(x>=2, 1, 0)"})
    grid = oracles.linspace(-3, 5, 100)
    pairs = [(x, y) for x in grid for y in grid]
    est = estimate_min_lambda(space, T, pairs, "kannan-perturbed")
    ref, _ = oracles.brute_force_sup(pairs, lambda x, y: oracles.kannan_ratio(oracles.T_step, oracles.D, x, y))
    x, y = est.attaining
    near = min(math.hypot(x, y - 2), math.hypot(x - 2, y)) <= 0.1
    out = [("perturbed estimate 0.200 near (0, 2)",
            abs(est.estimate - LAMBDA_TARGET) <= LAMBDA_TOL and near and abs(est.estimate - ref) <= 1e-12
            and len(pairs) == 10**4,
            f"estimate={est.estimate!r} at {est.attaining}, brute force {ref!r}")]
    exact = estimate_min_lambda(space, T, pairs, "kannan-exact")
    out.append(("exact estimate >= 0.5", exact.estimate >= 0.5, f"estimate={exact.estimate!r}"))
    return out


def criterion_7():
    out = []
    sq = build_space({"domain": [-10, 10], "D": "(x-y)^2", "P": "0"})
    rep = audit_metric_axioms(sq, sample_points(sq, (64, 4096, 4096), SEED))
    tri = rep.failures("triangle")
    out.append(("squared distance fails the triangle inequality", bool(tri),
                f"witness {tri[0].witness}" if tri else "no counterexample"))
    cfg = load_entry("identity-noncontractive")
    s = _samples(cfg)
    params = {"phi-perturbed": cfg.phi, "kannan-perturbed": 0.45, "banach-perturbed": 0.45,
              "kannan-exact": 0.45, "banach-exact": 0.45}
    statuses = {c: verify(cfg.space, cfg.T, c, p, s.pairs).status for c, p in params.items()}
    out.append(("identity fails every condition", all(v == "counterexample" for v in statuses.values()),
                str(statuses)))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "bad.json"
        path.write_text('{"space": {"domain": [-10, 10], "D": "(x-y)^2", "P": "0"}, "map": {"T": "x"}}')
        code_a = _quiet_run(["audit", "--config", str(path), "--report", str(Path(tmp) / "a.json")])
        argv = ["verify", "--builtin", "identity-noncontractive", "--report", str(Path(tmp) / "b.json")]
        for c in params:
            argv += ["--condition", c]
        code_v = _quiet_run(argv)
    out.append(("exit codes are 1", code_a == 1 and code_v == 1, f"audit={code_a}, verify={code_v}"))
    return out


def criterion_8():
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(2):
            report, trace = Path(tmp) / f"r{i}.json", Path(tmp) / f"t{i}.csv"
            _quiet_run(["classify", "--builtin", "kannan-step", "--seed", "42",
                        "--report", str(report), "--trace", str(trace)])
            traces = sorted(Path(tmp).glob(f"t{i}-*.csv"))
            blobs.append((report.read_bytes(), [t.read_bytes() for t in traces]))
    same = blobs[0] == blobs[1] and len(blobs[0][1]) == 4 and blobs[0][0]
    return [("byte-identical report and traces", bool(same),
             f"report {len(blobs[0][0])} bytes, {len(blobs[0][1])} traces")]


def _random_ast(rng, depth):
    if depth == 0 or rng.random() < 0.25:
        return Const(float(rng.choice([0, 1, 2, 3, 0.5, 1e-6, 12.25]))) if rng.random() < 0.5 \
            else Var(rng.choice("xy"))
    sub = lambda: _random_ast(rng, depth - 1)  # noqa: E731
    kind = rng.randrange(5)
    if kind == 0:
        return Neg(sub())
    if kind == 1:
        return BinOp(rng.choice("+-*/^"), sub(), sub())
    if kind == 2:
        return Call(rng.choice(["abs", "sqrt", "exp", "log"]), (sub(),))
    if kind == 3:
        return Call(rng.choice(["min", "max"]), (sub(), sub()))
    return Cond(Compare(rng.choice(["<", "<=", ">", ">=", "==", "!="]), sub(), sub()), sub(), sub())


def criterion_9():
    rng = random.Random(SEED)
    bad = [a for a in (_random_ast(rng, 6) for _ in range(1000)) if parse_source(to_source(a)) != a]
    out = [("round trip on 1000 random ASTs", not bad, f"{len(bad)} mismatches")]
    golden = {"1+2*3": 7, "(1+2)*3": 9, "2^3^2": 512, "-2^2": -4, "(-2)^2": 4, "8/4/2": 1,
              "10-4-3": 3, "2*-3": -6, "2^-1": 0.5}
    wrong = {s: evaluate(parse_source(s), {}) for s, v in golden.items() if evaluate(parse_source(s), {}) != v}
    out.append(("precedence golden values", not wrong, str(wrong or "all match")))
    tb, ts = load_entry("jleli-phi").T, load_entry("kannan-step").T
    ok = tb(1.0) == 1 / 3 and ts(2.0) == 1 and tb(1 - 1e-12) == 0 and ts(2 - 1e-12) == 0
    out.append(("piecewise maps at branch points", ok, f"T(1)={tb(1.0)!r}, T(2)={ts(2.0)!r}"))
    return out


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 10)}
RESULTS: dict[int, list] = {}


def results(i):
    if i not in RESULTS:
        RESULTS[i] = CRITERIA[i]()
    return RESULTS[i]


def summary_line(i):
    clauses = results(i)
    failed = [c for c in clauses if not c[1]]
    status = "PASS" if not failed else "FAIL"
    detail = "; ".join(f"{name}: {detail}" for name, _, detail in (failed or clauses[:1]))
    return f"criterion {i}: {status} ({len(clauses) - len(failed)}/{len(clauses)} clauses) {detail}"


CLAUSES = [(i, j) for i, n in [(1, 5), (2, 4), (3, 4), (4, 1), (5, 3), (6, 2), (7, 3), (8, 1), (9, 3)]
           for j in range(n)]


@pytest.mark.parametrize("criterion, clause", CLAUSES,
                         ids=[f"criterion{i}-clause{j}" for i, j in CLAUSES])
def test_clause(criterion, clause):
    name, ok, detail = results(criterion)[clause]
    assert ok, f"{name}: {detail}"


if __name__ == "__main__":
    lines = [summary_line(i) for i in CRITERIA]
    print("\n".join(lines))
    sys.exit(0 if all(": PASS" in line for line in lines) else 1)
