"""
Command-line entry point.

Exit codes: 0 when every requested check passes or converges, 1 when a
counterexample or non-convergence is found (the report is still written),
2 for configuration, usage and I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .axioms import audit_metric_axioms
from .catalog import available, builtin
from .comparison import audit_comparison
from .config import RunConfig, load_config, parse_config
from .contraction import (
    ESTIMATE_KINDS, classify, estimate_min_lambda, evaluate_pair, verify, violates,
)
from .errors import ConfigError, PertfixError
from .report import write_report
from .solver import SolverParams, iterate, uniqueness_probe, write_trace
from .space import sample_points

CONDITION_ALIASES = {
    "phi": "phi-perturbed", "kannan": "kannan-perturbed", "banach": "banach-perturbed",
    "kannan-exact": "kannan-exact", "banach-exact": "banach-exact",
    "phi-perturbed": "phi-perturbed", "kannan-perturbed": "kannan-perturbed",
    "banach-perturbed": "banach-perturbed",
}
MODE_CONDITION = {"phi": "phi-perturbed", "kannan": "kannan-perturbed", "banach": "banach-perturbed"}


class _Run:
    """State for one CLI invocation: config, samples, report sections, failures."""

    def __init__(self, cfg: RunConfig, entry=None, strict: bool = False):
        self.cfg = cfg
        self.entry = entry
        self.strict = strict
        self.samples = sample_points(cfg.space, cfg.counts, cfg.seed, cfg.T)
        self.sections: dict = {"meta": self.meta()}
        self.failed = False
        self.warnings: list[str] = []

    def meta(self) -> dict:
        cfg = self.cfg
        meta = {
            "tool": "pertfix",
            "version": __version__,
            "seed": cfg.seed,
            "counts": {"points": cfg.counts[0], "pairs": cfg.counts[1], "triples": cfg.counts[2]},
            "domain": [cfg.space.lo, cfg.space.hi],
            "builtin": None if self.entry is None else self.entry.id,
            "config": cfg.echo(),
            "assumptions": ["the space (X, d) is assumed complete",
                            "X is restricted to the reported domain box"],
        }
        if self.entry is not None and self.entry.notes:
            meta["notes"] = list(self.entry.notes)
        return meta

    def parameter(self, condition: str):
        if condition == "phi-perturbed":
            if self.cfg.phi is None:
                raise ConfigError("condition phi-perturbed needs a 'phi' expression")
            return self.cfg.phi
        if self.cfg.lam is None:
            raise ConfigError(f"condition {condition} needs a 'lambda' value")
        return self.cfg.lam

    # -- sections ---------------------------------------------------------

    def axioms(self):
        report = audit_metric_axioms(self.cfg.space, self.samples)
        self.sections["axioms"] = report.to_dict()
        if not report.passed:
            self.failed = True
        return report

    def comparison(self, required: bool = False):
        if self.cfg.phi is None:
            if required:
                self.sections["comparison"] = {"skipped": "no comparison function supplied"}
            return None
        report = audit_comparison(self.cfg.phi)
        self.sections["comparison"] = report.to_dict()
        if not report.passed(self.strict):
            self.failed = True
        elif report.phi2_status == "inconclusive":
            self.warnings.append("summability of phi is inconclusive on the grid (use --strict to fail)")
        return report

    def focus(self, conditions, pairs):
        rows = []
        for cond in conditions:
            param = self.parameter(cond)
            for x, y in pairs:
                w = evaluate_pair(self.cfg.space, self.cfg.T, cond, param, x, y)
                row = {"condition": cond, **w.to_dict()}
                row["status"] = "counterexample" if violates(w.lhs, w.rhs) else "holds"
                rows.append(row)
        return rows

    def conditions(self, names, pairs=None):
        pairs = self.samples.pairs if pairs is None else pairs
        verdicts = {c: verify(self.cfg.space, self.cfg.T, c, self.parameter(c), pairs) for c in names}
        focus_pairs = self.cfg.focus_pairs if pairs is self.samples.pairs else pairs
        section = {"verdicts": {c: v.to_dict() for c, v in verdicts.items()},
                   "focus": self.focus(names, focus_pairs)}
        if any(not v.holds for v in verdicts.values()):
            self.failed = True
        self.sections["conditions"] = section
        return verdicts

    def classification(self):
        cfg = self.cfg
        result = classify(cfg.space, cfg.T, cfg.phi, cfg.lam, self.samples)
        holding = result.holding()
        section = {
            "verdicts": {c: v.to_dict() for c, v in result.conditions.items()},
            "holding": sorted(holding),
            "focus": self.focus(list(result.conditions), cfg.focus_pairs),
            "closure": {"status": "fail" if result.closure else "pass",
                        "escapes": [{"x": x, "Tx": tx} for x, tx in result.closure[:10]]},
        }
        self.sections["conditions"] = section
        self.sections["continuity"] = [p.to_dict() for p in result.continuity]
        if not result.perturbed_holds or result.closure:
            self.failed = True
        return result

    def lambda_estimates(self, kinds):
        out = {}
        for kind in kinds:
            est = estimate_min_lambda(self.cfg.space, self.cfg.T, self.samples.pairs, kind)
            out[kind] = est.to_dict()
        self.sections["lambda_estimate"] = out
        return out

    def solve(self, trace_path=None):
        cfg = self.cfg
        mode = cfg.resolved_mode()
        base = SolverParams(cfg.x0[0], mode, cfg.lam, cfg.phi, cfg.epsilon,
                            cfg.max_iterations, cfg.horizon)
        runs = []
        for i, x0 in enumerate(cfg.x0):
            params = SolverParams(x0, mode, cfg.lam, cfg.phi, cfg.epsilon,
                                  cfg.max_iterations, cfg.horizon)
            result = iterate(cfg.space, cfg.T, params)
            runs.append(result)
            if trace_path is not None:
                write_trace(result, _trace_file(trace_path, i, len(cfg.x0)))
        self.sections["solve"] = {"mode": mode, "epsilon": cfg.epsilon,
                                  "runs": [r.to_dict() for r in runs]}
        if not all(r.converged for r in runs):
            self.failed = True
        if len(cfg.x0) >= 2:
            verdict = uniqueness_probe(cfg.space, cfg.T, cfg.x0, base)
            self.sections["uniqueness"] = verdict.to_dict()
            if not verdict.consistent:
                self.failed = True
        return runs

    def expectations(self, result, runs):
        exp = self.entry.expected
        holding = result.holding()
        checks = []

        def check(finding, expected, observed, ok):
            checks.append({"finding": finding, "expected": expected, "observed": observed, "ok": ok})

        for c in exp.get("holds", []):
            check(f"{c} holds", True, c in holding, c in holding)
        for c in exp.get("fails", []):
            ran = c in result.conditions
            check(f"{c} fails", True, ran and c not in holding, ran and c not in holding)
        if "axioms" in exp:
            observed = "pass" if self.sections["axioms"]["verdicts"] and all(
                v["status"] == "pass" for v in self.sections["axioms"]["verdicts"].values()) else "fail"
            check("axioms", exp["axioms"], observed, observed == exp["axioms"])
        if exp.get("fixed_point") is not None:
            fp = exp["fixed_point"]
            ok = all(r.converged and abs(r.x_star - fp) <= 1e-6 for r in runs)
            check("fixed point", fp, [r.x_star for r in runs], ok)
        if "discontinuities" in exp:
            seen = result.discontinuities
            check("discontinuities", exp["discontinuities"], seen,
                  sorted(exp["discontinuities"]) == sorted(seen))
        if "phi_audit" in exp and "comparison" in self.sections:
            comp = self.sections["comparison"]
            ok_phi = (comp.get("phi1", {}).get("status") == "pass"
                      and comp.get("phi2", {}).get("status") == "converged")
            observed = "pass" if ok_phi else "fail"
            check("phi audit", exp["phi_audit"], observed, observed == exp["phi_audit"])
        matched = all(c["ok"] for c in checks)
        self.sections["expectations"] = {"matched": matched, "checks": checks}
        if not matched:
            self.warnings.append(f"catalog entry {self.entry.id}: expected findings not reproduced")


def _trace_file(path, index: int, total: int) -> Path:
    p = Path(path)
    if total == 1:
        return p
    return p.with_name(f"{p.stem}-{index}{p.suffix}")


def _add_source(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON run configuration")
    src.add_argument("--builtin", metavar="ID", help="catalog instance id (see `catalog list`)")
    p.add_argument("--seed", type=int, help="sampling seed (default: config, $PERTFIX_SEED, 42)")
    p.add_argument("--report", help="report path (default: config output.report, else stdout)")
    p.add_argument("--strict", action="store_true",
                   help="treat inconclusive summability verdicts as failures")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pertfix",
        description="Fixed points and contraction certificates in perturbed metric spaces.")
    parser.add_argument("--version", action="version", version=f"pertfix {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="metric axioms of d = D - P and the phi audit")
    _add_source(p)

    p = sub.add_parser("verify", help="contraction conditions on sampled pairs")
    _add_source(p)
    p.add_argument("--condition", action="append", choices=sorted(CONDITION_ALIASES),
                   help="condition to check (repeatable)")
    p.add_argument("--pair", nargs=2, type=float, metavar=("X", "Y"),
                   help="check this single pair instead of the samples")

    p = sub.add_parser("solve", help="Picard iteration with a-priori bounds")
    _add_source(p)
    p.add_argument("--trace", help="CSV trace path (one file per start when several)")

    p = sub.add_parser("classify", help="every applicable check")
    _add_source(p)
    p.add_argument("--trace", help="CSV trace path (one file per start when several)")

    p = sub.add_parser("estimate-lambda", help="smallest admissible constant on the samples")
    _add_source(p)
    p.add_argument("--kind", action="append", choices=ESTIMATE_KINDS)

    p = sub.add_parser("catalog", help="list or export built-in instances")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("id", nargs="?")
    return parser


def _load(args) -> tuple[RunConfig, object]:
    if args.builtin:
        entry = builtin(args.builtin)
        return parse_config(entry.to_config(), args.seed), entry
    return load_config(args.config, args.seed), None


def _default_condition(cfg: RunConfig, entry) -> str:
    if entry is not None:
        return entry.condition
    mode = cfg.resolved_mode()
    if mode in MODE_CONDITION:
        return MODE_CONDITION[mode]
    raise ConfigError("no condition requested and neither 'phi' nor 'lambda' is configured")


def _catalog(args) -> int:
    if args.action == "list":
        for entry_id, desc in available():
            print(f"{entry_id:<26}{desc}")
        return 0
    if not args.id:
        raise ConfigError("catalog show needs an id")
    print(json.dumps(builtin(args.id).to_config(), indent=2))
    return 0


def _dispatch(args) -> int:
    if args.command == "catalog":
        return _catalog(args)
    cfg, entry = _load(args)
    run = _Run(cfg, entry, args.strict)
    cmd = args.command
    if cmd == "audit":
        run.axioms()
        run.comparison()
    elif cmd == "verify":
        names = [CONDITION_ALIASES[c] for c in (args.condition or [])] or [_default_condition(cfg, entry)]
        names = list(dict.fromkeys(names))
        pairs = [tuple(args.pair)] if args.pair else None
        run.conditions(names, pairs)
    elif cmd == "solve":
        run.solve(args.trace or cfg.trace_path)
    elif cmd == "estimate-lambda":
        kinds = args.kind
        if not kinds:
            default = _default_condition(cfg, entry)
            kinds = [default if default in ESTIMATE_KINDS else "banach-perturbed"]
        ests = run.lambda_estimates(list(dict.fromkeys(kinds)))
        if not all(e["admissible"] for e in ests.values()):
            run.failed = True
    elif cmd == "classify":
        if cfg.phi is None and cfg.lam is None:
            raise ConfigError("classify needs 'phi' or 'lambda' in the configuration")
        run.axioms()
        run.comparison(required=True)
        result = run.classification()
        run.lambda_estimates(["kannan-perturbed", "kannan-exact", "banach-perturbed"])
        runs = run.solve(args.trace or cfg.trace_path)
        if entry is not None:
            run.expectations(result, runs)
    write_report(run.sections, args.report or cfg.report_path)
    for w in run.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 1 if run.failed else 0


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return _dispatch(args)
    except (PertfixError, OSError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {msg}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())
