"""Sampled audit of the four metric axioms for the exact metric ``d = D - P``."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EvaluationError
from .space import PerturbedSpace, SampleSet

AXIOMS = ("nonnegativity", "identity", "symmetry", "triangle")
DEFAULT_TOL = 1e-9
# d(x, y) <= tol with |x - y| beyond this multiple of tol counts as a violation
INDISCERNIBLE_FACTOR = 1e3
REPORTED_COUNTEREXAMPLES = 10


@dataclass(frozen=True, order=True)
class AxiomCounterexample:
    axiom: str
    witness: tuple[float, ...]
    lhs: float
    rhs: float

    def to_dict(self):
        names = ("x", "y", "z")[: len(self.witness)]
        return {"axiom": self.axiom, "witness": dict(zip(names, self.witness)),
                "lhs": self.lhs, "rhs": self.rhs}


@dataclass
class AxiomReport:
    tol: float
    verdicts: dict[str, str] = field(default_factory=dict)
    counterexamples: list[AxiomCounterexample] = field(default_factory=list)
    indeterminate: list[tuple[tuple[float, ...], str]] = field(default_factory=list)
    samples_checked: dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v == "pass" for v in self.verdicts.values())

    def failures(self, axiom: str) -> list[AxiomCounterexample]:
        return [c for c in self.counterexamples if c.axiom == axiom]

    def to_dict(self, limit: int = REPORTED_COUNTEREXAMPLES):
        per_axiom = {}
        for name in AXIOMS:
            found = self.failures(name)
            entry = {"status": self.verdicts[name], "counterexamples": len(found)}
            if found:
                worst = max(found, key=lambda c: (c.lhs - c.rhs, _neg(c.witness)))
                entry["worst"] = worst.to_dict()
                entry["examples"] = [c.to_dict() for c in found[:limit]]
            per_axiom[name] = entry
        return {
            "tolerance": self.tol,
            "samples_checked": dict(self.samples_checked),
            "verdicts": per_axiom,
            "indeterminate": {"count": len(self.indeterminate),
                              "examples": [{"witness": list(w), "error": e}
                                           for w, e in self.indeterminate[:limit]]},
            "assumptions": ["completeness of (X, d) is assumed, not checked"],
            "note": "verdicts certify only that no counterexample was found among the samples",
        }


def _neg(witness):
    # ties on margin go to the lexicographically smallest witness
    return tuple(-w for w in witness)


def audit_metric_axioms(space: PerturbedSpace, samples: SampleSet, tol: float = DEFAULT_TOL) -> AxiomReport:
    if tol <= 0:
        raise ValueError("tol must be positive")
    cache: dict[tuple[float, float], float] = {}

    def d(x, y):
        key = (x, y)
        if key not in cache:
            cache[key] = space.exact(x, y)
        return cache[key]

    report = AxiomReport(tol)
    found = []
    bad = []
    indiscernible_gap = INDISCERNIBLE_FACTOR * tol

    for x in samples.points:
        try:
            v = d(x, x)
        except EvaluationError as exc:
            bad.append(((x,), str(exc)))
            continue
        if abs(v) > tol:
            found.append(AxiomCounterexample("identity", (x, x), abs(v), tol))

    for x, y in samples.pairs:
        try:
            dxy, dyx = d(x, y), d(y, x)
        except EvaluationError as exc:
            bad.append(((x, y), str(exc)))
            continue
        if dxy < -tol:
            found.append(AxiomCounterexample("nonnegativity", (x, y), 0.0, dxy))
        if dxy <= tol and abs(x - y) > indiscernible_gap:
            found.append(AxiomCounterexample("identity", (x, y), abs(x - y), indiscernible_gap))
        if abs(dxy - dyx) > tol:
            found.append(AxiomCounterexample("symmetry", (x, y), dxy, dyx))

    for x, y, z in samples.triples:
        try:
            lhs = d(x, y)
            rhs = d(x, z) + d(z, y)
        except EvaluationError as exc:
            bad.append(((x, y, z), str(exc)))
            continue
        if lhs > rhs + tol:
            found.append(AxiomCounterexample("triangle", (x, y, z), lhs, rhs))

    found.sort(key=lambda c: (c.axiom, c.witness))
    report.counterexamples = found
    report.indeterminate = sorted(bad)
    failing = {c.axiom for c in found}
    report.verdicts = {a: ("fail" if a in failing else "pass") for a in AXIOMS}
    report.samples_checked = {"points": len(samples.points), "pairs": len(samples.pairs),
                              "triples": len(samples.triples)}
    return report
