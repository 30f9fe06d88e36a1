"""
Numerical audit of a candidate comparison function phi.

Summability of the iterate series cannot be decided from finitely many terms,
so ``check_phi2`` returns one of three labelled-heuristic verdicts
(``converged`` / ``diverging`` / ``inconclusive``).  Every verdict is only a
statement about the finite grid it was computed on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import ConfigError
from .expr import Formula

DEFAULT_T_GRID = (1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0)
DEFAULT_EPS_GRID = tuple(10.0**-k for k in range(1, 9))
DEFAULT_PHI1_GRID = tuple(sorted({0.0, *DEFAULT_T_GRID, *DEFAULT_EPS_GRID,
                                  *(i * 0.5 for i in range(201))}))
DEFAULT_TERMS = 200
DEFAULT_TAIL_TOLERANCE = 1e-10
OVERFLOW_GUARD = 1e150
MONOTONE_SLACK = 1e-12
ITERATE_ZERO = 1e-8
CONTINUITY_AT_ZERO = 1e-6

GRID_CAVEAT = (
    "summability is required for every t >= 0; only the listed grid was checked "
    "and the verdicts are heuristic"
)


@dataclass(frozen=True)
class ComparisonCandidate:
    phi: Formula
    label: str = ""

    @classmethod
    def from_source(cls, source: str, label: str = "") -> "ComparisonCandidate":
        return cls(Formula.compile(source, ("t",)), label or str(source))

    def __call__(self, t: float) -> float:
        return self.phi(t)


def as_candidate(phi) -> ComparisonCandidate:
    if isinstance(phi, ComparisonCandidate):
        return phi
    if isinstance(phi, Formula):
        if set(phi.params) != {"t"}:
            raise ConfigError(f"comparison function must be in t, got params {phi.params}")
        return ComparisonCandidate(phi, phi.source)
    return ComparisonCandidate.from_source(phi)


@dataclass(frozen=True)
class Phi1Verdict:
    passed: bool
    witness: tuple[float, float, float, float] | None = None  # t1, t2, phi(t1), phi(t2)
    points_checked: int = 0

    def to_dict(self):
        d = {"status": "pass" if self.passed else "counterexample",
             "points_checked": self.points_checked}
        if self.witness:
            t1, t2, f1, f2 = self.witness
            d["witness"] = {"t1": t1, "t2": t2, "phi_t1": f1, "phi_t2": f2}
        return d


@dataclass(frozen=True)
class Phi2Verdict:
    t: float
    status: str  # converged | diverging | inconclusive
    partial_sum: float
    terms: int
    last_term: float
    observed_ratio: float | None
    reason: str

    def to_dict(self):
        return {"t": self.t, "status": self.status, "partial_sum": self.partial_sum,
                "terms": self.terms, "last_term": self.last_term,
                "observed_ratio": self.observed_ratio, "reason": self.reason}


def check_codomain(candidate, grid: Sequence[float] = DEFAULT_PHI1_GRID):
    """First grid point where phi is negative, or ``None``."""
    phi = as_candidate(candidate)
    for t in grid:
        v = phi(t)
        if v < 0:
            return (t, v)
    return None


def check_phi1(candidate, grid: Sequence[float] = DEFAULT_PHI1_GRID) -> Phi1Verdict:
    """Monotonicity on consecutive grid points, with 1e-12 slack."""
    phi = as_candidate(candidate)
    grid = list(grid)
    if any(b < a for a, b in zip(grid, grid[1:])) or any(t < 0 for t in grid):
        raise ValueError("grid must be sorted ascending and nonnegative")
    values = [phi(t) for t in grid]
    for (t1, f1), (t2, f2) in zip(zip(grid, values), zip(grid[1:], values[1:])):
        if f1 > f2 + MONOTONE_SLACK:
            return Phi1Verdict(False, (t1, t2, f1, f2), len(grid))
    return Phi1Verdict(True, None, len(grid))


def _phi2_single(phi: Callable[[float], float], t: float, n_terms: int, tail_tol: float):
    s = t
    total = 0.0
    terms = []
    for n in range(1, n_terms + 1):
        s = phi(s)
        terms.append(s)
        total += s
        if abs(total) > OVERFLOW_GUARD or abs(s) > OVERFLOW_GUARD:
            return Phi2Verdict(t, "diverging", total, n, s, None,
                               f"partial sum exceeded overflow guard {OVERFLOW_GUARD:g}")
    window = max(1, math.ceil(n_terms / 10))
    tail = terms[-window:]
    ratios = [b / a for a, b in zip(tail, tail[1:]) if a > 0]
    ratio = max(ratios) if ratios else 0.0
    small = all(abs(v) < tail_tol * max(1.0, abs(total)) for v in tail)
    if small and ratio < 1.0:
        return Phi2Verdict(t, "converged", total, n_terms, terms[-1], ratio,
                           f"last {window} terms below tolerance, ratio < 1")
    stalled = bool(ratios) and min(ratios) >= 1.0
    if (terms[-1] >= terms[0] and terms[0] > 0) or stalled:
        return Phi2Verdict(t, "diverging", total, n_terms, terms[-1], ratio,
                           f"terms failed to decrease over {n_terms} iterations")
    return Phi2Verdict(t, "inconclusive", total, n_terms, terms[-1], ratio,
                       "terms decrease but too slowly to certify summability")


def check_phi2(
    candidate,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    max_terms: int = DEFAULT_TERMS,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
) -> list[Phi2Verdict]:
    """Heuristic summability verdict for ``sum_{n>=1} phi^n(t)`` at each grid point."""
    if max_terms < 10:
        raise ValueError("max_terms must be at least 10")
    phi = as_candidate(candidate)
    return [_phi2_single(phi, float(t), max_terms, tail_tolerance) for t in t_grid]


@dataclass(frozen=True)
class RusReport:
    a_passed: bool
    a_failures: tuple[tuple[float, float], ...]  # (t, phi^n_max(t))
    b_passed: bool
    b_failures: tuple[tuple[float, float], ...]  # (t, phi(t))
    c_passed: bool
    c_values: tuple[tuple[float, float], ...]  # (eps, phi(eps))

    def to_dict(self):
        return {
            "a": {"status": "pass" if self.a_passed else "fail",
                  "failures": [{"t": t, "last_iterate": v} for t, v in self.a_failures]},
            "b": {"status": "pass" if self.b_passed else "fail",
                  "failures": [{"t": t, "phi_t": v} for t, v in self.b_failures]},
            "c": {"status": "pass" if self.c_passed else "fail",
                  "values": [{"eps": e, "phi_eps": v} for e, v in self.c_values]},
        }


def iterates_vanish(phi, t: float, n_max: int) -> tuple[bool, float]:
    s = t
    for _ in range(n_max):
        s = phi(s)
        if s < ITERATE_ZERO:
            return True, s
        if s > OVERFLOW_GUARD:
            break
    return False, s


def check_rus_properties(
    candidate,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    n_max: int = DEFAULT_TERMS,
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
) -> RusReport:
    """Cross-check the three consequences of membership in the comparison family:
    iterates vanish, ``phi(t) < t`` for ``t > 0``, and continuity at 0."""
    if n_max < 50:
        raise ValueError("n_max must be at least 50")
    phi = as_candidate(candidate)
    a_fail = []
    b_fail = []
    for t in t_grid:
        ok, last = iterates_vanish(phi, t, n_max)
        if not ok:
            a_fail.append((t, last))
        v = phi(t)
        if not v < t:
            b_fail.append((t, v))
    eps = sorted(eps_grid, reverse=True)
    vals = [(e, phi(e)) for e in eps]
    monotone = all(b[1] <= a[1] + MONOTONE_SLACK for a, b in zip(vals, vals[1:]))
    c_ok = monotone and abs(vals[-1][1]) < CONTINUITY_AT_ZERO
    return RusReport(not a_fail, tuple(a_fail), not b_fail, tuple(b_fail), c_ok, tuple(vals))


@dataclass(frozen=True)
class ComparisonReport:
    label: str
    codomain_violation: tuple[float, float] | None
    phi1: Phi1Verdict
    phi2: tuple[Phi2Verdict, ...]
    rus: RusReport
    notes: tuple[str, ...] = field(default=(GRID_CAVEAT,))

    @property
    def phi2_status(self) -> str:
        statuses = {v.status for v in self.phi2}
        for s in ("diverging", "inconclusive"):
            if s in statuses:
                return s
        return "converged"

    def passed(self, strict: bool = False) -> bool:
        bad = {"diverging", "inconclusive"} if strict else {"diverging"}
        return (self.codomain_violation is None and self.phi1.passed
                and self.phi2_status not in bad
                and self.rus.a_passed and self.rus.b_passed and self.rus.c_passed)

    def to_dict(self):
        cod = self.codomain_violation
        return {
            "phi": self.label,
            "codomain": ({"status": "pass"} if cod is None else
                         {"status": "fail", "t": cod[0], "phi_t": cod[1]}),
            "phi1": self.phi1.to_dict(),
            "phi2": {"heuristic": True, "status": self.phi2_status,
                     "per_t": [v.to_dict() for v in self.phi2]},
            "rus": self.rus.to_dict(),
            "notes": list(self.notes),
        }


def audit_comparison(
    candidate,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
    max_terms: int = DEFAULT_TERMS,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
    phi1_grid: Sequence[float] = DEFAULT_PHI1_GRID,
) -> ComparisonReport:
    phi = as_candidate(candidate)
    return ComparisonReport(
        label=phi.label,
        codomain_violation=check_codomain(phi, phi1_grid),
        phi1=check_phi1(phi, phi1_grid),
        phi2=tuple(check_phi2(phi, t_grid, max_terms, tail_tolerance)),
        rus=check_rus_properties(phi, t_grid, max_terms, eps_grid),
    )
