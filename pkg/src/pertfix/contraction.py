"""
Sampled certification of contraction conditions on a perturbed metric space.

Conditions (lhs <= rhs for every sampled pair):

==================  =====================  ====================================
condition id        lhs                    rhs
==================  =====================  ====================================
phi-perturbed       D(Tx, Ty)              phi(D(x, y))
banach-perturbed    D(Tx, Ty)              lam * D(x, y)          (0 < lam < 1)
kannan-perturbed    D(Tx, Ty)              lam * [D(x,Tx) + D(y,Ty)]  (0 <= lam < 1/2)
banach-exact        d(Tx, Ty)              lam * d(x, y)
kannan-exact        d(Tx, Ty)              lam * [d(x,Tx) + d(y,Ty)]
==================  =====================  ====================================

A pair violates its condition when ``lhs > rhs + tol + 1e-12 * |rhs|``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .comparison import ComparisonCandidate, as_candidate
from .errors import DomainError, EstimateError, EvaluationError, ParameterError
from .expr import Formula
from .space import PerturbedSpace, SampleSet, SelfMap, closure_violations

DEFAULT_TOL = 1e-9
RELATIVE_TOL = 1e-12
DISCONTINUITY_FACTOR = 1e3

CONDITIONS = ("phi-perturbed", "kannan-perturbed", "banach-perturbed", "kannan-exact", "banach-exact")
ESTIMATE_KINDS = ("kannan-perturbed", "kannan-exact", "banach-perturbed", "banach-exact")
PERTURBED = ("phi-perturbed", "kannan-perturbed", "banach-perturbed")


@dataclass(frozen=True)
class Witness:
    x: float
    y: float
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self):
        return {"x": self.x, "y": self.y, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin}


@dataclass(frozen=True)
class ConditionVerdict:
    condition: str
    status: str  # holds-on-samples | counterexample
    parameters: dict
    pairs_checked: int
    witness: Witness | None = None  # worst violation
    first_violation: Witness | None = None
    violations: int = 0
    tightest: Witness | None = None
    indeterminate: tuple[tuple[float, float, str], ...] = ()

    @property
    def holds(self) -> bool:
        return self.status == "holds-on-samples"

    def to_dict(self):
        d = {"condition": self.condition, "status": self.status,
             "parameters": dict(self.parameters), "pairs_checked": self.pairs_checked,
             "violations": self.violations}
        if self.witness is not None:
            d["witness"] = self.witness.to_dict()
            d["first_violation"] = self.first_violation.to_dict()
        if self.tightest is not None:
            d["tightest"] = self.tightest.to_dict()
        d["indeterminate"] = {"count": len(self.indeterminate),
                              "examples": [{"x": x, "y": y, "error": e}
                                           for x, y, e in self.indeterminate[:10]]}
        return d


def violates(lhs: float, rhs: float, tol: float = DEFAULT_TOL) -> bool:
    return lhs > rhs + tol + RELATIVE_TOL * abs(rhs)


def _order(w: Witness):
    # larger violation first; ties go to the lexicographically smaller pair
    return (-(w.lhs - w.rhs), w.x, w.y)


def _check_kannan_lambda(lam: float):
    if not 0 <= lam < 0.5:
        raise ParameterError(f"Kannan constant must lie in [0, 1/2), got {lam!r}")


def _check_banach_lambda(lam: float):
    if not 0 < lam < 1:
        raise ParameterError(f"Banach constant must lie in (0, 1), got {lam!r}")


class _Images:
    """Memoized ``T``: each sample point is mapped once per verification."""

    def __init__(self, T):
        self.T = T
        self.cache = {}

    def __call__(self, x):
        try:
            return self.cache[x]
        except KeyError:
            v = self.cache[x] = self.T(x)
            return v


def condition_terms(space: PerturbedSpace, T, condition: str, parameter) -> Callable:
    """Return ``(x, y) -> (lhs, rhs)`` for ``condition`` with its constant or phi."""
    Tm = _Images(T)
    D, d = space.perturbed, space.exact
    if condition == "phi-perturbed":
        phi = parameter
        return lambda x, y: (D(Tm(x), Tm(y)), phi(D(x, y)))
    lam = float(parameter)
    if condition == "kannan-perturbed":
        return lambda x, y: (D(Tm(x), Tm(y)), lam * (D(x, Tm(x)) + D(y, Tm(y))))
    if condition == "banach-perturbed":
        return lambda x, y: (D(Tm(x), Tm(y)), lam * D(x, y))
    if condition == "kannan-exact":
        return lambda x, y: (d(Tm(x), Tm(y)), lam * (d(x, Tm(x)) + d(y, Tm(y))))
    if condition == "banach-exact":
        return lambda x, y: (d(Tm(x), Tm(y)), lam * d(x, y))
    raise ValueError(f"unknown condition {condition!r}; expected one of {', '.join(CONDITIONS)}")


def _verify(condition, terms, pairs, tol, parameters) -> ConditionVerdict:
    worst = first = tightest = None
    count = 0
    bad = []
    n = 0
    for x, y in pairs:
        n += 1
        try:
            lhs, rhs = terms(x, y)
        except EvaluationError as exc:
            bad.append((x, y, str(exc)))
            continue
        w = Witness(x, y, lhs, rhs)
        if violates(lhs, rhs, tol):
            count += 1
            first = first or w
            if worst is None or _order(w) < _order(worst):
                worst = w
        elif tightest is None or (w.margin, w.x, w.y) < (tightest.margin, tightest.x, tightest.y):
            tightest = w
    status = "counterexample" if count else "holds-on-samples"
    return ConditionVerdict(condition, status, parameters, n, worst, first, count, tightest, tuple(bad))


def _phi_parameter(phi):
    if isinstance(phi, (Formula, str, ComparisonCandidate)):
        cand = as_candidate(phi)
        return cand, {"phi": cand.label}
    return phi, {"phi": getattr(phi, "label", repr(phi))}


def verify_phi_contraction(space, T, phi, pairs: Iterable, tol: float = DEFAULT_TOL) -> ConditionVerdict:
    """``D(Tx, Ty) <= phi(D(x, y))``; continuity of ``T`` is not required."""
    fn, params = _phi_parameter(phi)
    return _verify("phi-perturbed", condition_terms(space, T, "phi-perturbed", fn), pairs, tol, params)


def linear_comparison(lam: float) -> Formula:
    """phi(t) = lam * t, written in the DSL so it evaluates bit-identically."""
    return Formula.compile(f"{float(lam)!r}*t", ("t",))


def verify_banach_perturbed(space, T, lam: float, pairs: Iterable, tol: float = DEFAULT_TOL) -> ConditionVerdict:
    """Banach-type condition, checked as the phi condition with phi(t) = lam * t."""
    _check_banach_lambda(lam)
    v = verify_phi_contraction(space, T, linear_comparison(lam), pairs, tol)
    return dataclasses.replace(v, condition="banach-perturbed", parameters={"lambda": lam})


def verify_kannan_perturbed(space, T, lam: float, pairs: Iterable, tol: float = DEFAULT_TOL) -> ConditionVerdict:
    _check_kannan_lambda(lam)
    return _verify("kannan-perturbed", condition_terms(space, T, "kannan-perturbed", lam),
                   pairs, tol, {"lambda": lam})


def verify_kannan_exact(space, T, lam: float, pairs: Iterable, tol: float = DEFAULT_TOL) -> ConditionVerdict:
    _check_kannan_lambda(lam)
    return _verify("kannan-exact", condition_terms(space, T, "kannan-exact", lam),
                   pairs, tol, {"lambda": lam})


def verify_banach_exact(space, T, lam: float, pairs: Iterable, tol: float = DEFAULT_TOL) -> ConditionVerdict:
    _check_banach_lambda(lam)
    return _verify("banach-exact", condition_terms(space, T, "banach-exact", lam),
                   pairs, tol, {"lambda": lam})


VERIFIERS = {
    "kannan-perturbed": verify_kannan_perturbed,
    "banach-perturbed": verify_banach_perturbed,
    "kannan-exact": verify_kannan_exact,
    "banach-exact": verify_banach_exact,
}


def verify(space, T, condition: str, parameter, pairs, tol: float = DEFAULT_TOL) -> ConditionVerdict:
    if condition == "phi-perturbed":
        return verify_phi_contraction(space, T, parameter, pairs, tol)
    try:
        fn = VERIFIERS[condition]
    except KeyError:
        raise ValueError(f"unknown condition {condition!r}") from None
    return fn(space, T, parameter, pairs, tol)


def evaluate_pair(space, T, condition: str, parameter, x: float, y: float) -> Witness:
    """Re-evaluate one pair against a condition, e.g. to re-check a witness."""
    if condition == "phi-perturbed":
        parameter = _phi_parameter(parameter)[0]
    elif condition == "banach-perturbed":
        return evaluate_pair(space, T, "phi-perturbed", linear_comparison(parameter), x, y)
    lhs, rhs = condition_terms(space, T, condition, parameter)(x, y)
    return Witness(x, y, lhs, rhs)


# --------------------------------------------------------------------------
# Minimal constants
# --------------------------------------------------------------------------

ADMISSIBLE = {"kannan-perturbed": 0.5, "kannan-exact": 0.5,
              "banach-perturbed": 1.0, "banach-exact": 1.0}


@dataclass(frozen=True)
class LambdaEstimate:
    kind: str
    estimate: float
    attaining: tuple[float, float] | None
    pairs_scanned: int
    degenerate_skipped: int
    hard_violations: tuple[Witness, ...] = ()
    indeterminate: int = 0

    @property
    def bound(self) -> float:
        return ADMISSIBLE[self.kind]

    @property
    def admissible(self) -> bool:
        """An admissible constant exists on these samples."""
        return not self.hard_violations and self.estimate < self.bound

    def to_dict(self):
        return {
            "kind": self.kind,
            "estimate": self.estimate,
            "attaining": None if self.attaining is None else list(self.attaining),
            "pairs_scanned": self.pairs_scanned,
            "degenerate_skipped": self.degenerate_skipped,
            "hard_violations": {"count": len(self.hard_violations),
                                "examples": [w.to_dict() for w in self.hard_violations[:10]]},
            "indeterminate": self.indeterminate,
            "admissible_bound": self.bound,
            "admissible": self.admissible,
            "note": "sampled lower bound on the true supremum",
        }


def estimate_min_lambda(space, T, pairs: Sequence, kind: str, tol: float = DEFAULT_TOL) -> LambdaEstimate:
    """Largest ``lhs / rhs`` ratio over the scanned pairs (exhaustive, no optimizer).

    Pairs with ``rhs <= tol`` admit no finite constant when ``lhs > tol`` (hard
    violations) and are skipped as degenerate when both sides are ``<= tol``.
    """
    if kind not in ADMISSIBLE:
        raise ValueError(f"unknown kind {kind!r}; expected one of {', '.join(ADMISSIBLE)}")
    if not pairs:
        raise EstimateError("no pairs to scan")
    # unit constant: rhs is the multiplier of lambda
    terms = condition_terms(space, T, kind, 1.0)
    best = None
    best_pair = None
    skipped = 0
    hard = []
    bad = 0
    for x, y in pairs:
        try:
            lhs, rhs = terms(x, y)
        except EvaluationError:
            bad += 1
            continue
        if rhs <= tol:
            if lhs > tol:
                hard.append(Witness(x, y, lhs, rhs))
            else:
                skipped += 1
            continue
        ratio = lhs / rhs
        if best is None or ratio > best or (ratio == best and (x, y) < best_pair):
            best, best_pair = ratio, (x, y)
    if best is None:
        if not hard:
            raise EstimateError(f"all {len(pairs)} pairs are degenerate for {kind}")
        best = float("inf")
    hard.sort(key=lambda w: (w.x, w.y))
    return LambdaEstimate(kind, best, best_pair, len(pairs), skipped, tuple(hard), bad)


# --------------------------------------------------------------------------
# Continuity
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuityProbe:
    point: float
    jump: float
    deltas: tuple[float, ...]
    values: tuple[float, ...]
    metric: str
    discontinuous: bool

    def to_dict(self):
        return {"point": self.point, "jump": self.jump, "metric": self.metric,
                "classification": "discontinuous" if self.discontinuous else "continuous",
                "deltas": list(self.deltas), "values": list(self.values)}


def default_deltas(space: PerturbedSpace, p: float, count: int = 10) -> list[float]:
    scale = min(p - space.lo, space.hi - p) / 2
    return [scale * 10.0**-k for k in range(count)]


def probe_continuity(space, T, p: float, deltas: Sequence[float] | None = None,
                     metric: str = "exact", tol: float = DEFAULT_TOL) -> ContinuityProbe:
    """Track ``d(T(p - delta), T(p + delta))`` as delta shrinks; the last value is the jump."""
    if not space.lo < p < space.hi:
        raise DomainError(f"probe point {p!r} must be interior to [{space.lo}, {space.hi}]")
    if deltas is None:
        deltas = default_deltas(space, p)
    deltas = [float(dl) for dl in deltas]
    if not deltas or any(dl <= 0 for dl in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be positive and strictly decreasing")
    if not (space.contains(p - deltas[0]) and space.contains(p + deltas[0])):
        raise DomainError(f"probe bracket p +- {deltas[0]!r} leaves the domain")
    if metric not in ("exact", "perturbed-D"):
        raise ValueError("metric must be 'exact' or 'perturbed-D'")
    dist = space.exact if metric == "exact" else space.perturbed
    values = [dist(T(p - dl), T(p + dl)) for dl in deltas]
    jump = values[-1]
    return ContinuityProbe(p, jump, tuple(deltas), tuple(values), metric,
                           jump > DISCONTINUITY_FACTOR * tol)


# --------------------------------------------------------------------------
# Classification
# --------------------------------------------------------------------------


@dataclass
class Classification:
    conditions: dict[str, ConditionVerdict] = field(default_factory=dict)
    continuity: list[ContinuityProbe] = field(default_factory=list)
    closure: list[tuple[float, float]] = field(default_factory=list)

    def holding(self) -> set[str]:
        return {k for k, v in self.conditions.items() if v.holds}

    @property
    def perturbed_holds(self) -> bool:
        """At least one condition of a perturbed fixed-point theorem holds."""
        return bool(self.holding() & set(PERTURBED))

    @property
    def discontinuities(self) -> list[float]:
        return [p.point for p in self.continuity if p.discontinuous]

    def summary(self) -> dict:
        out = {k: v.status for k, v in self.conditions.items()}
        for probe in self.continuity:
            out[f"continuity at {probe.point!r}"] = (
                "discontinuous" if probe.discontinuous else "continuous")
        return out


def probe_points(space: PerturbedSpace, T: SelfMap) -> list[float]:
    pts = [b for b in T.thresholds() if space.lo < b < space.hi]
    return pts or [(space.lo + space.hi) / 2]


def classify(space, T, phi=None, lam: float | None = None, samples: SampleSet | None = None,
             tol: float = DEFAULT_TOL, points: Sequence[float] | None = None,
             pairs: Sequence | None = None) -> Classification:
    """Run every verification that the supplied phi / lambda make applicable."""
    if phi is None and lam is None:
        raise ParameterError("classify needs a comparison function, a constant, or both")
    if pairs is None:
        pairs = samples.pairs if samples is not None else ()
    result = Classification()
    if phi is not None:
        result.conditions["phi-perturbed"] = verify_phi_contraction(space, T, phi, pairs, tol)
    if lam is not None:
        if 0 <= lam < 0.5:
            result.conditions["kannan-perturbed"] = verify_kannan_perturbed(space, T, lam, pairs, tol)
            result.conditions["kannan-exact"] = verify_kannan_exact(space, T, lam, pairs, tol)
        if 0 < lam < 1:
            result.conditions["banach-perturbed"] = verify_banach_perturbed(space, T, lam, pairs, tol)
            result.conditions["banach-exact"] = verify_banach_exact(space, T, lam, pairs, tol)
        if not result.conditions.keys() - {"phi-perturbed"}:
            raise ParameterError(f"constant {lam!r} is outside every admissible range")
    for p in points if points is not None else probe_points(space, T):
        result.continuity.append(probe_continuity(space, T, p, tol=tol))
    if samples is not None:
        result.closure = closure_violations(space, T, samples.points)
    return result
