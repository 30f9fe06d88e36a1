"""
Picard iteration ``x_{n+1} = T x_n`` with a-priori error envelopes.

Per-step envelopes on ``D(x_n, x_{n+1})``:

* kannan: ``gamma**n * D0`` with ``gamma = lam / (1 - lam)``
* banach: ``lam**n * D0``
* phi:    ``phi^n(D0)``

Since ``P >= 0`` the same envelopes bound the exact step ``d(x_n, x_{n+1})``,
and summing them from ``n`` to infinity bounds ``d(x_n, x*)`` (the limit
``p -> inf`` of the bound on ``d(x_n, x_{n+p})``).  That sum is the
``bound`` column of the trace, and iteration stops once it drops below
``epsilon``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

from .comparison import as_candidate
from .errors import DomainError, DomainEscapeError, EvaluationError, ParameterError, ProbeError
from .space import PerturbedSpace, SelfMap

MODES = ("phi", "kannan", "banach", "residual-only")
DEFAULT_EPSILON = 1e-8
DEFAULT_MAX_ITERATIONS = 10000
DEFAULT_HORIZON = 200
ZERO_STREAK = 3
D_RESIDUAL_TOL = 1e-9


def _kannan_gamma(lam: float) -> float:
    if not 0 <= lam < 0.5:
        raise ParameterError(f"Kannan constant must lie in [0, 1/2), got {lam!r}")
    return lam / (1 - lam)


def apriori_bound_kannan(lam: float, D0: float, n: int) -> float:
    """``gamma**n / (1 - gamma) * D0``, a bound on ``d(x_n, x*)``.

    Summing the step envelope gives ``d(x_n, x_{n+p}) <= gamma**n (1 - gamma**p) / (1 - gamma) * D0``;
    letting ``p`` grow drops the ``gamma**p`` term.
    """
    gamma = _kannan_gamma(lam)
    return gamma**n / (1 - gamma) * D0


def apriori_bound_banach(lam: float, D0: float, n: int) -> float:
    if not 0 < lam < 1:
        raise ParameterError(f"Banach constant must lie in (0, 1), got {lam!r}")
    return lam**n / (1 - lam) * D0


class PhiSeries:
    """Lazily computed iterates ``phi^k(D0)``, ``k = 0, 1, ...``."""

    def __init__(self, phi, D0: float):
        self.phi = phi
        self.terms = [float(D0)]

    def __getitem__(self, k: int) -> float:
        while len(self.terms) <= k:
            self.terms.append(self.phi(self.terms[-1]))
        return self.terms[k]

    def tail(self, n: int, horizon: int) -> tuple[float, bool]:
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        total = math.fsum(self[k] for k in range(n, n + horizon))
        last_index = n + horizon - 1
        if last_index == 0:
            return total, self[0] != 0
        last, prev = self[last_index], self[last_index - 1]
        if prev == 0:
            return total, False
        rho = last / prev
        if rho >= 1:
            return total, True
        return total + last * rho / (1 - rho), False


def apriori_bound_phi(phi, D0: float, n: int, horizon: int = DEFAULT_HORIZON) -> tuple[float, bool]:
    """Truncated tail ``sum_{k=n}^{n+K-1} phi^k(D0)`` plus a geometric remainder.

    Returns ``(bound, truncated)``; ``truncated`` is set when the last observed
    ratio is ``>= 1`` and the remainder could not be estimated.
    """
    return PhiSeries(as_candidate(phi), D0).tail(n, horizon)


@dataclass(frozen=True)
class SolverParams:
    x0: float
    mode: str = "residual-only"
    lam: float | None = None
    phi: object = None
    epsilon: float = DEFAULT_EPSILON
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be >= 1")
        if self.mode == "kannan":
            if self.lam is None:
                raise ParameterError("kannan mode needs a constant")
            _kannan_gamma(self.lam)
        if self.mode == "banach":
            if self.lam is None or not 0 < self.lam < 1:
                raise ParameterError(f"banach mode needs a constant in (0, 1), got {self.lam!r}")
        if self.mode == "phi":
            if self.phi is None:
                raise ParameterError("phi mode needs a comparison function")
            object.__setattr__(self, "phi", as_candidate(self.phi))
            if self.horizon < 1:
                raise ParameterError("horizon must be >= 1")


@dataclass(frozen=True)
class TraceRow:
    n: int
    x: float
    D_step: float
    d_step: float
    bound: float | None


@dataclass
class SolveResult:
    x0: float
    mode: str
    trace: list[TraceRow]
    stopping: str  # bound-met | residual-zero | max-iterations
    x_star: float
    residual_D: float
    residual_d: float
    D0: float
    epsilon: float
    bound_truncated: bool = False

    @property
    def converged(self) -> bool:
        return self.stopping != "max-iterations" and self.residual_d <= self.epsilon

    @property
    def D_residual_zero(self) -> bool:
        return abs(self.residual_D) <= D_RESIDUAL_TOL

    def to_dict(self):
        return {
            "x0": self.x0, "mode": self.mode, "stopping": self.stopping,
            "iterations": len(self.trace), "x_star": self.x_star, "D0": self.D0,
            "residual": {"D": self.residual_D, "d": self.residual_d,
                         "D_zero": self.D_residual_zero},
            "converged": self.converged,
            "bound_truncated": self.bound_truncated,
            "last_bound": self.trace[-1].bound if self.trace else None,
        }


def residual(space: PerturbedSpace, T: SelfMap, x: float) -> tuple[float, float]:
    """``(D(x, Tx), d(x, Tx))``."""
    tx = T(x)
    return space.perturbed(x, tx), space.exact(x, tx)


def step_envelope(params: SolverParams, D0: float, n: int, series: PhiSeries | None = None):
    """Upper envelope on ``D(x_n, x_{n+1})`` for the chosen mode, or ``None``."""
    if params.mode == "kannan":
        return _kannan_gamma(params.lam) ** n * D0
    if params.mode == "banach":
        return params.lam**n * D0
    if params.mode == "phi":
        return (series or PhiSeries(params.phi, D0))[n]
    return None


def iterate(space: PerturbedSpace, T: SelfMap, params: SolverParams) -> SolveResult:
    x = float(params.x0)
    if not space.contains(x):
        raise DomainError(f"x0={x!r} lies outside [{space.lo}, {space.hi}]")
    trace = []
    series = None
    D0 = 0.0
    zeros = 0
    truncated = False
    stopping = "max-iterations"
    for n in range(params.max_iterations):
        tx = T(x)
        if not space.contains(tx):
            raise DomainEscapeError(x, tx, space.lo, space.hi)
        D_step = space.perturbed(x, tx)
        d_step = space.exact(x, tx)
        if n == 0:
            D0 = D_step
            if params.mode == "phi":
                series = PhiSeries(params.phi, D0)
        if params.mode == "kannan":
            bound = apriori_bound_kannan(params.lam, D0, n)
        elif params.mode == "banach":
            bound = apriori_bound_banach(params.lam, D0, n)
        elif params.mode == "phi":
            bound, trunc = series.tail(n, params.horizon)
            truncated = truncated or trunc
        else:
            bound = None
        trace.append(TraceRow(n, x, D_step, d_step, bound))
        zeros = zeros + 1 if d_step == 0 else 0
        x = tx
        if bound is not None and bound < params.epsilon:
            stopping = "bound-met"
            break
        if zeros >= ZERO_STREAK:
            stopping = "residual-zero"
            break
    rD, rd = residual(space, T, x)
    return SolveResult(float(params.x0), params.mode, trace, stopping, x, rD, rd, D0,
                       params.epsilon, truncated)


@dataclass
class UniquenessVerdict:
    consistent: bool
    runs: list[tuple[float, float, bool]] = field(default_factory=list)  # start, x*, converged
    limits: list[float] = field(default_factory=list)

    def to_dict(self):
        return {
            "verdict": "consistent" if self.consistent else "inconsistent",
            "runs": [{"x0": s, "x_star": x, "converged": c} for s, x, c in self.runs],
            "distinct_limits": list(self.limits),
        }


def uniqueness_probe(space: PerturbedSpace, T: SelfMap, starts: Sequence[float],
                     params: SolverParams) -> UniquenessVerdict:
    """Solve from each start; consistent iff every run converges to one limit (within 10*eps)."""
    if len(starts) < 2:
        raise ValueError("uniqueness probe needs at least two starts")
    runs = []
    for s in starts:
        try:
            r = iterate(space, T, _with_start(params, s))
        except (DomainError, EvaluationError) as exc:
            raise ProbeError(s, exc) from exc
        runs.append((float(s), r.x_star, r.converged))
    limits = []
    tol = 10 * params.epsilon
    for _, x, _ in runs:
        if not any(abs(space.exact(x, c)) <= tol for c in limits):
            limits.append(x)
    consistent = all(c for _, _, c in runs) and len(limits) == 1
    return UniquenessVerdict(consistent, runs, limits)


def _with_start(params: SolverParams, x0: float) -> SolverParams:
    return SolverParams(x0, params.mode, params.lam, params.phi, params.epsilon,
                        params.max_iterations, params.horizon)


def _fmt(v) -> str:
    return "" if v is None else format(v, ".17g")


def write_trace(result: SolveResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "x_n", "D_step", "d_step", "bound"])
        for row in result.trace:
            w.writerow([row.n, _fmt(row.x), _fmt(row.D_step), _fmt(row.d_step), _fmt(row.bound)])
