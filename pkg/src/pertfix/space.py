"""Perturbed metric spaces over a bounded real interval, self-maps, and samples."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import ConfigError, DomainError
from .expr import Formula

SPACE_KEYS = {"domain", "D", "P", "label"}
MAP_KEYS = {"T", "label"}

# half-width of the adversarial bracket around a branch point, relative to hi - lo
BOUNDARY_OFFSET = 1e-6


@dataclass(frozen=True)
class PerturbedSpace:
    """``(X, D, P)`` with ``X = [lo, hi]``; ``d = D - P`` is the exact metric."""

    lo: float
    hi: float
    D: Formula
    P: Formula
    label: str = ""

    @property
    def domain(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def perturbed(self, x: float, y: float) -> float:
        return self.D(x, y)

    def perturbation(self, x: float, y: float) -> float:
        return self.P(x, y)

    def exact(self, x: float, y: float) -> float:
        return self.D(x, y) - self.P(x, y)

    def thresholds(self) -> list[float]:
        return sorted(set(self.D.thresholds()) | set(self.P.thresholds()))

    def to_config(self) -> dict:
        return {"domain": [self.lo, self.hi], "D": self.D.source, "P": self.P.source,
                "label": self.label}


@dataclass(frozen=True)
class SelfMap:
    T: Formula
    label: str = ""

    def __call__(self, x: float) -> float:
        return self.T(x)

    def thresholds(self) -> list[float]:
        return self.T.thresholds()

    def to_config(self) -> dict:
        return {"T": self.T.source, "label": self.label}


def _reject_unknown(block: Mapping, allowed: set, where: str):
    unknown = sorted(set(block) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def build_space(config: Mapping) -> PerturbedSpace:
    """Validate a ``space`` config block (``domain``, ``D``, ``P``, ``label``)."""
    _reject_unknown(config, SPACE_KEYS, "space")
    for key in ("domain", "D", "P"):
        if key not in config:
            raise ConfigError(f"space block is missing {key!r}")
    domain = config["domain"]
    if (not isinstance(domain, Sequence) or isinstance(domain, str) or len(domain) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in domain)):
        raise ConfigError(f"domain must be [lo, hi], got {domain!r}")
    lo, hi = float(domain[0]), float(domain[1])
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError(f"domain bounds must be finite, got [{lo}, {hi}]")
    if lo >= hi:
        raise DomainError(f"domain requires lo < hi, got [{lo}, {hi}]")
    D = Formula.compile(config["D"], ("x", "y"))
    P = Formula.compile(config["P"], ("x", "y"))
    return PerturbedSpace(lo, hi, D, P, str(config.get("label", "")))


def build_map(config: Mapping) -> SelfMap:
    _reject_unknown(config, MAP_KEYS, "map")
    if "T" not in config:
        raise ConfigError("map block is missing 'T'")
    return SelfMap(Formula.compile(config["T"], ("x",)), str(config.get("label", "")))


def exact_distance(space: PerturbedSpace, x: float, y: float) -> float:
    return space.exact(x, y)


def closure_violations(space: PerturbedSpace, T: SelfMap, points: Sequence[float]):
    """Points whose image under ``T`` leaves the domain, as ``(x, T(x))`` pairs."""
    out = []
    for x in points:
        tx = T(x)
        if not space.contains(tx):
            out.append((x, tx))
    return out


@dataclass(frozen=True)
class SampleSet:
    points: tuple[float, ...]
    pairs: tuple[tuple[float, float], ...]
    triples: tuple[tuple[float, float, float], ...]
    seed: int
    strategy: str
    anchors: tuple[float, ...] = field(default=(), compare=False)


def adversarial_points(space: PerturbedSpace, T: SelfMap | None = None) -> list[float]:
    """Domain endpoints plus each branch threshold bracketed by +-delta."""
    delta = BOUNDARY_OFFSET * (space.hi - space.lo)
    thresholds = set(space.thresholds())
    if T is not None:
        thresholds |= set(T.thresholds())
    pts = {space.lo, space.hi}
    for b in thresholds:
        pts.update(p for p in (b - delta, b, b + delta) if space.contains(p))
    return sorted(pts)


def _grid(lo: float, hi: float, n: int) -> list[float]:
    n = max(n, 2)
    pts = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    pts[-1] = hi
    return pts


def _draw(rng: random.Random, pool: list[float], anchors: list[float], count: int, arity: int):
    """All anchor tuples first (capped at ``count``), then distinct random pool tuples."""
    chosen = []
    seen = set()

    def anchor_tuples(prefix):
        if len(prefix) == arity:
            yield tuple(prefix)
            return
        for a in anchors:
            yield from anchor_tuples(prefix + [a])

    for tup in anchor_tuples([]):
        if len(chosen) >= count:
            break
        seen.add(tup)
        chosen.append(tup)
    total = len(pool) ** arity
    need = count - len(chosen)
    if need <= 0:
        return chosen
    if need >= total - len(seen):
        indices = range(total)
    else:
        indices = rng.sample(range(total), min(total, need + len(seen)))
    for idx in indices:
        tup = []
        for _ in range(arity):
            idx, r = divmod(idx, len(pool))
            tup.append(pool[r])
        tup = tuple(tup)
        if tup in seen:
            continue
        seen.add(tup)
        chosen.append(tup)
        if len(chosen) >= count:
            break
    return chosen


def sample_points(
    space: PerturbedSpace,
    counts: tuple[int, int, int] = (64, 4096, 4096),
    seed: int = 42,
    T: SelfMap | None = None,
) -> SampleSet:
    """Deterministic sample pool: grid + seeded uniform + branch-adjacent points.

    Pairs and triples start with every combination of the adversarial anchors
    (endpoints and branch brackets) and are filled up with distinct random
    combinations of the whole pool.
    """
    n_points, n_pairs, n_triples = counts
    if min(counts) < 1:
        raise ConfigError(f"sample counts must be >= 1, got {counts}")
    rng = random.Random(seed)
    grid = _grid(space.lo, space.hi, n_points)
    uniform = [rng.uniform(space.lo, space.hi) for _ in range(n_points)]
    anchors = adversarial_points(space, T)
    pool = sorted(set(grid) | set(uniform) | set(anchors))
    pairs = _draw(rng, pool, anchors, n_pairs, 2)
    triples = _draw(rng, pool, anchors, n_triples, 3)
    strategy = (
        f"grid({max(n_points, 2)})+uniform({n_points})+adversarial({len(anchors)}), "
        f"delta={BOUNDARY_OFFSET}*(hi-lo)"
    )
    return SampleSet(tuple(pool), tuple(pairs), tuple(triples), seed, strategy, tuple(anchors))
