"""Run configuration: JSON schema, defaults, and loading."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import jsonschema

from .comparison import ComparisonCandidate
from .errors import ConfigError
from .solver import DEFAULT_EPSILON, DEFAULT_HORIZON, DEFAULT_MAX_ITERATIONS, MODES
from .space import PerturbedSpace, SelfMap, build_map, build_space

SEED_ENV = "PERTFIX_SEED"
DEFAULT_SEED = 42
DEFAULT_COUNTS = (64, 4096, 4096)

_NUMBER = {"type": "number"}
_COUNT = {"type": "integer", "minimum": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["space", "map"],
    "properties": {
        "space": {
            "type": "object",
            "additionalProperties": False,
            "required": ["domain", "D", "P"],
            "properties": {
                "domain": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
                "D": {"type": "string"},
                "P": {"type": "string"},
                "label": {"type": "string"},
            },
        },
        "map": {
            "type": "object",
            "additionalProperties": False,
            "required": ["T"],
            "properties": {"T": {"type": "string"}, "label": {"type": "string"}},
        },
        "phi": {"type": "string"},
        "lambda": _NUMBER,
        "sampling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"points": _COUNT, "pairs": _COUNT, "triples": _COUNT,
                           "seed": {"type": "integer"}},
        },
        "solve": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "x0": {"oneOf": [_NUMBER, {"type": "array", "items": _NUMBER, "minItems": 1}]},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "max_iterations": _COUNT,
                "mode": {"enum": ["auto", *MODES]},
                "horizon": _COUNT,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"report": {"type": "string"}, "trace": {"type": "string"}},
        },
        "focus_pairs": {
            "type": "array",
            "items": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
        },
    },
}


@dataclass
class RunConfig:
    space: PerturbedSpace
    T: SelfMap
    phi: ComparisonCandidate | None
    lam: float | None
    counts: tuple[int, int, int]
    seed: int
    x0: list[float]
    epsilon: float
    max_iterations: int
    mode: str
    horizon: int
    report_path: str | None = None
    trace_path: str | None = None
    focus_pairs: list[tuple[float, float]] = field(default_factory=list)
    source: dict = field(default_factory=dict)

    def resolved_mode(self) -> str:
        if self.mode != "auto":
            return self.mode
        if self.phi is not None:
            return "phi"
        if self.lam is not None and 0 <= self.lam < 0.5:
            return "kannan"
        if self.lam is not None and 0 < self.lam < 1:
            return "banach"
        return "residual-only"

    def echo(self) -> dict:
        """Effective settings with every default filled in."""
        return {
            "space": self.space.to_config(),
            "map": self.T.to_config(),
            "phi": None if self.phi is None else self.phi.phi.source,
            "lambda": self.lam,
            "sampling": {"points": self.counts[0], "pairs": self.counts[1],
                         "triples": self.counts[2], "seed": self.seed},
            "solve": {"x0": list(self.x0), "epsilon": self.epsilon,
                      "max_iterations": self.max_iterations, "mode": self.mode,
                      "resolved_mode": self.resolved_mode(), "horizon": self.horizon},
            "focus_pairs": [list(p) for p in self.focus_pairs],
        }


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def parse_config(data: dict, seed: int | None = None) -> RunConfig:
    """Validate against ``SCHEMA`` before any expression is compiled or evaluated."""
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "config"
        raise ConfigError(f"{where}: {exc.message}") from None
    space = build_space(data["space"])
    T = build_map(data["map"])
    phi = ComparisonCandidate.from_source(data["phi"]) if "phi" in data else None
    sampling = data.get("sampling", {})
    counts = (sampling.get("points", DEFAULT_COUNTS[0]), sampling.get("pairs", DEFAULT_COUNTS[1]),
              sampling.get("triples", DEFAULT_COUNTS[2]))
    if seed is None:
        seed = sampling["seed"] if "seed" in sampling else default_seed()
    solve = data.get("solve", {})
    x0 = solve.get("x0", [space.lo, (space.lo + space.hi) / 2, space.hi])
    x0 = [float(v) for v in (x0 if isinstance(x0, list) else [x0])]
    output = data.get("output", {})
    lam = data.get("lambda")
    return RunConfig(
        space=space, T=T, phi=phi,
        lam=None if lam is None else float(lam),
        counts=counts, seed=int(seed), x0=x0,
        epsilon=float(solve.get("epsilon", DEFAULT_EPSILON)),
        max_iterations=solve.get("max_iterations", DEFAULT_MAX_ITERATIONS),
        mode=solve.get("mode", "auto"),
        horizon=solve.get("horizon", DEFAULT_HORIZON),
        report_path=output.get("report"), trace_path=output.get("trace"),
        focus_pairs=[(float(a), float(b)) for a, b in data.get("focus_pairs", [])],
        source=data,
    )


def load_config(path, seed: int | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_config(data, seed)
