"""Built-in problem instances: the two worked examples plus controls."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from .errors import UnknownEntryError

_SPACE = {"domain": [-10.0, 10.0], "D": "abs(x-y)+x^2*y^2", "P": "x^2*y^2",
          "label": "D(x,y) = |x-y| + x^2 y^2, P(x,y) = x^2 y^2"}


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    description: str
    config: dict
    condition: str  # condition checked by `verify` when none is requested
    expected: dict
    lambda_range: tuple[float, float] | None = None
    notes: tuple[str, ...] = field(default=())

    def to_config(self) -> dict:
        """Run-config form; feeding it back through ``--config`` reproduces the run."""
        return copy.deepcopy(self.config)


_ENTRIES = [
    CatalogEntry(
        id="jleli-phi",
        description="branch map x/3 (x >= 1), 0 (x < 1) with phi(t) = t/3",
        config={
            "space": dict(_SPACE),
            "map": {"T": "if(x>=1, x/3, 0)", "label": "T(x) = x/3 if x >= 1 else 0"},
            "phi": "t/3",
            "lambda": 4 / 9,
            "solve": {"x0": [-5.0, 0.5, 2.0, 9.0], "mode": "phi"},
            "focus_pairs": [[0.0, 3.0], [3.0, 6.0], [0.5, 1.0]],
        },
        condition="phi-perturbed",
        expected={
            "holds": ["banach-perturbed"],
            "fails": ["phi-perturbed"],
            "axioms": "pass",
            "fixed_point": 0.0,
            "discontinuities": [1.0],
            "phi_audit": "pass",
        },
        notes=(
            "phi(t) = t/3 fails for 0 < x < 1 <= y < 1/sqrt(x): e.g. (0.5, 1) gives "
            "D(T0.5, T1) = 1/3 > phi(D(0.5, 1)) = 1/4",
            "the sharp Banach constant is 4/9, attained at (0.5, 1); phi(t) = 4t/9 holds",
            "pair (0, 3) is tight: D(T0, T3) = phi(D(0, 3)) = 1",
        ),
    ),
    CatalogEntry(
        id="kannan-step",
        description="step map 0 (x < 2), 1 (x >= 2); perturbed-Kannan, not exact-Kannan",
        config={
            "space": dict(_SPACE),
            "map": {"T": "if(x>=2, 1, 0)", "label": "T(x) = 1 if x >= 2 else 0"},
            "lambda": 0.45,
            "solve": {"x0": [-3.0, 1.9, 2.0, 5.0], "mode": "kannan"},
            "focus_pairs": [[1.0, 2.0], [2.0, 3.0], [0.0, 2.0]],
        },
        condition="kannan-perturbed",
        lambda_range=(0.4, 0.5),
        expected={
            "holds": ["kannan-perturbed"],
            "fails": ["kannan-exact"],
            "axioms": "pass",
            "fixed_point": 0.0,
            "discontinuities": [2.0],
        },
        notes=(
            "for x < 2 <= y the defined D gives D(Tx, Ty) = D(0, 1) = |0 - 1| + 0 = 1, not 2",
            "the sharp perturbed-Kannan constant on the samples is 1/5, attained at (0, 2)",
            "pair (1, 2) certifies the exact-metric failure: d(T1, T2) = 1 > lam * 2",
        ),
    ),
    CatalogEntry(
        id="banach-quarter",
        description="continuous contraction T(x) = x/4 with lambda = 1/4",
        config={
            "space": dict(_SPACE),
            "map": {"T": "x/4", "label": "T(x) = x/4"},
            "lambda": 0.25,
            "solve": {"x0": [-8.0, 0.0, 3.0, 10.0], "mode": "banach"},
        },
        condition="banach-perturbed",
        expected={
            "holds": ["banach-perturbed", "banach-exact"],
            "fails": [],
            "axioms": "pass",
            "fixed_point": 0.0,
            "discontinuities": [],
        },
    ),
    CatalogEntry(
        id="identity-noncontractive",
        description="identity map; every contraction condition fails",
        config={
            "space": dict(_SPACE),
            "map": {"T": "x", "label": "T(x) = x"},
            "phi": "t/3",
            "lambda": 0.45,
            "solve": {"x0": [-5.0, 0.5, 2.0, 9.0], "mode": "residual-only"},
        },
        condition="banach-perturbed",
        expected={
            "holds": [],
            "fails": ["phi-perturbed", "kannan-perturbed", "banach-perturbed",
                      "kannan-exact", "banach-exact"],
            "axioms": "pass",
            "fixed_point": None,
            "discontinuities": [],
        },
    ),
]

CATALOG = {e.id: e for e in _ENTRIES}


def builtin(entry_id: str) -> CatalogEntry:
    try:
        return CATALOG[entry_id]
    except KeyError:
        raise UnknownEntryError(entry_id, list(CATALOG)) from None


def available() -> list[tuple[str, str]]:
    return [(e.id, e.description) for e in _ENTRIES]
