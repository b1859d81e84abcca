"""Symbolic cost accounting.

Counts queries to named input oracles and elementary gates.  Costs are charged
from the composition lemmas' big-O expressions with all constants set to 1, so
the ledger is a scaling instrument, not a gate-exact compiler.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping


def _freeze(queries: Mapping[str, float]) -> Mapping[str, float]:
    return MappingProxyType({k: float(v) for k, v in sorted(queries.items()) if v != 0.0})


@dataclass(frozen=True)
class CostLedger:
    """Per-oracle query counts plus an elementary-gate counter."""

    queries: Mapping[str, float] = field(default_factory=dict)
    gates: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "queries", _freeze(self.queries))
        if self.gates < 0 or any(v < 0 for v in self.queries.values()):
            raise ValueError("ledger counts must be non-negative")

    def __add__(self, other: "CostLedger") -> "CostLedger":
        out = dict(self.queries)
        for k, v in other.queries.items():
            out[k] = out.get(k, 0.0) + v
        return CostLedger(out, self.gates + other.gates)

    def scaled(self, factor: float) -> "CostLedger":
        """Ledger for `factor` sequential uses of this circuit."""
        if factor < 0:
            raise ValueError("scale factor must be non-negative")
        return CostLedger({k: v * factor for k, v in self.queries.items()}, self.gates * factor)

    def with_gates(self, extra: float) -> "CostLedger":
        return CostLedger(dict(self.queries), self.gates + extra)

    def total_queries(self) -> float:
        return float(sum(self.queries.values()))

    def to_dict(self) -> dict:
        return {"queries": dict(self.queries), "gates": self.gates}

    @staticmethod
    def single(name: str, count: float = 1.0, gates: float = 0.0) -> "CostLedger":
        return CostLedger({name: count}, gates)
