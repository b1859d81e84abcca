"""blockenc: desk-scale classical simulator for block-encoded quantum linear algebra."""

from .capacity import max_qubits
from .encoding import BlockEncoding, CostLedger
from .kptree import KPTree

__all__ = ["BlockEncoding", "CostLedger", "KPTree", "max_qubits"]
