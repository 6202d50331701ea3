"""Directed and undirected withholding-tax graphs with exact fixed-point weights.

Arc weights are integers in micro-percent: ``rate * 10**6 + 1``.  The trailing
unit is the per-hop sanction; it makes every weight positive and breaks ties
toward fewer intermediate jurisdictions.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from .registry import (
    NO_RATE,
    SCALE,
    IncomeType,
    RateMatrix,
    rate_to_units,
    units_to_rate,
)

SANCTION = 1
NO_ARC = -1

#: Default sweep ladder, highest first.
DEFAULT_THRESHOLDS = (35, 30, 25, 20, 15, 10, 5, 0)


@dataclass(frozen=True, order=True)
class Weight:
    """An exact arc or path weight in micro-percent units."""

    units: int

    @classmethod
    def for_rate(cls, rate) -> Weight:
        return cls(rate_to_units(rate) + SANCTION)

    @property
    def rate(self) -> Decimal:
        """Rate of a single sanctioned arc (sanction removed)."""
        return units_to_rate(self.units - SANCTION)

    def __int__(self):
        return self.units


def threshold_units(threshold) -> int:
    """Largest rate (micro-percent) kept by ``threshold``.

    Floors sub-unit thresholds, which is exact because rates are whole units.
    """
    value = Decimal(str(threshold))
    if not value.is_finite() or value < 0:
        raise ValueError(f"threshold must be a non-negative number, got {threshold}")
    return int((value * SCALE).to_integral_value(rounding="ROUND_FLOOR"))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.int64, copy=True)
    a.setflags(write=False)
    return a


class TaxGraph:
    """Weighted digraph for one income type.

    ``rates[i, j]`` is the base rate in micro-percent or :data:`NO_ARC`;
    ``weights`` adds the sanction to every present arc.  ``threshold`` records
    the filter that produced the graph (``None`` when unfiltered).
    """

    def __init__(self, rates, income_type=None, threshold=None):
        r = _readonly(rates)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError("arc matrix must be square")
        if np.any(np.diagonal(r) != NO_ARC):
            r = r.copy()
            np.fill_diagonal(r, NO_ARC)
            r.setflags(write=False)
        if np.any(r < NO_ARC):
            raise ValueError("negative rate")
        self.rates = r
        w = np.where(r == NO_ARC, NO_ARC, r + SANCTION)
        w.setflags(write=False)
        self.weights = w
        self.income_type = IncomeType.parse(income_type) if income_type is not None else None
        self.threshold = None if threshold is None else Decimal(str(threshold))

    @property
    def n(self) -> int:
        return self.rates.shape[0]

    @property
    def is_filtered(self) -> bool:
        return self.threshold is not None

    def arc(self, i: int, j: int) -> Weight | None:
        w = int(self.weights[i, j])
        return None if w == NO_ARC else Weight(w)

    def has_arc(self, i: int, j: int) -> bool:
        return bool(self.rates[i, j] != NO_ARC)

    def arcs(self):
        """Present arcs as ``(i, j, rate_units)`` in row-major order."""
        src, dst = np.nonzero(self.rates != NO_ARC)
        return [(int(i), int(j), int(self.rates[i, j])) for i, j in zip(src, dst)]

    def arc_count(self) -> int:
        return int(np.count_nonzero(self.rates != NO_ARC))

    def __eq__(self, other):
        if not isinstance(other, TaxGraph):
            return NotImplemented
        return (
            np.array_equal(self.rates, other.rates)
            and self.income_type == other.income_type
            and self.threshold == other.threshold
        )

    def __repr__(self):
        t = "" if self.threshold is None else f", threshold={self.threshold}"
        return f"TaxGraph(n={self.n}, arcs={self.arc_count()}{t})"


class UndirectedTaxGraph:
    """Symmetric projection: edge ``{i, j}`` carries the higher of the two rates."""

    def __init__(self, rates, income_type=None, threshold=None):
        r = _readonly(rates)
        if not np.array_equal(r, r.T):
            raise ValueError("undirected edge matrix must be symmetric")
        if np.any(np.diagonal(r) != NO_ARC):
            r = r.copy()
            np.fill_diagonal(r, NO_ARC)
            r.setflags(write=False)
        self.rates = r
        self.income_type = IncomeType.parse(income_type) if income_type is not None else None
        self.threshold = None if threshold is None else Decimal(str(threshold))

    @property
    def n(self) -> int:
        return self.rates.shape[0]

    def edge_rate(self, i: int, j: int) -> Decimal | None:
        u = int(self.rates[i, j])
        return None if u == NO_ARC else units_to_rate(u)

    def edges(self):
        """``(i, j, rate_units)`` with ``i < j``, lexicographic."""
        iu, ju = np.nonzero(np.triu(self.rates != NO_ARC, 1))
        return [(int(i), int(j), int(self.rates[i, j])) for i, j in zip(iu, ju)]

    def edge_count(self) -> int:
        return int(np.count_nonzero(np.triu(self.rates != NO_ARC, 1)))

    def __eq__(self, other):
        if not isinstance(other, UndirectedTaxGraph):
            return NotImplemented
        return (
            np.array_equal(self.rates, other.rates)
            and self.income_type == other.income_type
            and self.threshold == other.threshold
        )

    def __repr__(self):
        t = "" if self.threshold is None else f", threshold={self.threshold}"
        return f"UndirectedTaxGraph(n={self.n}, edges={self.edge_count()}{t})"


def build_directed(matrix: RateMatrix) -> TaxGraph:
    """Complete digraph from a validated rate matrix."""
    u = matrix.units
    off = ~np.eye(matrix.n, dtype=bool)
    if np.any(u[off] == NO_RATE):
        raise ValueError("rate matrix is incomplete; validate it first")
    return TaxGraph(u, matrix.income_type)


def apply_threshold(graph: TaxGraph, threshold) -> TaxGraph:
    """Drop arcs whose base rate exceeds ``threshold``.  Equal rates stay."""
    t = threshold_units(threshold)
    r = np.where(graph.rates > t, NO_ARC, graph.rates)
    if graph.threshold is not None and graph.threshold < Decimal(str(threshold)):
        threshold = graph.threshold
    return TaxGraph(r, graph.income_type, threshold)


def to_undirected(graph: TaxGraph) -> UndirectedTaxGraph:
    """Max-rate projection of an unfiltered digraph."""
    if graph.is_filtered or graph.arc_count() != graph.n * (graph.n - 1):
        raise ValueError("undirected projection needs the complete, unfiltered digraph")
    r = np.maximum(graph.rates, graph.rates.T)
    return UndirectedTaxGraph(r, graph.income_type)


def apply_threshold_undirected(graph: UndirectedTaxGraph, threshold) -> UndirectedTaxGraph:
    t = threshold_units(threshold)
    r = np.where(graph.rates > t, NO_ARC, graph.rates)
    if graph.threshold is not None and graph.threshold < Decimal(str(threshold)):
        threshold = graph.threshold
    return UndirectedTaxGraph(r, graph.income_type, threshold)


def isolated_vertices(graph: TaxGraph | UndirectedTaxGraph) -> list[int]:
    """Vertices with no incident arc or edge, ascending."""
    present = graph.rates != NO_ARC
    touched = present.any(axis=0) | present.any(axis=1)
    return [int(v) for v in np.flatnonzero(~touched)]


def normalize_thresholds(thresholds) -> list[Decimal]:
    """Deduplicate and sort descending.  Accepts numbers, strings or a
    comma-separated string."""
    if isinstance(thresholds, str):
        thresholds = [t for t in thresholds.split(",") if t.strip()]
    out = sorted({Decimal(str(t).strip()) for t in thresholds}, reverse=True)
    if not out:
        raise ValueError("at least one threshold is required")
    if out[-1] < 0:
        raise ValueError("thresholds must be non-negative")
    return [t.normalize() if t != t.to_integral_value() else t.quantize(Decimal(1)) for t in out]
