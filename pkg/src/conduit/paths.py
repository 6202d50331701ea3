"""Minimum-weight path DAGs and treaty-shopping route queries."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from functools import cached_property

import numpy as np

from . import kernels
from .graph import NO_ARC, SANCTION, TaxGraph
from .registry import units_to_rate

DEFAULT_ROUTE_CAP = 10_000


class RouteLimitError(RuntimeError):
    pass


def arc_weights(graph) -> np.ndarray:
    """Dense int64 arc-weight matrix of a :class:`TaxGraph` or a raw matrix
    (negative entries mean no arc)."""
    if isinstance(graph, TaxGraph):
        return graph.weights
    w = np.asarray(graph, dtype=np.int64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("arc matrix must be square")
    w = np.where(w < 0, NO_ARC, w)
    np.fill_diagonal(w, NO_ARC)
    if np.any(w == 0):
        raise ValueError("arc weights must be positive")
    return w


@dataclass(frozen=True)
class ShortestPathDag:
    source: int
    dist: tuple[int | None, ...]
    preds: tuple[tuple[int, ...], ...]
    #: reachable vertices by (distance, id)
    order: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.dist)

    @cached_property
    def succs(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for w, ps in enumerate(self.preds):
            for v in ps:
                out[v].append(w)
        return tuple(tuple(s) for s in out)

    def reachable(self, v: int) -> bool:
        return self.dist[v] is not None

    def fewest_hops(self) -> list[int | None]:
        """Fewest arcs over the minimum-weight paths to each vertex."""
        hops: list[int | None] = [None] * self.n
        hops[self.source] = 0
        for v in self.order:
            if v != self.source:
                hops[v] = min(hops[p] for p in self.preds[v]) + 1
        return hops


def dijkstra_dag(graph, source: int, backend: str | None = None) -> ShortestPathDag:
    w = arc_weights(graph)
    if not 0 <= source < w.shape[0]:
        raise IndexError(f"source {source} out of range")
    dist, order, ptr, idx = kernels.get(backend).sssp(w, source)
    return ShortestPathDag(
        source=source,
        dist=tuple(None if d < 0 else int(d) for d in dist),
        preds=tuple(tuple(int(x) for x in idx[ptr[t]:ptr[t + 1]]) for t in range(len(dist))),
        order=tuple(int(v) for v in order),
    )


def decode_cost(total_units: int, hops: int) -> Decimal:
    """Tax-rate part of a sanctioned path weight."""
    return units_to_rate(total_units - hops * SANCTION)


def min_cost(graph: TaxGraph, i: int, j: int) -> tuple[Decimal, int] | None:
    """Cheapest total rate from ``i`` to ``j`` and its hop count.

    When tied paths differ in length (possible only with sixth-decimal rates)
    the fewest-hop reading is returned.
    """
    if i == j:
        raise ValueError("degenerate query: source equals destination")
    dag = dijkstra_dag(graph, i)
    if dag.dist[j] is None:
        return None
    hops = dag.fewest_hops()[j]
    return decode_cost(dag.dist[j], hops), hops


@dataclass(frozen=True)
class Route:
    path: tuple[int, ...]
    total_rate: Decimal
    hop_count: int
    direct_rate: Decimal | None
    saving: Decimal | None

    @property
    def weight(self) -> Decimal:
        """Total cost with one sanction unit per hop."""
        return self.total_rate + Decimal(self.hop_count * SANCTION).scaleb(-6)

    def to_dict(self, registry=None, with_weight=False) -> dict:
        path = [registry.code(v) for v in self.path] if registry is not None else list(self.path)
        out = {
            "path": path,
            "total_rate": _fmt(self.total_rate),
            "hops": self.hop_count,
            "direct_rate": _fmt(self.direct_rate),
            "saving": _fmt(self.saving),
        }
        if with_weight:
            out["weight"] = _fmt(self.weight)
        return out


def _fmt(d):
    return None if d is None else format(d, "f")


def best_routes(graph: TaxGraph, i: int, j: int, cap: int = DEFAULT_ROUTE_CAP) -> list[Route]:
    """Every minimum-weight route from ``i`` to ``j``, lexicographic by path."""
    if i == j:
        raise ValueError("degenerate query: source equals destination")
    dag = dijkstra_dag(graph, i)
    if dag.dist[j] is None:
        return []
    count = [0] * dag.n
    count[i] = 1
    for v in dag.order:
        if v != i:
            count[v] = sum(count[p] for p in dag.preds[v])
    if count[j] > cap:
        raise RouteLimitError(
            f"{count[j]} tied minimum-weight routes exceed the cap of {cap}; raise the cap"
        )
    paths: list[tuple[int, ...]] = []

    def walk(v, suffix):
        if v == i:
            paths.append((i, *suffix))
            return
        for p in dag.preds[v]:
            walk(p, (v, *suffix))

    walk(j, ())
    paths.sort()
    rates = graph.rates
    direct = None if rates[i, j] == NO_ARC else units_to_rate(int(rates[i, j]))
    out = []
    for path in paths:
        total = units_to_rate(sum(int(rates[a, b]) for a, b in zip(path, path[1:])))
        out.append(Route(path, total, len(path) - 1, direct, None if direct is None else direct - total))
    return out
