"""Load centrality (equal split at each fork) and Freeman betweenness."""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal

import numpy as np

from . import kernels
from .graph import TaxGraph, apply_threshold, build_directed, normalize_thresholds
from .paths import ShortestPathDag, arc_weights
from .registry import JurisdictionRegistry, RateMatrix


class Kind(str, enum.Enum):
    LOAD = "load"
    BETWEENNESS = "betweenness"


@dataclass(frozen=True)
class CentralityScores:
    kind: Kind
    raw: np.ndarray
    normalized: np.ndarray
    income_type: object = None
    threshold: Decimal | None = None

    @property
    def n(self) -> int:
        return len(self.raw)


@dataclass(frozen=True)
class RankingTable:
    rows: list[tuple[str, float, float]] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def codes(self) -> list[str]:
        return [c for c, _, _ in self.rows]


def scan_threads() -> int:
    """Worker count for per-source scans, capped by ``CONDUIT_SCAN_THREADS``."""
    cap = os.environ.get("CONDUIT_SCAN_THREADS")
    default = os.cpu_count() or 1
    if cap:
        try:
            return max(1, min(int(cap), default))
        except ValueError:
            pass
    return default


def pair_load(dag: ShortestPathDag, target: int) -> list[float]:
    """Flow through each vertex for one packet from ``dag.source`` to ``target``.

    The packet leaves the source with weight 1 and, at each vertex, divides
    equally among the successors that still lie on a minimum-weight path to
    the target.
    """
    n = dag.n
    flow = [0.0] * n
    if dag.dist[target] is None or target == dag.source:
        return flow
    on_path = [False] * n
    on_path[target] = True
    stack = [target]
    while stack:
        x = stack.pop()
        for p in dag.preds[x]:
            if not on_path[p]:
                on_path[p] = True
                stack.append(p)
    flow[dag.source] = 1.0
    for v in dag.order:
        if v == target or not on_path[v]:
            continue
        nxt = [x for x in dag.succs[v] if on_path[x]]
        share = flow[v] / len(nxt)
        for x in nxt:
            flow[x] += share
    return flow


def _normalize(raw: np.ndarray) -> np.ndarray:
    n = len(raw)
    if n < 3:
        return np.zeros(n)
    return raw / ((n - 1) * (n - 2))


def _accumulate(kernel, w: np.ndarray, threads: int | None) -> np.ndarray:
    n = w.shape[0]
    threads = scan_threads() if threads is None else max(1, threads)
    if threads == 1 or n < 32:
        parts = [kernel(w, s) for s in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda s: kernel(w, s), range(n)))
    total = np.zeros(n)
    # fixed source order keeps the sum schedule-independent
    for p in parts:
        total += p
    return total


def _scores(kind, graph, kernel, threads):
    w = arc_weights(graph)
    raw = _accumulate(kernel, w, threads)
    meta = {}
    if isinstance(graph, TaxGraph):
        meta = {"income_type": graph.income_type, "threshold": graph.threshold}
    return CentralityScores(kind, raw, _normalize(raw), **meta)


def load_centrality(graph, *, backend: str | None = None, threads: int | None = None) -> CentralityScores:
    """Sum of pair flows over all ordered reachable pairs, endpoints excluded."""
    return _scores(Kind.LOAD, graph, kernels.get(backend).source_load, threads)


def betweenness_centrality(graph, *, backend: str | None = None, threads: int | None = None) -> CentralityScores:
    """Freeman betweenness over the exact tie DAG (Brandes accumulation)."""
    return _scores(Kind.BETWEENNESS, graph, kernels.get(backend).source_dependency, threads)


def centrality(graph, kind=Kind.LOAD, **kw) -> CentralityScores:
    kind = Kind(kind)
    fn = load_centrality if kind is Kind.LOAD else betweenness_centrality
    return fn(graph, **kw)


def sweep_centrality(matrix: RateMatrix, thresholds, kind=Kind.LOAD, **kw):
    """``[(threshold, scores), ...]`` over the thresholded digraphs, highest threshold first."""
    base = build_directed(matrix)
    return [
        (t, centrality(apply_threshold(base, t), kind, **kw))
        for t in normalize_thresholds(thresholds)
    ]


def rank(scores: CentralityScores, registry: JurisdictionRegistry, top_k: int | None = None) -> RankingTable:
    """Descending by normalized score; ties broken by code."""
    if scores.n != registry.n:
        raise ValueError("scores and registry sizes differ")
    rows = sorted(
        ((registry.code(v), float(scores.raw[v]), float(scores.normalized[v])) for v in range(scores.n)),
        # rounding keeps float noise from splitting genuine ties
        key=lambda r: (-round(r[2], 12), r[0]),
    )
    if top_k is not None:
        rows = rows[:top_k]
    return RankingTable(rows)
