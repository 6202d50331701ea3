"""Weighted modularity and Louvain community detection on undirected tax graphs.

Conventions: ``a`` is symmetric with a zero diagonal, ``2M`` is the sum of
``a`` over ordered pairs, and ``k_i`` is the row sum.  Self-pairs take part in
the modularity sum and contribute only their ``-k_i**2 / 2M`` expectation
term.  During aggregation a super-vertex keeps its internal weight as an
ordered-pair self-affinity so that ``2M`` and every strength are preserved.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal

import numpy as np

from .graph import (
    NO_ARC,
    UndirectedTaxGraph,
    apply_threshold_undirected,
    build_directed,
    isolated_vertices,
    normalize_thresholds,
    to_undirected,
)
from .registry import JurisdictionRegistry, RateMatrix, SCALE

#: Improvements smaller than this are treated as ties (float noise guard).
GAIN_EPS = 1e-12
_MAX_SWEEPS = 10_000


class Mode(str, enum.Enum):
    UNWEIGHTED = "unweighted"
    RATE = "rate"


class EmptyGraphError(ValueError):
    pass


@dataclass(frozen=True)
class AffinityGraph:
    a: np.ndarray
    present: np.ndarray
    mode: Mode = Mode.UNWEIGHTED

    def __post_init__(self):
        a = np.array(self.a, dtype=np.float64, copy=True)
        p = np.array(self.present, dtype=bool, copy=True)
        if a.shape != p.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("affinity matrix must be square")
        np.fill_diagonal(a, 0.0)
        np.fill_diagonal(p, False)
        if not np.array_equal(a, a.T) or not np.array_equal(p, p.T):
            raise ValueError("affinity must be symmetric")
        if np.any(a < 0):
            raise ValueError("affinity weights must be non-negative")
        a[~p] = 0.0
        a.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "present", p)
        object.__setattr__(self, "mode", Mode(self.mode))

    @classmethod
    def from_edges(cls, n, edges, mode=Mode.RATE) -> AffinityGraph:
        """``edges`` is an iterable of ``(i, j)`` or ``(i, j, weight)``."""
        a = np.zeros((n, n))
        p = np.zeros((n, n), dtype=bool)
        for e in edges:
            i, j = e[0], e[1]
            w = e[2] if len(e) > 2 else 1.0
            if i == j:
                raise ValueError("self-loops are not allowed")
            a[i, j] = a[j, i] = w
            p[i, j] = p[j, i] = True
        return cls(a, p, mode)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def two_m(self) -> float:
        return math.fsum(self.a.ravel())

    @property
    def total_weight(self) -> float:
        """``M``: sum over unordered pairs."""
        return self.two_m / 2

    def strength(self, i: int) -> float:
        return math.fsum(self.a[i])

    def neighbors(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.present[i])]

    def isolates(self) -> list[int]:
        return [int(v) for v in np.flatnonzero(~self.present.any(axis=1))]

    def edge_count(self) -> int:
        return int(np.count_nonzero(np.triu(self.present, 1)))


def to_affinity(graph: UndirectedTaxGraph, mode=Mode.UNWEIGHTED) -> AffinityGraph:
    mode = Mode(mode)
    present = graph.rates != NO_ARC
    if not present.any():
        raise EmptyGraphError("empty graph, modularity undefined")
    if mode is Mode.UNWEIGHTED:
        a = present.astype(np.float64)
    else:
        a = np.where(present, graph.rates / SCALE, 0.0)
    aff = AffinityGraph(a, present, mode)
    if aff.two_m <= 0:
        raise EmptyGraphError("all surviving edges carry zero weight, modularity undefined")
    return aff


@dataclass(frozen=True)
class Partition:
    assignment: tuple[int, ...]
    modularity: float
    converged: bool = True
    isolates: tuple[int, ...] = ()

    @property
    def community_count(self) -> int:
        return len(set(self.assignment))

    @property
    def n(self) -> int:
        return len(self.assignment)

    def members(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.community_count)]
        for v, c in enumerate(self.assignment):
            out[c].append(v)
        return out


def dense_labels(assignment) -> tuple[int, ...]:
    """Relabel communities 0, 1, ... in order of first appearance."""
    remap: dict = {}
    return tuple(remap.setdefault(c, len(remap)) for c in assignment)


def modularity(aff: AffinityGraph, partition) -> float:
    """Weighted modularity of ``partition`` (a :class:`Partition` or a label sequence)."""
    labels = partition.assignment if isinstance(partition, Partition) else tuple(partition)
    if len(labels) != aff.n:
        raise ValueError(f"assignment has {len(labels)} entries for {aff.n} vertices")
    two_m = aff.two_m
    if two_m <= 0:
        raise EmptyGraphError("modularity undefined for a graph without weight")
    groups: dict = defaultdict(list)
    for v, c in enumerate(labels):
        groups[c].append(v)
    q = []
    for members in groups.values():
        rows = aff.a[members]
        inside = math.fsum(rows[:, members].ravel())
        tot = math.fsum(rows.ravel())
        q.append(inside / two_m - (tot / two_m) ** 2)
    return math.fsum(q)


class _Level:
    """Sparse weighted graph with self-affinities, one Louvain level."""

    def __init__(self, nbrs: list[dict[int, float]], loops: list[float], two_m: float):
        self.nbrs = nbrs
        self.loops = loops
        self.two_m = two_m
        self.k = [loops[i] + math.fsum(nbrs[i].values()) for i in range(len(nbrs))]

    @classmethod
    def from_affinity(cls, aff: AffinityGraph) -> _Level:
        nbrs = [{j: float(aff.a[i, j]) for j in aff.neighbors(i)} for i in range(aff.n)]
        return cls(nbrs, [0.0] * aff.n, aff.two_m)

    @property
    def n(self):
        return len(self.nbrs)

    def links(self, i: int, comm) -> dict[int, float]:
        """Weight from ``i`` to each neighbouring community (self excluded)."""
        out: dict[int, float] = defaultdict(float)
        for j, w in self.nbrs[i].items():
            out[comm[j]] += w
        return out

    def modularity(self, comm) -> float:
        inside: dict[int, list[float]] = defaultdict(list)
        tot: dict[int, list[float]] = defaultdict(list)
        for i in range(self.n):
            c = comm[i]
            inside[c].append(self.loops[i])
            tot[c].append(self.k[i])
            inside[c].extend(w for j, w in self.nbrs[i].items() if comm[j] == c)
        return math.fsum(
            math.fsum(inside[c]) / self.two_m - (math.fsum(tot[c]) / self.two_m) ** 2 for c in tot
        )

    def aggregate(self, comm: list[int]) -> _Level:
        size = max(comm) + 1
        nbrs: list[dict[int, float]] = [defaultdict(float) for _ in range(size)]
        loops = [0.0] * size
        for i in range(self.n):
            ci = comm[i]
            loops[ci] += self.loops[i]
            for j, w in self.nbrs[i].items():
                cj = comm[j]
                if ci == cj:
                    loops[ci] += w
                else:
                    nbrs[ci][cj] += w
        return _Level([dict(d) for d in nbrs], loops, self.two_m)


class CommunityState:
    """Community caches (``tot`` per community, links per vertex) over one level."""

    def __init__(self, level: _Level, assignment):
        self.level = level
        self.comm = list(assignment)
        if len(self.comm) != level.n:
            raise ValueError("assignment length does not match the graph")
        self.tot: dict[int, float] = defaultdict(float)
        for i, c in enumerate(self.comm):
            self.tot[c] += level.k[i]

    @classmethod
    def from_affinity(cls, aff: AffinityGraph, assignment) -> CommunityState:
        return cls(_Level.from_affinity(aff), assignment)

    def gain(self, i: int, to: int) -> float:
        """Change in modularity if ``i`` moves from its community to ``to``."""
        src = self.comm[i]
        if to == src:
            return 0.0
        lv = self.level
        m = lv.two_m / 2
        links = lv.links(i, self.comm)
        ki = lv.k[i]
        return (links.get(to, 0.0) - links.get(src, 0.0)) / m - ki * (
            self.tot.get(to, 0.0) - self.tot[src] + ki
        ) / (2 * m * m)

    def move(self, i: int, to: int) -> None:
        src = self.comm[i]
        self.tot[src] -= self.level.k[i]
        self.tot[to] += self.level.k[i]
        self.comm[i] = to


def delta_q(aff: AffinityGraph, vertex: int, from_community: int, to_community: int,
            state: CommunityState) -> float:
    """Incremental modularity gain of one move, from cached community totals."""
    if state.comm[vertex] != from_community:
        raise ValueError(f"vertex {vertex} is not in community {from_community}")
    if state.level.n != aff.n:
        raise ValueError("state does not belong to this graph")
    return state.gain(vertex, to_community)


@dataclass(frozen=True)
class LouvainConfig:
    seed: int = 0
    max_passes: int = 64
    min_gain: float = 1e-9


def _local_moves(level: _Level, rng: np.random.Generator) -> tuple[list[int], bool]:
    comm = list(range(level.n))
    tot = list(level.k)
    m = level.two_m / 2
    denom = 2 * m * m
    moved_any = False
    for _ in range(_MAX_SWEEPS):
        moved = False
        for i in rng.permutation(level.n).tolist():
            ki = level.k[i]
            src = comm[i]
            links = level.links(i, comm)
            tot[src] -= ki
            best_c = src
            best = links.get(src, 0.0) / m - ki * tot[src] / denom
            for c in sorted(links):
                if c == src:
                    continue
                g = links[c] / m - ki * tot[c] / denom
                if g > best + GAIN_EPS:
                    best, best_c = g, c
            tot[best_c] += ki
            if best_c != src:
                comm[i] = best_c
                moved = True
        if not moved:
            break
        moved_any = True
    return comm, moved_any


def louvain(aff: AffinityGraph, config: LouvainConfig | None = None) -> Partition:
    """Two-phase Louvain optimisation from the singleton partition."""
    config = config or LouvainConfig()
    if aff.two_m <= 0:
        raise EmptyGraphError("modularity undefined for a graph without weight")
    rng = np.random.default_rng(config.seed)
    level = _Level.from_affinity(aff)
    flat = list(range(aff.n))
    q_prev = modularity(aff, flat)
    converged = False
    for _ in range(config.max_passes):
        comm, moved = _local_moves(level, rng)
        if not moved:
            converged = True
            break
        labels = dense_labels(comm)
        flat = [labels[c] for c in flat]
        q = modularity(aff, flat)
        level = level.aggregate(list(labels))
        if q - q_prev < config.min_gain:
            converged = True
            break
        q_prev = q
    flat = dense_labels(flat)
    return Partition(flat, modularity(aff, flat), converged, tuple(aff.isolates()))


# --------------------------------------------------------------------------
# sweeps and reports


@dataclass(frozen=True)
class CurvePoint:
    threshold: Decimal
    modularity: float | None
    community_count: int
    isolate_count: int
    partition: Partition | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ModularityCurve:
    points: tuple[CurvePoint, ...]

    def __post_init__(self):
        ts = [p.threshold for p in self.points]
        if any(a <= b for a, b in zip(ts, ts[1:])):
            raise ValueError("curve thresholds must be strictly descending")

    def argmax(self) -> CurvePoint | None:
        """Highest-modularity point; the higher threshold wins a tie."""
        best = None
        for p in self.points:
            if p.modularity is not None and (best is None or p.modularity > best.modularity):
                best = p
        return best


def detect(matrix: RateMatrix, threshold, mode=Mode.UNWEIGHTED, config: LouvainConfig | None = None):
    """Threshold the undirected projection and run Louvain.

    Returns ``(partition | None, undirected_graph)``; the partition is ``None``
    when no weighted edge survives.
    """
    und = apply_threshold_undirected(to_undirected(build_directed(matrix)), threshold)
    try:
        aff = to_affinity(und, mode)
    except EmptyGraphError:
        return None, und
    return louvain(aff, config), und


def sweep_modularity(matrix: RateMatrix, thresholds, mode=Mode.UNWEIGHTED,
                     config: LouvainConfig | None = None) -> ModularityCurve:
    points = []
    for t in normalize_thresholds(thresholds):
        part, und = detect(matrix, t, mode, config)
        iso = len(isolated_vertices(und))
        if part is None:
            points.append(CurvePoint(t, None, und.n, iso, None))
        else:
            points.append(CurvePoint(t, part.modularity, part.community_count, iso, part))
    return ModularityCurve(tuple(points))


@dataclass(frozen=True)
class CommunityGroup:
    label: str
    members: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class CommunityReport:
    groups: tuple[CommunityGroup, ...]
    modularity: float | None = None

    def rows(self):
        """``(group, rank, code, score)`` rows in listing order."""
        for g in self.groups:
            for r, (code, score) in enumerate(g.members, start=1):
                yield g.label, r, code, score


NO_LINK = "no link"


def community_report(partition: Partition, scores, registry: JurisdictionRegistry) -> CommunityReport:
    """Members of each community in descending centrality; isolates grouped as ``no link``.

    Communities are numbered from 1 in order of their most central member.
    """
    if partition.n != registry.n or (scores is not None and scores.n != registry.n):
        raise ValueError("partition, scores and registry sizes differ")
    value = (lambda v: float(scores.normalized[v])) if scores is not None else (lambda v: 0.0)
    iso = set(partition.isolates)

    def ordered(vs):
        return tuple(
            (registry.code(v), value(v))
            for v in sorted(vs, key=lambda v: (-round(value(v), 12), registry.code(v)))
        )

    comms = [ordered([v for v in ms if v not in iso]) for ms in partition.members()]
    comms = [c for c in comms if c]
    comms.sort(key=lambda c: (-round(c[0][1], 12), c[0][0]))
    groups = [CommunityGroup(f"community {k}", c) for k, c in enumerate(comms, start=1)]
    if iso:
        groups.append(CommunityGroup(NO_LINK, ordered(iso)))
    return CommunityReport(tuple(groups), partition.modularity)
