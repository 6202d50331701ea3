"""Independent brute-force references.  None of these touch the kernels."""

from fractions import Fraction
from itertools import combinations

import numpy as np


def simple_paths(w, s, t):
    """All simple ``s -> t`` paths of a dense arc matrix (negative = no arc)."""
    n = len(w)
    out = []

    def dfs(v, path, seen):
        if v == t:
            out.append(tuple(path))
            return
        for x in range(n):
            if x != v and w[v][x] >= 0 and x not in seen:
                seen.add(x)
                path.append(x)
                dfs(x, path, seen)
                path.pop()
                seen.discard(x)

    dfs(s, [s], {s})
    return out


def path_cost(w, path):
    return sum(int(w[a][b]) for a, b in zip(path, path[1:]))


def min_paths(w, s, t):
    paths = simple_paths(w, s, t)
    if not paths:
        return None, []
    best = min(path_cost(w, p) for p in paths)
    return best, sorted(p for p in paths if path_cost(w, p) == best)


def pair_flow(w, s, t):
    """Exact forward-split flow for one packet, from enumerated minimum paths."""
    _, paths = min_paths(w, s, t)
    n = len(w)
    flow = [Fraction(0)] * n
    if not paths:
        return flow
    arcs = {(a, b) for p in paths for a, b in zip(p, p[1:])}
    out = {v: sorted(b for a, b in arcs if a == v) for v in range(n)}
    memo = {}

    def into(x):
        if x == s:
            return Fraction(1)
        if x not in memo:
            memo[x] = sum((into(a) / len(out[a]) for a, b in arcs if b == x), Fraction(0))
        return memo[x]

    for v in {x for p in paths for x in p}:
        flow[v] = into(v)
    return flow


def load(w):
    n = len(w)
    total = [Fraction(0)] * n
    for s in range(n):
        for t in range(n):
            if s == t:
                continue
            f = pair_flow(w, s, t)
            for k in range(n):
                if k not in (s, t):
                    total[k] += f[k]
    return total


def pair_dependency(w, s, t):
    _, paths = min_paths(w, s, t)
    n = len(w)
    if not paths:
        return [Fraction(0)] * n
    return [Fraction(sum(1 for p in paths if k in p[1:-1]), len(paths)) for k in range(n)]


def betweenness(w):
    n = len(w)
    total = [Fraction(0)] * n
    for s in range(n):
        for t in range(n):
            if s != t:
                d = pair_dependency(w, s, t)
                for k in range(n):
                    total[k] += d[k]
    return total


def modularity(a, labels):
    """Literal double sum over ordered pairs (self-pairs included) in exact rationals."""
    n = len(a)
    A = [[Fraction(a[i][j]) if i != j else Fraction(0) for j in range(n)] for i in range(n)]
    k = [sum(row) for row in A]
    two_m = sum(k)
    q = Fraction(0)
    for i in range(n):
        for j in range(n):
            if labels[i] == labels[j]:
                q += A[i][j] - k[i] * k[j] / two_m
    return q / two_m


def set_partitions(n):
    """Restricted growth strings of length n."""
    def rec(prefix, m):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for c in range(m + 1):
            yield from rec(prefix + [c], max(m, c + 1))

    if n == 0:
        yield ()
        return
    yield from rec([0], 1)


def best_partition(a):
    best, arg = None, None
    for labels in set_partitions(len(a)):
        q = modularity(a, labels)
        if best is None or q > best:
            best, arg = q, labels
    return best, arg


def random_arc_matrix(rng, n, density=0.6, levels=(1, 2, 3)):
    """Sparse positive-integer arc matrix with plenty of ties."""
    w = rng.choice(levels, size=(n, n)).astype(np.int64)
    w[rng.random((n, n)) > density] = -1
    np.fill_diagonal(w, -1)
    return w


def clique_pair_edges():
    e = list(combinations(range(4), 2)) + [(i + 4, j + 4) for i, j in combinations(range(4), 2)]
    return e + [(3, 4)]
