"""Pure-Python/numpy kernels.  Reference semantics for ``_ckernels``.

Both backends must perform the same floating-point operations in the same
order so that their outputs are bit-identical.
"""

import numpy as np

INF = np.iinfo(np.int64).max // 4


def sssp(weights, source):
    """Exact single-source shortest paths on a dense arc matrix.

    ``weights[i, j] < 0`` means no arc; present weights must be positive.
    Returns ``(dist, order, pred_ptr, pred_idx)``: distances with ``-1`` for
    unreachable vertices, reachable vertices in ``(dist, id)`` order, and a CSR
    list of every tied predecessor (ascending id).
    """
    w = np.asarray(weights, dtype=np.int64)
    n = w.shape[0]
    dist = np.full(n, INF, dtype=np.int64)
    dist[source] = 0
    done = np.zeros(n, dtype=bool)
    order = []
    for _ in range(n):
        cand = np.where(done, INF, dist)
        v = int(np.argmin(cand))
        if cand[v] >= INF:
            break
        done[v] = True
        order.append(v)
        row = w[v]
        nd = dist[v] + row
        better = (row >= 0) & ~done & (nd < dist)
        dist = np.where(better, nd, dist)

    reach = dist < INF
    tight = (w >= 0) & reach[:, None] & reach[None, :]
    tight &= (dist[:, None] + w) == dist[None, :]
    ptr = np.zeros(n + 1, dtype=np.int64)
    idx = []
    for t in range(n):
        p = np.flatnonzero(tight[:, t]) if t != source else ()
        idx.extend(int(x) for x in p)
        ptr[t + 1] = len(idx)
    dist = np.where(reach, dist, -1)
    return dist, np.array(order, dtype=np.int64), ptr, np.array(idx, dtype=np.int64)


def _adjacency(n, ptr, idx):
    preds = [idx[ptr[t]:ptr[t + 1]].tolist() for t in range(n)]
    succs = [[] for _ in range(n)]
    for t in range(n):
        for v in preds[t]:
            succs[v].append(t)
    return preds, succs


def source_load(weights, source):
    """Flow each vertex carries over all targets for unit packets sent from
    ``source``, splitting equally at every fork toward the target."""
    w = np.asarray(weights, dtype=np.int64)
    n = w.shape[0]
    dist, order, ptr, idx = sssp(w, source)
    preds, succs = _adjacency(n, ptr, idx)
    order = order.tolist()
    acc = [0.0] * n
    anc = [False] * n
    flow = [0.0] * n
    for t in range(n):
        if t == source or dist[t] < 0:
            continue
        for v in order:
            anc[v] = False
            flow[v] = 0.0
        anc[t] = True
        stack = [t]
        while stack:
            x = stack.pop()
            for p in preds[x]:
                if not anc[p]:
                    anc[p] = True
                    stack.append(p)
        flow[source] = 1.0
        for v in order:
            if v == t or not anc[v]:
                continue
            live = 0
            for x in succs[v]:
                if anc[x]:
                    live += 1
            share = flow[v] / live
            for x in succs[v]:
                if anc[x]:
                    flow[x] += share
        for v in order:
            if anc[v] and v != source and v != t:
                acc[v] += flow[v]
    return np.array(acc, dtype=np.float64)


def source_dependency(weights, source):
    """Brandes dependency of ``source`` on every vertex (path-count split)."""
    w = np.asarray(weights, dtype=np.int64)
    n = w.shape[0]
    dist, order, ptr, idx = sssp(w, source)
    preds, _ = _adjacency(n, ptr, idx)
    order = order.tolist()
    sigma = [0.0] * n
    sigma[source] = 1.0
    for x in order:
        if x == source:
            continue
        s = 0.0
        for v in preds[x]:
            s += sigma[v]
        sigma[x] = s
    delta = [0.0] * n
    for x in reversed(order):
        coeff = (1.0 + delta[x]) / sigma[x]
        for v in preds[x]:
            delta[v] += sigma[v] * coeff
    delta[source] = 0.0
    return np.array(delta, dtype=np.float64)
