"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Set the environment variable ``LIPFLAT_NO_NUMBA=1`` before import to force
the numpy implementations (useful for debugging and for the benchmark in
``benchmarks/bench_kernels.py``).  Both paths compute identical results.
"""

import heapq
import os

import numpy as np

USE_NUMBA = os.environ.get("LIPFLAT_NO_NUMBA", "0") not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit, prange
    except ImportError:  # pragma: no cover - numba is a hard dep, but be safe
        USE_NUMBA = False

INF = np.inf


# ---------------------------------------------------------------------------
# triangle inequality scan
# ---------------------------------------------------------------------------

def _worst_triangle_np(dist, slack):
    n = dist.shape[0]
    worst = (-1, -1, -1, 0.0)
    for j in range(n):
        # excess[i,k] = d(i,k) - d(i,j) - d(j,k)
        excess = dist - dist[:, j][:, None] - dist[j, :][None, :]
        idx = np.unravel_index(np.argmax(excess), excess.shape)
        val = excess[idx]
        if val > worst[3]:
            worst = (int(idx[0]), j, int(idx[1]), float(val))
    if worst[3] > slack:
        return worst
    return (-1, -1, -1, 0.0)


if USE_NUMBA:

    @njit(cache=True)
    def _worst_triangle_nb(dist, slack):  # pragma: no cover - compiled
        n = dist.shape[0]
        bi, bj, bk = -1, -1, -1
        best = 0.0
        for i in range(n):
            for j in range(n):
                dij = dist[i, j]
                for k in range(n):
                    ex = dist[i, k] - dij - dist[j, k]
                    if ex > best:
                        best = ex
                        bi, bj, bk = i, j, k
        if best > slack:
            return bi, bj, bk, best
        return -1, -1, -1, 0.0


def worst_triangle(dist, slack):
    """Worst triangle-inequality violation of a square distance matrix.

    Returns ``(i, j, k, excess)`` with ``d(i,k) > d(i,j) + d(j,k) + slack``,
    or ``(-1, -1, -1, 0.0)`` if no triple exceeds the slack.
    """
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    if USE_NUMBA:
        return _worst_triangle_nb(dist, float(slack))
    return _worst_triangle_np(dist, float(slack))


# ---------------------------------------------------------------------------
# pairwise max-norm distances / distance-to-set marks
# ---------------------------------------------------------------------------

def _pairwise_maxnorm_np(coords):
    n = coords.shape[0]
    out = np.empty((n, n))
    step = max(1, int(2e7) // max(1, n * coords.shape[1]))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        out[lo:hi] = np.abs(coords[lo:hi, None, :] - coords[None, :, :]).max(axis=2)
    return out


if USE_NUMBA:

    @njit(cache=True, parallel=True)
    def _pairwise_maxnorm_nb(coords):  # pragma: no cover - compiled
        n, d = coords.shape
        out = np.empty((n, n))
        for i in prange(n):
            out[i, i] = 0.0
            for j in range(i + 1, n):
                m = 0.0
                for k in range(d):
                    v = abs(coords[i, k] - coords[j, k])
                    if v > m:
                        m = v
                out[i, j] = m
                out[j, i] = m
        return out


def pairwise_maxnorm(coords):
    """Full max-norm distance matrix of an ``(n, d)`` coordinate array."""
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    if USE_NUMBA:
        return _pairwise_maxnorm_nb(coords)
    return _pairwise_maxnorm_np(coords)


def _mark_to_set_np(coords, anchors, ord_):
    step = max(1, int(2e7) // max(1, anchors.shape[0] * coords.shape[1]))
    out = np.empty(coords.shape[0])
    for lo in range(0, coords.shape[0], step):
        hi = min(coords.shape[0], lo + step)
        diff = np.abs(coords[lo:hi, None, :] - anchors[None, :, :])
        d = diff.max(axis=2) if ord_ == 0 else np.sqrt((diff * diff).sum(axis=2))
        out[lo:hi] = d.min(axis=1)
    return out


if USE_NUMBA:

    @njit(cache=True, parallel=True)
    def _mark_to_set_nb(coords, anchors, ord_):  # pragma: no cover - compiled
        n, d = coords.shape
        m = anchors.shape[0]
        out = np.empty(n)
        for i in prange(n):
            best = INF
            for a in range(m):
                if ord_ == 0:
                    v = 0.0
                    for k in range(d):
                        w = abs(coords[i, k] - anchors[a, k])
                        if w > v:
                            v = w
                else:
                    v = 0.0
                    for k in range(d):
                        w = coords[i, k] - anchors[a, k]
                        v += w * w
                    v = np.sqrt(v)
                if v < best:
                    best = v
            out[i] = best
        return out


def mark_to_set(coords, anchors, norm="max"):
    """Distance from every row of ``coords`` to the nearest row of ``anchors``."""
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    anchors = np.ascontiguousarray(anchors, dtype=np.float64)
    ord_ = 0 if norm == "max" else 2
    if USE_NUMBA:
        return _mark_to_set_nb(coords, anchors, ord_)
    return _mark_to_set_np(coords, anchors, ord_)


# ---------------------------------------------------------------------------
# Dijkstra on a CSR graph
# ---------------------------------------------------------------------------

def _dijkstra_np(indptr, indices, costs, source):
    n = indptr.shape[0] - 1
    dist = np.full(n, INF)
    dist[source] = 0.0
    heap = [(0.0, source)]
    done = np.zeros(n, dtype=bool)
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            nd = du + costs[e]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


if USE_NUMBA:

    @njit(cache=True)
    def _dijkstra_nb(indptr, indices, costs, source):  # pragma: no cover
        n = indptr.shape[0] - 1
        dist = np.full(n, INF)
        dist[source] = 0.0
        done = np.zeros(n, dtype=np.bool_)
        # binary heap of (key, node) stored in parallel arrays
        cap = 4 * (indices.shape[0] + n) + 16
        hk = np.empty(cap)
        hv = np.empty(cap, dtype=np.int64)
        hk[0] = 0.0
        hv[0] = source
        size = 1
        while size > 0:
            top_k = hk[0]
            top_v = hv[0]
            size -= 1
            hk[0] = hk[size]
            hv[0] = hv[size]
            i = 0
            while True:
                l = 2 * i + 1
                r = l + 1
                m = i
                if l < size and hk[l] < hk[m]:
                    m = l
                if r < size and hk[r] < hk[m]:
                    m = r
                if m == i:
                    break
                hk[i], hk[m] = hk[m], hk[i]
                hv[i], hv[m] = hv[m], hv[i]
                i = m
            u = top_v
            if done[u]:
                continue
            if top_k > dist[u]:
                continue
            done[u] = True
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                nd = top_k + costs[e]
                if nd < dist[v]:
                    dist[v] = nd
                    # push
                    j = size
                    hk[j] = nd
                    hv[j] = v
                    size += 1
                    while j > 0:
                        p = (j - 1) // 2
                        if hk[p] <= hk[j]:
                            break
                        hk[p], hk[j] = hk[j], hk[p]
                        hv[p], hv[j] = hv[j], hv[p]
                        j = p
        return dist


def dijkstra_csr(indptr, indices, costs, source):
    """Single-source shortest path distances over a CSR adjacency."""
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    costs = np.ascontiguousarray(costs, dtype=np.float64)
    if USE_NUMBA:
        return _dijkstra_nb(indptr, indices, costs, int(source))
    return _dijkstra_np(indptr, indices, costs, int(source))


# ---------------------------------------------------------------------------
# chain-minimum rewriting of an ordered arc metric
# ---------------------------------------------------------------------------

def _chain_min_np(dist, free_edge):
    n = dist.shape[0]
    # freerun[i] = largest j such that segments i..j-1 are all free
    freerun = np.empty(n, dtype=np.int64)
    freerun[n - 1] = n - 1
    for i in range(n - 2, -1, -1):
        freerun[i] = freerun[i + 1] if free_edge[i] else i
    out = np.zeros((n, n))
    for a in range(n):
        best = np.full(n, INF)
        best[a] = 0.0
        for b in range(a + 1, n):
            # min over last chain node m: best[m] + cost(m, b)
            span_cost = np.where(freerun[a:b] >= b, 0.0, dist[a:b, b])
            best[b] = np.min(best[a:b] + span_cost)
        out[a, a + 1:] = best[a + 1:]
        out[a + 1:, a] = best[a + 1:]
    return out


if USE_NUMBA:

    @njit(cache=True)
    def _chain_min_nb(dist, free_edge):  # pragma: no cover - compiled
        n = dist.shape[0]
        freerun = np.empty(n, dtype=np.int64)
        freerun[n - 1] = n - 1
        for i in range(n - 2, -1, -1):
            freerun[i] = freerun[i + 1] if free_edge[i] else i
        out = np.zeros((n, n))
        for a in range(n):
            best = np.full(n, INF)
            best[a] = 0.0
            for b in range(a + 1, n):
                cand = INF
                for m in range(a, b):
                    c = 0.0 if freerun[m] >= b else dist[m, b]
                    v = best[m] + c
                    if v < cand:
                        cand = v
                best[b] = cand
                out[a, b] = cand
                out[b, a] = cand
        return out


def chain_min(dist, free_edge):
    """Minimum chain cost between all ordered pairs of arc breakpoints.

    ``free_edge[i]`` marks the segment between breakpoints ``i`` and ``i+1``
    as traversable at zero cost; a chain step over span ``(i, j)`` costs 0
    if every segment inside is free and ``dist[i, j]`` otherwise.
    """
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    free_edge = np.ascontiguousarray(free_edge, dtype=np.bool_)
    if USE_NUMBA:
        return _chain_min_nb(dist, free_edge)
    return _chain_min_np(dist, free_edge)


def warmup():
    """Trigger JIT compilation of all kernels on tiny inputs."""
    d = np.array([[0.0, 1.0], [1.0, 0.0]])
    worst_triangle(d, 1e-12)
    pairwise_maxnorm(np.zeros((2, 2)))
    mark_to_set(np.zeros((2, 2)), np.zeros((1, 2)))
    dijkstra_csr(np.array([0, 1, 2]), np.array([1, 0]), np.array([1.0, 1.0]), 0)
    chain_min(d, np.array([False]))
