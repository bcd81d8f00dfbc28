"""Compiled inner loops. Distances are integers in units of 1/scale."""
import numpy as np
from numba import njit

INF = 1 << 30


@njit(cache=True)
def _bfs(indptr, indices, step, srcs, mask, dist, queue):
    n = indptr.shape[0] - 1
    for i in range(n):
        dist[i] = INF
    head = 0
    tail = 0
    for s in srcs:
        if dist[s] != 0:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        nd = dist[u] + step
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if mask[v] or dist[v] <= nd:
                continue
            dist[v] = nd
            queue[tail] = v
            tail += 1


@njit(cache=True)
def _dial(indptr, indices, weights, maxw, srcs, mask, dist, buf, cnt):
    # bucket queue keyed by distance mod (maxw + 1); weights are positive ints <= maxw
    n = indptr.shape[0] - 1
    nb = maxw + 1
    for i in range(n):
        dist[i] = INF
    for b in range(nb):
        cnt[b] = 0
    pending = 0
    for s in srcs:
        if dist[s] != 0:
            dist[s] = 0
            buf[0, cnt[0]] = s
            cnt[0] += 1
            pending += 1
    d = 0
    while pending > 0:
        b = d % nb
        i = 0
        while i < cnt[b]:
            u = buf[b, i]
            i += 1
            if dist[u] != d:
                continue
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                if mask[v]:
                    continue
                nd = d + weights[e]
                if nd < dist[v]:
                    dist[v] = nd
                    bb = nd % nb
                    buf[bb, cnt[bb]] = v
                    cnt[bb] += 1
                    pending += 1
        pending -= cnt[b]
        cnt[b] = 0
        d += 1


@njit(cache=True)
def sssp_runs(indptr, indices, weights, maxw, uniform, src_ptr, srcs, mask, cols, out):
    """Run one (multi-source) search per segment of ``srcs``; write dist[cols] into ``out``."""
    n = indptr.shape[0] - 1
    dist = np.empty(n, np.int64)
    if uniform:
        queue = np.empty(n + 1, np.int64)
        buf = np.empty((1, 1), np.int64)
    else:
        queue = np.empty(1, np.int64)
        buf = np.empty((maxw + 1, indices.shape[0] + srcs.shape[0] + 1), np.int64)
    cnt = np.zeros(maxw + 1, np.int64)
    full = cols.shape[0] == 0
    for r in range(src_ptr.shape[0] - 1):
        s = srcs[src_ptr[r]:src_ptr[r + 1]]
        if uniform:
            _bfs(indptr, indices, maxw, s, mask, dist, queue)
        else:
            _dial(indptr, indices, weights, maxw, s, mask, dist, buf, cnt)
        if full:
            for k in range(n):
                out[r, k] = dist[k]
        else:
            for k in range(cols.shape[0]):
                out[r, k] = dist[cols[k]]


@njit(cache=True)
def delta_scan(D, pa, pb, budget):
    """Four-point scan over pairs sorted by decreasing distance, with early exit.

    Returns (2*delta in units, witness quadruple, iterations, complete).
    """
    best = 0
    wit = np.full(4, -1, np.int64)
    if pa.shape[0] > 0:
        wit[0] = pa[0]
        wit[1] = pb[0]
        wit[2] = pa[0]
        wit[3] = pb[0]
    it = 0
    npairs = pa.shape[0]
    for i in range(npairs):
        x = pa[i]
        y = pb[i]
        dxy = D[x, y]
        if dxy <= best:
            return best, wit, it, True
        for j in range(i):
            z = pa[j]
            w = pb[j]
            s1 = dxy + D[z, w]
            s2 = D[x, z] + D[y, w]
            s3 = D[x, w] + D[y, z]
            m = s2 if s2 > s3 else s3
            if s1 - m > best:
                best = s1 - m
                wit[0] = x
                wit[1] = y
                wit[2] = z
                wit[3] = w
        it += i
        if it > budget:
            return best, wit, it, False
    return best, wit, it, True


@njit(cache=True)
def interval_scan(rows, ia, ib, target, key):
    """For each pair p: max of key[w] over w with rows[ia]+rows[ib] == target (the interval)."""
    m = ia.shape[0]
    best = np.full(m, -1, np.int64)
    arg = np.full(m, -1, np.int64)
    n = rows.shape[1]
    for p in range(m):
        ra = rows[ia[p]]
        rb = rows[ib[p]]
        t = target[p]
        for w in range(n):
            if ra[w] + rb[w] == t and key[w] > best[p]:
                best[p] = key[w]
                arg[p] = w
    return best, arg


@njit(cache=True)
def dominated_count(rows_small, rows_big, scale_ratio):
    """Count entries where rows_big > scale_ratio * rows_small (finite small entries only)."""
    bad = 0
    for i in range(rows_small.shape[0]):
        for j in range(rows_small.shape[1]):
            a = rows_small[i, j]
            if a < INF and rows_big[i, j] > scale_ratio * a:
                bad += 1
    return bad


@njit(cache=True)
def local_balls(indptr, indices, weights, maxw, src_ptr, srcs, limit, npts):
    """For each run, all point vertices (index < npts) within ``limit`` of the sources.

    Returns (ptr, verts, dists) in CSR layout; only touched vertices are reset
    between runs, so the cost is local to each neighbourhood.
    """
    n = indptr.shape[0] - 1
    dist = np.full(n, INF, np.int64)
    nb = maxw + 1
    cap = 1024
    verts = np.empty(cap, np.int64)
    dists = np.empty(cap, np.int64)
    total = 0
    nruns = src_ptr.shape[0] - 1
    ptr = np.zeros(nruns + 1, np.int64)
    touched = np.empty(n, np.int64)
    buf = np.empty((nb, n + 1), np.int64)
    cnt = np.zeros(nb, np.int64)
    for r in range(nruns):
        nt = 0
        for b in range(nb):
            cnt[b] = 0
        pending = 0
        for k in range(src_ptr[r], src_ptr[r + 1]):
            s = srcs[k]
            if dist[s] != 0:
                if dist[s] == INF:
                    touched[nt] = s
                    nt += 1
                dist[s] = 0
                buf[0, cnt[0]] = s
                cnt[0] += 1
                pending += 1
        d = 0
        while pending > 0 and d <= limit:
            b = d % nb
            i = 0
            while i < cnt[b]:
                u = buf[b, i]
                i += 1
                if dist[u] != d:
                    continue
                for e in range(indptr[u], indptr[u + 1]):
                    v = indices[e]
                    nd = d + weights[e]
                    if nd <= limit and nd < dist[v]:
                        if dist[v] == INF:
                            touched[nt] = v
                            nt += 1
                        dist[v] = nd
                        bb = nd % nb
                        buf[bb, cnt[bb]] = v
                        cnt[bb] += 1
                        pending += 1
            pending -= cnt[b]
            cnt[b] = 0
            d += 1
        for t in range(nt):
            v = touched[t]
            if v < npts:
                if total >= cap:
                    cap *= 2
                    nv = np.empty(cap, np.int64)
                    nd2 = np.empty(cap, np.int64)
                    nv[:total] = verts[:total]
                    nd2[:total] = dists[:total]
                    verts = nv
                    dists = nd2
                verts[total] = v
                dists[total] = dist[v]
                total += 1
            dist[v] = INF
        ptr[r + 1] = total
    return ptr, verts[:total], dists[:total]
