"""numba build of the path kernel. Mirrors _pathing.dijkstra_py exactly."""

import numpy as np
from numba import njit


@njit(cache=True)
def dijkstra_nb(indptr, adj_edge, edge_to, w, src, dst):
    n = indptr.shape[0] - 1
    dist = np.full(n, np.inf)
    prev = np.full(n, -1, dtype=np.int32)
    done = np.zeros(n, dtype=np.uint8)
    dist[src] = 0.0

    # binary heap ordered lexicographically by (distance, node id)
    cap = 4 * n + 16
    hd = np.empty(cap, dtype=np.float64)
    hn = np.empty(cap, dtype=np.int64)
    size = 0

    hd[0] = 0.0
    hn[0] = src
    size = 1

    while size > 0:
        d = hd[0]
        v = hn[0]
        size -= 1
        hd[0] = hd[size]
        hn[0] = hn[size]
        i = 0
        while True:
            l = 2 * i + 1
            r = l + 1
            m = i
            if l < size and (hd[l] < hd[m] or (hd[l] == hd[m] and hn[l] < hn[m])):
                m = l
            if r < size and (hd[r] < hd[m] or (hd[r] == hd[m] and hn[r] < hn[m])):
                m = r
            if m == i:
                break
            hd[i], hd[m] = hd[m], hd[i]
            hn[i], hn[m] = hn[m], hn[i]
            i = m

        if done[v] == 1:
            continue
        done[v] = 1
        if v == dst:
            break
        for k in range(indptr[v], indptr[v + 1]):
            e = adj_edge[k]
            we = w[e]
            if we == np.inf:
                continue
            u = edge_to[e]
            nd = d + we
            if nd < dist[u]:
                dist[u] = nd
                prev[u] = e
                if size >= cap:
                    ncap = cap * 2
                    nhd = np.empty(ncap, dtype=np.float64)
                    nhn = np.empty(ncap, dtype=np.int64)
                    nhd[:size] = hd[:size]
                    nhn[:size] = hn[:size]
                    hd = nhd
                    hn = nhn
                    cap = ncap
                i = size
                hd[i] = nd
                hn[i] = u
                size += 1
                while i > 0:
                    p = (i - 1) // 2
                    if hd[i] < hd[p] or (hd[i] == hd[p] and hn[i] < hn[p]):
                        hd[i], hd[p] = hd[p], hd[i]
                        hn[i], hn[p] = hn[p], hn[i]
                        i = p
                    else:
                        break
    return dist, prev
