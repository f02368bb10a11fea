"""Shortest-path kernels: numba build and pure-python reference.

Both settle nodes in ascending (distance, node id) order and relax with
a strict < test, so they produce identical distances, predecessors and
tie-breaks. ``dst < 0`` computes the full distance field.
"""

from __future__ import annotations

import heapq

import numpy as np

from .backend import USE_NUMBA


def dijkstra_py(indptr, adj_edge, edge_to, w, src, dst):
    n = indptr.shape[0] - 1
    dist = np.full(n, np.inf)
    prev = np.full(n, -1, dtype=np.int32)
    dist[src] = 0.0
    heap = [(0.0, int(src))]
    done = np.zeros(n, dtype=bool)
    while heap:
        d, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
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
                heapq.heappush(heap, (nd, int(u)))
    return dist, prev


if USE_NUMBA:
    from ._pathing_numba import dijkstra_nb

    def dijkstra(indptr, adj_edge, edge_to, w, src, dst):
        return dijkstra_nb(indptr, adj_edge, edge_to, w, np.int64(src), np.int64(dst))

else:
    dijkstra = dijkstra_py
