"""Graph container, traversal and generators.

Graphs are undirected, unweighted at the API surface (coarse graphs carry
edge weights separately), stored in CSR form for fast vectorized BFS.
Node ids are 0..n-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Graph",
    "build_graph",
    "bfs_distances",
    "all_pairs_distances",
    "is_connected",
    "connected_components",
    "path_graph",
    "cycle_graph",
    "grid_graph",
    "random_delaunay_graph",
    "random_geometric_points",
]

# Dense n x n distance matrices above this size are refused (int32, ~1.6 TB
# at the cap already; the guard keeps accidental APSP calls from dying slowly).
APSP_MAX_NODES = 20000


@dataclass
class Graph:
    """Undirected graph in CSR adjacency form.

    edges holds each undirected edge once as (u, v) with u < v.
    indptr/indices are the usual CSR arrays over both directions.
    """

    n: int
    edges: np.ndarray            # (m, 2) int64, u < v, lexicographically sorted
    indptr: np.ndarray           # (n+1,) int64
    indices: np.ndarray          # (2m,) int64
    weights: np.ndarray | None = None   # (m,) float64, parallel to edges
    coords: np.ndarray | None = field(default=None, repr=False)  # source points if any

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edge_weight_array(self) -> np.ndarray:
        if self.weights is not None:
            return self.weights
        return np.ones(self.m, dtype=np.float64)


def build_graph(n: int, edge_list, weights=None, coords=None) -> Graph:
    """Build a Graph from an iterable of (u, v) pairs.

    Self loops are dropped, duplicates (in either orientation) are merged;
    merged duplicates sum their weights when weights are given.
    """
    if n < 0:
        raise ValueError("node count must be nonnegative")
    e = np.asarray(list(edge_list) if not isinstance(edge_list, np.ndarray) else edge_list,
                   dtype=np.int64)
    if e.size == 0:
        e = e.reshape(0, 2)
    if e.ndim != 2 or e.shape[1] != 2:
        raise ValueError("edge list must be (m, 2)")
    if e.size and (e.min() < 0 or e.max() >= n):
        raise ValueError("edge endpoint out of range")

    w = None
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (e.shape[0],):
            raise ValueError("weights must align with edges")

    # normalize orientation, drop self loops
    lo = np.minimum(e[:, 0], e[:, 1])
    hi = np.maximum(e[:, 0], e[:, 1])
    keep = lo != hi
    lo, hi = lo[keep], hi[keep]
    if w is not None:
        w = w[keep]

    if lo.size:
        key = lo * np.int64(n) + hi
        order = np.argsort(key, kind="stable")
        key = key[order]
        lo, hi = lo[order], hi[order]
        if w is not None:
            w = w[order]
        uniq_mask = np.empty(key.shape, dtype=bool)
        uniq_mask[0] = True
        np.not_equal(key[1:], key[:-1], out=uniq_mask[1:])
        if w is not None:
            # sum weights of parallel edges
            group = np.cumsum(uniq_mask) - 1
            wsum = np.zeros(int(group[-1]) + 1, dtype=np.float64)
            np.add.at(wsum, group, w)
            w = wsum
        lo, hi = lo[uniq_mask], hi[uniq_mask]

    edges = np.stack([lo, hi], axis=1) if lo.size else np.empty((0, 2), dtype=np.int64)

    # CSR over both directions; lexsort gives ascending neighbor runs
    both_src = np.concatenate([edges[:, 0], edges[:, 1]])
    both_dst = np.concatenate([edges[:, 1], edges[:, 0]])
    counts = np.bincount(both_src, minlength=n).astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    order = np.lexsort((both_dst, both_src))
    indices = both_dst[order]

    cc = None
    if coords is not None:
        cc = np.asarray(coords, dtype=np.float64)
        if cc.shape[0] != n:
            raise ValueError("coords must have one row per node")
    return Graph(n=n, edges=edges, indptr=indptr, indices=indices, weights=w, coords=cc)


def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Hop distances from source; unreachable nodes get -1. int32."""
    dist = np.full(g.n, -1, dtype=np.int32)
    if g.n == 0:
        return dist
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    d = 0
    indptr, indices = g.indptr, g.indices
    while frontier.size:
        starts = indptr[frontier]
        ends = indptr[frontier + 1]
        counts = ends - starts
        total = int(counts.sum())
        if total == 0:
            break
        # gather all neighbors of the frontier in one shot
        shifted = starts + counts - np.cumsum(counts)
        flat = np.repeat(shifted, counts) + np.arange(total, dtype=np.int64)
        nbrs = indices[flat]
        nbrs = nbrs[dist[nbrs] < 0]
        if nbrs.size == 0:
            break
        nbrs = np.unique(nbrs)
        d += 1
        dist[nbrs] = d
        frontier = nbrs
    return dist


def all_pairs_distances(g: Graph, max_nodes: int = APSP_MAX_NODES) -> np.ndarray:
    """Dense hop-distance matrix via repeated BFS. (n, n) int32, -1 = unreachable."""
    if g.n > max_nodes:
        raise ValueError(f"all-pairs distances refused for n={g.n} > {max_nodes}")
    out = np.empty((g.n, g.n), dtype=np.int32)
    for v in range(g.n):
        out[v] = bfs_distances(g, v)
    return out


def connected_components(g: Graph) -> np.ndarray:
    """Component label per node, labels are 0..k-1 in discovery order."""
    label = np.full(g.n, -1, dtype=np.int64)
    nxt = 0
    for v in range(g.n):
        if label[v] >= 0:
            continue
        d = bfs_distances(g, v)
        label[d >= 0] = nxt
        nxt += 1
    return label


def is_connected(g: Graph) -> bool:
    if g.n <= 1:
        return True
    return bool((bfs_distances(g, 0) >= 0).all())


# ---------------------------------------------------------------------------
# generators


def path_graph(n: int) -> Graph:
    e = [(i, i + 1) for i in range(n - 1)]
    return build_graph(n, e)


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    e = [(i, (i + 1) % n) for i in range(n)]
    return build_graph(n, e)


def grid_graph(rows: int, cols: int) -> Graph:
    e = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                e.append((v, v + 1))
            if r + 1 < rows:
                e.append((v, v + cols))
    return build_graph(rows * cols, e)


def random_geometric_points(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random((n, 2))


def random_delaunay_graph(n: int, rng: np.random.Generator) -> Graph:
    """Delaunay triangulation of n uniform points in the unit square.

    Uses the package's own triangulator (rewire module) so generated graphs
    and rewiring share one geometry code path.
    """
    from .rewire import delaunay_edges

    pts = random_geometric_points(n, rng)
    edges = delaunay_edges(pts)
    return build_graph(n, edges, coords=pts)
