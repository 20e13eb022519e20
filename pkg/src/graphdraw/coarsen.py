"""Graph coarsening by repeated heavy-edge matching.

One coarsening step contracts matched edges until the supernode count
drops to max(ceil(rho * n), 1). A single maximal matching can stall well
above that target (a star matches only one pair), so the step runs
matching passes repeatedly on the working partition until the target is
reached or no edge joins two distinct groups.

Determinism: candidate edges are ranked by (weight descending, smaller
endpoint, larger endpoint); supernode ids are assigned by the smallest
original vertex index contained in each group.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, build_graph

__all__ = ["CoarsenConfig", "Hierarchy", "coarsen_once", "build_hierarchy",
           "lift_embeddings"]


@dataclass(frozen=True)
class CoarsenConfig:
    rho: float = 0.8          # target shrink factor per level
    n_min: int = 20           # stop coarsening at or below this size
    noise_sigma: float = 0.01  # lift noise scale


@dataclass
class Hierarchy:
    """Coarsest-first sequence of graphs; parents[i] maps nodes of
    graphs[i+1] onto nodes of graphs[i]. graphs[-1] is the input graph."""

    graphs: list[Graph] = field(default_factory=list)
    parents: list[np.ndarray] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.graphs)


def _matching_pass(n: int, edges: np.ndarray, weights: np.ndarray,
                   group_of: np.ndarray, n_groups: int, target: int) -> int:
    """Greedy maximal matching over groups; contracts in place by relabeling
    group_of. Group labels live sparsely in 0..n-1 (a merged group keeps the
    smaller label), so bookkeeping arrays are sized by n, not by the current
    group count. Returns the new group count."""
    if edges.shape[0] == 0:
        return n_groups
    gu = group_of[edges[:, 0]]
    gv = group_of[edges[:, 1]]
    mask = gu != gv
    gu, gv, w = gu[mask], gv[mask], weights[mask]
    if gu.shape[0] == 0:
        return n_groups
    lo = np.minimum(gu, gv)
    hi = np.maximum(gu, gv)
    # merge parallel group edges by weight sum
    key = lo.astype(np.int64) * np.int64(n) + hi
    order = np.argsort(key, kind="stable")
    key, lo, hi, w = key[order], lo[order], hi[order], w[order]
    first = np.empty(key.shape, dtype=bool)
    first[0] = True
    np.not_equal(key[1:], key[:-1], out=first[1:])
    seg = np.cumsum(first) - 1
    wsum = np.zeros(int(seg[-1]) + 1)
    np.add.at(wsum, seg, w)
    lo, hi = lo[first], hi[first]
    # rank: heavier first, ties by endpoints
    rank = np.lexsort((hi, lo, -wsum))
    matched = np.zeros(n, dtype=bool)
    merges = []
    count = n_groups
    for e in rank:
        if count <= target:
            break
        a, b = int(lo[e]), int(hi[e])
        if matched[a] or matched[b]:
            continue
        matched[a] = matched[b] = True
        merges.append((a, b))
        count -= 1
    if not merges:
        return n_groups
    remap = np.arange(n, dtype=np.int64)
    for a, b in merges:
        remap[b] = a
    group_of[:] = remap[group_of]
    return count


def coarsen_once(g: Graph, rho: float = 0.8):
    """One coarsening level. Returns (coarse_graph, parent) where parent
    maps every fine node to its supernode, or None when nothing can be
    contracted (no edges)."""
    n = g.n
    if n <= 1 or g.m == 0:
        return None
    target = max(int(np.ceil(rho * n)), 1)
    if target >= n:
        target = n - 1
    group_of = np.arange(n, dtype=np.int64)
    w = g.edge_weight_array()
    count = n
    while count > target:
        new_count = _matching_pass(n, g.edges, w, group_of, count, target)
        if new_count == count:
            break       # no edge joins two distinct groups anymore
        count = new_count
    if count == n:
        return None
    # canonical ids: order groups by their smallest fine vertex
    reps = np.full(n, -1, dtype=np.int64)
    order = []
    for v in range(n):
        gid = group_of[v]
        if reps[gid] < 0:
            reps[gid] = len(order)
            order.append(gid)
    parent = reps[group_of]
    nc = len(order)
    ce = np.stack([parent[g.edges[:, 0]], parent[g.edges[:, 1]]], axis=1)
    keep = ce[:, 0] != ce[:, 1]
    coarse = build_graph(nc, ce[keep], weights=w[keep])
    return coarse, parent


def build_hierarchy(g: Graph, config: CoarsenConfig | None = None) -> Hierarchy:
    """Coarsest-first hierarchy ending at the input graph.

    Coarsening stops once the size reaches config.n_min, an attempted
    level fails to shrink, or the graph has no edges. Always contains at
    least the input graph itself.
    """
    cfg = config or CoarsenConfig()
    chain = [g]
    maps = []
    current = g
    while current.n > cfg.n_min:
        step = coarsen_once(current, cfg.rho)
        if step is None:
            break
        coarse, parent = step
        if coarse.n >= current.n:
            break
        chain.append(coarse)
        maps.append(parent)
        current = coarse
    chain.reverse()
    maps.reverse()
    return Hierarchy(graphs=chain, parents=maps)


def lift_embeddings(h_coarse: np.ndarray, parent: np.ndarray,
                    rng: np.random.Generator, noise_sigma: float = 0.01) -> np.ndarray:
    """Prolongate supernode embeddings to the finer level: each fine node
    copies its supernode's row plus small gaussian noise so merged nodes
    can separate."""
    lifted = h_coarse[parent]
    if noise_sigma > 0:
        lifted = lifted + rng.normal(0.0, noise_sigma, size=lifted.shape)
    return lifted
