"""Positional rewiring: edge sets computed from layout coordinates.

Three constructions are provided:

* k-nearest-neighbor edges (kd-tree with a brute-force path for small inputs);
  directed, so every node receives from exactly min(k, n-1) senders,
* Delaunay triangulation edges (incremental Bowyer-Watson with a ghost vertex
  for the hull, so no oversized super-triangle enters the predicates),
* fixed-radius edges (spatial hash grid, inclusive threshold).

Ties in the kNN selection are broken by (distance^2, index) so the kd-tree
and the brute-force path agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RewiredEdges",
    "RewiringConfig",
    "knn_edges",
    "delaunay_triangles",
    "delaunay_edges",
    "radius_edges",
    "rewire",
]

GHOST = -1

# kNN switches from the kd-tree to one dense distance matrix below this
BRUTE_FORCE_MAX = 128
_LEAF_SIZE = 16

# predicates run on coordinates normalized into the unit square
_EPS_ORIENT = 1e-14
_EPS_INCIRCLE = 1e-13
_JITTER = 1e-9


@dataclass(frozen=True)
class RewiringConfig:
    kind: str = "knn"            # knn | delaunay | radius
    k: int = 8
    radius: float = 0.05
    brute_force_max: int = BRUTE_FORCE_MAX


@dataclass
class RewiredEdges:
    """Directed message edges src -> dst derived from positions."""

    src: np.ndarray
    dst: np.ndarray
    kind: str

    @property
    def count(self) -> int:
        return int(self.src.shape[0])


# ---------------------------------------------------------------------------
# k nearest neighbors


def _knn_brute(pts: np.ndarray, k: int) -> np.ndarray:
    n = pts.shape[0]
    sq = np.sum(pts * pts, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, np.inf)
    idx = np.broadcast_to(np.arange(n, dtype=np.int64), (n, n))
    order = np.lexsort((idx, d2), axis=-1)
    return order[:, :k]


class _KdTree:
    """Static kd-tree over 2-d (or d-d) points, bucketed leaves."""

    def __init__(self, pts: np.ndarray, leaf_size: int = _LEAF_SIZE):
        self.pts = pts
        self.leaf_size = leaf_size
        # node storage: parallel lists
        self.split_dim: list[int] = []
        self.split_val: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.leaf_idx: list[np.ndarray | None] = []
        self.root = self._build(np.arange(pts.shape[0], dtype=np.int64))

    def _new_node(self):
        self.split_dim.append(-1)
        self.split_val.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_idx.append(None)
        return len(self.split_dim) - 1

    def _build(self, idx: np.ndarray) -> int:
        node = self._new_node()
        if idx.shape[0] <= self.leaf_size:
            self.leaf_idx[node] = idx
            return node
        sub = self.pts[idx]
        spans = sub.max(axis=0) - sub.min(axis=0)
        dim = int(np.argmax(spans))
        if spans[dim] <= 0.0:
            # all points coincide along every axis: keep as one leaf
            self.leaf_idx[node] = idx
            return node
        half = idx.shape[0] // 2
        part = np.argpartition(sub[:, dim], half)
        lo, hi = part[:half], part[half:]
        self.split_dim[node] = dim
        # boundary value: everything in lo is <= everything in hi along dim
        self.split_val[node] = float(sub[part[half], dim])
        self.left[node] = self._build(idx[lo])
        self.right[node] = self._build(idx[hi])
        return node

    def query(self, q: np.ndarray, k: int, exclude: int) -> np.ndarray:
        """Indices of the k nearest points to q under (d^2, index) order."""
        best_d2 = np.full(k, np.inf)
        best_ix = np.full(k, self.pts.shape[0], dtype=np.int64)
        stack = [(self.root, 0.0)]
        while stack:
            node, bound = stack.pop()
            if bound > best_d2[-1]:
                continue
            leaf = self.leaf_idx[node]
            if leaf is not None:
                cand = leaf[leaf != exclude]
                if cand.size == 0:
                    continue
                diff = self.pts[cand] - q
                d2 = np.sum(diff * diff, axis=1)
                all_d2 = np.concatenate([best_d2, d2])
                all_ix = np.concatenate([best_ix, cand])
                keep = np.lexsort((all_ix, all_d2))[:k]
                best_d2 = all_d2[keep]
                best_ix = all_ix[keep]
                continue
            dim = self.split_dim[node]
            diff = q[dim] - self.split_val[node]
            plane = diff * diff
            if diff <= 0.0:
                stack.append((self.right[node], plane))
                stack.append((self.left[node], bound))
            else:
                stack.append((self.left[node], plane))
                stack.append((self.right[node], bound))
        return best_ix[np.isfinite(best_d2)]


def knn_edges(points: np.ndarray, k: int,
              brute_force_max: int = BRUTE_FORCE_MAX):
    """Directed kNN edges (src, dst): node dst receives from its k nearest.

    Every node's in-degree is exactly min(k, n-1).
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n = pts.shape[0]
    kk = min(k, n - 1)
    if kk <= 0:
        z = np.empty(0, dtype=np.int64)
        return z, z
    if n <= brute_force_max or kk >= n - 1:
        nearest = _knn_brute(pts, kk)
    else:
        tree = _KdTree(pts)
        nearest = np.empty((n, kk), dtype=np.int64)
        for v in range(n):
            nearest[v] = tree.query(pts[v], kk, exclude=v)
    dst = np.repeat(np.arange(n, dtype=np.int64), kk)
    src = nearest.reshape(-1)
    return src, dst


# ---------------------------------------------------------------------------
# Delaunay triangulation


def _orient(pts, a, b, c) -> float:
    return ((pts[b, 0] - pts[a, 0]) * (pts[c, 1] - pts[a, 1])
            - (pts[b, 1] - pts[a, 1]) * (pts[c, 0] - pts[a, 0]))


def _in_circle(pts, a, b, c, p) -> float:
    """> 0 when p lies strictly inside the circumcircle of ccw (a, b, c)."""
    adx = pts[a, 0] - pts[p, 0]
    ady = pts[a, 1] - pts[p, 1]
    bdx = pts[b, 0] - pts[p, 0]
    bdy = pts[b, 1] - pts[p, 1]
    cdx = pts[c, 0] - pts[p, 0]
    cdy = pts[c, 1] - pts[p, 1]
    ad = adx * adx + ady * ady
    bd = bdx * bdx + bdy * bdy
    cd = cdx * cdx + cdy * cdy
    return (adx * (bdy * cd - bd * cdy)
            - ady * (bdx * cd - bd * cdx)
            + ad * (bdx * cdy - bdy * cdx))


def _morton_order(pts: np.ndarray) -> np.ndarray:
    """Z-curve order for locality of successive insertions."""
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    span[span <= 0] = 1.0
    q = ((pts - lo) / span * 65535.0).astype(np.uint64)

    def spread(x):
        x = (x | (x << 16)) & np.uint64(0x0000FFFF0000FFFF)
        x = (x | (x << 8)) & np.uint64(0x00FF00FF00FF00FF)
        x = (x | (x << 4)) & np.uint64(0x0F0F0F0F0F0F0F0F)
        x = (x | (x << 2)) & np.uint64(0x3333333333333333)
        x = (x | (x << 1)) & np.uint64(0x5555555555555555)
        return x

    code = spread(q[:, 0]) | (spread(q[:, 1]) << np.uint64(1))
    return np.lexsort((np.arange(pts.shape[0]), code))


class _Triangulation:
    """Incremental Delaunay state: triangle soup with neighbor links.

    Vertex id GHOST (-1) marks hull triangles; every ghost triangle has
    exactly one ghost vertex. Neighbor slot i sits across the edge opposite
    vertex i.
    """

    def __init__(self, pts):
        self.pts = pts
        self.tri = []       # [a, b, c]
        self.nbr = []       # [n0, n1, n2]
        self.alive = []
        self.hint = 0       # a live real triangle to start walks from

    def _add(self, a, b, c):
        self.tri.append([a, b, c])
        self.nbr.append([-1, -1, -1])
        self.alive.append(True)
        return len(self.tri) - 1

    def start(self, i0, i1, i2):
        if _orient(self.pts, i0, i1, i2) < 0:
            i1, i2 = i2, i1
        t = self._add(i0, i1, i2)
        g0 = self._add(i1, i0, GHOST)
        g1 = self._add(i2, i1, GHOST)
        g2 = self._add(i0, i2, GHOST)
        self.nbr[t] = [g1, g2, g0]
        self.nbr[g0] = [g2, g1, t]
        self.nbr[g1] = [g0, g2, t]
        self.nbr[g2] = [g1, g0, t]
        self.hint = t

    def _contains_in_circle(self, t: int, p: int) -> bool:
        a, b, c = self.tri[t]
        if GHOST in (a, b, c):
            k = self.tri[t].index(GHOST)
            u = self.tri[t][(k + 1) % 3]
            v = self.tri[t][(k + 2) % 3]
            o = _orient(self.pts, u, v, p)
            if o > _EPS_ORIENT:
                return True
            if abs(o) <= _EPS_ORIENT:
                du = self.pts[p] - self.pts[u]
                uv = self.pts[v] - self.pts[u]
                t_par = float(du @ uv)
                return 0.0 < t_par < float(uv @ uv)
            return False
        return _in_circle(self.pts, a, b, c, p) > _EPS_INCIRCLE

    def _locate(self, p: int) -> int:
        """Visibility walk from the hint toward point p."""
        t = self.hint
        prev = -1
        for _ in range(16 * len(self.tri) + 64):
            verts = self.tri[t]
            if GHOST in verts:
                return t
            moved = False
            for i in range(3):
                u = verts[(i + 1) % 3]
                v = verts[(i + 2) % 3]
                if _orient(self.pts, u, v, p) < -_EPS_ORIENT:
                    nxt = self.nbr[t][i]
                    if nxt == prev:
                        continue
                    prev, t = t, nxt
                    moved = True
                    break
            if not moved:
                return t
        # degenerate safety net: scan everything
        for t in range(len(self.tri)):
            if self.alive[t] and self._contains_in_circle(t, p):
                return t
        raise RuntimeError("point location failed")

    def insert(self, p: int):
        seed = self._locate(p)
        # cavity = connected set of triangles whose circumdisk holds p;
        # the seed is kept even in degenerate cocircular cases
        cavity = {seed}
        queue = [seed]
        while queue:
            t = queue.pop()
            for nt in self.nbr[t]:
                if nt not in cavity and self._contains_in_circle(nt, p):
                    cavity.add(nt)
                    queue.append(nt)
        # boundary of the cavity as directed edges with cavity on the left,
        # plus the outer triangle across each edge and its backlink slot
        boundary = []
        for t in cavity:
            for i in range(3):
                outer = self.nbr[t][i]
                if outer not in cavity:
                    u = self.tri[t][(i + 1) % 3]
                    v = self.tri[t][(i + 2) % 3]
                    boundary.append((u, v, outer, self.nbr[outer].index(t)))
        for t in cavity:
            self.alive[t] = False
        pending = {}
        for u, v, outer, oslot in boundary:
            nt = self._add(u, v, p)       # vertices [u, v, p]: (u, v) sits at slot 2
            self.nbr[nt][2] = outer
            self.nbr[outer][oslot] = nt
            # stitch the two new side edges (v, p) and (p, u) with their twins
            for slot, edge in ((0, (v, p)), (1, (p, u))):
                twin = (edge[1], edge[0])
                if twin in pending:
                    ot, ot_slot = pending.pop(twin)
                    self.nbr[nt][slot] = ot
                    self.nbr[ot][ot_slot] = nt
                else:
                    pending[edge] = (nt, slot)
            if u != GHOST and v != GHOST:
                self.hint = nt
        assert not pending, "cavity boundary did not close"

    def real_triangles(self):
        out = []
        for t, (a, b, c) in enumerate(self.tri):
            if self.alive[t] and GHOST not in (a, b, c):
                out.append((a, b, c))
        return out


def _normalize_points(points: np.ndarray) -> np.ndarray:
    """Translate and uniformly scale into the unit box (shape-preserving)."""
    pts = np.array(points, dtype=np.float64, copy=True)
    if pts.shape[0] == 0:
        return pts
    lo = pts.min(axis=0)
    span = float((pts.max(axis=0) - lo).max())
    if span <= 0.0:
        return pts - lo
    return (pts - lo) / span


def _jitter_duplicates(pts: np.ndarray) -> np.ndarray:
    """Deterministically separate exactly coincident points."""
    seen: dict[tuple, int] = {}
    for i in range(pts.shape[0]):
        key = (float(pts[i, 0]), float(pts[i, 1]))
        while key in seen:
            k = seen[key] = seen[key] + 1
            pts[i, 0] += k * _JITTER
            pts[i, 1] += k * 2.0 * _JITTER
            key = (float(pts[i, 0]), float(pts[i, 1]))
        seen[key] = 0
    return pts


def _collinear_chain(pts: np.ndarray) -> np.ndarray:
    """Fallback for degenerate inputs: connect points along their span."""
    n = pts.shape[0]
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    span = pts.max(axis=0) - pts.min(axis=0)
    axis = int(np.argmax(span))
    order = np.lexsort((np.arange(n), pts[:, 1 - axis], pts[:, axis]))
    return np.stack([order[:-1], order[1:]], axis=1)


def delaunay_triangles(points: np.ndarray) -> list[tuple[int, int, int]]:
    """Delaunay triangles of a 2-d point set as index triples.

    Exactly cocircular quadruples keep whichever diagonal the insertion
    order produced (both choices satisfy the empty-circumcircle property
    with a non-strict boundary). Degenerate inputs give an empty list.
    """
    pts = _normalize_points(np.asarray(points, dtype=np.float64))
    n = pts.shape[0]
    if n < 3:
        return []
    pts = _jitter_duplicates(pts)

    i0 = 0
    i1 = next((i for i in range(n) if not np.array_equal(pts[i], pts[i0])), -1)
    if i1 < 0:
        return []
    i2 = -1
    for i in range(n):
        if i in (i0, i1):
            continue
        if abs(_orient(pts, i0, i1, i)) > 1e-12:
            i2 = i
            break
    if i2 < 0:
        return []

    tn = _Triangulation(pts)
    tn.start(i0, i1, i2)
    rest = [int(i) for i in _morton_order(pts) if i not in (i0, i1, i2)]
    for p in rest:
        tn.insert(p)
    return tn.real_triangles()


def delaunay_edges(points: np.ndarray) -> np.ndarray:
    """Undirected Delaunay edges (m, 2) with u < v, sorted; collinear and
    too-small inputs fall back to a chain along the span."""
    points = np.asarray(points, dtype=np.float64)
    tris = delaunay_triangles(points)
    if not tris:
        return _collinear_chain(_normalize_points(points))
    pairs = set()
    for a, b, c in tris:
        pairs.add((min(a, b), max(a, b)))
        pairs.add((min(b, c), max(b, c)))
        pairs.add((min(a, c), max(a, c)))
    out = np.array(sorted(pairs), dtype=np.int64)
    return out


# ---------------------------------------------------------------------------
# fixed radius


def radius_edges(points: np.ndarray, radius: float) -> np.ndarray:
    """Undirected pairs at Euclidean distance <= radius (inclusive)."""
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if n < 2 or radius < 0:
        return np.empty((0, 2), dtype=np.int64)
    cell = max(radius, 1e-300)
    grid: dict[tuple[int, int], list[int]] = {}
    cx = np.floor(pts[:, 0] / cell).astype(np.int64)
    cy = np.floor(pts[:, 1] / cell).astype(np.int64)
    for i in range(n):
        grid.setdefault((int(cx[i]), int(cy[i])), []).append(i)
    r2 = radius * radius
    pairs = []
    for i in range(n):
        gx, gy = int(cx[i]), int(cy[i])
        cand = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                cand.extend(grid.get((gx + dx, gy + dy), ()))
        cand = np.asarray(cand, dtype=np.int64)
        cand = cand[cand > i]
        if cand.size == 0:
            continue
        diff = pts[cand] - pts[i]
        d2 = np.sum(diff * diff, axis=1)
        for j in cand[d2 <= r2]:
            pairs.append((i, int(j)))
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    return np.array(sorted(pairs), dtype=np.int64)


# ---------------------------------------------------------------------------
# dispatch


def rewire(positions: np.ndarray, config: RewiringConfig) -> RewiredEdges:
    """Message edges derived from current positions, per the configured rule.

    kNN edges stay directed (receiver draws from its k nearest); Delaunay
    and radius edges are expanded to both directions.
    """
    pos = np.asarray(positions, dtype=np.float64)
    if config.kind == "knn":
        src, dst = knn_edges(pos, config.k, config.brute_force_max)
        return RewiredEdges(src=src, dst=dst, kind="knn")
    if config.kind == "delaunay":
        e = delaunay_edges(pos)
    elif config.kind == "radius":
        e = radius_edges(pos, config.radius)
    else:
        raise ValueError(f"unknown rewiring kind: {config.kind!r}")
    src = np.concatenate([e[:, 0], e[:, 1]])
    dst = np.concatenate([e[:, 1], e[:, 0]])
    return RewiredEdges(src=src, dst=dst, kind=config.kind)

