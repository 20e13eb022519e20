"""Classical layout baselines: pivot-based MDS and stochastic stress descent.

Both operate on hop distances and are deterministic given their RNG. They
serve as quality anchors: the sparse spectral method is fast but coarse,
the pairwise SGD is slow but lands close to a stress local optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, bfs_distances, is_connected

__all__ = ["SgdSchedule", "pivot_mds", "stress_sgd"]


def _check_connected(g: Graph):
    if not is_connected(g):
        raise ValueError("baseline layouts require a connected graph")


def _maxmin_pivots(g: Graph, n_pivots: int, rng: np.random.Generator):
    """First pivot uniform, the rest by farthest-first hop distance,
    ties by smaller node id. Returns (pivots, hop distance columns)."""
    first = int(rng.integers(0, g.n))
    pivots = [first]
    cols = [bfs_distances(g, first).astype(np.float64)]
    nearest = cols[0].copy()
    while len(pivots) < min(n_pivots, g.n):
        nxt = int(np.argmax(nearest))        # argmax takes the smallest index on ties
        if nearest[nxt] <= 0:
            break                            # every node already is a pivot
        pivots.append(nxt)
        cols.append(bfs_distances(g, nxt).astype(np.float64))
        np.minimum(nearest, cols[-1], out=nearest)
    return pivots, np.stack(cols, axis=1)


def _power_iteration(b: np.ndarray, rng: np.random.Generator,
                     iters: int = 500, tol: float = 1e-12):
    """Dominant eigenpair of a symmetric PSD matrix."""
    v = rng.standard_normal(b.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = b @ v
        norm = np.linalg.norm(w)
        if norm <= tol:
            return 0.0, v
        w /= norm
        if np.linalg.norm(w - v) < tol:
            v = w
            break
        v = w
    lam = float(v @ b @ v)
    return lam, v


def _unit_square_rescale(x: np.ndarray) -> np.ndarray:
    """Uniform (shape-preserving) affine map into the unit square."""
    lo = x.min(axis=0)
    span = float((x.max(axis=0) - lo).max())
    if span <= 0.0:
        return np.full_like(x, 0.5)
    return (x - lo) / span


def pivot_mds(g: Graph, rng: np.random.Generator, n_pivots: int = 10,
              dim: int = 2) -> np.ndarray:
    """Sparse classical MDS against a handful of pivot nodes.

    The n x p matrix of squared hop distances is double-centered and its top
    left singular directions, scaled by the singular values, give the
    coordinates (computed as C @ v_i with v_i eigenvectors of C^T C, so only
    a p x p eigenproblem is ever solved). Output lives in the unit square.
    """
    if n_pivots < dim:
        raise ValueError(f"need at least {dim} pivots for a {dim}-d layout")
    _check_connected(g)
    n = g.n
    if n == 1:
        return np.full((1, dim), 0.5)
    _, d = _maxmin_pivots(g, n_pivots, rng)
    sq = d * d
    centered = -0.5 * (sq
                       - sq.mean(axis=0, keepdims=True)
                       - sq.mean(axis=1, keepdims=True)
                       + sq.mean())
    b = centered.T @ centered
    coords = np.zeros((n, dim))
    for i in range(min(dim, b.shape[0])):
        lam, v = _power_iteration(b, rng)
        if lam <= 0.0:
            break
        coords[:, i] = centered @ v
        b = b - lam * np.outer(v, v)
    return _unit_square_rescale(coords)


@dataclass(frozen=True)
class SgdSchedule:
    """Exponential step-size annealing for the pairwise stress descent.

    eta_max defaults to the largest graph distance squared, which makes
    every pair's capped step mu = min(1, w * eta) start at 1. eta_min is
    where the decay ends after `iterations` sweeps.
    """

    iterations: int = 60
    eta_max: float | None = None
    eta_min: float = 0.1

    def etas(self, d_max: float) -> np.ndarray:
        hi = float(d_max) ** 2 if self.eta_max is None else self.eta_max
        lo = self.eta_min
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not (hi >= lo > 0.0):
            raise ValueError("need eta_max >= eta_min > 0")
        if self.iterations == 1 or hi == lo:
            return np.full(self.iterations, hi)
        t = np.arange(self.iterations) / (self.iterations - 1)
        return hi * (lo / hi) ** t


def stress_sgd(g: Graph, rng: np.random.Generator,
               schedule: SgdSchedule | None = None,
               dist: np.ndarray | None = None) -> np.ndarray:
    """Stochastic gradient descent on stress over shuffled node pairs.

    Each pair move is capped at mu = min(1, w * eta_t). Positions start
    uniform in the unit square and the final layout is mapped back into it.
    """
    _check_connected(g)
    if schedule is None:
        schedule = SgdSchedule()
    n = g.n
    pos = rng.random((n, 2))
    if n < 2:
        return pos
    if dist is None:
        from .graph import all_pairs_distances

        dist = all_pairs_distances(g)
    d = dist.astype(np.float64)
    iu, iv = np.triu_indices(n, k=1)
    dpair = d[iu, iv]
    wpair = 1.0 / (dpair * dpair)
    n_pairs = iu.shape[0]
    for eta in schedule.etas(dpair.max()):
        mu = np.minimum(1.0, wpair * eta)
        order = rng.permutation(n_pairs)
        for k in order:
            u = iu[k]
            v = iv[k]
            delta = pos[u] - pos[v]
            norm = float(np.hypot(delta[0], delta[1]))
            if norm <= 0.0:
                delta = np.array([1e-9, 0.0])     # deterministic untangling nudge
                norm = 1e-9
            r = (mu[k] * 0.5) * (norm - dpair[k]) / norm
            move = r * delta
            pos[u] -= move
            pos[v] += move
    return _unit_square_rescale(pos)
