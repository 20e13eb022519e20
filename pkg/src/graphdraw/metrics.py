"""Layout quality metrics.

Stress is summed over ordered pairs (u, v), u != v, so every unordered pair
contributes twice. Weights are the standard w_uv = d_uv^-2, which makes the
metric dimensionless per pair. The scale-invariant variant rescales the
layout by the closed-form optimal factor before measuring, so layouts are
compared by shape alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, all_pairs_distances, is_connected

__all__ = [
    "StressReport",
    "euclidean_distances",
    "stress",
    "optimal_scale",
    "scale_invariant_stress",
    "graph_stress_report",
]

# below this the closed-form scale denominator is treated as zero
_SCALE_DENOM_FLOOR = 1e-12
# row sums are combined with math.fsum above this node count
_FSUM_THRESHOLD = 1000


@dataclass(frozen=True)
class StressReport:
    raw: float                 # stress of the layout as given
    alpha: float               # closed-form optimal scale factor
    scale_invariant: float     # stress of alpha * layout
    normalized: float          # scale_invariant / n^2


def euclidean_distances(pos: np.ndarray) -> np.ndarray:
    """Dense pairwise Euclidean distance matrix, (n, n) float64."""
    pos = np.asarray(pos, dtype=np.float64)
    sq = np.sum(pos * pos, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pos @ pos.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)


def _check_inputs(dist: np.ndarray, pos: np.ndarray) -> int:
    n = pos.shape[0]
    if dist.shape != (n, n):
        raise ValueError("distance matrix must be (n, n) matching layout rows")
    return n


def _row_terms(dist, pos, u):
    """Per-target stress pieces for source row u: (w, d, |delta|) over v != u."""
    d = dist[u].astype(np.float64)
    delta = pos - pos[u]
    norm = np.sqrt(np.sum(delta * delta, axis=1))
    mask = np.ones(d.shape[0], dtype=bool)
    mask[u] = False
    d = d[mask]
    if np.any(d <= 0):
        raise ValueError("graph-theoretic distances must be positive off the diagonal "
                         "(is the graph connected?)")
    return d, norm[mask]


def _accumulate(rows, n):
    if n > _FSUM_THRESHOLD:
        return math.fsum(rows)
    return float(sum(rows))


def stress(dist: np.ndarray, pos: np.ndarray) -> float:
    """Ordered-pair stress sum_{u != v} (|p_u - p_v| - d_uv)^2 / d_uv^2."""
    n = _check_inputs(dist, pos)
    if n < 2:
        return 0.0
    rows = []
    for u in range(n):
        d, norm = _row_terms(dist, pos, u)
        r = (norm - d) / d
        rows.append(float(np.dot(r, r)))
    return _accumulate(rows, n)


def optimal_scale(dist: np.ndarray, pos: np.ndarray) -> float:
    """Closed-form minimizer of stress(dist, a * pos) over a.

    a* = sum w |delta| d / sum w |delta|^2 with w = d^-2. Returns 1.0 for
    degenerate layouts (all points coincident) so scaling is a no-op.
    """
    n = _check_inputs(dist, pos)
    if n < 2:
        return 1.0
    num_rows, den_rows = [], []
    for u in range(n):
        d, norm = _row_terms(dist, pos, u)
        num_rows.append(float(np.sum(norm / d)))
        den_rows.append(float(np.sum((norm * norm) / (d * d))))
    num = _accumulate(num_rows, n)
    den = _accumulate(den_rows, n)
    if den <= _SCALE_DENOM_FLOOR:
        return 1.0
    return num / den


def scale_invariant_stress(dist: np.ndarray, pos: np.ndarray) -> StressReport:
    """Stress report for pos: raw, optimal scale, scaled stress, normalized."""
    pos = np.asarray(pos, dtype=np.float64)
    n = pos.shape[0]
    if n < 2:
        return StressReport(raw=0.0, alpha=1.0, scale_invariant=0.0, normalized=0.0)
    raw = stress(dist, pos)
    alpha = optimal_scale(dist, pos)
    si = stress(dist, alpha * pos)
    return StressReport(raw=raw, alpha=alpha, scale_invariant=si,
                        normalized=si / float(n * n))


def graph_stress_report(g: Graph, pos: np.ndarray) -> StressReport:
    """Convenience wrapper computing hop distances first. Connected graphs only."""
    if not is_connected(g):
        raise ValueError("stress metrics require a connected graph")
    dist = all_pairs_distances(g)
    return scale_invariant_stress(dist, np.asarray(pos, dtype=np.float64))
