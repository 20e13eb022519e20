"""Initial node features for the layout engine.

Three blocks, concatenated in a fixed order so the feature width is a
function of the config alone:

* spectral coordinates: eigenvectors of the symmetric normalized Laplacian
  for the smallest non-trivial eigenvalues, with random per-column sign
  flips (the sign of an eigenvector is arbitrary; flipping it at every
  recomputation stops the model from memorizing one convention),
* beacon distances: hop distances to a few randomly chosen nodes, passed
  through the usual sinusoidal position encoding,
* one uniform random channel, which lets the (deterministic) message
  passing break symmetries between structurally equivalent nodes.

RNG use order is fixed: sign flips, then beacon choice, then the random
channel. Features are meant to be resampled for every epoch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, bfs_distances

__all__ = [
    "FeatureConfig",
    "laplacian_eigenvectors",
    "choose_beacons",
    "beacon_features",
    "assemble_features",
]

# dense eigendecomposition below this node count, Lanczos above
_DENSE_CUTOFF = 512


@dataclass(frozen=True)
class FeatureConfig:
    n_eigenvectors: int = 8
    n_beacons: int = 2
    beacon_encoding: int = 8      # values per beacon, interleaved sin/cos
    n_random: int = 1
    sinusoid_base: float = 10000.0
    skip_trivial: bool = True     # drop the constant eigenvector

    @property
    def width(self) -> int:
        return self.n_eigenvectors + self.n_beacons * self.beacon_encoding + self.n_random


def _normalized_laplacian_dense(g: Graph) -> np.ndarray:
    n = g.n
    a = np.zeros((n, n), dtype=np.float64)
    w = g.edge_weight_array()
    if g.m:
        a[g.edges[:, 0], g.edges[:, 1]] = w
        a[g.edges[:, 1], g.edges[:, 0]] = w
    deg = a.sum(axis=1)
    inv_sqrt = np.zeros(n)
    pos = deg > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(deg[pos])
    lap = -inv_sqrt[:, None] * a * inv_sqrt[None, :]
    lap[np.diag_indices(n)] += 1.0
    return lap


def laplacian_eigenvectors(g: Graph, k: int, rng: np.random.Generator,
                           skip_trivial: bool = True) -> np.ndarray:
    """(n, k) eigenvectors of the normalized Laplacian, smallest eigenvalues
    first, optionally dropping the trivial one, sign-flipped per column and
    zero-padded on the right when the graph is too small to supply k."""
    n = g.n
    out = np.zeros((n, k), dtype=np.float64)
    if n <= 1 or k == 0:
        _ = rng.integers(0, 2, size=k)      # keep rng stream position fixed
        return out
    skip = 1 if skip_trivial else 0
    want = min(k + skip, n)
    if n <= _DENSE_CUTOFF:
        lap = _normalized_laplacian_dense(g)
        _, vecs = np.linalg.eigh(lap)       # ascending eigenvalues
        vecs = vecs[:, :want]
    else:
        vecs = _lanczos_eigenvectors(g, want, rng)
    vecs = vecs[:, skip:skip + k]
    flips = rng.integers(0, 2, size=k) * 2 - 1
    out[:, :vecs.shape[1]] = vecs * flips[:vecs.shape[1]]
    return out


def _lanczos_eigenvectors(g: Graph, want: int, rng: np.random.Generator) -> np.ndarray:
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    n = g.n
    w = g.edge_weight_array()
    rows = np.concatenate([g.edges[:, 0], g.edges[:, 1]])
    cols = np.concatenate([g.edges[:, 1], g.edges[:, 0]])
    vals = np.concatenate([w, w])
    a = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    deg = np.asarray(a.sum(axis=1)).ravel()
    inv_sqrt = np.zeros(n)
    pos = deg > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(deg[pos])
    d = sp.diags(inv_sqrt)
    lap = sp.identity(n, format="csr") - d @ a @ d
    v0 = rng.standard_normal(n)
    try:
        _, vecs = spla.eigsh(lap, k=want, which="SA", v0=v0,
                             maxiter=50 * n, tol=1e-8)
    except Exception:
        lap_d = _normalized_laplacian_dense(g)
        _, vecs = np.linalg.eigh(lap_d)
        vecs = vecs[:, :want]
    return vecs[:, :want]


def choose_beacons(g: Graph, n_beacons: int, rng: np.random.Generator) -> np.ndarray:
    """Beacon node ids, uniform without replacement; when the graph has
    fewer nodes than beacons the chosen ids repeat cyclically so the
    feature width stays fixed."""
    if g.n == 0:
        return np.zeros(n_beacons, dtype=np.int64)
    base = rng.choice(g.n, size=min(n_beacons, g.n), replace=False)
    if base.shape[0] < n_beacons:
        reps = -(-n_beacons // base.shape[0])
        base = np.tile(base, reps)[:n_beacons]
    return base.astype(np.int64)


def _sinusoid(d: np.ndarray, enc: int, base: float) -> np.ndarray:
    """Interleaved sin/cos encoding of nonnegative integers, (n, enc)."""
    half = enc // 2
    i = np.arange(half, dtype=np.float64)
    freq = base ** (2.0 * i / enc)
    angles = d[:, None].astype(np.float64) / freq[None, :]
    out = np.empty((d.shape[0], 2 * half), dtype=np.float64)
    out[:, 0::2] = np.sin(angles)
    out[:, 1::2] = np.cos(angles)
    return out[:, :enc]


def beacon_features(g: Graph, beacons: np.ndarray, enc: int,
                    base: float = 10000.0) -> np.ndarray:
    """(n, len(beacons) * enc) sinusoidal encodings of hop distances."""
    blocks = []
    for b in beacons:
        d = bfs_distances(g, int(b)).astype(np.float64)
        d[d < 0] = float(g.n)        # unreachable: finite sentinel
        blocks.append(_sinusoid(d, enc, base))
    if not blocks:
        return np.zeros((g.n, 0), dtype=np.float64)
    return np.concatenate(blocks, axis=1)


def assemble_features(g: Graph, rng: np.random.Generator,
                      config: FeatureConfig | None = None) -> np.ndarray:
    """Full (n, F) feature matrix; F == config.width regardless of n."""
    cfg = config or FeatureConfig()
    spectral = laplacian_eigenvectors(g, cfg.n_eigenvectors, rng,
                                      skip_trivial=cfg.skip_trivial)
    beacons = choose_beacons(g, cfg.n_beacons, rng)
    enc = beacon_features(g, beacons, cfg.beacon_encoding, cfg.sinusoid_base)
    rand = rng.random((g.n, cfg.n_random))
    return np.concatenate([spectral, enc, rand], axis=1)
