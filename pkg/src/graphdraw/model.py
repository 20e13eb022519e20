"""The layout engine: a recurrent message-passing network that iteratively
refines node embeddings and decodes them into unit-square coordinates.

One optimization round is: two message-passing steps along the input graph's
edges (one shared parameter set, or two distinct ones when configured), then
a decode of current positions, a rewiring of
the point set (kNN by default), and one message-passing step along the
rewired edges with its own parameters. The positions used for rewiring are
decoded off-tape: which edges get created is a discrete choice, so no
gradient flows through it. After all rounds one more pass over the input
edges runs before the final decode.

On multi-level hierarchies the loop runs coarsest to finest; embeddings are
lifted to each finer level by copying the supernode row plus a little noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import tensor as T
from .coarsen import CoarsenConfig, Hierarchy, build_hierarchy, lift_embeddings
from .features import FeatureConfig, assemble_features
from .graph import Graph
from .nn import GRUCell, MLP, ParamStore, load_checkpoint, save_checkpoint
from .rewire import RewiringConfig, rewire

__all__ = ["EngineConfig", "LayoutModel", "sample_rounds", "layout_graph"]


@dataclass(frozen=True)
class EngineConfig:
    hidden_dim: int = 64
    out_dim: int = 2
    conv: str = "gru"                   # message passing flavor: gru | gin
    rounds_mean: float = 5.0
    rounds_std: float = 1.0
    use_hierarchy: bool = True
    # the two per-round passes over the input edges share one parameter set;
    # this flag gives the second pass its own set instead
    distinct_base_convs: bool = False
    features: FeatureConfig = field(default_factory=FeatureConfig)
    rewiring: RewiringConfig = field(default_factory=RewiringConfig)
    coarsen: CoarsenConfig = field(default_factory=CoarsenConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "EngineConfig":
        d = dict(d)
        d["features"] = FeatureConfig(**d.get("features", {}))
        d["rewiring"] = RewiringConfig(**d.get("rewiring", {}))
        d["coarsen"] = CoarsenConfig(**d.get("coarsen", {}))
        return EngineConfig(**d)


def sample_rounds(rng: np.random.Generator, mean: float, std: float) -> int:
    """Per-run round count: rounded gaussian, at least one round."""
    return max(1, int(round(rng.normal(mean, std))))


def _both_directions(g: Graph):
    src = np.concatenate([g.edges[:, 0], g.edges[:, 1]])
    dst = np.concatenate([g.edges[:, 1], g.edges[:, 0]])
    return src, dst


class _EdgeMessage:
    """Sum over in-edges of Theta([h_v | h_w]), Theta a two-layer MLP.

    Computed with node-sized matmuls instead of edge-sized ones: the first
    linear layer splits across the concatenation, so its halves apply to h
    before the gather; the second layer and the bias-times-degree term apply
    after the aggregation. Linearity makes both moves exact.
    """

    def __init__(self, store, name, hidden, rng):
        self.w0 = store.create(f"{name}.w0", (2 * hidden, hidden), rng)
        self.b0 = store.create(f"{name}.b0", (hidden,), rng, init="zeros")
        self.w1 = store.create(f"{name}.w1", (hidden, hidden), rng)
        self.b1 = store.create(f"{name}.b1", (hidden,), rng, init="zeros")
        self.hidden = hidden

    def __call__(self, h, src, dst, n):
        hid = self.hidden
        to_dst = T.matmul(h, T.slice_rows(self.w0, 0, hid))
        to_src = T.matmul(h, T.slice_rows(self.w0, hid, 2 * hid))
        edge = T.relu(T.add(T.add(T.gather_rows(to_dst, dst),
                                  T.gather_rows(to_src, src)), self.b0))
        agg = T.scatter_add_rows(edge, dst, n)
        deg = np.bincount(dst, minlength=n).astype(np.float64)[:, None]
        return T.add(T.matmul(agg, self.w1), T.mul(T.constant(deg), self.b1))


class _GruConv:
    """m_v = sum over in-neighbors of Theta([h_v | h_w]); h' = GRU(m, h)."""

    def __init__(self, store, name, hidden, rng):
        self.msg = _EdgeMessage(store, f"{name}.msg", hidden, rng)
        self.gru = GRUCell(store, f"{name}.gru", hidden, hidden, rng)

    def __call__(self, h, src, dst, n):
        if len(src) == 0:
            m = T.constant(np.zeros((n, h.shape[1])))
        else:
            m = self.msg(h, src, dst, n)
        return self.gru(m, h)


class _GinConv:
    """h' = Theta1((1 + eps) * h + sum Theta2([h_v | h_w])), eps learned."""

    def __init__(self, store, name, hidden, rng):
        self.msg = _EdgeMessage(store, f"{name}.msg", hidden, rng)
        self.update = MLP(store, f"{name}.update", hidden, hidden, hidden, rng)
        self.eps = store.create(f"{name}.eps", (), rng, init="zeros")

    def __call__(self, h, src, dst, n):
        scaled = T.mul(T.add(1.0, self.eps), h)
        if len(src) == 0:
            combined = scaled
        else:
            combined = T.add(scaled, self.msg(h, src, dst, n))
        return self.update(combined)


class LayoutModel:
    """Parameters plus the forward passes. Stateless between calls."""

    def __init__(self, config: EngineConfig, rng: np.random.Generator):
        self.config = config
        self.store = ParamStore()
        hid = config.hidden_dim
        self.encoder = MLP(self.store, "encoder", config.features.width, hid, hid, rng)
        conv = {"gru": _GruConv, "gin": _GinConv}.get(config.conv)
        if conv is None:
            raise ValueError(f"unknown conv flavor: {config.conv!r}")
        self.conv_base = conv(self.store, "conv_base", hid, rng)
        self.conv_rewire = conv(self.store, "conv_rewire", hid, rng)
        self.decoder = MLP(self.store, "decoder", hid, hid, config.out_dim, rng)
        # created last so the flag never shifts the shared-weight init sequence
        self.conv_base2 = conv(self.store, "conv_base2", hid, rng) \
            if config.distinct_base_convs else self.conv_base

    # --- pieces ---------------------------------------------------------

    def encode(self, features: np.ndarray) -> T.Tensor:
        return self.encoder(T.constant(features))

    def decode(self, h: T.Tensor) -> T.Tensor:
        return T.sigmoid(self.decoder(h))

    def decode_positions(self, h: T.Tensor) -> np.ndarray:
        """Positions for rewiring: same decoder, off the tape."""
        with T.record(None):
            return T.sigmoid(self.decoder(h.detach())).data

    def _rewired_edges(self, pos: np.ndarray, segments):
        srcs, dsts = [], []
        for start, count in segments:
            re = rewire(pos[start:start + count], self.config.rewiring)
            srcs.append(re.src + start)
            dsts.append(re.dst + start)
        return np.concatenate(srcs), np.concatenate(dsts)

    def layout_optimization(self, h: T.Tensor, src: np.ndarray, dst: np.ndarray,
                            n: int, rounds: int, segments=None, on_round=None) -> T.Tensor:
        """The recurrent refinement loop on one (possibly batched) graph.

        src/dst list every input edge in both directions. segments gives
        (start, count) row spans of independent graphs sharing the call;
        rewiring runs per segment so no edge crosses graphs.
        """
        if segments is None:
            segments = [(0, n)]
        for i in range(rounds):
            h = self.conv_base(h, src, dst, n)
            h = self.conv_base2(h, src, dst, n)
            pos = self.decode_positions(h)
            r_src, r_dst = self._rewired_edges(pos, segments)
            h = self.conv_rewire(h, r_src, r_dst, n)
            if on_round is not None:
                on_round(i, h)
        h = self.conv_base(h, src, dst, n)
        h = self.conv_base2(h, src, dst, n)
        return h

    # --- persistence ----------------------------------------------------

    def save(self, path):
        save_checkpoint(path, self.store, self.config.to_dict())

    @staticmethod
    def load(path) -> "LayoutModel":
        cfg_dict, state = load_checkpoint(path)
        config = EngineConfig.from_dict(cfg_dict)
        model = LayoutModel(config, np.random.default_rng(0))
        model.store.load_state_dict(state)
        return model


def layout_graph(model: LayoutModel, g: Graph, rng: np.random.Generator,
                 rounds: int | None = None) -> np.ndarray:
    """Full inference pass: features and encoding at the coarsest level,
    refinement and lifting down the hierarchy, final decode to (0,1)^d.

    rounds overrides the sampled per-level round count when given.
    """
    cfg = model.config
    if cfg.use_hierarchy:
        hier = build_hierarchy(g, cfg.coarsen)
    else:
        hier = Hierarchy(graphs=[g], parents=[])
    feats = assemble_features(hier.graphs[0], rng, cfg.features)
    h = model.encode(feats)
    for level, gl in enumerate(hier.graphs):
        r = rounds if rounds is not None else sample_rounds(
            rng, cfg.rounds_mean, cfg.rounds_std)
        src, dst = _both_directions(gl)
        h = model.layout_optimization(h, src, dst, gl.n, r)
        if level + 1 < hier.depth:
            h_np = lift_embeddings(h.data, hier.parents[level], rng,
                                   cfg.coarsen.noise_sigma)
            h = T.constant(h_np)
    return model.decode(h).data
