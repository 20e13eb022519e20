"""Self-supervised training of the layout model.

The objective is the scale-invariant stress of the decoded layout,
normalized by n^2 and averaged over the batch; no ground-truth layouts are
involved. Batches alternate between fresh runs (features are resampled and
encoded at the coarsest hierarchy level) and replayed latent states from
earlier steps, which stands in for backpropagating through arbitrarily long
refinement histories: gradients stop at the replayed state, but the state
itself has seen many more rounds than the current unroll.

Each batch draws one shared round budget and one coin for the uncoarsening
move: with probability p_uncoarsen the batch runs some rounds, lifts every
item that still has a finer level, and runs a second phase of rounds there.
Items in a batch are packed into one disjoint-union graph so a batch costs
about as many tape operations as a single item.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .coarsen import Hierarchy, build_hierarchy
from .features import assemble_features
from .graph import Graph, all_pairs_distances, random_delaunay_graph
from .metrics import scale_invariant_stress
from .model import EngineConfig, LayoutModel, layout_graph, sample_rounds
from .nn import Adam, PlateauScheduler

__all__ = [
    "TrainConfig",
    "TrainingGraph",
    "ReplayBuffer",
    "TrainResult",
    "si_stress_loss",
    "make_training_set",
    "train",
]


def si_stress_loss(pos: T.Tensor, dist: np.ndarray, floor: float = 1e-12) -> T.Tensor:
    """Differentiable scale-invariant stress.

    stress(alpha * pos) is quadratic in alpha, so it is assembled from the
    three pair sums directly: alpha^2 * den - 2 * alpha * num + const, with
    alpha = num / max(den, floor). Ordered-pair convention, w = d^-2.
    """
    n = dist.shape[0]
    if n < 2:
        return T.constant(0.0)
    d = np.asarray(dist, dtype=np.float64)
    off = ~np.eye(n, dtype=bool)
    w = np.zeros_like(d)
    w[off] = 1.0 / (d[off] * d[off])
    c1 = np.zeros_like(d)
    c1[off] = 1.0 / d[off]
    c0 = float(n * (n - 1))
    dist_mat = T.pairwise_distances(pos)
    num = T.tsum(T.mul(dist_mat, T.constant(c1)))
    den = T.tsum(T.mul(T.square(dist_mat), T.constant(w)))
    alpha = T.div(num, T.clamp_min(den, floor))
    return T.add(T.sub(T.mul(T.square(alpha), den),
                       T.mul(2.0, T.mul(alpha, num))), c0)


class TrainingGraph:
    """A graph plus its cached hierarchy, per-level distances and edges."""

    def __init__(self, g: Graph, config: EngineConfig):
        self.g = g
        if config.use_hierarchy:
            self.hierarchy = build_hierarchy(g, config.coarsen)
        else:
            self.hierarchy = Hierarchy(graphs=[g], parents=[])
        self._dist: dict[int, np.ndarray] = {}
        self._dir: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def depth(self) -> int:
        return self.hierarchy.depth

    def level_graph(self, level: int) -> Graph:
        return self.hierarchy.graphs[level]

    def distances(self, level: int) -> np.ndarray:
        if level not in self._dist:
            self._dist[level] = all_pairs_distances(self.hierarchy.graphs[level])
        return self._dist[level]

    def directed_edges(self, level: int):
        if level not in self._dir:
            e = self.hierarchy.graphs[level].edges
            self._dir[level] = (np.concatenate([e[:, 0], e[:, 1]]),
                                np.concatenate([e[:, 1], e[:, 0]]))
        return self._dir[level]


@dataclass
class _BufferEntry:
    graph: TrainingGraph
    level: int
    state: np.ndarray


class ReplayBuffer:
    """Fixed-capacity store of latent states; full buffer evicts at random."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.entries: list[_BufferEntry] = []

    def __len__(self):
        return len(self.entries)

    def add(self, entry: _BufferEntry, rng: np.random.Generator):
        if len(self.entries) < self.capacity:
            self.entries.append(entry)
        else:
            self.entries[int(rng.integers(0, self.capacity))] = entry

    def sample_indices(self, rng: np.random.Generator, k: int) -> list[int]:
        return [int(i) for i in rng.integers(0, len(self.entries), size=k)]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 16
    lr: float = 2e-4
    replay_capacity: int = 4096
    p_replace_fresh: float = 0.5    # chance a fresh result enters the buffer
    p_uncoarsen: float = 0.5        # chance a batch lifts mid-run
    plateau_factor: float = 0.7
    plateau_patience: int = 12
    plateau_threshold: float = 2.0
    plateau_mode: str = "rel"
    loss_floor: float = 1e-12
    val_rounds: int = 5
    fresh_batches_per_epoch: int | None = None   # None: full pass over the set
    time_budget_s: float | None = None           # stop after this many seconds


@dataclass
class TrainResult:
    best_val: float
    best_epoch: int
    history: dict[str, list] = field(default_factory=dict)
    best_state: dict | None = None


def make_training_set(count: int, n_lo: int, n_hi: int,
                      rng: np.random.Generator) -> list[Graph]:
    """Random Delaunay graphs with sizes uniform in [n_lo, n_hi]."""
    out = []
    while len(out) < count:
        n = int(rng.integers(n_lo, n_hi + 1))
        g = random_delaunay_graph(n, rng)
        out.append(g)
    return out


def _phase(model: LayoutModel, h: T.Tensor, items, levels, rounds: int):
    """One refinement phase over the union of items at the given levels."""
    offsets = []
    srcs, dsts = [], []
    total = 0
    for it, lv in zip(items, levels):
        n_i = it.level_graph(lv).n
        s, d = it.directed_edges(lv)
        srcs.append(s + total)
        dsts.append(d + total)
        offsets.append((total, n_i))
        total += n_i
    src = np.concatenate(srcs)
    dst = np.concatenate(dsts)
    return model.layout_optimization(h, src, dst, total, rounds,
                                     segments=offsets), offsets


def _lift_union(h: T.Tensor, items, levels, offsets, rng, noise_sigma: float):
    """Lift every item that has a finer level; returns (h, new_levels)."""
    pieces = []
    new_levels = []
    for (start, count), it, lv in zip(offsets, items, levels):
        rows = T.gather_rows(h, np.arange(start, start + count))
        if lv + 1 < it.depth:
            parent = it.hierarchy.parents[lv]
            lifted = T.gather_rows(rows, parent)
            if noise_sigma > 0:
                noise = rng.normal(0.0, noise_sigma,
                                   size=(parent.shape[0], h.shape[1]))
                lifted = T.add(lifted, T.constant(noise))
            pieces.append(lifted)
            new_levels.append(lv + 1)
        else:
            pieces.append(rows)
            new_levels.append(lv)
    return T.concat(pieces, axis=0), new_levels


def _batch_forward(model: LayoutModel, items, levels, h0: T.Tensor,
                   rng: np.random.Generator, cfg: TrainConfig):
    """Shared fresh/replay forward: phases, loss, final detached states."""
    mcfg = model.config
    lift_branch = bool(rng.random() < cfg.p_uncoarsen)
    can_lift = any(lv + 1 < it.depth for it, lv in zip(items, levels))
    rounds = sample_rounds(rng, mcfg.rounds_mean, mcfg.rounds_std)
    h, offsets = _phase(model, h0, items, levels, rounds)
    if lift_branch and can_lift:
        h, levels = _lift_union(h, items, levels, offsets, rng,
                                mcfg.coarsen.noise_sigma)
        rounds2 = sample_rounds(rng, mcfg.rounds_mean, mcfg.rounds_std)
        h, offsets = _phase(model, h, items, levels, rounds2)
    pos = model.decode(h)
    loss = None
    for (start, count), it, lv in zip(offsets, items, levels):
        rows = T.gather_rows(pos, np.arange(start, start + count))
        term = T.mul(si_stress_loss(rows, it.distances(lv), cfg.loss_floor),
                     1.0 / float(count * count))
        loss = term if loss is None else T.add(loss, term)
    loss = T.mul(loss, 1.0 / float(len(items)))
    states = [h.data[s:s + c].copy() for (s, c) in offsets]
    return loss, states, levels


def _train_batch(model, optimizer, items, levels, h0, rng, cfg):
    optimizer.zero_grad()
    tape = T.Tape()
    with T.record(tape):
        loss, states, out_levels = _batch_forward(model, items, levels, h0, rng, cfg)
    tape.backward(loss)
    optimizer.step()
    return float(loss.data), states, out_levels


def _validation_score(model: LayoutModel, val_graphs, val_dists, seed: int,
                      rounds: int) -> float:
    """Mean normalized scale-invariant stress over the validation set."""
    scores = []
    for g, dist in zip(val_graphs, val_dists):
        rng = np.random.default_rng(seed)
        pos = layout_graph(model, g, rng, rounds=rounds)
        rep = scale_invariant_stress(dist, pos)
        scores.append(rep.normalized)
    return float(np.mean(scores))


def train(model: LayoutModel, train_graphs: list[Graph], val_graphs: list[Graph],
          cfg: TrainConfig, seed: int = 0, verbose: bool = False) -> TrainResult:
    """Train in place; afterwards the model carries the best-validation
    weights and the result records the full history."""
    master = np.random.SeedSequence(seed)
    rng = np.random.default_rng(master.spawn(1)[0])
    items = [TrainingGraph(g, model.config) for g in train_graphs]
    val_dists = [all_pairs_distances(g) for g in val_graphs]
    val_seed = int(master.spawn(1)[0].generate_state(1)[0])

    optimizer = Adam(model.store, lr=cfg.lr)
    scheduler = PlateauScheduler(optimizer, factor=cfg.plateau_factor,
                                 patience=cfg.plateau_patience,
                                 threshold=cfg.plateau_threshold,
                                 mode=cfg.plateau_mode)
    buffer = ReplayBuffer(cfg.replay_capacity)
    history = {"epoch": [], "train_loss": [], "val_stress": [], "lr": []}
    best = TrainResult(best_val=float("inf"), best_epoch=-1, history=history)
    t0 = time.monotonic()

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(items))
        if cfg.fresh_batches_per_epoch is not None:
            order = order[:cfg.fresh_batches_per_epoch * cfg.batch_size]
        losses = []
        for lo in range(0, len(order), cfg.batch_size):
            chunk = [items[i] for i in order[lo:lo + cfg.batch_size]]
            # fresh batch: encode resampled features at the coarsest level
            feats = [assemble_features(it.level_graph(0), rng,
                                       model.config.features) for it in chunk]
            h0 = model.encode(np.concatenate(feats, axis=0))
            levels = [0] * len(chunk)
            loss, states, out_levels = _train_batch(
                model, optimizer, chunk, levels, h0, rng, cfg)
            losses.append(loss)
            for it, st, lv in zip(chunk, states, out_levels):
                if rng.random() < cfg.p_replace_fresh:
                    buffer.add(_BufferEntry(it, lv, st), rng)
            # replay batch: resume stored latent states, gradients stop there
            if len(buffer):
                idx = buffer.sample_indices(rng, cfg.batch_size)
                entries = [buffer.entries[i] for i in idx]
                ritems = [e.graph for e in entries]
                rlevels = [e.level for e in entries]
                h0r = T.constant(np.concatenate([e.state for e in entries], axis=0))
                loss, states, out_levels = _train_batch(
                    model, optimizer, ritems, rlevels, h0r, rng, cfg)
                losses.append(loss)
                for slot, it, st, lv in zip(idx, ritems, states, out_levels):
                    buffer.entries[slot] = _BufferEntry(it, lv, st)

        val = _validation_score(model, val_graphs, val_dists, val_seed,
                                cfg.val_rounds)
        scheduler.step(val)
        history["epoch"].append(epoch)
        history["train_loss"].append(float(np.mean(losses)) if losses else float("nan"))
        history["val_stress"].append(val)
        history["lr"].append(optimizer.lr)
        if val < best.best_val:
            best.best_val = val
            best.best_epoch = epoch
            best.best_state = model.store.state_dict()
        if verbose:
            print(f"epoch {epoch:3d}  loss {history['train_loss'][-1]:.4f}  "
                  f"val {val:.4f}  lr {optimizer.lr:.2e}")
        if cfg.time_budget_s is not None and time.monotonic() - t0 > cfg.time_budget_s:
            break

    if best.best_state is not None:
        model.store.load_state_dict(best.best_state)
    return best
