"""Neural building blocks on top of the tape: parameter store, two-layer
MLP, GRU cell, Adam, a reduce-on-plateau learning-rate rule, and flat
JSON checkpoints (base64 payload per parameter, stable key order)."""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

from . import tensor as T

__all__ = [
    "ParamStore",
    "glorot_uniform",
    "MLP",
    "GRUCell",
    "Adam",
    "PlateauScheduler",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_FORMAT = "graphdraw-checkpoint"
CHECKPOINT_VERSION = 1


def glorot_uniform(shape, rng: np.random.Generator) -> np.ndarray:
    fan_in, fan_out = shape[0], shape[-1]
    limit = float(np.sqrt(6.0 / (fan_in + fan_out)))
    return rng.uniform(-limit, limit, size=shape)


class ParamStore:
    """Named, ordered collection of trainable tensors."""

    def __init__(self):
        self._params: dict[str, T.Tensor] = {}

    def create(self, name: str, shape, rng: np.random.Generator,
               init: str = "glorot") -> T.Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        if init == "glorot":
            data = glorot_uniform(shape, rng)
        elif init == "zeros":
            data = np.zeros(shape)
        else:
            raise ValueError(f"unknown init: {init}")
        p = T.parameter(data, name=name)
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> T.Tensor:
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def names(self):
        return list(self._params.keys())

    def tensors(self):
        return list(self._params.values())

    def zero_grad(self):
        for p in self._params.values():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self._params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]):
        missing = set(self._params) - set(state)
        extra = set(state) - set(self._params)
        if missing or extra:
            raise ValueError(f"parameter mismatch: missing={sorted(missing)} "
                             f"unexpected={sorted(extra)}")
        for k, v in state.items():
            arr = np.asarray(v, dtype=np.float64)
            if arr.shape != self._params[k].data.shape:
                raise ValueError(f"shape mismatch for {k}: "
                                 f"{arr.shape} vs {self._params[k].data.shape}")
            self._params[k].data = arr.copy()

    def n_scalars(self) -> int:
        return sum(p.data.size for p in self._params.values())


class MLP:
    """Two affine layers with a ReLU between them, linear output."""

    def __init__(self, store: ParamStore, name: str, in_dim: int,
                 hidden_dim: int, out_dim: int, rng: np.random.Generator):
        self.w1 = store.create(f"{name}.w1", (in_dim, hidden_dim), rng)
        self.b1 = store.create(f"{name}.b1", (hidden_dim,), rng, init="zeros")
        self.w2 = store.create(f"{name}.w2", (hidden_dim, out_dim), rng)
        self.b2 = store.create(f"{name}.b2", (out_dim,), rng, init="zeros")

    def __call__(self, x: T.Tensor) -> T.Tensor:
        h = T.relu(T.add(T.matmul(x, self.w1), self.b1))
        return T.add(T.matmul(h, self.w2), self.b2)


class GRUCell:
    """Gated recurrent unit: state update h' = (1 - z) * h + z * candidate."""

    def __init__(self, store: ParamStore, name: str, in_dim: int,
                 state_dim: int, rng: np.random.Generator):
        mk = store.create
        self.wz = mk(f"{name}.wz", (in_dim, state_dim), rng)
        self.uz = mk(f"{name}.uz", (state_dim, state_dim), rng)
        self.bz = mk(f"{name}.bz", (state_dim,), rng, init="zeros")
        self.wr = mk(f"{name}.wr", (in_dim, state_dim), rng)
        self.ur = mk(f"{name}.ur", (state_dim, state_dim), rng)
        self.br = mk(f"{name}.br", (state_dim,), rng, init="zeros")
        self.wh = mk(f"{name}.wh", (in_dim, state_dim), rng)
        self.uh = mk(f"{name}.uh", (state_dim, state_dim), rng)
        self.bh = mk(f"{name}.bh", (state_dim,), rng, init="zeros")

    def __call__(self, m: T.Tensor, h: T.Tensor) -> T.Tensor:
        z = T.sigmoid(T.add(T.add(T.matmul(m, self.wz), T.matmul(h, self.uz)), self.bz))
        r = T.sigmoid(T.add(T.add(T.matmul(m, self.wr), T.matmul(h, self.ur)), self.br))
        cand = T.tanh(T.add(T.add(T.matmul(m, self.wh),
                                  T.matmul(T.mul(r, h), self.uh)), self.bh))
        return T.add(T.mul(T.sub(1.0, z), h), T.mul(z, cand))


class Adam:
    """Adam with bias correction, applied to a ParamStore."""

    def __init__(self, store: ParamStore, lr: float = 2e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.store = store
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {k: np.zeros_like(p.data) for k, p in store._params.items()}
        self._v = {k: np.zeros_like(p.data) for k, p in store._params.items()}

    def step(self):
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for k, p in self.store._params.items():
            if p.grad is None:
                continue
            g = p.grad
            m = self._m[k]
            v = self._v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)

    def zero_grad(self):
        self.store.zero_grad()


class PlateauScheduler:
    """Cut the learning rate by `factor` after `patience` steps without
    sufficient improvement. In "rel" mode the threshold is a percentage: an
    improvement must beat the best seen value by (threshold/100) * |best|.
    In "abs" mode it must beat it by threshold directly."""

    def __init__(self, optimizer: Adam, factor: float = 0.7, patience: int = 12,
                 threshold: float = 2.0, mode: str = "rel", min_lr: float = 0.0):
        if mode not in ("rel", "abs"):
            raise ValueError("mode must be 'rel' or 'abs'")
        self.optimizer = optimizer
        self.factor = factor
        self.patience = patience
        self.threshold = threshold
        self.mode = mode
        self.min_lr = min_lr
        self.best: float | None = None
        self.bad_count = 0
        self.n_decays = 0

    def _improved(self, value: float) -> bool:
        if self.best is None:
            return True
        margin = (self.threshold / 100.0) * abs(self.best) \
            if self.mode == "rel" else self.threshold
        return self.best - value > margin

    def step(self, value: float):
        if self._improved(value):
            self.best = value
            self.bad_count = 0
            return
        self.bad_count += 1
        if self.bad_count >= self.patience:
            self.optimizer.lr = max(self.optimizer.lr * self.factor, self.min_lr)
            self.bad_count = 0
            self.n_decays += 1


def save_checkpoint(path, store: ParamStore, config: dict):
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": config,
        "params": {
            name: {
                "shape": list(arr.shape),
                "dtype": "float64",
                "data": base64.b64encode(np.ascontiguousarray(arr).tobytes()).decode("ascii"),
            }
            for name, arr in store.state_dict().items()
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_checkpoint(path):
    """Returns (config, state_dict)."""
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version")
    state = {}
    for name, entry in payload["params"].items():
        if entry.get("dtype") != "float64":
            raise ValueError(f"{path}: parameter {name} has unsupported dtype")
        raw = base64.b64decode(entry["data"])
        state[name] = np.frombuffer(raw, dtype=np.float64).reshape(entry["shape"]).copy()
    return payload["config"], state
