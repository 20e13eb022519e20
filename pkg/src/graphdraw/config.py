"""Run configuration: one JSON document covering the engine, training, and
dataset paths, with strict validation.

Unknown keys are rejected and out-of-range values fail before any
computation starts, so a typo in a config file cannot silently fall back
to a default.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .coarsen import CoarsenConfig
from .features import FeatureConfig
from .model import EngineConfig
from .rewire import RewiringConfig
from .train import TrainConfig

__all__ = ["RunConfig", "ConfigError", "load_run_config", "run_config_from_dict",
           "config_hash"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    engine: EngineConfig = field(default_factory=EngineConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    train_dir: str | None = None
    eval_dir: str | None = None
    checkpoint: str | None = None
    seed: int = 0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _apply_section(cls, base, overrides: dict, path: str):
    """Rebuild a dataclass with overrides, rejecting unknown keys."""
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(overrides) - names
    if unknown:
        raise ConfigError(f"unknown key '{path}{sorted(unknown)[0]}'")
    return dataclasses.replace(base, **overrides)


def _expect(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _validate(cfg: RunConfig):
    e, t = cfg.engine, cfg.train
    f, r, c = e.features, e.rewiring, e.coarsen
    _expect(e.hidden_dim >= 1, "engine.hidden_dim must be >= 1")
    _expect(e.out_dim >= 1, "engine.out_dim must be >= 1")
    _expect(e.conv in ("gru", "gin"), f"engine.conv must be gru or gin, got {e.conv!r}")
    _expect(e.rounds_mean > 0, "engine.rounds_mean must be > 0")
    _expect(e.rounds_std >= 0, "engine.rounds_std must be >= 0")
    _expect(f.n_eigenvectors >= 0, "features.n_eigenvectors must be >= 0")
    _expect(f.n_beacons >= 0, "features.n_beacons must be >= 0")
    _expect(f.beacon_encoding >= 2 and f.beacon_encoding % 2 == 0,
            "features.beacon_encoding must be a positive even number")
    _expect(f.n_random >= 0, "features.n_random must be >= 0")
    _expect(f.sinusoid_base > 0, "features.sinusoid_base must be > 0")
    _expect(f.width >= 1, "feature width must be >= 1")
    _expect(r.kind in ("knn", "delaunay", "radius"),
            f"rewiring.kind must be knn, delaunay or radius, got {r.kind!r}")
    _expect(r.k >= 1, "rewiring.k must be >= 1")
    _expect(r.radius > 0, "rewiring.radius must be > 0")
    _expect(0.0 < c.rho < 1.0, "coarsen.rho must be in (0, 1)")
    _expect(c.n_min >= 1, "coarsen.n_min must be >= 1")
    _expect(c.noise_sigma >= 0, "coarsen.noise_sigma must be >= 0")
    _expect(t.epochs >= 1, "train.epochs must be >= 1")
    _expect(t.batch_size >= 1, "train.batch_size must be >= 1")
    _expect(t.lr > 0, "train.lr must be > 0")
    _expect(t.replay_capacity >= 1, "train.replay_capacity must be >= 1")
    _expect(0.0 <= t.p_replace_fresh <= 1.0, "train.p_replace_fresh must be in [0, 1]")
    _expect(0.0 <= t.p_uncoarsen <= 1.0, "train.p_uncoarsen must be in [0, 1]")
    _expect(0.0 < t.plateau_factor <= 1.0, "train.plateau_factor must be in (0, 1]")
    _expect(t.plateau_patience >= 0, "train.plateau_patience must be >= 0")
    _expect(t.plateau_threshold >= 0, "train.plateau_threshold must be >= 0")
    _expect(t.plateau_mode in ("rel", "abs"),
            f"train.plateau_mode must be rel or abs, got {t.plateau_mode!r}")
    _expect(t.loss_floor > 0, "train.loss_floor must be > 0")
    _expect(t.val_rounds >= 1, "train.val_rounds must be >= 1")
    _expect(t.fresh_batches_per_epoch is None or t.fresh_batches_per_epoch >= 1,
            "train.fresh_batches_per_epoch must be >= 1 when set")
    _expect(t.time_budget_s is None or t.time_budget_s >= 0,
            "train.time_budget_s must be >= 0 when set")
    _expect(cfg.seed >= 0, "seed must be >= 0")


def run_config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    top = {"engine", "train", "train_dir", "eval_dir", "checkpoint", "seed"}
    unknown = set(doc) - top
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r}")

    eng_doc = dict(doc.get("engine", {}))
    nested = {}
    for key, cls in (("features", FeatureConfig), ("rewiring", RewiringConfig),
                     ("coarsen", CoarsenConfig)):
        sub = eng_doc.pop(key, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"engine.{key} must be an object")
        nested[key] = _apply_section(cls, cls(), sub, f"engine.{key}.")
    engine = _apply_section(EngineConfig, EngineConfig(**nested), eng_doc, "engine.")

    train_doc = doc.get("train", {})
    if not isinstance(train_doc, dict):
        raise ConfigError("train must be an object")
    train = _apply_section(TrainConfig, TrainConfig(), train_doc, "train.")

    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")
    cfg = RunConfig(engine=engine, train=train,
                    train_dir=doc.get("train_dir"),
                    eval_dir=doc.get("eval_dir"),
                    checkpoint=doc.get("checkpoint"),
                    seed=seed)
    try:
        _validate(cfg)
    except TypeError as exc:
        raise ConfigError(f"bad value type: {exc}")
    return cfg


def load_run_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})")
    return run_config_from_dict(doc)


def config_hash(cfg: RunConfig) -> str:
    """Short stable digest of the fully resolved configuration."""
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode("ascii")
    return hashlib.sha256(blob).hexdigest()[:16]
