"""Command-line interface.

Subcommands:
  generate  write synthetic Delaunay graph datasets as edge-list files
  draw      lay out one graph with the model or a baseline, export JSON/SVG
  train     run the training loop, write checkpoint + run artifact
  eval      score a checkpoint and the baselines on a graph directory
  bench     wall-time scaling measurement over generated graphs

Every command takes --seed. Identical inputs and seed give byte-identical
layout files and metric tables; bench timing columns are measurements and
naturally vary run to run.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import fileio, plots
from .baselines import SgdSchedule, pivot_mds, stress_sgd
from .config import ConfigError, RunConfig, config_hash, load_run_config
from .graph import Graph, random_delaunay_graph
from .metrics import graph_stress_report
from .model import EngineConfig, LayoutModel, layout_graph
from .train import make_training_set, train

__all__ = ["main"]


def _fail(msg: str):
    print(f"error: {msg}", file=sys.stderr)
    raise SystemExit(1)


def _load_graph(path: Path) -> Graph:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        _fail(str(exc))
    return fileio.load_graph_text(text)


def _write(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def _table(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
             for r in rows]
    return "\n".join(lines) + "\n"


def _csv_bytes(rows: list[list]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue().encode("ascii")


# ---------------------------------------------------------------- generate

def cmd_generate(args) -> int:
    if args.count < 1:
        _fail("--count must be >= 1")
    if not (1 <= args.n_lo <= args.n_hi):
        _fail("need 1 <= --n-lo <= --n-hi")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    graphs = make_training_set(args.count, args.n_lo, args.n_hi, rng)
    digits = len(str(args.count - 1))
    for i, g in enumerate(graphs):
        _write(out / f"graph_{i:0{digits}d}.txt", fileio.write_edge_list(g))
    print(f"wrote {args.count} graphs ({args.n_lo}-{args.n_hi} nodes) to {out}")
    return 0


# -------------------------------------------------------------------- draw

def cmd_draw(args) -> int:
    g = _load_graph(Path(args.graph))
    rng = np.random.default_rng(args.seed)
    if args.method == "model":
        if not args.checkpoint:
            _fail("--method model needs --checkpoint")
        model = LayoutModel.load(args.checkpoint)
        pos = layout_graph(model, g, rng, rounds=args.rounds)
    elif args.method == "pivot":
        pos = pivot_mds(g, rng, n_pivots=min(args.pivots, g.n))
    else:
        sched = SgdSchedule(iterations=args.sgd_iterations,
                            eta_max=args.sgd_eta_max,
                            eta_min=args.sgd_eta_min)
        pos = stress_sgd(g, rng, schedule=sched)

    report = graph_stress_report(g, pos)
    meta = {"seed": args.seed, "method": args.method,
            "scale_invariant_stress": report.scale_invariant}
    if args.format == "json":
        data = fileio.layout_json_bytes(g, pos, report, meta)
    else:
        data = fileio.layout_svg_bytes(g, pos)
    if args.out:
        _write(Path(args.out), data)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(data.decode("ascii"))
    if args.figure:
        plots.save_layout_figure(g, pos, args.figure,
                                 title=f"{args.method}, n={g.n}")
        print(f"wrote {args.figure}")
    print(_table([
        ["metric", "value"],
        ["raw_stress", f"{report.raw:.6e}"],
        ["scale_invariant_stress", f"{report.scale_invariant:.6e}"],
        ["normalized_stress", f"{report.normalized:.6e}"],
    ]), end="")
    return 0


# ------------------------------------------------------------------- train

def _read_graph_dir(path: Path) -> list[Graph]:
    files = sorted(p for p in path.iterdir() if p.is_file())
    if not files:
        _fail(f"no graph files in {path}")
    return [_load_graph(p) for p in files]


def cmd_train(args) -> int:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.train_dir:
        cfg.train_dir = args.train_dir
    if args.eval_dir:
        cfg.eval_dir = args.eval_dir
    if args.epochs is not None:
        cfg.train = dataclasses.replace(cfg.train, epochs=args.epochs)
    if not cfg.train_dir or not cfg.eval_dir:
        _fail("training needs train_dir and eval_dir (config or flags)")

    train_graphs = _read_graph_dir(Path(cfg.train_dir))
    val_graphs = _read_graph_dir(Path(cfg.eval_dir))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    model = LayoutModel(cfg.engine, np.random.default_rng(cfg.seed))
    res = train(model, train_graphs, val_graphs, cfg.train, seed=cfg.seed,
                verbose=args.verbose)

    ckpt = out / "model.json"
    model.save(ckpt)
    artifact = {
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "best_val": res.best_val,
        "best_epoch": res.best_epoch,
        "history": res.history,
        "n_train": len(train_graphs),
        "n_val": len(val_graphs),
    }
    _write(out / "run.json", (json.dumps(artifact, sort_keys=True, indent=1)
                              + "\n").encode("ascii"))
    hist_rows = [["epoch", "train_loss", "val_stress", "lr"]]
    for i in range(len(res.history["epoch"])):
        hist_rows.append([str(res.history["epoch"][i]),
                          f"{res.history['train_loss'][i]:.8g}",
                          f"{res.history['val_stress'][i]:.8g}",
                          f"{res.history['lr'][i]:.8g}"])
    _write(out / "history.csv", _csv_bytes(hist_rows))
    plots.save_history_figure(res.history, out / "history.png")
    print(f"best validation stress {res.best_val:.6f} at epoch {res.best_epoch}")
    print(f"checkpoint: {ckpt}")
    return 0


# -------------------------------------------------------------------- eval

def _mean_scores(graphs, layouts):
    si, norm = [], []
    for g, pos in zip(graphs, layouts):
        rep = graph_stress_report(g, pos)
        si.append(rep.scale_invariant)
        norm.append(rep.normalized)
    return float(np.mean(si)), float(np.mean(norm))


def cmd_eval(args) -> int:
    graphs = _read_graph_dir(Path(args.data))
    methods: list[tuple[str, list]] = []

    if args.checkpoint:
        model = LayoutModel.load(args.checkpoint)
        rng = np.random.default_rng(args.seed)
        methods.append(("model", [layout_graph(model, g, rng, rounds=args.rounds)
                                  for g in graphs]))
    rng = np.random.default_rng(args.seed)
    methods.append(("pivot_mds", [pivot_mds(g, rng, n_pivots=min(10, g.n))
                                  for g in graphs]))
    rng = np.random.default_rng(args.seed)
    methods.append(("stress_sgd", [stress_sgd(g, rng) for g in graphs]))

    rows = [["method", "mean_stress", "mean_normalized_stress"]]
    means_norm = []
    for name, layouts in methods:
        si, norm = _mean_scores(graphs, layouts)
        rows.append([name, f"{si:.6f}", f"{norm:.6f}"])
        means_norm.append(norm)
    text = _table(rows)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write(out / "eval.csv", _csv_bytes(rows))
        plots.save_eval_figure([m for m, _ in methods], means_norm,
                               out / "eval.png")
        print(f"wrote {out / 'eval.csv'} and {out / 'eval.png'}")
    return 0


# ------------------------------------------------------------------- bench

def cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
    except ValueError:
        _fail(f"bad --sizes value {args.sizes!r}")
    if not sizes or min(sizes) < 2:
        _fail("--sizes needs comma-separated integers >= 2")
    if args.checkpoint:
        model = LayoutModel.load(args.checkpoint)
    else:
        model = LayoutModel(EngineConfig(), np.random.default_rng(args.seed))

    rows = [["n", "median_seconds", "runs"]]
    med_times = []
    for n in sizes:
        g = random_delaunay_graph(n, np.random.default_rng(args.seed + n))
        times = []
        for rep in range(args.repeats):
            rng = np.random.default_rng(args.seed + rep)
            t0 = time.perf_counter()
            pos = layout_graph(model, g, rng, rounds=args.rounds)
            times.append(time.perf_counter() - t0)
            if not np.all(np.isfinite(pos)):
                _fail(f"non-finite layout at n={n}")
        med = float(np.median(times))
        med_times.append(med)
        rows.append([str(n), f"{med:.3f}", str(args.repeats)])
    text = _table(rows)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write(out / "bench.csv", _csv_bytes(rows))
        plots.save_bench_figure(sizes, med_times, out / "bench.png")
        print(f"wrote {out / 'bench.csv'} and {out / 'bench.png'}")
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphdraw",
                                description="multilevel graph layout engine")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write synthetic graph datasets")
    g.add_argument("--out", required=True)
    g.add_argument("--count", type=int, default=100)
    g.add_argument("--n-lo", type=int, default=20)
    g.add_argument("--n-hi", type=int, default=60)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("draw", help="lay out one graph")
    d.add_argument("graph", help="edge-list or Matrix Market file")
    d.add_argument("--method", choices=["model", "pivot", "sgd"], default="sgd")
    d.add_argument("--checkpoint")
    d.add_argument("--format", choices=["json", "svg"], default="json")
    d.add_argument("--out", help="output file (stdout when omitted)")
    d.add_argument("--figure", help="also render a PNG preview here")
    d.add_argument("--rounds", type=int, default=None,
                   help="fixed per-level round count for the model")
    d.add_argument("--pivots", type=int, default=10)
    d.add_argument("--sgd-iterations", type=int, default=60)
    d.add_argument("--sgd-eta-max", type=float, default=None)
    d.add_argument("--sgd-eta-min", type=float, default=0.1)
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_draw)

    t = sub.add_parser("train", help="train a model")
    t.add_argument("--config", help="JSON run configuration")
    t.add_argument("--train-dir")
    t.add_argument("--eval-dir")
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--verbose", action="store_true")
    t.add_argument("--seed", type=int, default=None)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score methods on a graph directory")
    e.add_argument("--data", required=True)
    e.add_argument("--checkpoint")
    e.add_argument("--rounds", type=int, default=None)
    e.add_argument("--out", help="directory for eval.csv / eval.png")
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="wall-time scaling measurement")
    b.add_argument("--sizes", default="1000,2000,4000")
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--rounds", type=int, default=5)
    b.add_argument("--checkpoint")
    b.add_argument("--out", help="directory for bench.csv / bench.png")
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ConfigError, fileio.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
