"""Multilevel graph layout: recurrent message-passing engine, classical
baselines, stress metrics, and file/CLI plumbing."""

from .graph import (Graph, build_graph, all_pairs_distances, is_connected,
                    path_graph, cycle_graph, grid_graph, random_delaunay_graph)
from .metrics import (StressReport, stress, optimal_scale,
                      scale_invariant_stress, graph_stress_report)
from .baselines import SgdSchedule, pivot_mds, stress_sgd
from .model import EngineConfig, LayoutModel, layout_graph
from .train import TrainConfig, TrainResult, make_training_set, train
from .config import RunConfig, ConfigError, load_run_config, config_hash

__version__ = "0.1.0"

__all__ = [
    "Graph", "build_graph", "all_pairs_distances", "is_connected",
    "path_graph", "cycle_graph", "grid_graph", "random_delaunay_graph",
    "StressReport", "stress", "optimal_scale", "scale_invariant_stress",
    "graph_stress_report",
    "SgdSchedule", "pivot_mds", "stress_sgd",
    "EngineConfig", "LayoutModel", "layout_graph",
    "TrainConfig", "TrainResult", "make_training_set", "train",
    "RunConfig", "ConfigError", "load_run_config", "config_hash",
    "__version__",
]
