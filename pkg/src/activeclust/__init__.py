"""Actively supervised discovery of relation clusters in embedded instance pools."""

from .datasets import (
    Dataset,
    Instance,
    RunConfig,
    SynthSpec,
    generate_synthetic,
    load_dataset,
    save_dataset,
    split_validation,
)
from .engine import RunResult, bench, emit_report, run_loop
from .learner import Learner, LossConfig
from .metrics import MetricsReport, ari, b_cubed, classification_scores, score_run, v_measure
from .oracles import ConsoleOracle, GoldOracle, KeyPointSet, QueueOracle, RelationSet
from .selection import StopState, baseline_select, select_key_points, should_stop

__all__ = [
    "Dataset", "Instance", "RunConfig", "SynthSpec",
    "generate_synthetic", "load_dataset", "save_dataset", "split_validation",
    "RunResult", "bench", "emit_report", "run_loop",
    "Learner", "LossConfig",
    "MetricsReport", "ari", "b_cubed", "classification_scores", "score_run", "v_measure",
    "ConsoleOracle", "GoldOracle", "KeyPointSet", "QueueOracle", "RelationSet",
    "StopState", "baseline_select", "select_key_points", "should_stop",
]

__version__ = "0.1.0"
