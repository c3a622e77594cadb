"""Experiment harness: presets, runners, output writers and the ``adp-lab`` CLI."""

from .config import PRESET_IDS, ExperimentConfig, load_config, split_preset
from .problems import add_noise, build_instance, make_ground_truths, make_operator, metrics
from .runners import (
    RunRecord,
    execute,
    grid_search,
    run_all,
    run_figure1,
    run_initial_value_study,
    run_method_grid,
)

__all__ = [
    "PRESET_IDS",
    "ExperimentConfig",
    "load_config",
    "split_preset",
    "add_noise",
    "build_instance",
    "make_ground_truths",
    "make_operator",
    "metrics",
    "RunRecord",
    "execute",
    "grid_search",
    "run_all",
    "run_figure1",
    "run_initial_value_study",
    "run_method_grid",
]
