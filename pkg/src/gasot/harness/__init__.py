"""Experiment orchestration: configuration, pipelines, persistence, plots and CLI."""

from .config import ExperimentConfig, canonical_hash
from .persistence import ContainerError, Pipeline, load_model, save_model
from .pipeline import RunReport, fit_models, grid_search_dropout, learning_curve, run_pipeline
from .plots import emit_plots

__all__ = [
    "ContainerError", "ExperimentConfig", "Pipeline", "RunReport", "canonical_hash",
    "emit_plots", "fit_models", "grid_search_dropout", "learning_curve", "load_model",
    "run_pipeline", "save_model",
]
