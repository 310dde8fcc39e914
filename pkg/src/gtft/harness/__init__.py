"""Command-line driver, experiment presets and config handling."""
from .presets import PRESETS, ExperimentPreset, run_consensus_preset, run_optimize_preset

__all__ = ["PRESETS", "ExperimentPreset", "run_consensus_preset", "run_optimize_preset"]
