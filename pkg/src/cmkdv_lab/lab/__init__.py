"""Experiment harness: configuration, runs, sweeps and plot scripts."""

from .config import RunConfig
from .io import RunManifest, read_csv, read_field
from .plots import emit_plot_script
from .runner import run, sweep

__all__ = ["RunConfig", "RunManifest", "emit_plot_script", "read_csv", "read_field", "run", "sweep"]
