"""Agent-based stock-flow consistent model of a two-tier payment system with
overnight and term interbank segments."""

from .config import RunConfig, load_config
from .engine import Ensemble, RunResult, run, run_ensemble

__version__ = "0.1.0"

__all__ = ["Ensemble", "RunConfig", "RunResult", "load_config", "run", "run_ensemble"]
