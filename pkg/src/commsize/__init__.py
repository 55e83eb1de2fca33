"""Agent-based simulation of online community joining and the size distributions it produces."""

__version__ = "0.1.0"

from .engine import ModelConfig, RunResult, SweepGrid, run, step, sweep  # noqa: E402,F401
from .population import Population, new_population  # noqa: E402,F401
