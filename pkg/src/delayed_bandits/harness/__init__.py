from .config import ExperimentConfig, child_seed
from .runner import AggregateResult, AggregateRow, run_experiment, summarize

__all__ = ["AggregateResult", "AggregateRow", "ExperimentConfig", "child_seed", "run_experiment", "summarize"]
