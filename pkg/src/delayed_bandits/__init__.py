"""Bandits with delayed, possibly censored, binary conversions."""
from .bounds import BoundReport, lower_bound_censored, lower_bound_uncensored, upper_bound_constants
from .delays import DelayDistribution, FiniteMeanError, GeometricDelay, TabulatedDelay, delay_from_dict
from .divergence import InfiniteDivergenceError, bernoulli_kl, klucb_invert, poisson_kl
from .environment import (
    BanditInstance,
    DelayedBanditEnv,
    FeedbackBatch,
    RegretTrace,
    pseudo_regret,
    regret_trace,
)
from .estimators import ArmStats
from .policies import PolicyConfig, make_policy

__all__ = [
    "ArmStats",
    "BanditInstance",
    "BoundReport",
    "DelayDistribution",
    "DelayedBanditEnv",
    "FeedbackBatch",
    "FiniteMeanError",
    "GeometricDelay",
    "InfiniteDivergenceError",
    "PolicyConfig",
    "RegretTrace",
    "TabulatedDelay",
    "bernoulli_kl",
    "delay_from_dict",
    "klucb_invert",
    "lower_bound_censored",
    "lower_bound_uncensored",
    "make_policy",
    "poisson_kl",
    "pseudo_regret",
    "regret_trace",
    "upper_bound_constants",
]
