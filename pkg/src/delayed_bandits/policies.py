"""Arm-selection strategies for delayed, possibly censored, conversions.

All index policies play every arm once in rounds ``1..K`` and afterwards
pick the arm with the largest optimistic index computed with the budget
``beta(t) = (1 + epsilon) * log(t)``. An arm whose estimate is undefined
(zero effective count) wins over any finite index; remaining ties go to the
lowest arm id. Arms are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from .delays import DelayDistribution, GeometricDelay, TabulatedDelay
from .divergence import klucb_invert
from .environment import BanditInstance, FeedbackBatch
from .estimators import ArmStats

VARIANTS = (
    "delayed_ucb",
    "delayed_klucb",
    "discarding_ucb",
    "discarding_klucb",
    "agnostic_delayed_klucb",
    "oracle",
    "uniform",
)
SETTINGS = ("censored", "uncensored")


def exploration_budget(t: int, epsilon: float) -> float:
    return (1.0 + epsilon) * math.log(t)


def ucb_index(theta_hat: float, n_pulls: float, n_eff: float, beta: float) -> float:
    """UCB index inflated by the ratio of real to effective pulls."""
    return theta_hat + math.sqrt(n_pulls / n_eff) * math.sqrt(beta / (2.0 * n_eff))


def klucb_index(theta_hat: float, n_eff: float, beta: float) -> float:
    if theta_hat >= 1.0:
        return 1.0
    return klucb_invert(theta_hat, n_eff, beta)


def discarding_indices(
    s_old: float, n_old: float, tau_m: float, beta: float
) -> tuple[float, float] | None:
    """UCB and KL-UCB indices built only from fully resolved pulls.

    Returns ``None`` when no resolved pull exists yet.
    """
    if n_old <= 0:
        return None
    n_eff = tau_m * n_old
    theta_hat = s_old / n_eff
    ucb = theta_hat + math.sqrt(beta / (2.0 * n_eff))
    return ucb, klucb_index(theta_hat, n_eff, beta)


@dataclass(frozen=True)
class PolicyConfig:
    variant: str
    setting: str = "uncensored"
    window: int | None = None
    epsilon: float = 0.1
    gamma: float = 0.7
    label: str | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown policy variant {self.variant!r}; expected one of {VARIANTS}")
        if self.setting not in SETTINGS:
            raise ValueError(f"setting must be 'censored' or 'uncensored', got {self.setting!r}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        if not 0.5 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0.5, 1], got {self.gamma!r}")
        if self.window is not None and self.window < 1:
            raise ValueError("window must be a positive integer")
        if self.variant.startswith("discarding") and self.setting != "censored":
            raise ValueError("discarding policies are defined for the censored setting only")

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        prefix = "" if self.setting == "censored" else "u"
        short = {
            "delayed_ucb": "d-ucb",
            "delayed_klucb": "d-klucb",
            "discarding_ucb": "disc-ucb",
            "discarding_klucb": "disc-klucb",
            "agnostic_delayed_klucb": "agn-d-klucb",
        }
        if self.variant in short:
            return prefix + short[self.variant]
        return f"{self.variant}-{self.setting}"

    def environment_for(self, instance: BanditInstance) -> BanditInstance:
        """The instance this policy is evaluated on (censoring follows the setting)."""
        if self.setting == "uncensored":
            return instance.with_censoring(None)
        window = self.window if self.window is not None else instance.censor_window
        if window is None:
            raise ValueError(f"policy {self.name!r} is censored but no window m is configured")
        return instance.with_censoring(window)

    def to_dict(self) -> dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "PolicyConfig":
        if not isinstance(spec, dict):
            raise ValueError("policy entry must be a JSON object")
        spec = dict(spec)
        if "policy" in spec:
            spec["variant"] = spec.pop("policy")
        if "m" in spec:
            spec["window"] = spec.pop("m")
        allowed = {"variant", "setting", "window", "epsilon", "gamma", "label"}
        extra = spec.keys() - allowed
        if extra:
            raise ValueError(f"unknown key {sorted(extra)[0]!r} in policy entry")
        if "variant" not in spec:
            raise ValueError("missing key 'policy' in policy entry")
        return cls(**spec)


class BasePolicy:
    name = "policy"

    def __init__(self, n_arms: int):
        self.n_arms = n_arms

    def select(self, t: int) -> int:
        raise NotImplementedError

    def update(self, t: int, arm: int, batch: FeedbackBatch) -> None:
        pass


class OraclePolicy(BasePolicy):
    def __init__(self, n_arms: int, best_arm: int, name: str = "oracle"):
        super().__init__(n_arms)
        self.best_arm = best_arm
        self.name = name

    def select(self, t: int) -> int:
        return self.best_arm


class UniformPolicy(BasePolicy):
    """Deterministic round-robin allocation."""

    def __init__(self, n_arms: int, name: str = "uniform"):
        super().__init__(n_arms)
        self.name = name

    def select(self, t: int) -> int:
        return (t - 1) % self.n_arms


def _argmax_ucb(stats: ArmStats, n_eff: list[float], beta: float) -> int:
    best, best_arm = -math.inf, 0
    for k, ne in enumerate(n_eff):
        if ne <= 0.0:
            return k
        value = ucb_index(stats.successes[k] / ne, stats.pulls[k], ne, beta)
        if value > best:
            best, best_arm = value, k
    return best_arm


def _argmax_klucb(successes: list[float], n_eff: list[float], beta: float) -> int:
    best, best_arm = -math.inf, 0
    for k, ne in enumerate(n_eff):
        if ne <= 0.0:
            return k
        theta_hat = successes[k] / ne
        if theta_hat < best <= 1.0:
            # the index of k cannot exceed `best` when best is already infeasible for k
            gap = best if theta_hat == 0.0 else theta_hat * math.log(theta_hat / best) + best - theta_hat
            if ne * gap >= beta:
                continue
        value = klucb_index(theta_hat, ne, beta)
        if value > best:
            best, best_arm = value, k
    return best_arm


def _window_for(delays: DelayDistribution, window: int | None) -> int | None:
    if window is not None:
        return window
    if isinstance(delays, GeometricDelay):
        return None
    if isinstance(delays, TabulatedDelay):
        # the CDF is flat from the last table entry on
        return max(1, delays.table.size - 1)
    raise TypeError(f"unsupported delay distribution {delays!r}")


class DelayedIndexPolicy(BasePolicy):
    """DelayedUCB / DelayedKLUCB with a known delay distribution."""

    def __init__(
        self,
        n_arms: int,
        delays: DelayDistribution,
        window: int | None = None,
        epsilon: float = 0.1,
        index: str = "klucb",
        name: str | None = None,
    ):
        super().__init__(n_arms)
        if index not in ("ucb", "klucb"):
            raise ValueError(f"index must be 'ucb' or 'klucb', got {index!r}")
        self.index = index
        self.epsilon = epsilon
        self.stats = ArmStats(n_arms, delays, _window_for(delays, window))
        self.name = name or f"delayed-{index}"

    def select(self, t: int) -> int:
        if t <= self.n_arms:
            return t - 1
        beta = exploration_budget(t, self.epsilon)
        n_eff = self.stats.effective_counts()
        if self.index == "ucb":
            return _argmax_ucb(self.stats, n_eff, beta)
        return _argmax_klucb(self.stats.successes, n_eff, beta)

    def update(self, t: int, arm: int, batch: FeedbackBatch) -> None:
        stats = self.stats
        stats.record_pull(arm)
        for s, k in batch.disclosures:
            stats.record_disclosure(k, s)


class DiscardingPolicy(BasePolicy):
    """UCB / KL-UCB restricted to pulls older than the censoring window."""

    def __init__(
        self,
        n_arms: int,
        delays: DelayDistribution,
        window: int,
        epsilon: float = 0.1,
        index: str = "klucb",
        name: str | None = None,
    ):
        super().__init__(n_arms)
        if index not in ("ucb", "klucb"):
            raise ValueError(f"index must be 'ucb' or 'klucb', got {index!r}")
        self.index = index
        self.epsilon = epsilon
        self.window = window
        self.tau_m = delays.cdf(window)
        self.stats = ArmStats(n_arms, delays, window, scan=True)
        self.name = name or f"discarding-{index}"

    def select(self, t: int) -> int:
        stats = self.stats
        if t <= self.window or min(stats.old_counts) == 0:
            return (t - 1) % self.n_arms
        beta = exploration_budget(t, self.epsilon)
        pick = 0 if self.index == "ucb" else 1
        best, best_arm = -math.inf, 0
        for k in range(self.n_arms):
            value = discarding_indices(stats.resolved_successes[k], stats.old_counts[k], self.tau_m, beta)[pick]
            if value > best:
                best, best_arm = value, k
        return best_arm

    def update(self, t: int, arm: int, batch: FeedbackBatch) -> None:
        stats = self.stats
        stats.record_pull(arm)
        for s, k in batch.disclosures:
            stats.record_disclosure(k, s)


class MeanDelayEstimate:
    """Stochastic-approximation estimate of the mean delay (uncensored heuristic).

    ``mean <- (1 - a_n) * mean + a_n * D`` with ``a_n = n ** -gamma`` for the
    n-th observed delay; the estimate starts at 1.
    """

    def __init__(self, gamma: float = 0.7, initial: float = 1.0):
        if not 0.5 <= gamma <= 1.0:
            raise ValueError("gamma must lie in [0.5, 1]")
        self.gamma = gamma
        self.mean = initial
        self.count = 0

    def observe(self, delay: float) -> None:
        if delay < 0:
            raise ValueError("delays are nonnegative")
        self.count += 1
        step = self.count ** -self.gamma
        self.mean = (1.0 - step) * self.mean + step * delay

    @property
    def decay(self) -> float:
        return self.mean / (1.0 + self.mean)


class DelayHistogram:
    """Biased empirical CDF of delays observed within the censoring window.

    ``cumulative[s]`` counts observed delays ``<= s``; ``weights()``
    normalizes by the number of observations and so estimates
    ``cdf(s) / cdf(m)``.
    """

    def __init__(self, window: int):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window
        self.counts = np.zeros(window + 1, dtype=np.int64)
        self.total = 0

    def observe(self, delay: int) -> None:
        if not 0 <= delay <= self.window:
            raise ValueError(f"delay {delay} cannot be observed with censoring window {self.window}")
        self.counts[delay] += 1
        self.total += 1

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.counts)

    def weights(self) -> np.ndarray | None:
        if self.total == 0:
            return None
        return self.cumulative / self.total


class AgnosticDelayedKLUCB(BasePolicy):
    """DelayedKLUCB with the delay distribution estimated online.

    Uncensored: geometric delays with a plug-in mean estimate. Censored: the
    normalized histogram of observed delays replaces the CDF, so the indices
    target ``cdf(m) * theta``; the common factor leaves the arm ranking intact.
    """

    def __init__(
        self,
        n_arms: int,
        window: int | None = None,
        epsilon: float = 0.1,
        gamma: float = 0.7,
        name: str | None = None,
    ):
        super().__init__(n_arms)
        self.epsilon = epsilon
        self.window = window
        if window is None:
            self.delay_estimate = MeanDelayEstimate(gamma)
            self.stats = ArmStats(n_arms, None, None, decay=self.delay_estimate.decay)
        else:
            self.histogram = DelayHistogram(window)
            self.stats = ArmStats(n_arms, None, window, scan=True)
        self.name = name or "agnostic-delayed-klucb"

    def select(self, t: int) -> int:
        if t <= self.n_arms:
            return t - 1
        if self.window is None:
            n_eff = self.stats.effective_counts()
        else:
            weights = self.histogram.weights()
            if weights is None:
                return (t - 1) % self.n_arms
            n_eff = self.stats.effective_counts(weights)
        return _argmax_klucb(self.stats.successes, n_eff, exploration_budget(t, self.epsilon))

    def update(self, t: int, arm: int, batch: FeedbackBatch) -> None:
        stats = self.stats
        if self.window is None:
            estimate = self.delay_estimate
            for s, k in batch.disclosures:
                stats.record_disclosure(k)
                estimate.observe(t - s)
            stats.record_pull(arm, decay=estimate.decay)
        else:
            stats.record_pull(arm)
            for s, k in batch.disclosures:
                stats.record_disclosure(k, s)
                self.histogram.observe(t - s)


def make_policy(config: PolicyConfig, instance: BanditInstance) -> BasePolicy:
    """Instantiate the policy described by ``config`` for ``instance``."""
    env = config.environment_for(instance)
    window = env.censor_window
    k = instance.n_arms
    name = config.name
    variant = config.variant
    if variant == "oracle":
        return OraclePolicy(k, instance.best_arm, name)
    if variant == "uniform":
        return UniformPolicy(k, name)
    if variant in ("delayed_ucb", "delayed_klucb"):
        return DelayedIndexPolicy(k, instance.delays, window, config.epsilon, variant.split("_")[1], name)
    if variant in ("discarding_ucb", "discarding_klucb"):
        return DiscardingPolicy(k, instance.delays, window, config.epsilon, variant.split("_")[1], name)
    if variant == "agnostic_delayed_klucb":
        return AgnosticDelayedKLUCB(k, window, config.epsilon, config.gamma, name)
    raise ValueError(f"unknown policy variant {variant!r}")


__all__ = [
    "AgnosticDelayedKLUCB",
    "BasePolicy",
    "DelayHistogram",
    "DelayedIndexPolicy",
    "DiscardingPolicy",
    "MeanDelayEstimate",
    "OraclePolicy",
    "PolicyConfig",
    "UniformPolicy",
    "VARIANTS",
    "discarding_indices",
    "exploration_budget",
    "klucb_index",
    "make_policy",
    "ucb_index",
]
