"""Delayed-conversion bandit environment and regret accounting.

Each pull of arm ``k`` at round ``s`` converts with probability ``theta[k]``
and, independently, draws a delay ``D_s``; a conversion is disclosed at round
``s + D_s`` (the same round when ``D_s = 0``). With a censoring window ``m``
conversions whose delay exceeds ``m`` are never disclosed. Non-conversions
are never disclosed either, so the learner only ever sees positive feedback.
"""
from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence

import numpy as np

from .delays import DelayDistribution, delay_from_dict


@dataclass(frozen=True)
class BanditInstance:
    theta: tuple[float, ...]
    delays: DelayDistribution
    horizon: int
    censor_window: int | None = None

    def __post_init__(self):
        theta = tuple(float(x) for x in self.theta)
        object.__setattr__(self, "theta", theta)
        if len(theta) < 2:
            raise ValueError("a bandit instance needs at least two arms")
        if any(not 0.0 <= x <= 1.0 for x in theta):
            raise ValueError(f"conversion rates must lie in [0, 1], got {theta}")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon!r}")
        object.__setattr__(self, "horizon", int(self.horizon))
        if self.censor_window is not None:
            if int(self.censor_window) != self.censor_window or self.censor_window < 1:
                raise ValueError(f"censor_window must be a positive integer, got {self.censor_window!r}")
            object.__setattr__(self, "censor_window", int(self.censor_window))

    @property
    def n_arms(self) -> int:
        return len(self.theta)

    @property
    def best_rate(self) -> float:
        return max(self.theta)

    @property
    def best_arm(self) -> int:
        """Lowest-index arm achieving the best rate."""
        return self.theta.index(self.best_rate)

    @property
    def censored(self) -> bool:
        return self.censor_window is not None

    def with_censoring(self, window: int | None) -> "BanditInstance":
        return BanditInstance(self.theta, self.delays, self.horizon, window)

    def disclosure_weights(self, elapsed: np.ndarray) -> np.ndarray:
        """Probability that a conversion is disclosed within ``elapsed`` rounds."""
        elapsed = np.asarray(elapsed)
        if self.censor_window is not None:
            elapsed = np.minimum(elapsed, self.censor_window)
        return self.delays.cdf_array(elapsed)

    def to_dict(self) -> dict[str, Any]:
        return {
            "theta": list(self.theta),
            "delay": self.delays.to_dict(),
            "censor_window": self.censor_window,
            "horizon": self.horizon,
        }

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "BanditInstance":
        if not isinstance(spec, dict):
            raise ValueError("instance must be a JSON object")
        allowed = {"theta", "delay", "censor_window", "horizon"}
        extra = spec.keys() - allowed
        if extra:
            raise ValueError(f"unknown key {sorted(extra)[0]!r} in instance")
        for key in ("theta", "delay", "horizon"):
            if key not in spec:
                raise ValueError(f"missing key {key!r} in instance")
        return cls(
            theta=tuple(spec["theta"]),
            delays=delay_from_dict(spec["delay"]),
            horizon=spec["horizon"],
            censor_window=spec.get("censor_window"),
        )

    def instance_id(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass(frozen=True)
class FeedbackBatch:
    """Conversions disclosed at round ``t`` as ``(pull_time, arm)`` pairs."""

    t: int
    disclosures: tuple[tuple[int, int], ...] = ()

    @property
    def reward(self) -> int:
        return len(self.disclosures)


class HorizonExceeded(RuntimeError):
    pass


class DelayedBanditEnv:
    """Single-replication environment state (round counter and pending queue).

    The conversion uniforms and the delays of all ``horizon`` rounds are
    drawn from ``rng`` up front (uniforms first, then delays), so a replication
    is fully determined by the seed of its generator.
    """

    def __init__(self, instance: BanditInstance, rng: np.random.Generator):
        self.instance = instance
        horizon = instance.horizon
        self._uniforms = rng.random(horizon).tolist()
        self._delays = instance.delays.sample(rng, horizon).tolist()
        self._theta = instance.theta
        self._window = instance.censor_window
        self.t = 0
        self._pending: dict[int, list[tuple[int, int]]] = defaultdict(list)
        self.n_enqueued = 0
        self.n_enqueued_within_horizon = 0

    def step(self, arm: int) -> FeedbackBatch:
        t = self.t + 1
        if t > self.instance.horizon:
            raise HorizonExceeded(f"round {t} is past the horizon {self.instance.horizon}")
        if not 0 <= arm < len(self._theta):
            raise ValueError(f"arm {arm} out of range")
        self.t = t
        delay = self._delays[t - 1]
        if self._uniforms[t - 1] < self._theta[arm] and (self._window is None or delay <= self._window):
            due = t + delay
            self.n_enqueued += 1
            if due <= self.instance.horizon:
                self.n_enqueued_within_horizon += 1
                self._pending[due].append((t, arm))
        disclosed = self._pending.pop(t, None)
        if disclosed is None:
            return FeedbackBatch(t)
        return FeedbackBatch(t, tuple(disclosed))

    def pending(self) -> int:
        return sum(len(v) for v in self._pending.values())


def simulate_schedule(
    instance: BanditInstance, actions: Sequence[int], rng: np.random.Generator
) -> np.ndarray:
    """Vectorized run of a fixed action sequence.

    Returns, for every pull, the round at which its conversion is disclosed
    (``inf`` if it never is). Uses the same draws as :class:`DelayedBanditEnv`
    for the same generator state.
    """
    actions = np.asarray(actions, dtype=np.int64)
    horizon = instance.horizon
    if actions.size > horizon:
        raise ValueError("action sequence longer than the horizon")
    uniforms = rng.random(horizon)[: actions.size]
    delays = instance.delays.sample(rng, horizon)[: actions.size]
    theta = np.asarray(instance.theta)
    converted = uniforms < theta[actions]
    if instance.censor_window is not None:
        converted &= delays <= instance.censor_window
    pull_times = np.arange(1, actions.size + 1, dtype=float)
    return np.where(converted, pull_times + delays.astype(float), np.inf)


def _gaps(instance: BanditInstance, actions: Sequence[int]) -> np.ndarray:
    theta = np.asarray(instance.theta)
    return instance.best_rate - theta[np.asarray(actions, dtype=np.int64)]


def pseudo_regret(instance: BanditInstance, actions: Sequence[int]) -> float:
    """Delay-weighted pseudo-regret of ``actions`` at horizon ``len(actions)``.

    Uncensored: ``sum_s gap(A_s) * cdf(T - s)``; censored: the same with the
    elapsed time capped at the window.
    """
    gaps = _gaps(instance, actions)
    if gaps.size == 0:
        return 0.0
    elapsed = np.arange(gaps.size - 1, -1, -1)
    return float(np.dot(gaps, instance.disclosure_weights(elapsed)))


def pseudo_regret_curve(
    instance: BanditInstance, actions: Sequence[int], checkpoints: Sequence[int]
) -> np.ndarray:
    """Pseudo-regret of every action prefix ending at a checkpoint."""
    gaps = _gaps(instance, actions)
    weights = instance.disclosure_weights(np.arange(gaps.size))[::-1]
    out = np.empty(len(checkpoints))
    for i, c in enumerate(checkpoints):
        if not 0 <= c <= gaps.size:
            raise ValueError(f"checkpoint {c} outside [0, {gaps.size}]")
        out[i] = float(np.dot(gaps[:c], weights[gaps.size - c :])) if c else 0.0
    return out


class Policy(Protocol):
    name: str

    def select(self, t: int) -> int: ...

    def update(self, t: int, arm: int, batch: FeedbackBatch) -> None: ...


@dataclass
class RegretTrace:
    checkpoints: np.ndarray
    pseudo_regret: np.ndarray
    reward: np.ndarray
    seed: int
    policy: str
    instance_id: str
    actions: np.ndarray = field(repr=False, default=None)


def default_checkpoints(horizon: int, stride: int | None = None) -> list[int]:
    if stride is None:
        stride = max(1, horizon // 100)
    if stride < 1:
        raise ValueError("checkpoint stride must be >= 1")
    points = list(range(stride, horizon + 1, stride))
    if not points or points[-1] != horizon:
        points.append(horizon)
    return points


def regret_trace(
    instance: BanditInstance,
    policy: Policy,
    seed: int,
    checkpoints: Sequence[int] | None = None,
) -> RegretTrace:
    """Run ``policy`` against a fresh environment seeded with ``seed``."""
    if checkpoints is None:
        checkpoints = default_checkpoints(instance.horizon)
    env = DelayedBanditEnv(instance, np.random.default_rng(seed))
    horizon = instance.horizon
    actions = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon, dtype=np.int64)
    select, update, step = policy.select, policy.update, env.step
    for t in range(1, horizon + 1):
        arm = select(t)
        batch = step(arm)
        update(t, arm, batch)
        actions[t - 1] = arm
        rewards[t - 1] = len(batch.disclosures)
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    cum_reward = np.concatenate(([0], np.cumsum(rewards)))[checkpoints]
    return RegretTrace(
        checkpoints=checkpoints,
        pseudo_regret=pseudo_regret_curve(instance, actions, checkpoints),
        reward=cum_reward,
        seed=seed,
        policy=getattr(policy, "name", type(policy).__name__),
        instance_id=instance.instance_id(),
        actions=actions,
    )
