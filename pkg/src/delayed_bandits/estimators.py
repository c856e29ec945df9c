"""Per-arm statistics and the delay-corrected effective pull counts.

Rounds are numbered from 1. When the learner picks the action of round
``t`` it has seen every disclosure up to round ``t - 1``, so a pull made at
round ``s < t`` has been exposed for ``t - 1 - s`` rounds and is weighted
by ``cdf(t - 1 - s)`` (capped at ``cdf(m)`` when observations are censored
after ``m`` rounds). Arms are 0-based.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .delays import DelayDistribution, GeometricDelay


def geometric_update(o: float, pulled: float, decay: float) -> float:
    """One round of the geometric decay accumulator: ``O <- decay * (O + pulled)``.

    With ``O`` maintained this way, ``N - O`` is the effective count under
    geometric delays of survival ``decay ** (elapsed + 1)``.
    """
    return decay * (o + pulled)


def conversion_rate_estimate(successes: float, n_eff: float) -> float | None:
    """``successes / n_eff``, or ``None`` while the effective count is zero."""
    if n_eff <= 0.0:
        return None
    return successes / n_eff


def effective_count_uncensored(
    pull_times: Iterable[int], now: int, delays: DelayDistribution
) -> float:
    """Reference weighted sum over recorded pulls (all strictly before ``now``)."""
    total = 0.0
    for s in pull_times:
        if s >= now:
            raise ValueError(f"pull at round {s} is not visible when deciding round {now}")
        total += delays.cdf(now - 1 - s)
    return total


def effective_count_censored(
    pull_times: Iterable[int], now: int, delays: DelayDistribution, window: int
) -> float:
    """Reference weighted sum with every weight capped at ``cdf(window)``."""
    if window < 1:
        raise ValueError("censoring window must be >= 1")
    total = 0.0
    for s in pull_times:
        if s >= now:
            raise ValueError(f"pull at round {s} is not visible when deciding round {now}")
        total += delays.cdf(min(now - 1 - s, window))
    return total


class ArmStats:
    """Running statistics of every arm for one replication.

    ``successes[k]`` is S_k and ``pulls[k]`` is N_k. Two ways of computing
    the effective counts are supported:

    * ``window=None``: geometric delays only; the decay accumulator ``O_k``
      gives ``N_k - O_k``. ``decay`` may be overridden per call of
      :meth:`record_pull` (plug-in estimates).
    * ``window=c``: a ring buffer of the last ``c`` pulled arm ids. Pulls that
      leave it are moved to ``old_counts`` and keep weight ``cdf(c)``. With
      geometric delays the buffered weights are maintained incrementally,
      otherwise (or with ``scan=True``) they are summed over the buffer.

    Censored feedback uses ``window=m``. Uncensored tabulated delays use the
    table length as window, since the CDF is flat beyond the table.
    """

    def __init__(
        self,
        n_arms: int,
        delays: DelayDistribution | None = None,
        window: int | None = None,
        *,
        scan: bool = False,
        decay: float | None = None,
    ):
        if n_arms < 1:
            raise ValueError("need at least one arm")
        self.n_arms = n_arms
        self.delays = delays
        self.window = window
        self.rounds = 0
        self.successes = [0] * n_arms
        self.pulls = [0] * n_arms

        if decay is None and isinstance(delays, GeometricDelay):
            decay = delays.decay
        self.decay = decay

        self.decayed: list[float] | None = None
        self.buffer: np.ndarray | None = None
        if window is None:
            if decay is None:
                raise ValueError("uncensored effective counts need geometric delays or a window")
            self.decayed = [0.0] * n_arms
            return

        if window < 1:
            raise ValueError("window must be >= 1")
        self.buffer = np.full(window, n_arms, dtype=np.int64)
        self.in_buffer = [0] * n_arms
        self.old_counts = [0] * n_arms
        self.resolved_successes = [0] * n_arms
        self._buffer_conversions = [0] * window
        self._scan = scan or decay is None
        if delays is not None:
            self.weights = delays.cdf_array(np.arange(window + 1))
        else:
            self.weights = None
        if not self._scan:
            self._buffer_decayed = [0.0] * n_arms
            self._evict_factor = decay ** (window + 1)

    def record_pull(self, arm: int, decay: float | None = None) -> None:
        """Register the pull of the current round (one pull per round)."""
        self.pulls[arm] += 1
        self.rounds += 1
        if self.decayed is not None:
            rho = self.decay if decay is None else decay
            acc = self.decayed
            for k in range(self.n_arms):
                acc[k] *= rho
            acc[arm] += rho
            return

        slot = (self.rounds - 1) % self.window
        evicted = int(self.buffer[slot])
        if evicted < self.n_arms:
            self.in_buffer[evicted] -= 1
            self.old_counts[evicted] += 1
            self.resolved_successes[evicted] += self._buffer_conversions[slot]
        self._buffer_conversions[slot] = 0
        self.buffer[slot] = arm
        self.in_buffer[arm] += 1
        if not self._scan:
            rho = self.decay
            acc = self._buffer_decayed
            for k in range(self.n_arms):
                acc[k] *= rho
            if evicted < self.n_arms:
                acc[evicted] -= self._evict_factor
            acc[arm] += rho

    def record_disclosure(self, arm: int, pull_time: int | None = None) -> None:
        """Credit a disclosed conversion to ``arm``.

        ``pull_time`` (round of the originating pull) is needed only to keep
        ``resolved_successes``, the conversions of pulls older than the window.
        """
        self.successes[arm] += 1
        if self.buffer is not None and pull_time is not None:
            if pull_time > self.rounds - self.window:
                self._buffer_conversions[(pull_time - 1) % self.window] += 1
            else:
                self.resolved_successes[arm] += 1

    def effective_counts(self, weights: Sequence[float] | np.ndarray | None = None) -> list[float]:
        """Effective counts for the decision of round ``rounds + 1``.

        ``weights`` (length ``window + 1``, indexed by elapsed rounds, last
        entry for pulls older than the window) overrides the delay CDF.
        """
        if self.decayed is not None:
            if weights is not None:
                raise ValueError("custom weights need a windowed ArmStats")
            return [n - o for n, o in zip(self.pulls, self.decayed)]

        if weights is None and not self._scan:
            cap = self.weights[-1]
            return [
                cap * old + inside - acc
                for old, inside, acc in zip(self.old_counts, self.in_buffer, self._buffer_decayed)
            ]

        w = self.weights if weights is None else np.asarray(weights, dtype=float)
        if w is None:
            raise ValueError("no delay distribution given: pass weights explicitly")
        c = self.window
        cap = float(w[c])
        if self.rounds == 0:
            return [0.0] * self.n_arms
        # slot j holds the pull of age (p - j) mod c, p being the newest slot
        p = (self.rounds - 1) % c
        head = w[:c][::-1]
        doubled = np.concatenate((head, head))
        slot_weights = doubled[c - 1 - p : 2 * c - 1 - p]
        binned = np.bincount(self.buffer, weights=slot_weights, minlength=self.n_arms + 1)
        return [cap * old + float(b) for old, b in zip(self.old_counts, binned[: self.n_arms])]
