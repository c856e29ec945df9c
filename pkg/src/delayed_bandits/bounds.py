"""Asymptotic regret constants (coefficients of ``log T``, in nats).

The censored lower bound scales every rate by ``tau_m = cdf(m)``; with
``tau_m = 1`` it is the classical uncensored constant. Upper-bound constants
are the leading terms of the DelayedUCB and DelayedKLUCB guarantees.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

from .divergence import InfiniteDivergenceError, bernoulli_kl


@dataclass(frozen=True)
class BoundReport:
    setting: str
    tau_m: float
    lower_bound: float
    contributions: tuple[float, ...]
    ucb_constant: float | None = None
    klucb_constant: float | None = None
    # same as klucb_constant with 1 / (1 - tau_m * theta_best) as leading factor
    klucb_constant_scaled: float | None = None
    klucb_contributions: tuple[float, ...] = field(default=())

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["contributions"] = list(self.contributions)
        out["klucb_contributions"] = list(self.klucb_contributions)
        return out


def _check(theta: Sequence[float], tau_m: float) -> tuple[tuple[float, ...], int]:
    theta = tuple(float(x) for x in theta)
    if len(theta) < 2:
        raise ValueError("need at least two arms")
    if any(not 0.0 <= x <= 1.0 for x in theta):
        raise ValueError(f"rates must lie in [0, 1], got {theta}")
    if not 0.0 < tau_m <= 1.0:
        raise ValueError(f"tau_m must lie in (0, 1], got {tau_m!r}")
    best = max(theta)
    if theta.count(best) > 1:
        raise ValueError("the best arm is not unique; the asymptotic bound presumes a unique optimum")
    return theta, theta.index(best)


def _lai_robbins_terms(theta: tuple[float, ...], best_arm: int, tau_m: float) -> tuple[float, ...]:
    best = theta[best_arm]
    terms = []
    for k, rate in enumerate(theta):
        if k == best_arm:
            terms.append(0.0)
            continue
        try:
            div = bernoulli_kl(tau_m * rate, tau_m * best)
        except InfiniteDivergenceError:
            # an infinitely distinguishable arm costs nothing asymptotically
            terms.append(0.0)
            continue
        if div == 0.0:
            # rates equal to working precision: the arm cannot be told apart
            terms.append(math.inf)
            continue
        terms.append(tau_m * (best - rate) / div)
    return tuple(terms)


def lower_bound_censored(theta: Sequence[float], tau_m: float) -> BoundReport:
    theta, best_arm = _check(theta, tau_m)
    terms = _lai_robbins_terms(theta, best_arm, tau_m)
    return BoundReport("censored", float(tau_m), sum(terms), terms)


def lower_bound_uncensored(theta: Sequence[float]) -> BoundReport:
    theta, best_arm = _check(theta, 1.0)
    terms = _lai_robbins_terms(theta, best_arm, 1.0)
    return BoundReport("uncensored", 1.0, sum(terms), terms)


def upper_bound_constants(
    theta: Sequence[float], tau_m: float, epsilon: float = 0.1, eta: float = 0.1
) -> BoundReport:
    """Lower bound plus the UCB and KL-UCB leading constants.

    UCB: ``(1 + eps) * sum 1 / (2 tau_m gap_k)``. KL-UCB:
    ``(1 + eta)(1 + eps) / (1 - theta_best) * sum tau_m gap_k / d(tau_m theta_k, tau_m theta_best)``;
    the variant with ``1 - tau_m * theta_best`` in the leading factor is
    reported alongside.
    """
    if not epsilon > 0.0 or not eta > 0.0:
        raise ValueError("epsilon and eta must be positive")
    theta, best_arm = _check(theta, tau_m)
    best = theta[best_arm]
    if best >= 1.0:
        raise ValueError("the KL-UCB constant is undefined when the best rate is 1")
    terms = _lai_robbins_terms(theta, best_arm, tau_m)
    ucb = (1.0 + epsilon) * sum(
        1.0 / (2.0 * tau_m * (best - rate)) for k, rate in enumerate(theta) if k != best_arm
    )
    inflation = (1.0 + eta) * (1.0 + epsilon)
    kl_terms = tuple(inflation / (1.0 - best) * x for x in terms)
    lb = sum(terms)
    return BoundReport(
        setting="censored" if tau_m < 1.0 else "uncensored",
        tau_m=float(tau_m),
        lower_bound=lb,
        contributions=terms,
        ucb_constant=ucb,
        klucb_constant=sum(kl_terms),
        klucb_constant_scaled=inflation / (1.0 - tau_m * best) * lb,
        klucb_contributions=kl_terms,
    )
