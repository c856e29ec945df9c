"""Numerical self-checks exposed by ``delayed-bandits diagnose <suite>``.

Every suite returns a JSON-serializable report with a boolean ``passed``.
"""
from __future__ import annotations

import math
from typing import Any, Sequence

import numpy as np

from ..bounds import lower_bound_censored, lower_bound_uncensored, upper_bound_constants
from ..delays import DelayDistribution, GeometricDelay
from ..divergence import bernoulli_kl, bernoulli_kl_array, poisson_kl, poisson_kl_array
from ..estimators import ArmStats, effective_count_censored, effective_count_uncensored
from ..policies import klucb_index, ucb_index


def ucb_envelope(beta: float, t: int) -> float:
    """Bound on the probability that the delay-corrected UCB index undershoots."""
    return beta * math.e * math.log(t) * math.exp(-beta)


def klucb_envelope(beta: float, t: int) -> float:
    """Self-normalized bound on the probability that the KL-UCB index undershoots."""
    return math.e * math.ceil(beta * math.log(t)) * math.exp(-beta)


def round_robin_effective_counts(
    n_arms: int, t: int, delays: DelayDistribution, window: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Pull counts and effective counts at decision round ``t`` after round-robin pulls ``1..t-1``."""
    pulls = np.zeros(n_arms)
    n_eff = np.zeros(n_arms)
    for k in range(n_arms):
        times = list(range(k + 1, t, n_arms))
        pulls[k] = len(times)
        if window is None:
            n_eff[k] = effective_count_uncensored(times, t, delays)
        else:
            n_eff[k] = effective_count_censored(times, t, delays, window)
    return pulls, n_eff


def round_robin_successes(
    theta: Sequence[float],
    t: int,
    delays: DelayDistribution,
    replications: int,
    rng: np.random.Generator,
    window: int | None = None,
) -> np.ndarray:
    """Disclosed conversions per arm seen at decision round ``t``, shape ``(replications, K)``.

    Pulls ``1..t-1`` follow the fixed round-robin schedule; a conversion of
    the pull at round ``s`` counts when ``s + delay <= t - 1``.
    """
    theta = np.asarray(theta, dtype=float)
    k = theta.size
    n = t - 1
    arms = np.arange(n) % k
    pull_times = np.arange(1, n + 1)
    masks = [arms == a for a in range(k)]
    out = np.zeros((replications, k), dtype=np.int64)
    # chunks keep the (replications, t) draw matrices small
    chunk = max(1, 4_000_000 // max(n, 1))
    for start in range(0, replications, chunk):
        rows = min(chunk, replications - start)
        uniforms = rng.random((rows, n))
        delay = delays.sample(rng, (rows, n))
        seen = (uniforms < theta[arms]) & (delay <= (t - 1 - pull_times))
        if window is not None:
            seen &= delay <= window
        for a in range(k):
            out[start : start + rows, a] = seen[:, masks[a]].sum(axis=1)
    return out


def concentration(
    replications: int = 10_000,
    t: int = 1000,
    betas: Sequence[float] = (3.0, 5.0),
    theta: Sequence[float] = (0.3, 0.1),
    mean_delay: float = 50.0,
    window: int | None = None,
    seed: int = 0,
) -> dict[str, Any]:
    """Monte Carlo frequency of ``theta_k`` above each index under a fixed schedule."""
    delays = GeometricDelay(mean_delay)
    rng = np.random.default_rng(seed)
    successes = round_robin_successes(theta, t, delays, replications, rng, window)
    pulls, n_eff = round_robin_effective_counts(len(theta), t, delays, window)
    checks = []
    for beta in betas:
        for k, rate in enumerate(theta):
            s = successes[:, k]
            values, counts = np.unique(s, return_counts=True)
            ucb_miss = kl_miss = 0
            for v, c in zip(values.tolist(), counts.tolist()):
                theta_hat = v / n_eff[k]
                if rate > ucb_index(theta_hat, pulls[k], n_eff[k], beta):
                    ucb_miss += c
                if rate > klucb_index(theta_hat, n_eff[k], beta):
                    kl_miss += c
            for kind, miss, envelope in (
                ("ucb", ucb_miss, ucb_envelope(beta, t)),
                ("klucb", kl_miss, klucb_envelope(beta, t)),
            ):
                freq = miss / replications
                checks.append(
                    {
                        "index": kind,
                        "beta": beta,
                        "arm": k,
                        "frequency": freq,
                        "envelope": envelope,
                        "vacuous": envelope >= 1.0,
                        "passed": freq <= envelope,
                    }
                )
    return {
        "suite": "concentration",
        "replications": replications,
        "t": t,
        "theta": list(theta),
        "mean_delay": mean_delay,
        "window": window,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }


def sandwich(step: float = 0.001, scalar_stride: int = 13) -> dict[str, Any]:
    """``(1 - q) d(p, q) <= d_Pois(p, q) <= d(p, q)`` on the grid ``0 < p < q < 1``.

    The whole grid goes through the array kernels; every ``scalar_stride``-th
    pair is also recomputed with the scalar functions, which must agree.
    """
    n = int(round(1.0 / step))
    grid = np.arange(1, n) * step
    pi, qi = np.triu_indices(grid.size, k=1)
    p, q = grid[pi], grid[qi]
    d = bernoulli_kl_array(p, q)
    dp = poisson_kl_array(p, q)
    bad = np.flatnonzero(~(((1.0 - q) * d <= dp) & (dp <= d)))
    mismatch = 0.0
    for i in range(0, p.size, scalar_stride):
        a, b = float(p[i]), float(q[i])
        mismatch = max(mismatch, abs(bernoulli_kl(a, b) - d[i]), abs(poisson_kl(a, b) - dp[i]))
    first = (float(p[bad[0]]), float(q[bad[0]])) if bad.size else None
    return {
        "suite": "sandwich",
        "pairs": int(p.size),
        "failures": int(bad.size),
        "first_failure": first,
        "scalar_mismatch": float(mismatch),
        "passed": bool(bad.size == 0 and mismatch <= 1e-12),
    }


def bounds(n_instances: int = 100, seed: int = 0) -> dict[str, Any]:
    """Lower bound against ``tau_m`` on random instances.

    Checks that every per-arm divergence ``d(tau theta_k, tau theta_best)``
    grows with ``tau`` faster than linearly, which makes the lower bound
    nonincreasing in ``tau``; that ``tau = 1`` reproduces the uncensored
    bound exactly; and that the KL-UCB upper constant dominates the lower
    bound arm by arm.
    """
    rng = np.random.default_rng(seed)
    taus = [round(0.1 * i, 1) for i in range(1, 11)]
    violations = []
    for i in range(n_instances):
        k = int(rng.integers(2, 6))
        theta = rng.uniform(0.01, 0.95, size=k).tolist()
        values = [lower_bound_censored(theta, tau).lower_bound for tau in taus]
        if any(b > a * (1 + 1e-12) for a, b in zip(values, values[1:])):
            violations.append({"instance": i, "check": "lower bound nonincreasing in tau"})
        best = max(theta)
        for rate in theta:
            if rate == best:
                continue
            divs = [bernoulli_kl(tau * rate, tau * best) for tau in taus]
            if any(b < a for a, b in zip(divs, divs[1:])):
                violations.append({"instance": i, "check": "divergence nondecreasing in tau"})
        if lower_bound_censored(theta, 1.0).lower_bound != lower_bound_uncensored(theta).lower_bound:
            violations.append({"instance": i, "check": "tau = 1 equals uncensored"})
        tau = taus[int(rng.integers(len(taus)))]
        report = upper_bound_constants(theta, tau)
        lower = lower_bound_censored(theta, tau).contributions
        if any(u < l for u, l in zip(report.klucb_contributions, lower)):
            violations.append({"instance": i, "check": "KL-UCB constant dominates lower bound"})
    return {
        "suite": "bounds",
        "instances": n_instances,
        "taus": taus,
        "violations": violations,
        "passed": not violations,
    }


def _convolved_counts(actions: np.ndarray, n_arms: int, weights: np.ndarray) -> np.ndarray:
    """Effective counts at decision rounds ``2..T+1`` by direct convolution, shape ``(T, K)``."""
    horizon = actions.size
    out = np.empty((horizon, n_arms))
    for k in range(n_arms):
        pulled = (actions == k).astype(float)
        out[:, k] = np.convolve(pulled, weights[:horizon])[:horizon]
    return out


def _tracked_counts(stats: ArmStats, actions: np.ndarray) -> np.ndarray:
    rows = []
    for arm in actions.tolist():
        stats.record_pull(arm)
        rows.append(stats.effective_counts())
    return np.array(rows)


def oracle(n_configs: int = 50, horizon: int = 2000, seed: int = 0, spot_checks: int = 5) -> dict[str, Any]:
    """Incremental effective counts against a direct weighted sum at every round.

    Each configuration draws ``K``, a geometric mean delay, a censoring
    window and an arbitrary action sequence. The uncensored accumulator and
    both censored ring-buffer paths are compared with a convolution of the
    pull indicators with the delay CDF; a few rounds per configuration are
    also recomputed with the plain per-pull sum.
    """
    rng = np.random.default_rng(seed)
    errors = {"uncensored": 0.0, "censored": 0.0, "censored_scan": 0.0}
    worst_spot = 0.0
    for _ in range(n_configs):
        k = int(rng.integers(2, 11))
        mean = float(np.exp(rng.uniform(math.log(0.5), math.log(500.0))))
        window = int(rng.integers(1, 501))
        delays = GeometricDelay(mean)
        probs = rng.dirichlet(np.ones(k))
        actions = rng.choice(k, size=horizon, p=probs)
        elapsed = np.arange(horizon)
        full = delays.cdf_array(elapsed)
        capped = delays.cdf_array(np.minimum(elapsed, window))
        expected = {
            "uncensored": _convolved_counts(actions, k, full),
            "censored": _convolved_counts(actions, k, capped),
        }
        expected["censored_scan"] = expected["censored"]
        got = {
            "uncensored": _tracked_counts(ArmStats(k, delays), actions),
            "censored": _tracked_counts(ArmStats(k, delays, window), actions),
            "censored_scan": _tracked_counts(ArmStats(k, delays, window, scan=True), actions),
        }
        for key in errors:
            errors[key] = max(errors[key], float(np.max(np.abs(got[key] - expected[key]))))
        for t in rng.integers(2, horizon + 2, size=spot_checks).tolist():
            for arm in range(k):
                times = (np.flatnonzero(actions[: t - 1] == arm) + 1).tolist()
                worst_spot = max(
                    worst_spot,
                    abs(effective_count_uncensored(times, t, delays) - expected["uncensored"][t - 2, arm]),
                    abs(effective_count_censored(times, t, delays, window) - expected["censored"][t - 2, arm]),
                )
    tolerance = 1e-9
    return {
        "suite": "oracle",
        "configs": n_configs,
        "horizon": horizon,
        "max_abs_error": errors,
        "reference_disagreement": worst_spot,
        "tolerance": tolerance,
        "passed": max(errors.values()) < tolerance and worst_spot < tolerance,
    }


SUITES = {
    "concentration": concentration,
    "sandwich": sandwich,
    "bounds": bounds,
    "oracle": oracle,
}
