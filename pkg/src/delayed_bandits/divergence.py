"""Bernoulli and Poisson KL divergences and the KL-UCB index inversion."""
from __future__ import annotations

import math

import numpy as np

MAX_BISECTION_STEPS = 64
Q_TOLERANCE = 1e-12


class InfiniteDivergenceError(ArithmeticError):
    """Raised when a divergence is +inf (the reference point sits on the boundary)."""


def bernoulli_kl(p: float, q: float) -> float:
    """KL(Bernoulli(p) || Bernoulli(q)) in nats, with 0 log 0 = 0."""
    if not 0.0 <= p <= 1.0 or not 0.0 <= q <= 1.0:
        raise ValueError(f"bernoulli_kl needs p, q in [0, 1], got p={p!r}, q={q!r}")
    if p == q:
        return 0.0
    if q == 0.0 or q == 1.0:
        raise InfiniteDivergenceError(f"d({p}, {q}) is infinite")
    value = 0.0
    if p > 0.0:
        value += p * math.log(p / q)
    if p < 1.0:
        value += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    # rounding can leave a tiny negative residue when p ~ q
    return max(value, 0.0)


def _excess(x: float) -> float:
    """``x - log1p(x)`` without cancellation for small ``|x|``."""
    if abs(x) < 1e-3:
        return x * x * (0.5 - x * (1 / 3 - x * (0.25 - x * (0.2 - x / 6))))
    return x - math.log1p(x)


def _poisson_kl_positive(p: float, q: float) -> float:
    # d_Pois(p, q) = p * h((q - p) / p) with h(x) = x - log(1 + x)
    x = (q - p) / p
    if x > 1e12:
        return p * (math.log(p) - math.log(q)) + q - p
    return p * _excess(x)


def poisson_kl(p: float, q: float) -> float:
    """KL(Poisson(p) || Poisson(q)) = p log(p/q) + q - p."""
    if q <= 0.0:
        raise ValueError(f"poisson_kl needs q > 0, got {q!r}")
    if p < 0.0:
        raise ValueError(f"poisson_kl needs p >= 0, got {p!r}")
    if p == 0.0:
        return q
    return max(_poisson_kl_positive(p, q), 0.0)


def klucb_invert(theta_hat: float, n_eff: float, budget: float) -> float:
    """Largest q in [theta_hat, 1] with ``n_eff * poisson_kl(theta_hat, q) <= budget``.

    Bisection on q; ``q -> poisson_kl(theta_hat, q)`` is increasing on
    ``[theta_hat, inf)`` with slope below 1, so a bracket of width
    ``Q_TOLERANCE`` keeps the constraint residual under ``n_eff * 1e-12``.
    The stopping rule does not depend on the arguments, which keeps the
    result monotone in ``budget`` and ``n_eff``. The returned point is
    always feasible.
    """
    if n_eff <= 0.0:
        raise ValueError(f"klucb_invert needs n_eff > 0, got {n_eff!r}")
    if budget < 0.0:
        raise ValueError(f"klucb_invert needs budget >= 0, got {budget!r}")
    if theta_hat < 0.0:
        raise ValueError(f"klucb_invert needs theta_hat >= 0, got {theta_hat!r}")
    p = min(theta_hat, 1.0)
    if budget == 0.0 or p == 1.0:
        return p
    level = budget / n_eff
    if p == 0.0:
        # d_Pois(0, q) = q
        return min(level, 1.0)
    if _poisson_kl_positive(p, 1.0) <= level:
        return 1.0

    lo, hi = p, 1.0
    for _ in range(MAX_BISECTION_STEPS):
        if hi - lo <= Q_TOLERANCE:
            break
        mid = 0.5 * (lo + hi)
        if _poisson_kl_positive(p, mid) <= level:
            lo = mid
        else:
            hi = mid
    return lo


def bernoulli_kl_array(p, q) -> np.ndarray:
    """Elementwise :func:`bernoulli_kl` for ``q`` strictly inside (0, 1)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0.0) | (q >= 1.0)) or np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("bernoulli_kl_array needs p in [0, 1] and q in (0, 1)")
    with np.errstate(divide="ignore", invalid="ignore"):
        head = np.where(p > 0.0, p * np.log(p / q), 0.0)
        tail = np.where(p < 1.0, (1.0 - p) * np.log((1.0 - p) / (1.0 - q)), 0.0)
    return np.where(p == q, 0.0, np.maximum(head + tail, 0.0))


def poisson_kl_array(p, q) -> np.ndarray:
    """Elementwise :func:`poisson_kl`."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0.0) or np.any(p < 0.0):
        raise ValueError("poisson_kl_array needs p >= 0 and q > 0")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x = (q - p) / p
        small = x * x * (0.5 - x * (1 / 3 - x * (0.25 - x * (0.2 - x / 6))))
        excess = np.where(np.abs(x) < 1e-3, small, x - np.log1p(x))
        direct = p * (np.log(p) - np.log(q)) + q - p
        value = np.where(x > 1e12, direct, p * excess)
    return np.maximum(np.where(p > 0.0, value, q), 0.0)
