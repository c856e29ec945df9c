"""Discrete conversion-delay distributions: CDF, survival, mean and sampling.

Delays are nonnegative integers counted in rounds. ``cdf(d)`` is the
probability that a conversion triggered at round ``s`` is disclosed by round
``s + d``.
"""
from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

# Sampled delay for mass that never resolves (tail of a defective table).
NEVER = sys.maxsize


class FiniteMeanError(ValueError):
    """The delay distribution has an infinite mean."""


class DelayDistribution:
    """Base class; use :class:`GeometricDelay` or :class:`TabulatedDelay`."""

    kind: str = ""

    def cdf(self, d: int) -> float:
        raise NotImplementedError

    def cdf_array(self, d: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def survival(self, d: int) -> float:
        return 1.0 - self.cdf(d)

    def mean(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int | None = None):
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


class GeometricDelay(DelayDistribution):
    """Geometric delays parameterized by their exact mean.

    The per-round survival decay is ``rho = mean / (1 + mean)``, so that
    ``P(D > d) = rho ** (d + 1)`` and ``E[D] = mean``.
    """

    kind = "geometric"

    def __init__(self, mean: float):
        mean = float(mean)
        if not mean > 0.0 or not math.isfinite(mean):
            raise ValueError(f"geometric delay mean must be positive and finite, got {mean!r}")
        self._mean = mean
        self.decay = mean / (1.0 + mean)
        self._log_decay = math.log(self.decay)

    def __repr__(self) -> str:
        return f"GeometricDelay(mean={self._mean!r})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GeometricDelay) and other._mean == self._mean

    def __hash__(self) -> int:
        return hash(("geometric", self._mean))

    def cdf(self, d: int) -> float:
        if d < 0:
            return 0.0
        return -math.expm1((d + 1) * self._log_decay)

    def cdf_array(self, d: np.ndarray) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        out = -np.expm1((d + 1.0) * self._log_decay)
        return np.where(d < 0, 0.0, out)

    def mean(self) -> float:
        return self._mean

    def sample(self, rng: np.random.Generator, size: int | None = None):
        # inverse CDF: D >= d  <=>  U <= rho**d, with U uniform on (0, 1]
        u = 1.0 - rng.random(size)
        d = np.floor(np.log(u) / self._log_decay)
        if size is None:
            return int(d)
        return d.astype(np.int64)

    def to_dict(self) -> dict[str, Any]:
        return {"geometric": {"mean": self._mean}}


class TabulatedDelay(DelayDistribution):
    """Delay CDF given as a table ``cdf[0], cdf[1], ...``.

    Beyond the last entry the survival stays constant. A table whose last
    entry is below one therefore carries defective mass that is never
    disclosed; such a distribution has no finite mean.
    """

    kind = "tabulated"

    def __init__(self, cdf: Sequence[float]):
        table = np.asarray(cdf, dtype=float)
        if table.ndim != 1 or table.size == 0:
            raise ValueError("tabulated cdf must be a non-empty 1-d sequence")
        if np.any(~np.isfinite(table)) or table.min() < 0.0 or table.max() > 1.0:
            raise ValueError("tabulated cdf entries must lie in [0, 1]")
        if np.any(np.diff(table) < 0.0):
            raise ValueError("tabulated cdf must be nondecreasing")
        self.table = table
        self.table.flags.writeable = False
        self.tail_mass = 1.0 - float(table[-1])

    @classmethod
    def point_mass(cls, delay: int) -> "TabulatedDelay":
        return cls([0.0] * delay + [1.0])

    def __repr__(self) -> str:
        return f"TabulatedDelay(cdf={self.table.tolist()!r})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TabulatedDelay) and np.array_equal(other.table, self.table)

    def __hash__(self) -> int:
        return hash(("tabulated", self.table.tobytes()))

    def cdf(self, d: int) -> float:
        if d < 0:
            return 0.0
        return float(self.table[min(d, self.table.size - 1)])

    def cdf_array(self, d: np.ndarray) -> np.ndarray:
        d = np.asarray(d)
        idx = np.clip(d, 0, self.table.size - 1).astype(np.int64)
        return np.where(d < 0, 0.0, self.table[idx])

    def mean(self) -> float:
        if self.tail_mass > 0.0:
            raise FiniteMeanError(
                f"tabulated delay leaves mass {self.tail_mass:g} beyond the table; mean is infinite"
            )
        return float(np.sum(1.0 - self.table))

    def sample(self, rng: np.random.Generator, size: int | None = None):
        u = 1.0 - rng.random(size)
        d = np.searchsorted(self.table, u, side="left")
        d = np.where(d >= self.table.size, NEVER, d)
        if size is None:
            return int(d)
        return d.astype(np.int64)

    def to_dict(self) -> dict[str, Any]:
        return {"tabulated": {"cdf": self.table.tolist()}}


def delay_from_dict(spec: dict[str, Any]) -> DelayDistribution:
    """Build a delay distribution from ``{"geometric": {"mean": m}}`` or
    ``{"tabulated": {"cdf": [...]}}``."""
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError(f"delay spec must have exactly one of 'geometric' / 'tabulated', got {spec!r}")
    (kind, params), = spec.items()
    if kind == "geometric":
        _check_keys(params, {"mean"}, "delay.geometric")
        return GeometricDelay(params["mean"])
    if kind == "tabulated":
        _check_keys(params, {"cdf"}, "delay.tabulated")
        return TabulatedDelay(params["cdf"])
    raise ValueError(f"unknown delay kind {kind!r}")


def load_tabulated(path: str | Path) -> TabulatedDelay:
    """Read a JSON array of nondecreasing probabilities."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of probabilities")
    return TabulatedDelay(data)


def _check_keys(params: Any, allowed: set[str], where: str) -> None:
    if not isinstance(params, dict):
        raise ValueError(f"{where} must be an object")
    missing = allowed - params.keys()
    extra = params.keys() - allowed
    if extra:
        raise ValueError(f"unknown key {sorted(extra)[0]!r} in {where}")
    if missing:
        raise ValueError(f"missing key {sorted(missing)[0]!r} in {where}")
