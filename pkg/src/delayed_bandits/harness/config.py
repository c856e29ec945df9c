"""Experiment configuration loaded from JSON.

Example::

    {
      "instance": {"theta": [0.1, 0.05, 0.03], "delay": {"geometric": {"mean": 500}},
                   "censor_window": 1000, "horizon": 10000},
      "policies": [{"policy": "delayed_klucb", "setting": "censored"}],
      "replications": 100,
      "seed": 0,
      "checkpoint_stride": 100,
      "output_dir": "results"
    }

Unknown keys are rejected with the key named in the error.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..environment import BanditInstance, default_checkpoints
from ..policies import PolicyConfig

TOP_LEVEL_KEYS = {"instance", "policies", "replications", "seed", "checkpoint_stride", "output_dir"}


def child_seed(master_seed: int, policy_index: int, run: int) -> int:
    """Seed of replication ``run`` of policy ``policy_index``.

    The first 64-bit word of ``SeedSequence(master_seed, spawn_key=(policy_index, run))``.
    Runs are numbered from 1.
    """
    seq = np.random.SeedSequence(master_seed, spawn_key=(policy_index, run))
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    instance: BanditInstance
    policies: tuple[PolicyConfig, ...]
    replications: int = 1
    seed: int = 0
    checkpoint_stride: int | None = None
    output_dir: str = "results"
    checkpoints: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if not self.policies:
            raise ValueError("at least one policy is required")
        if isinstance(self.replications, bool) or int(self.replications) != self.replications or self.replications < 1:
            raise ValueError(f"replications must be a positive integer, got {self.replications!r}")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")
        names = [p.name for p in self.policies]
        duplicates = {n for n in names if names.count(n) > 1}
        if duplicates:
            raise ValueError(f"duplicate policy label {sorted(duplicates)[0]!r}; set 'label' to disambiguate")
        for p in self.policies:
            p.environment_for(self.instance)
        points = default_checkpoints(self.instance.horizon, self.checkpoint_stride)
        object.__setattr__(self, "checkpoints", tuple(points))

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(spec, dict):
            raise ValueError("config must be a JSON object")
        extra = spec.keys() - TOP_LEVEL_KEYS
        if extra:
            raise ValueError(f"unknown key {sorted(extra)[0]!r} in config")
        for key in ("instance", "policies"):
            if key not in spec:
                raise ValueError(f"missing key {key!r} in config")
        if not isinstance(spec["policies"], list):
            raise ValueError("'policies' must be a list")
        return cls(
            instance=BanditInstance.from_dict(spec["instance"]),
            policies=tuple(PolicyConfig.from_dict(p) for p in spec["policies"]),
            replications=spec.get("replications", 1),
            seed=spec.get("seed", 0),
            checkpoint_stride=spec.get("checkpoint_stride"),
            output_dir=spec.get("output_dir", "results"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                spec = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(spec)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "instance": self.instance.to_dict(),
            "policies": [p.to_dict() for p in self.policies],
            "replications": self.replications,
            "seed": self.seed,
            "output_dir": self.output_dir,
        }
        if self.checkpoint_stride is not None:
            out["checkpoint_stride"] = self.checkpoint_stride
        return out
