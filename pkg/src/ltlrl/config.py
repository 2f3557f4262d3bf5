"""Experiment configuration: defaults, validation, and JSON round-trips."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

METHODS = (
    "drl2",
    "lcer",
    "count",
    "none",
    "reward-shift",
    "ldba-only",
    "drl2-empirical",
    "drl2-vi",
    "drl2-partial",
)
LEARNERS = ("qlearning", "sarsa")


class ConfigError(ValueError):
    """The experiment configuration is inconsistent."""


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    difficulty: str
    method: str = "drl2"
    seeds: tuple[int, ...] = tuple(range(10))
    total_steps: int = 200_000
    gamma: float = 0.99
    epsilon: float = 0.1
    learning_rate: float = 1.0
    buffer_capacity: int = 400_000
    batch_size: int = 64
    initial_exploration_steps: int = 2_000
    alpha: float = 1_000.0
    intrinsic_scale: float = 0.1
    potential_update_period: int = 2_000
    posterior_samples: int = 32
    learner: str = "qlearning"
    use_eventual_discounting: bool = False
    count_epsilon_transitions: bool = True
    add_virtual_sink: bool = True
    sticky_prob: float = 0.0
    random_start: tuple[int, int, int, int] | None = None
    eval_cadence: int = 1_000

    def validate(self) -> "ExperimentConfig":
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.learner not in LEARNERS:
            raise ConfigError(f"unknown learner {self.learner!r}; choose from {LEARNERS}")
        if len(set(self.seeds)) != len(self.seeds) or not self.seeds:
            raise ConfigError("seeds must be nonempty and distinct")
        if self.total_steps <= self.initial_exploration_steps:
            raise ConfigError("total_steps must exceed the initial exploration period")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("gamma must lie in (0, 1)")
        if not 0.0 <= self.sticky_prob <= 1.0:
            raise ConfigError("sticky_prob must lie in [0, 1]")
        if self.alpha <= 0.0:
            raise ConfigError("alpha must be positive")
        if self.batch_size < 1 or self.buffer_capacity < 1:
            raise ConfigError("batch_size and buffer_capacity must be positive")
        if self.posterior_samples < 1:
            raise ConfigError("posterior_samples must be >= 1")
        if self.potential_update_period < 1 or self.eval_cadence < 1:
            raise ConfigError("update period and eval cadence must be positive")
        if self.learning_rate <= 0.0:
            raise ConfigError("learning_rate must be positive")
        return self

    def to_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["seeds"] = list(self.seeds)
        if self.random_start is not None:
            doc["random_start"] = list(self.random_start)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = doc.keys() - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        data = dict(doc)
        if "seeds" in data:
            data["seeds"] = tuple(data["seeds"])
        if data.get("random_start") is not None:
            data["random_start"] = tuple(data["random_start"])
        try:
            config = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return config.validate()


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid config JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config document must be an object")
    return ExperimentConfig.from_dict(doc)
