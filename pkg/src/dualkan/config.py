"""Experiment configuration: JSON schema, validation and benchmark presets."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields

from .losses import LossWeights
from .networks import Kan, Mlp
from .problems import PROBLEM_IDS, builtin
from .sampling import RardConfig, SamplingPlan
from .training import AdamConfig, TrainConfig


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


RARD_KEYS = ("k", "c", "warmup_steps", "resample_period", "pool_multiplier")


@dataclass
class ExperimentConfig:
    problem_id: str = "e1"
    backbone: str = "kan"
    widths: list = field(default_factory=lambda: [2, 3, 3, 3, 1])
    G: int = 10
    m: int = 3
    activation: str = "tanh"
    hidden_range: list = field(default_factory=lambda: [-1.0, 1.0])
    init_scale: float = 0.1
    residual_init: str = "uniform"
    n1: int = 200
    n2: int = 500
    n_gamma: int = 300
    n_boundary1: int = 0
    n_boundary2: int = 800
    total_steps: int = 40000
    log_period: int = 100
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    rard: dict | None = None
    checkpoint_period: int = 5000
    dtype: str = "float32"
    seed: int = 0
    collocation_seed: int | None = None
    n_test: int = 10000
    clip_coefficient_min: float | None = None
    loss_weights: dict | None = None
    output_dir: str | None = None

    # -- construction -----------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        cfg = cls(**copy.deepcopy(d))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def updated(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(changes)
        return ExperimentConfig.from_dict(d)

    # -- validation ---------------------------------------------------------

    def validate(self) -> None:
        def need(cond, name, msg):
            if not cond:
                raise ConfigError(f"{name}: {msg}")

        for name in ("init_scale", "learning_rate", "beta1", "beta2", "eps"):
            v = getattr(self, name)
            need(isinstance(v, (int, float)) and not isinstance(v, bool), name, "must be a number")
        need(self.problem_id in PROBLEM_IDS, "problem_id", f"must be one of {', '.join(PROBLEM_IDS)}")
        need(self.backbone in ("mlp", "kan"), "backbone", "must be 'mlp' or 'kan'")
        need(isinstance(self.widths, (list, tuple)) and len(self.widths) >= 2
             and all(isinstance(w, int) and w >= 1 for w in self.widths), "widths", "list of positive integers")
        need(self.widths[0] == 2 and self.widths[-1] == 1, "widths", "networks map 2 inputs to 1 output")
        need(isinstance(self.G, int) and self.G >= 1, "G", "must be an integer >= 1")
        need(isinstance(self.m, int) and self.m >= 1, "m", "must be an integer >= 1")
        need(self.activation in ("tanh", "sin"), "activation", "must be 'tanh' or 'sin'")
        need(len(self.hidden_range) == 2 and self.hidden_range[1] > self.hidden_range[0], "hidden_range", "needs lo < hi")
        need(self.init_scale >= 0, "init_scale", "must be >= 0")
        need(self.residual_init in ("uniform", "unit"), "residual_init", "must be 'uniform' or 'unit'")
        for name in ("n1", "n2", "n_gamma", "n_boundary2"):
            v = getattr(self, name)
            need(isinstance(v, int) and v >= 1, name, "must be an integer >= 1")
        need(isinstance(self.n_boundary1, int) and self.n_boundary1 >= 0, "n_boundary1", "must be an integer >= 0")
        if self.problem_id in ("e1", "e4"):
            need(self.n_boundary1 == 0, "n_boundary1", f"{self.problem_id} has no boundary on Omega_1; use 0")
        need(isinstance(self.total_steps, int) and self.total_steps >= 0, "total_steps", "must be an integer >= 0")
        need(isinstance(self.log_period, int) and self.log_period >= 1, "log_period", "must be an integer >= 1")
        need(self.total_steps % self.log_period == 0, "total_steps", "must be a multiple of log_period")
        need(self.learning_rate > 0, "learning_rate", "must be > 0")
        need(0 <= self.beta1 < 1 and 0 <= self.beta2 < 1, "beta1/beta2", "must lie in [0, 1)")
        need(self.eps > 0, "eps", "must be > 0")
        need(self.dtype in ("float32", "float64"), "dtype", "must be 'float32' or 'float64'")
        need(isinstance(self.checkpoint_period, int) and self.checkpoint_period >= 0, "checkpoint_period", "must be >= 0")
        need(isinstance(self.n_test, int) and self.n_test >= 1, "n_test", "must be >= 1")
        if self.rard is not None:
            need(isinstance(self.rard, dict), "rard", "must be an object or null")
            bad = sorted(set(self.rard) - set(RARD_KEYS))
            need(not bad, "rard", f"unknown key(s) {', '.join(bad)}")
            try:
                rc = RardConfig(**self.rard)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"rard: {exc}") from exc
            need(rc.warmup_steps <= self.total_steps, "rard.warmup_steps", "must not exceed total_steps")
        if self.loss_weights is not None:
            bad = sorted(set(self.loss_weights) - set(LossWeights._fields))
            need(not bad, "loss_weights", f"unknown key(s) {', '.join(bad)}")

    # -- builders -------------------------------------------------------------

    def problem(self):
        return builtin(self.problem_id, self.clip_coefficient_min)

    def network(self, problem=None):
        if self.backbone == "mlp":
            return Mlp(tuple(self.widths), self.activation)
        problem = problem or self.problem()
        xmin, xmax, ymin, ymax = problem.bbox()
        return Kan(tuple(self.widths), self.G, self.m, ((xmin, xmax), (ymin, ymax)),
                   tuple(self.hidden_range), self.init_scale, self.residual_init)

    def plan(self) -> SamplingPlan:
        return SamplingPlan(self.n1, self.n2, self.n_gamma, self.n_boundary1, self.n_boundary2)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            total_steps=self.total_steps,
            log_period=self.log_period,
            adam=AdamConfig(self.learning_rate, self.beta1, self.beta2, self.eps),
            seed=self.seed,
            rard=RardConfig(**self.rard) if self.rard is not None else None,
            checkpoint_period=self.checkpoint_period,
            dtype=self.dtype,
            weights=LossWeights(**(self.loss_weights or {})),
        )

    @property
    def sampling_seed(self) -> int:
        return self.seed if self.collocation_seed is None else self.collocation_seed

    @property
    def tag(self) -> str:
        return f"{self.problem_id}_{self.backbone}" + ("_rard" if self.rard is not None else "")


# -- presets ------------------------------------------------------------------

_PROBLEM_PRESETS = {
    "e1": dict(n1=200, n2=500, n_gamma=300, n_boundary1=0, n_boundary2=800, G=10, kan_widths=[2, 3, 3, 3, 1],
               total_steps=40000, rard=dict(k=2.0, c=0.0, warmup_steps=20000, resample_period=2000, pool_multiplier=6)),
    "e4": dict(n1=300, n2=500, n_gamma=300, n_boundary1=0, n_boundary2=800, G=5, kan_widths=[2, 3, 3, 3, 1],
               total_steps=30000, rard=dict(k=2.0, c=1.0, warmup_steps=20000, resample_period=1000, pool_multiplier=5)),
    "e5": dict(n1=300, n2=500, n_gamma=300, n_boundary1=300, n_boundary2=800, G=5, kan_widths=[2, 5, 5, 5, 1],
               total_steps=40000, rard=dict(k=2.0, c=0.0, warmup_steps=20000, resample_period=2000, pool_multiplier=11)),
    "e6": dict(n1=300, n2=500, n_gamma=300, n_boundary1=300, n_boundary2=300, G=5, kan_widths=[2, 5, 5, 5, 1],
               total_steps=40000, rard=dict(k=2.0, c=0.0, warmup_steps=20000, resample_period=2000, pool_multiplier=5)),
}

MLP_WIDTHS = [2, 20, 20, 20, 1]


def preset(name: str) -> ExperimentConfig:
    """Presets ``<problem>-<pinn|kan>[-rard]``; a bare problem id means ``<problem>-kan-rard``."""
    parts = name.lower().split("-")
    pid = parts[0]
    if pid not in _PROBLEM_PRESETS:
        raise ConfigError(f"preset: unknown problem in {name!r}")
    rest = parts[1:] or ["kan", "rard"]
    if rest[0] not in ("pinn", "mlp", "kan") or rest[1:] not in ([], ["rard"]):
        raise ConfigError(f"preset: unknown preset {name!r}; expected e.g. {pid}-kan-rard")
    p = _PROBLEM_PRESETS[pid]
    kan = rest[0] == "kan"
    return ExperimentConfig.from_dict(dict(
        problem_id=pid,
        backbone="kan" if kan else "mlp",
        widths=list(p["kan_widths"] if kan else MLP_WIDTHS),
        G=p["G"],
        n1=p["n1"], n2=p["n2"], n_gamma=p["n_gamma"], n_boundary1=p["n_boundary1"], n_boundary2=p["n_boundary2"],
        total_steps=p["total_steps"],
        rard=dict(p["rard"]) if rest[1:] == ["rard"] else None,
    ))


PRESET_NAMES = tuple(f"{pid}-{b}{r}" for pid in _PROBLEM_PRESETS for b in ("pinn", "kan") for r in ("", "-rard"))
