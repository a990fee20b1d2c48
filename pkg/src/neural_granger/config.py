"""Run configuration: flat ``key = value`` files plus command-line overrides."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

from .evaluation import ModelConfig
from .optimizer import FitConfig
from .penalties import PenaltySpec


@dataclass
class RunConfig:
    family: str = "cmlp"
    hidden: int = 10
    lag: int = 5
    activation: str = "tanh"
    layers: int = 1
    forget_bias: float = 0.0
    segment_length: int | None = None
    penalty: str = "HIER"
    alpha: float | None = None
    lam: float | None = None
    lam_ratio: float | None = None
    lambdas: list[float] | None = None
    n_lambdas: int = 20
    min_ratio: float = 0.01
    max_iters: int = 5000
    initial_step: float = 1.0
    backtrack: float = 0.5
    growth: float = 2.0
    tol: float = 1e-6
    seed: int = 0
    include_diagonal: bool = False
    standardize: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        self.model()
        self.penalty_spec()
        self.fit_config()
        if self.family == "clstm" and self.penalty.upper() != "GROUP":
            raise ValueError("cLSTM models only support the GROUP penalty")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.lam_ratio is not None and self.lam_ratio <= 0:
            raise ValueError("lam_ratio must be positive")
        if self.n_lambdas < 1 or not 0 < self.min_ratio <= 1:
            raise ValueError("n_lambdas must be >= 1 and min_ratio in (0, 1]")

    def model(self) -> ModelConfig:
        return ModelConfig(self.family, self.hidden, self.lag, self.activation, self.layers,
                           self.forget_bias, self.segment_length)

    def penalty_spec(self, lam: float = 0.0) -> PenaltySpec:
        alpha = self.alpha
        if self.penalty.upper() == "MIXED" and alpha is None:
            alpha = 0.5
        if self.penalty.upper() != "MIXED":
            alpha = None
        return PenaltySpec(self.penalty, lam, alpha)

    def fit_config(self) -> FitConfig:
        return FitConfig(max_iters=self.max_iters, initial_step=self.initial_step,
                         backtrack=self.backtrack, growth=self.growth, tol=self.tol,
                         seed=self.seed)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if raw.lower() in ("none", "null", "") and "None" in kind:
        return None
    if kind.startswith("bool"):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    if kind.startswith("int"):
        return int(raw)
    if kind.startswith("float"):
        return float(raw)
    if kind.startswith("list"):
        return [float(v) for v in raw.replace(",", " ").split()]
    return raw


def parse_config_text(text: str) -> dict:
    values = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {n}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ValueError(f"config line {n}: unknown key {key!r}")
        try:
            values[key] = _coerce(key, raw)
        except ValueError as exc:
            raise ValueError(f"config line {n}: {exc}") from None
    return values


def load_config(path=None, **overrides) -> RunConfig:
    """Read ``path`` (if given) and apply non-None ``overrides`` on top."""
    values = {}
    if path is not None:
        with open(path) as fh:
            values.update(parse_config_text(fh.read()))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)
