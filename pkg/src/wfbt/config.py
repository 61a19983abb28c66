"""Run configuration: defaults, YAML loading, and config hashing.

An empty config file reproduces the base case (1000/250/250 walks, 20
trials, 0.1% costs, dropout 0.075, batch 32, ARIMA orders 0-6 with AIC).
The config hash identifies an artifact directory; `jobs` is excluded from
it because parallelism must not change outputs.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .arima import ArimaSearchConfig
from .backtest import DEFAULT_COST_RATE, StrategyMode
from .tuning import DEFAULT_SPACE

MODELS = ("ARIMA", "LSTM", "LSTM_ARIMA")
MODES = ("LongOnly", "LongShort")

#: declared sensitivity sets; other override values need unsafe=True
SENSITIVITY_SETS = {
    "dropout": (0.05, 0.1),
    "batch_size": (16, 64),
    "arima_order": ((0, 3, 1),),  # (p_max, q_max, d) compact form
    "criterion": ("BIC",),
}


@dataclass
class RunConfig:
    data: str = ""
    label: str = ""
    model: str = "LSTM_ARIMA"
    mode: str = "LongShort"
    seed: int = 0
    jobs: int = 1
    cost_rate: float = DEFAULT_COST_RATE
    train_len: int = 1000
    valid_len: int = 250
    test_len: int = 250
    step: int = 250
    n_trials: int = 20
    max_epochs: int = 100
    patience: int = 10
    vol_window: int = 21
    use_adj_close: bool = False
    schema: dict = field(default_factory=dict)
    space: dict = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_SPACE.items()})
    arima: ArimaSearchConfig = field(default_factory=ArimaSearchConfig)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.label and self.data:
            self.label = Path(self.data).stem

    @property
    def strategy_mode(self) -> StrategyMode:
        return StrategyMode(self.mode)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["arima"] = dataclasses.asdict(self.arima)
        return d

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("jobs")
        canon = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "RunConfig":
        base = self.to_dict()
        arima_over = changes.pop("arima", None)
        base.update(changes)
        if arima_over is not None:
            base["arima"] = {**base["arima"], **arima_over}
        return from_dict(base)


def from_dict(d: dict) -> RunConfig:
    d = dict(d)
    arima_d = d.pop("arima", {}) or {}
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(**d)
    cfg.arima = ArimaSearchConfig(**{**dataclasses.asdict(ArimaSearchConfig()), **arima_d})
    return cfg


def load(path) -> RunConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return from_dict(raw)


def dump(config: RunConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)


def sensitivity_variants(base: RunConfig, unsafe: bool = False,
                         overrides: dict | None = None) -> list[tuple[str, RunConfig]]:
    """The standard per-model override family, plus optional custom overrides.

    Custom override values outside the declared sensitivity sets are
    rejected unless unsafe is set.
    """
    variants: list[tuple[str, RunConfig]] = []
    if base.model == "ARIMA":
        variants.append(("order_range=0-3,1,0-3",
                         base.replace(arima={"p_max": 3, "q_max": 3})))
        variants.append(("criterion=BIC", base.replace(arima={"criterion": "BIC"})))
    else:
        for value in SENSITIVITY_SETS["dropout"]:
            variants.append((f"dropout={value}",
                             base.replace(space={**base.space, "dropout": [value]})))
        for value in SENSITIVITY_SETS["batch_size"]:
            variants.append((f"batch_size={value}",
                             base.replace(space={**base.space, "batch_size": [value]})))
    for key, value in (overrides or {}).items():
        if key not in ("dropout", "batch_size"):
            raise ValueError(f"unsupported override {key!r}")
        if not unsafe and value not in SENSITIVITY_SETS[key]:
            raise ValueError(
                f"{key}={value} outside declared sensitivity set "
                f"{SENSITIVITY_SETS[key]}; pass unsafe to force")
        variants.append((f"{key}={value}",
                         base.replace(space={**base.space, key: [value]})))
    return variants
