"""Pipeline configuration, loadable from a TOML file.

Sections: [data], [mi], [delay], [ae], [elm], [baselines], [split], [metrics],
plus top-level ``seed`` and ``out``. Every key is optional. Example::

    seed = 42

    [data]
    path = "plant.csv"        # omit to use the synthetic plant
    target = "NOx"

    [mi]
    threshold = 0.6

    [ae]
    hidden_candidates = [6, 7, 8, 9, 10, 11, 12]
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field

from .errors import InputError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class DataConfig:
    path: str | None = None
    target: str = "NOx"
    sample_interval: float = 60.0
    # PlantSpec overrides used when ``path`` is unset; the plant seed defaults
    # to the master seed
    synth: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MiConfig:
    threshold: float = 0.6
    bins: int | None = None


@dataclass(frozen=True)
class DelayConfig:
    d_max: int = 10
    bins: int | None = None


@dataclass(frozen=True)
class AeConfig:
    hidden_candidates: tuple = (6, 7, 8, 9, 10, 11, 12)
    hidden: int | None = None  # fixed width; skips the search
    learning_rate: float = 0.5
    momentum: float = 0.9
    max_epochs: int = 2000
    tol: float = 1e-8


@dataclass(frozen=True)
class ElmConfig:
    k_grid: tuple = (20, 50, 100, 200)
    k: int | None = None  # fixed K; skips the grid
    search_k: int = 100  # K used while scoring AE widths
    ridge_lambda: float = 0.0


@dataclass(frozen=True)
class BaselineConfig:
    enabled: tuple = ("mlr", "bp", "rbf")
    bp_hidden: int = 10
    bp_learning_rate: float = 0.2
    bp_momentum: float = 0.9
    bp_max_epochs: int = 5000
    rbf_centers: int = 25


@dataclass(frozen=True)
class SplitConfig:
    train_count: int = 400
    test_count: int = 100


@dataclass(frozen=True)
class MetricsConfig:
    mape_denominator: str = "predicted"


_SECTIONS = {
    "data": DataConfig,
    "mi": MiConfig,
    "delay": DelayConfig,
    "ae": AeConfig,
    "elm": ElmConfig,
    "baselines": BaselineConfig,
    "split": SplitConfig,
    "metrics": MetricsConfig,
}

KNOWN_BASELINES = ("mlr", "bp", "rbf")


@dataclass(frozen=True)
class PipelineConfig:
    data: DataConfig = DataConfig()
    mi: MiConfig = MiConfig()
    delay: DelayConfig = DelayConfig()
    ae: AeConfig = AeConfig()
    elm: ElmConfig = ElmConfig()
    baselines: BaselineConfig = BaselineConfig()
    split: SplitConfig = SplitConfig()
    metrics: MetricsConfig = MetricsConfig()
    seed: int = 42
    out: str | None = None

    def validate(self):
        if not 0.0 < self.mi.threshold < 1.0:
            raise InputError(f"mi.threshold must lie in (0, 1), got {self.mi.threshold}")
        for name, bins in (("mi.bins", self.mi.bins), ("delay.bins", self.delay.bins)):
            if bins is not None and bins < 1:
                raise InputError(f"{name} must be >= 1")
        if self.delay.d_max < 0:
            raise InputError("delay.d_max must be >= 0")
        if self.split.train_count < 1 or self.split.test_count < 1:
            raise InputError("split counts must be positive")
        if not self.ae.hidden_candidates and self.ae.hidden is None:
            raise InputError("ae.hidden_candidates is empty")
        if self.ae.learning_rate <= 0 or not 0 <= self.ae.momentum < 1 or self.ae.max_epochs < 0:
            raise InputError("invalid autoencoder training hyperparameters")
        if not self.elm.k_grid and self.elm.k is None:
            raise InputError("elm.k_grid is empty")
        if self.elm.ridge_lambda < 0:
            raise InputError("elm.ridge_lambda must be >= 0")
        unknown = set(self.baselines.enabled) - set(KNOWN_BASELINES)
        if unknown:
            raise InputError(f"unknown baselines {sorted(unknown)}; choose from {KNOWN_BASELINES}")
        if self.metrics.mape_denominator not in ("predicted", "measured"):
            raise InputError("metrics.mape_denominator must be 'predicted' or 'measured'")
        return self

    def to_dict(self):
        d = dataclasses.asdict(self)
        for section in d.values():
            if isinstance(section, dict):
                for k, v in section.items():
                    if isinstance(v, tuple):
                        section[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kwargs = {}
        for name, klass in _SECTIONS.items():
            raw = d.pop(name, None) or {}
            if not isinstance(raw, dict):
                raise InputError(f"[{name}] must be a table")
            allowed = {f.name for f in dataclasses.fields(klass)}
            extra = set(raw) - allowed
            if extra:
                raise InputError(f"unknown key(s) in [{name}]: {sorted(extra)}")
            vals = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}
            kwargs[name] = klass(**vals)
        for key in ("seed", "out"):
            if key in d:
                kwargs[key] = d.pop(key)
        if d:
            raise InputError(f"unknown top-level config key(s): {sorted(d)}")
        if "seed" in kwargs:
            kwargs["seed"] = int(kwargs["seed"])
        return cls(**kwargs).validate()

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    return PipelineConfig.from_dict(raw)
