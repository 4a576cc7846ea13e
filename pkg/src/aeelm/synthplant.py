"""Synthetic 23-channel boiler data with known relevant channels and delays.

Structure of a generated plant:

* a shared latent drive of ``latent_dim`` AR(1) factors; factor 0 is the unit
  load and is additionally low-pass filtered ``load_order`` times, so that it
  moves slowly the way dispatch load does;
* every relevant channel mixes the latent drive (share ``load_share`` of its
  variance) with an idiosyncratic AR(1) component of its own;
* irrelevant channels are independent AR(1) processes;
* each standardized signal is squashed by a logistic curve into the channel's
  operating range, so values always respect the schema limits;
* the target is ``target_fn`` evaluated on the relevant channels at their true
  lags, plus Gaussian noise with standard deviation ``noise_sigma`` times
  that of the clean target.

Every random draw comes from its own stream keyed by (seed, purpose, index),
so changing one channel's stream never disturbs any other series.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import CHANNEL_NAMES, SCHEMA_BY_NAME, TARGET_NAME, TimeSeriesDataset
from .errors import InputError

MAX_TRUE_DELAY = 10

# Default relevant channels and their true delays in samples (one per minute).
REFERENCE_DELAYS = {
    "F1": 6, "F2": 6, "F3": 6, "S_AB": 5, "S_CD": 4, "S_EF": 4, "P_A": 5,
    "P_C": 5, "P": 3, "T": 5, "T_C": 5, "TV": 4, "O2": 3,
}

TARGET_FUNCTIONS = ("saturating_mix",)

NOX_BASE = 250.0
NOX_SPAN = 60.0
_SQUASH_GAIN = 1.2
_OWN_WEIGHT = 0.5

_STREAM_LATENT = 0
_STREAM_CHANNEL = 1
_STREAM_MIXING = 2
_STREAM_TARGET = 3
_STREAM_NOISE = 4


@dataclass(frozen=True)
class PlantSpec:
    """Configuration of a synthetic plant.

    ``noise_sigma`` is the noise standard deviation as a fraction of the
    clean target's standard deviation (0.01 = 1 %).
    """

    n_samples: int = 500
    relevant: dict = field(default_factory=lambda: dict(REFERENCE_DELAYS))
    irrelevant: tuple | None = None
    drive_smoothness: float = 0.95
    target_fn: str = "saturating_mix"
    noise_sigma: float = 0.01
    seed: int = 42
    latent_dim: int = 4
    load_share: float = 0.999
    load_order: int = 4
    channel_seeds: dict = field(default_factory=dict)

    def __post_init__(self):
        rel = {str(k): int(v) for k, v in self.relevant.items()}
        object.__setattr__(self, "relevant", rel)
        if self.irrelevant is None:
            irr = tuple(n for n in CHANNEL_NAMES if n not in rel)
        else:
            irr = tuple(self.irrelevant)
        object.__setattr__(self, "irrelevant", irr)
        self.validate()

    def validate(self):
        rel, irr = set(self.relevant), set(self.irrelevant)
        if rel & irr:
            raise InputError(f"channels both relevant and irrelevant: {sorted(rel & irr)}")
        if rel | irr != set(CHANNEL_NAMES) or len(self.irrelevant) != len(irr):
            raise InputError("relevant and irrelevant channels must cover the 23 schema names once")
        if not rel:
            raise InputError("at least one relevant channel is required")
        for name, d in self.relevant.items():
            if not 0 <= d <= MAX_TRUE_DELAY:
                raise InputError(f"true delay {d} of {name!r} outside [0, {MAX_TRUE_DELAY}]")
        if not 0.0 < self.drive_smoothness < 1.0:
            raise InputError(f"AR coefficient must lie in (0, 1), got {self.drive_smoothness}")
        if self.n_samples <= 10 + max(self.relevant.values()):
            raise InputError("n_samples must exceed 10 + the largest true delay")
        if self.target_fn not in TARGET_FUNCTIONS:
            raise InputError(f"unknown target_fn {self.target_fn!r}")
        if self.noise_sigma < 0:
            raise InputError("noise_sigma must be >= 0")
        if not 0.0 <= self.load_share < 1.0 or (self.load_share > 0 and self.latent_dim < 1):
            raise InputError("load_share must lie in [0, 1) and needs latent_dim >= 1")
        if self.load_order < 0:
            raise InputError("load_order must be >= 0")

    def to_dict(self):
        d = asdict(self)
        d["irrelevant"] = list(self.irrelevant)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("irrelevant") is not None:
            d["irrelevant"] = tuple(d["irrelevant"])
        return cls(**d)


@dataclass(frozen=True)
class GroundTruth:
    relevant: tuple
    delays: dict
    noise_sigma: float
    target_fn: str
    coefficients: dict  # parameters of target_fn, enough to re-evaluate it

    def to_dict(self):
        return {
            "relevant": list(self.relevant),
            "delays": dict(self.delays),
            "noise_sigma": self.noise_sigma,
            "target_fn": self.target_fn,
            "coefficients": self.coefficients,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["relevant"]), {k: int(v) for k, v in d["delays"].items()},
                   float(d["noise_sigma"]), d["target_fn"], d["coefficients"])


def _rng(seed, stream, index=0):
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, stream, index])


def ar1(rng, n, phi):
    """Stationary unit-variance AR(1) path of length n."""
    eps = rng.standard_normal(n)
    out = np.empty(n)
    out[0] = eps[0]
    scale = math.sqrt(1.0 - phi * phi)
    for k in range(1, n):
        out[k] = phi * out[k - 1] + scale * eps[k]
    return out


def _standardize(v):
    return (v - v.mean()) / v.std()


def _smooth(v, phi, order):
    for _ in range(order):
        out = np.empty_like(v)
        out[0] = v[0]
        for k in range(1, v.size):
            out[k] = phi * out[k - 1] + (1.0 - phi) * v[k]
        v = out
    return v


def _squash(name, s):
    info = SCHEMA_BY_NAME[name]
    return info.lower + (info.upper - info.lower) / (1.0 + np.exp(-_SQUASH_GAIN * s))


def to_unit_interval(name, values):
    """Map physical channel values to (-1, 1) by their schema range."""
    info = SCHEMA_BY_NAME[name]
    return 2.0 * (np.asarray(values, dtype=float) - info.lower) / (info.upper - info.lower) - 1.0


def _target_coefficients(spec):
    rng = _rng(spec.seed, _STREAM_TARGET)
    names = sorted(spec.relevant, key=CHANNEL_NAMES.index)
    gains = rng.uniform(0.5, 1.5, len(names))
    gains = gains / gains.sum()
    slopes = rng.uniform(1.0, 3.0, len(names))
    if "O2" in spec.relevant and "T" in spec.relevant:
        pair = ["O2", "T"]
    else:
        pair = [names[0], names[-1]]
    return {
        "channels": names,
        "gains": gains.tolist(),
        "slopes": slopes.tolist(),
        "pair": pair,
        "pair_gain": 0.5,
        "base": NOX_BASE,
        "span": NOX_SPAN,
    }


def evaluate_target(lagged, coefficients):
    """Noise-free target from a mapping channel name -> physical values at its true lag."""
    t = 0.0
    for name, g, s in zip(coefficients["channels"], coefficients["gains"], coefficients["slopes"]):
        t = t + g * np.tanh(s * to_unit_interval(name, lagged[name]))
    p, q = coefficients["pair"]
    t = t + coefficients["pair_gain"] * to_unit_interval(p, lagged[p]) * to_unit_interval(q, lagged[q])
    return coefficients["base"] + coefficients["span"] * t


def generate(spec):
    """Generate (dataset, ground truth) for ``spec``; deterministic given the seed."""
    spec.validate()
    n, phi, hist = spec.n_samples, spec.drive_smoothness, MAX_TRUE_DELAY
    total = n + hist

    # latent series carry an extra MAX_TRUE_DELAY of history so every channel
    # can be offset by its transport lag
    latent = []
    for i in range(spec.latent_dim):
        u = ar1(_rng(spec.seed, _STREAM_LATENT, i), total + hist, phi)
        if i == 0:
            u = _smooth(u, phi, spec.load_order)
        latent.append(_standardize(u))
    latent = np.array(latent) if latent else np.zeros((1, total + hist))

    load, secondary = latent[0], latent[1:]
    mix_rng = _rng(spec.seed, _STREAM_MIXING)
    full = {}
    for idx, name in enumerate(CHANNEL_NAMES):
        stream_index = spec.channel_seeds.get(name, idx)
        own = _standardize(ar1(_rng(spec.seed, _STREAM_CHANNEL, stream_index), total, phi))
        if name in spec.relevant:
            # mixing draws are consumed for every relevant channel in schema
            # order, independent of the channel streams
            m = mix_rng.standard_normal(secondary.shape[0])
            gain = mix_rng.uniform(0.6, 1.4)
            d = spec.relevant[name]
            # channel j sees the latent drive (hist - d_j) samples late, so at
            # its true delay it lines up with the drive instant behind y(k)
            seen = slice(d, d + total)
            resid = own
            if secondary.size:
                resid = _standardize(m @ secondary[:, seen] + _OWN_WEIGHT * own)
            s = math.sqrt(spec.load_share) * load[seen] + math.sqrt(1.0 - spec.load_share) * resid
            s = gain * s
        else:
            s = own
        full[name] = _squash(name, s)

    coeffs = _target_coefficients(spec)
    lagged = {name: full[name][hist - d : hist - d + n] for name, d in spec.relevant.items()}
    clean = evaluate_target(lagged, coeffs)
    noise_sd = spec.noise_sigma * float(clean.std())
    y = clean + noise_sd * _rng(spec.seed, _STREAM_NOISE).standard_normal(n)

    X = np.column_stack([full[name][hist:] for name in CHANNEL_NAMES])
    ds = TimeSeriesDataset.from_arrays(CHANNEL_NAMES, X, y, TARGET_NAME)
    truth = GroundTruth(
        relevant=tuple(coeffs["channels"]),
        delays=dict(spec.relevant),
        noise_sigma=spec.noise_sigma,
        target_fn=spec.target_fn,
        coefficients=coeffs,
    )
    return ds, truth


def write_truth(truth, path):
    path = Path(path)
    path.write_text(json.dumps(truth.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_truth(path):
    return GroundTruth.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
