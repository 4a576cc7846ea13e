"""Multichannel time-series container with CSV I/O, min-max scaling and splits."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InputError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChannelInfo:
    name: str
    description: str
    unit: str
    lower: float
    upper: float


# Boiler operating variables: name, description, unit, operating range.
CHANNEL_SCHEMA = tuple(
    ChannelInfo(*row)
    for row in [
        ("S_AA", "Secondary airflow (AA)", "m/s", 72.78, 130.38),
        ("S_AB", "Secondary airflow (AB)", "m/s", 88.64, 182.50),
        ("S_BC", "Secondary airflow (BC)", "m/s", 101.25, 102.75),
        ("S_CD", "Secondary airflow (CD)", "m/s", 59.66, 152.15),
        ("S_DE", "Secondary airflow (DE)", "m/s", 144.10, 261.59),
        ("S_EF", "Secondary airflow (EF)", "m/s", 138.60, 234.92),
        ("P_A", "Primary airflow (A)", "m/s", 41.30, 57.36),
        ("P_B", "Primary airflow (B)", "m/s", 41.42, 57.23),
        ("P_C", "Primary airflow (C)", "m/s", 41.54, 57.17),
        ("P_D", "Primary airflow (D)", "m/s", 41.97, 56.69),
        ("P_E", "Primary airflow (E)", "m/s", 42.03, 56.56),
        ("P_F", "Primary airflow (F)", "m/s", 42.16, 56.69),
        ("F1", "Coal feed rate (F1)", "t/h", 139.07, 163.38),
        ("F2", "Coal feed rate (F2)", "t/h", 120.28, 158.16),
        ("F3", "Coal feed rate (F3)", "t/h", 127.26, 162.20),
        ("F4", "Coal feed rate (F4)", "t/h", 115.15, 150.79),
        ("F5", "Coal feed rate (F5)", "t/h", 123.75, 172.97),
        ("F6", "Coal feed rate (F6)", "t/h", 115.39, 150.13),
        ("T_C", "Total coal rate", "t/h", 232.74, 382.48),
        ("P", "Main steam pressure", "MPa", 21.94, 32.09),
        ("T", "Main steam temperature", "degC", 579.16, 612.12),
        ("O2", "Oxygen concentration", "%", 1.65, 5.38),
        ("TV", "Total air volume", "t/h", 2257.22, 3789.66),
    ]
)
SCHEMA_BY_NAME = {info.name: info for info in CHANNEL_SCHEMA}
CHANNEL_NAMES = tuple(info.name for info in CHANNEL_SCHEMA)
TARGET_NAME = "NOx"
TARGET_UNIT = "mg/m3"
TIMESTAMP_COLUMN = "timestamp"


def unit_for(name):
    if name == TARGET_NAME:
        return TARGET_UNIT
    info = SCHEMA_BY_NAME.get(name)
    return info.unit if info else ""


def _frozen(values):
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Channel:
    name: str
    unit: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))


@dataclass(frozen=True)
class TimeSeriesDataset:
    """Uniformly sampled input channels plus one target series.

    ``sample_interval`` is in seconds. ``timestamps``, when present, is carried
    through untouched for reporting only.
    """

    channels: tuple
    target: Channel
    sample_interval: float = 60.0
    timestamps: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        n = self.target.values.size
        if n < 2:
            raise InputError(f"dataset needs at least 2 samples, got {n}")
        seen = set()
        for ch in self.channels:
            if not ch.name:
                raise InputError("channel names must be nonempty")
            if ch.name in seen or ch.name == self.target.name:
                raise InputError(f"duplicate channel name {ch.name!r}")
            seen.add(ch.name)
            if ch.values.size != n:
                raise InputError(
                    f"channel {ch.name!r} has {ch.values.size} samples, target has {n}"
                )
        for ch in (*self.channels, self.target):
            if not np.all(np.isfinite(ch.values)):
                raise InputError(f"channel {ch.name!r} contains non-finite values")
        if self.timestamps is not None:
            if len(self.timestamps) != n:
                raise InputError("timestamp column length differs from sample count")
            object.__setattr__(self, "timestamps", tuple(self.timestamps))

    @property
    def n_samples(self):
        return self.target.values.size

    @property
    def channel_names(self):
        return tuple(ch.name for ch in self.channels)

    def channel(self, name):
        for ch in self.channels:
            if ch.name == name:
                return ch
        raise InputError(f"unknown channel {name!r}")

    def matrix(self, names=None):
        """(n_samples, n_channels) array, columns in ``names`` order."""
        names = self.channel_names if names is None else names
        return np.column_stack([self.channel(n).values for n in names])

    def select(self, names):
        return replace(self, channels=tuple(self.channel(n) for n in names))

    def rows(self, start, stop):
        sl = slice(start, stop)
        return replace(
            self,
            channels=tuple(Channel(c.name, c.unit, c.values[sl]) for c in self.channels),
            target=Channel(self.target.name, self.target.unit, self.target.values[sl]),
            timestamps=None if self.timestamps is None else self.timestamps[sl],
        )

    @classmethod
    def from_arrays(cls, names, X, y, target_name=TARGET_NAME, sample_interval=60.0,
                    timestamps=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(names):
            raise InputError("X must be 2-D with one column per channel name")
        channels = [Channel(n, unit_for(n), X[:, j]) for j, n in enumerate(names)]
        return cls(channels, Channel(target_name, unit_for(target_name), y),
                   sample_interval, timestamps)


def load_csv(path, target_name=TARGET_NAME, sample_interval=60.0):
    """Read a header-first CSV; ``target_name`` becomes the target, the rest channels.

    A leading ``timestamp`` column is kept for reporting and excluded from
    computation.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    if target_name not in header:
        raise InputError(f"{path}: target column {target_name!r} not in header")
    if len(body) < 2:
        raise InputError(f"{path}: need at least 2 data rows, got {len(body)}")

    ts_col = 0 if header[0] == TIMESTAMP_COLUMN else None
    data = np.empty((len(body), len(header)))
    timestamps = []
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != len(header):
            raise InputError(
                f"{path}: line {line} has {len(row)} fields, header has {len(header)}"
            )
        for j, cell in enumerate(row):
            if j == ts_col:
                timestamps.append(cell)
                continue
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}: non-numeric value {cell!r} at line {line}, column {header[j]!r}"
                ) from None

    names = [h for j, h in enumerate(header) if j != ts_col and h != target_name]
    cols = [j for j, h in enumerate(header) if j != ts_col and h != target_name]
    X = data[:, cols]
    y = data[:, header.index(target_name)]
    return TimeSeriesDataset.from_arrays(
        names, X, y, target_name, sample_interval,
        timestamps=timestamps if ts_col is not None else None,
    )


def write_csv(ds, path):
    """Write ``ds`` so that ``load_csv`` reproduces every value bit for bit."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = list(ds.channel_names) + [ds.target.name]
    cols = [ch.values for ch in ds.channels] + [ds.target.values]
    if ds.timestamps is not None:
        header = [TIMESTAMP_COLUMN] + header
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(ds.n_samples):
            row = [format(c[i], ".17g") for c in cols]
            if ds.timestamps is not None:
                row = [ds.timestamps[i]] + row
            w.writerow(row)
    return path


@dataclass(frozen=True)
class NormalizationParams:
    lower: dict
    upper: dict

    def to_dict(self):
        return {name: [self.lower[name], self.upper[name]] for name in self.lower}

    @classmethod
    def from_dict(cls, d):
        return cls({k: float(v[0]) for k, v in d.items()}, {k: float(v[1]) for k, v in d.items()})


def fit_minmax(ds):
    """Per-channel min/max of ``ds`` (pass the training rows only)."""
    lower, upper = {}, {}
    for ch in ds.channels:
        lo, hi = float(ch.values.min()), float(ch.values.max())
        if not hi > lo:
            raise InputError(f"channel {ch.name!r} is constant (zero range); cannot scale")
        lower[ch.name], upper[ch.name] = lo, hi
    return NormalizationParams(lower, upper)


def apply_minmax(ds, params):
    """Scale every channel to [0, 1]; returns (scaled dataset, clipped-value count).

    Values outside the fitted range are clipped, not rejected.
    """
    out, clipped = [], 0
    for ch in ds.channels:
        if ch.name not in params.lower:
            raise InputError(f"no normalization parameters for channel {ch.name!r}")
        lo, hi = params.lower[ch.name], params.upper[ch.name]
        v = (ch.values - lo) / (hi - lo)
        n_out = int(np.count_nonzero((v < 0.0) | (v > 1.0)))
        clipped += n_out
        out.append(Channel(ch.name, ch.unit, np.clip(v, 0.0, 1.0)))
    if clipped:
        log.warning("min-max scaling clipped %d value(s) outside the fitted range", clipped)
    return replace(ds, channels=tuple(out)), clipped


def invert_minmax(ds, params):
    out = []
    for ch in ds.channels:
        lo, hi = params.lower[ch.name], params.upper[ch.name]
        out.append(Channel(ch.name, ch.unit, ch.values * (hi - lo) + lo))
    return replace(ds, channels=tuple(out))


@dataclass(frozen=True)
class SplitSpec:
    train_count: int
    test_count: int
    ordering: str = "chronological"

    def __post_init__(self):
        if self.train_count < 1 or self.test_count < 1:
            raise InputError("train and test counts must both be positive")
        if self.ordering != "chronological":
            raise InputError(f"unsupported split ordering {self.ordering!r}")


def split_chronological(ds, spec):
    """First ``train_count`` rows train, the rest test. No shuffling."""
    if spec.train_count + spec.test_count != ds.n_samples:
        raise InputError(
            f"split {spec.train_count}+{spec.test_count} does not match "
            f"{ds.n_samples} samples"
        )
    return ds.rows(0, spec.train_count), ds.rows(spec.train_count, ds.n_samples)
