"""MI-based delay estimation and lagged input reconstruction.

For every candidate delay d in 0..d_max the pair (x(k-d), y(k)) is scored on
the same window k in [d_max, n), so every candidate sees the same number of
samples and their MI values are comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .mi import _as_sample, _mi_from_codes, bin_codes, default_bins, permutation_null

DEFAULT_D_MAX = 10


@dataclass(frozen=True)
class DelayScan:
    delay: int
    curve: tuple = field(repr=False)  # MiEstimate per candidate delay 0..d_max
    null_p99: float | None = None

    @property
    def d_max(self):
        return len(self.curve) - 1

    @property
    def best(self):
        return self.curve[self.delay]

    @property
    def significant(self):
        """Raw MI at the chosen delay exceeds the permutation-null 99th percentile.

        ``None`` when no null was computed.
        """
        if self.null_p99 is None:
            return None
        return self.best.raw_mi > self.null_p99


def scan_delay(x, y, d_max=DEFAULT_D_MAX, bins=None, null_shuffles=0, seed=0):
    """Delay in samples maximizing normalized MI of x(k-d) with y(k).

    Ties resolve to the smallest delay. With ``null_shuffles > 0`` the chosen
    pair is also tested against a permutation null of that many shuffles.
    """
    x = _as_sample(x, "x")
    y = _as_sample(y, "y")
    n = x.size
    if y.size != n:
        raise InputError(f"length mismatch: {n} vs {y.size}")
    d_max = int(d_max)
    if d_max < 0 or d_max >= n - 1:
        raise InputError(f"d_max={d_max} needs 0 <= d_max < length-1 ({n - 1})")
    window = n - d_max
    bins = default_bins(window) if bins is None else int(bins)

    yw = y[d_max:]
    iy = bin_codes(yw, bins)
    curve = []
    for d in range(d_max + 1):
        xd = x[d_max - d : n - d]
        curve.append(_mi_from_codes(bin_codes(xd, bins), iy, bins))
    scores = [c.normalized_mi for c in curve]
    best = scores.index(max(scores))

    p99 = None
    if null_shuffles > 0:
        xd = x[d_max - best : n - best]
        null = permutation_null(xd, yw, bins, null_shuffles, seed)
        p99 = float(np.quantile(null, 0.99))
    return DelayScan(best, tuple(curve), p99)


@dataclass(frozen=True)
class DelayTable:
    scans: dict  # channel name -> DelayScan
    d_max: int

    @property
    def delays(self):
        return {name: s.delay for name, s in self.scans.items()}

    @classmethod
    def zeros(cls, names, d_max=DEFAULT_D_MAX):
        """All delays forced to 0 (no curves); used when delay modeling is off."""
        return cls({n: DelayScan(0, ()) for n in names}, int(d_max))

    @classmethod
    def from_delays(cls, delays, d_max=DEFAULT_D_MAX):
        for name, d in delays.items():
            if not 0 <= d <= d_max:
                raise InputError(f"delay {d} for {name!r} outside [0, {d_max}]")
        return cls({n: DelayScan(int(d), ()) for n, d in delays.items()}, int(d_max))


def scan_delays(ds, names, d_max=DEFAULT_D_MAX, bins=None):
    y = ds.target.values
    return DelayTable({n: scan_delay(ds.channel(n).values, y, d_max, bins) for n in names}, d_max)


@dataclass(frozen=True)
class LaggedMatrix:
    columns: tuple
    values: np.ndarray = field(repr=False)
    target: np.ndarray = field(repr=False)
    index: np.ndarray = field(repr=False)  # original sample index k of each row

    @property
    def rows(self):
        return self.values.shape[0]

    def take(self, mask):
        return LaggedMatrix(self.columns, self.values[mask], self.target[mask], self.index[mask])


def build_lagged_matrix(ds, selection, table):
    """Row k (k = d_max..n-1) holds [x_1(k-d_1), ..., x_p(k-d_p)] and target y(k).

    ``selection`` may be a FeatureSelection or a plain sequence of names.
    """
    names = tuple(getattr(selection, "selected", selection))
    d_max = table.d_max
    n = ds.n_samples
    if n <= d_max:
        raise InputError(f"{n} samples is too few for d_max={d_max}")
    cols = []
    for name in names:
        if name not in table.scans:
            raise InputError(f"no delay entry for channel {name!r}")
        d = table.scans[name].delay
        cols.append(ds.channel(name).values[d_max - d : n - d])
    values = np.column_stack(cols) if cols else np.empty((n - d_max, 0))
    k = np.arange(d_max, n)
    return LaggedMatrix(names, values, ds.target.values[d_max:].copy(), k)


def delay_minutes(delay, sample_interval):
    return delay * sample_interval / 60.0
