"""Histogram (plug-in) entropy and mutual information, and MI feature selection.

All estimates use equal-width bins spanning [min, max] of each variable and
natural logarithms. Sums go through ``math.fsum`` so the result does not
depend on the order cells are visited; this is what makes
``mutual_information(x, y)`` and ``mutual_information(y, x)`` agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class MiEstimate:
    raw_mi: float
    normalized_mi: float
    entropy_x: float
    entropy_y: float
    joint_entropy: float
    bin_count: int

    def to_dict(self):
        return asdict(self)


def default_bins(n):
    """ceil(sqrt(n)), the bin count used when none is given."""
    return max(1, math.ceil(math.sqrt(n)))


def _as_sample(x, name="x"):
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        raise InputError(f"{name}: need at least 2 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InputError(f"{name}: non-finite values")
    return x


def bin_codes(x, bins):
    """Cell index in [0, bins) of every sample; constant input maps to cell 0."""
    if bins < 1:
        raise InputError(f"bins must be >= 1, got {bins}")
    lo = x.min()
    hi = x.max()
    if hi == lo:
        return np.zeros(x.size, dtype=np.int64)
    idx = np.floor((x - lo) / (hi - lo) * bins).astype(np.int64)
    return np.minimum(idx, bins - 1)


def _entropy_from_counts(counts):
    counts = counts[counts > 0]
    p = counts / counts.sum()
    return max(0.0, -math.fsum((p * np.log(p)).tolist()))


def entropy(x, bins=None):
    """Shannon entropy (nats) of the equal-width histogram of ``x``."""
    x = _as_sample(x)
    bins = default_bins(x.size) if bins is None else int(bins)
    return _entropy_from_counts(np.bincount(bin_codes(x, bins), minlength=bins))


def _mi_from_codes(ix, iy, bins):
    n = ix.size
    joint = np.bincount(ix * bins + iy, minlength=bins * bins).reshape(bins, bins)
    cx = joint.sum(axis=1)
    cy = joint.sum(axis=0)
    hx = _entropy_from_counts(cx)
    hy = _entropy_from_counts(cy)
    hxy = _entropy_from_counts(joint.ravel())

    r, c = np.nonzero(joint)
    pxy = joint[r, c] / n
    px = cx[r] / n
    py = cy[c] / n
    raw = math.fsum((pxy * np.log(pxy / (px * py))).tolist())
    raw = max(0.0, raw)
    if hx > 0.0 and hy > 0.0:
        nmi = raw / math.sqrt(hx * hy)
    else:
        nmi = 0.0
    return MiEstimate(raw, nmi, hx, hy, hxy, bins)


def mutual_information(x, y, bins=None):
    """Plug-in MI of two equal-length samples on a bins x bins grid.

    ``normalized_mi`` is raw_mi / sqrt(H(X) H(Y)) and is 0 when either
    marginal entropy vanishes.
    """
    x = _as_sample(x, "x")
    y = _as_sample(y, "y")
    if x.size != y.size:
        raise InputError(f"length mismatch: {x.size} vs {y.size}")
    bins = default_bins(x.size) if bins is None else int(bins)
    return _mi_from_codes(bin_codes(x, bins), bin_codes(y, bins), bins)


def permutation_null(x, y, bins=None, n_shuffles=200, seed=0):
    """Raw MI of ``x`` against ``n_shuffles`` random permutations of ``y``."""
    x = _as_sample(x, "x")
    y = _as_sample(y, "y")
    if x.size != y.size:
        raise InputError(f"length mismatch: {x.size} vs {y.size}")
    bins = default_bins(x.size) if bins is None else int(bins)
    rng = np.random.default_rng(seed)
    ix = bin_codes(x, bins)
    iy = bin_codes(y, bins)
    out = np.empty(n_shuffles)
    for s in range(n_shuffles):
        out[s] = _mi_from_codes(ix, rng.permutation(iy), bins).raw_mi
    return out


@dataclass(frozen=True)
class FeatureSelection:
    scores: dict = field(repr=False)
    threshold: float
    selected: tuple

    @classmethod
    def keep_all(cls, names):
        """Selection that keeps every channel in the given order (MI skipped)."""
        return cls(scores={}, threshold=0.0, selected=tuple(names))

    def rows(self):
        """(name, MiEstimate, selected?) ordered by descending score."""
        ranked = sorted(self.scores.items(), key=lambda kv: (-kv[1].normalized_mi, kv[0]))
        chosen = set(self.selected)
        return [(name, est, name in chosen) for name, est in ranked]


def select_features(ds, threshold=0.6, bins=None):
    """Score every channel against the target; keep normalized MI > threshold."""
    if not 0.0 < threshold < 1.0:
        raise InputError(f"threshold must lie in (0, 1), got {threshold}")
    y = ds.target.values
    bins = default_bins(ds.n_samples) if bins is None else int(bins)
    iy = bin_codes(_as_sample(y, ds.target.name), bins)
    scores = {}
    for ch in ds.channels:
        ix = bin_codes(_as_sample(ch.values, ch.name), bins)
        scores[ch.name] = _mi_from_codes(ix, iy, bins)
    ranked = sorted(scores, key=lambda name: (-scores[name].normalized_mi, name))
    selected = tuple(name for name in ranked if scores[name].normalized_mi > threshold)
    return FeatureSelection(scores=scores, threshold=float(threshold), selected=selected)
