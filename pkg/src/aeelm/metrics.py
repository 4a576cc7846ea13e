"""Evaluation indices for NOx soft sensors.

MAPE, NMSE and R^2 follow the definitions used for the AE-ELM comparison
tables verbatim, including MAPE's use of the *predicted* value in the
denominator. The conventional measured-value denominator is available via
``denominator="measured"``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, InputError


def _pair(y, yhat, min_len=1):
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise InputError(f"length mismatch: {y.size} measured vs {yhat.size} predicted")
    if y.size < min_len:
        raise InputError(f"need at least {min_len} samples, got {y.size}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(yhat))):
        raise InputError("non-finite values in metric input")
    return y, yhat


def mape(y, yhat, denominator="predicted"):
    """Mean absolute percentage error, in percent.

    With ``denominator="predicted"`` (default) each term is |y - yhat| / yhat.
    """
    y, yhat = _pair(y, yhat)
    if denominator == "predicted":
        den = yhat
    elif denominator == "measured":
        den = y
    else:
        raise InputError(f"unknown MAPE denominator {denominator!r}")
    bad = np.flatnonzero(den == 0)
    if bad.size:
        raise DomainError(f"MAPE undefined: zero {denominator} value at index {int(bad[0])}")
    return float(np.mean(np.abs(y - yhat) / den) * 100.0)


def nmse(y, yhat):
    """Mean of (yhat - y)^2 / (y * yhat); requires y * yhat > 0 everywhere."""
    y, yhat = _pair(y, yhat)
    prod = y * yhat
    bad = np.flatnonzero(prod <= 0)
    if bad.size:
        raise DomainError(f"NMSE undefined: nonpositive product y*yhat at index {int(bad[0])}")
    return float(np.mean((yhat - y) ** 2 / prod))


def r2(y, yhat):
    y, yhat = _pair(y, yhat, min_len=2)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise DomainError("R^2 undefined: measured values are constant")
    ss_res = float(np.sum((yhat - y) ** 2))
    return 1.0 - ss_res / ss_tot


def abs_error_summary(y, yhat):
    """Five-number summary (min, q1, median, q3, max) of |y - yhat|.

    Quantiles use linear interpolation between order statistics.
    """
    y, yhat = _pair(y, yhat)
    err = np.abs(y - yhat)
    q = np.quantile(err, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return tuple(float(v) for v in q)


@dataclass(frozen=True)
class EvaluationReport:
    mape_percent: float
    nmse: float
    r2: float
    n: int
    abs_error_quartiles: tuple

    def to_dict(self):
        d = asdict(self)
        d["abs_error_quartiles"] = list(self.abs_error_quartiles)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            mape_percent=float(d["mape_percent"]),
            nmse=float(d["nmse"]),
            r2=float(d["r2"]),
            n=int(d["n"]),
            abs_error_quartiles=tuple(float(v) for v in d["abs_error_quartiles"]),
        )


def evaluate(y, yhat, mape_denominator="predicted"):
    y, yhat = _pair(y, yhat, min_len=2)
    return EvaluationReport(
        mape_percent=mape(y, yhat, mape_denominator),
        nmse=nmse(y, yhat),
        r2=r2(y, yhat),
        n=int(y.size),
        abs_error_quartiles=abs_error_summary(y, yhat),
    )


def relative_change(before, after):
    """(after - before) / |before|; reported next to the raw delta in ablations."""
    if before == 0:
        return math.nan
    return (after - before) / abs(before)
