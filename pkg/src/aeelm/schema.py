"""Column schemas of the files a pipeline run writes, and a checker for them."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path


def _num(lo=-math.inf, hi=math.inf, integer=False):
    def check(text):
        v = float(text)
        if not math.isfinite(v) or not lo <= v <= hi:
            return False
        return not integer or v == int(v)
    return check


def _flag(text):
    return text in ("0", "1")


def _any(text):
    return text != ""


# file -> {column: validator}; a ``None`` schema means "any numeric column"
CSV_SCHEMAS = {
    "mi_scores.csv": {"channel": _any, "raw_mi": _num(0.0), "normalized_mi": _num(0.0, 1.0),
                      "selected": _flag},
    "delays.csv": {"channel": _any, "delay_samples": _num(0, math.inf, integer=True),
                   "delay_minutes": _num(0.0)},
    "delay_curves.csv": {"channel": _any, "delay": _num(0, math.inf, integer=True),
                         "raw_mi": _num(0.0), "normalized_mi": _num(0.0, 1.0)},
    "ae_history.csv": {"epoch": _num(0, math.inf, integer=True), "loss": _num(0.0)},
    "hidden_size_search.csv": {"hidden_size": _num(1, math.inf, integer=True),
                               "validation_mape_percent": _num(0.0)},
    "predictions.csv": {"k": _num(0, math.inf, integer=True), "measured": _num()},
    "metrics.csv": {"dataset": _any},
}

# files every full-pipeline run must contain
REQUIRED = (
    "mi_scores.csv", "delays.csv", "delay_curves.csv", "normalization.json",
    "models/autoencoder.json", "models/elm.json", "ae_history.csv", "hidden_size_search.csv",
    "metrics.json", "metrics.csv", "predictions.csv", "manifest.json",
)

METRIC_KEYS = {"nmse", "mape_percent", "r2", "n", "abs_error_quartiles"}


def check_csv(path, schema):
    """Problems found in one CSV file (empty list when it is valid)."""
    problems = []
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return [f"{path.name}: no data rows"]
    missing = set(schema) - set(rows[0])
    if missing:
        return [f"{path.name}: missing columns {sorted(missing)}"]
    for i, row in enumerate(rows, start=2):
        for col, ok in schema.items():
            try:
                valid = ok(row[col])
            except ValueError:
                valid = False
            if not valid:
                problems.append(f"{path.name}:{i}: bad {col} value {row[col]!r}")
    return problems


def check_run(run_dir, d_max=None):
    """Validate a run directory written by :func:`aeelm.pipeline.write_run`."""
    run = Path(run_dir)
    problems = [f"missing {name}" for name in REQUIRED if not (run / name).exists()]
    for name, schema in CSV_SCHEMAS.items():
        if (run / name).exists():
            problems += check_csv(run / name, schema)
    if problems:
        return problems

    manifest = json.loads((run / "manifest.json").read_text(encoding="utf-8"))
    realized = manifest["realized"]
    d_max = realized["d_max"] if d_max is None else d_max
    with open(run / "delays.csv", newline="", encoding="utf-8") as fh:
        delays = {r["channel"]: int(r["delay_samples"]) for r in csv.DictReader(fh)}
    if set(delays) != set(realized["selected"]):
        problems.append("delays.csv channels differ from the selected channels")
    if any(d > d_max for d in delays.values()):
        problems.append(f"delay above d_max={d_max}")

    ae = json.loads((run / "models/autoencoder.json").read_text(encoding="utf-8"))
    if ae["input_dim"] != len(realized["selected"]) or ae["hidden_dim"] != realized["hidden_dim"]:
        problems.append("autoencoder dimensions disagree with the manifest")
    elm = json.loads((run / "models/elm.json").read_text(encoding="utf-8"))
    if elm["model_type"] != "elm" or elm["feature_dim"] != realized["feature_dim"]:
        problems.append("ELM feature dimension disagrees with the manifest")

    norm = json.loads((run / "normalization.json").read_text(encoding="utf-8"))
    if set(norm) != set(realized["selected"]) or any(not lo < hi for lo, hi in norm.values()):
        problems.append("normalization.json does not hold a valid range per selected channel")

    metrics = json.loads((run / "metrics.json").read_text(encoding="utf-8"))
    for model, rep in metrics.items():
        if set(rep) != METRIC_KEYS:
            problems.append(f"metrics.json[{model}] keys {sorted(rep)}")
    return problems
