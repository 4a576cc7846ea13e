"""End-to-end AE-ELM soft-sensor pipeline with ablation runs and report writers.

Stage order:

1. load the data (CSV or synthetic plant) and split it chronologically;
2. score channels by MI against the target at lag 0 and keep those above
   the threshold;
3. scan each kept channel's delay and rebuild the lagged input matrix;
4. fit min-max scaling, then train the autoencoder and encode the inputs;
5. train the ELM (and each enabled baseline) on the encoded features and
   evaluate on the held-out rows.

Everything that is fitted (MI scores, delays, scaling, models) sees training
rows only. Test rows are the samples k >= train_count; their lagged inputs
may reach back into the training period, which is ordinary causal history.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import platform
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import autoencoder as ae_mod
from .baselines import load_model, train_bp, train_mlr, train_rbf
from .config import PipelineConfig
from .dataset import (
    NormalizationParams,
    SplitSpec,
    apply_minmax,
    fit_minmax,
    load_csv,
    split_chronological,
)
from .delay import DelayTable, build_lagged_matrix, delay_minutes, scan_delays
from .elm import select_k, train_elm
from .errors import AeelmError, InputError, StageError
from .metrics import abs_error_summary, evaluate
from .mi import FeatureSelection, select_features
from .seeds import (
    STAGE_AE_FINAL,
    STAGE_AE_SEARCH,
    STAGE_BP,
    STAGE_ELM,
    STAGE_RBF,
    derive_seed,
)
from .synthplant import PlantSpec, generate

log = logging.getLogger(__name__)

VARIANTS = ("full", "no_delay", "no_mi", "no_ae")
MODEL_ORDER = ("elm", "bp", "rbf", "mlr")


@contextmanager
def _stage(name, timings):
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except AeelmError as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


@dataclass
class FittedPipeline:
    """Everything needed to turn raw channel data into predictions."""

    selected: tuple
    delays: DelayTable
    normalization: NormalizationParams
    autoencoder: ae_mod.AutoencoderModel | None
    models: dict

    def features(self, ds):
        scaled, clipped = apply_minmax(ds.select(self.selected), self.normalization)
        lagged = build_lagged_matrix(scaled, self.selected, self.delays)
        Z = lagged.values if self.autoencoder is None else ae_mod.encode(self.autoencoder, lagged.values)
        return lagged, Z, clipped

    def predict(self, ds):
        lagged, Z, _ = self.features(ds)
        return lagged, {name: m.predict(Z) for name, m in self.models.items()}


@dataclass
class PipelineResult:
    variant: str
    config: PipelineConfig
    fitted: FittedPipeline
    selection: FeatureSelection
    reports: dict
    predictions: dict
    y_test: np.ndarray = field(repr=False)
    test_index: np.ndarray = field(repr=False)
    timings: dict = field(default_factory=dict)
    hidden_search: ae_mod.HiddenSizeSearch | None = None
    ae_history: ae_mod.TrainingHistory | None = None
    k_scores: dict = field(default_factory=dict)
    clipped: int = 0
    data_sha256: str | None = None

    @property
    def total_time(self):
        return sum(self.timings.values())

    @property
    def feature_dim(self):
        return self.fitted.models["elm"].feature_dim

    def manifest(self):
        fitted = self.fitted
        cfg = self.config.to_dict()
        cfg.pop("out", None)
        seed = self.config.seed
        return {
            "tool": "aeelm",
            "version": __version__,
            "variant": self.variant,
            "config": cfg,
            "seeds": {
                "master": seed,
                "plant": _plant_seed(self.config),
                "ae_search": derive_seed(seed, STAGE_AE_SEARCH),
                "ae_final": derive_seed(seed, STAGE_AE_FINAL),
                "elm": derive_seed(seed, STAGE_ELM),
                "bp": derive_seed(seed, STAGE_BP),
                "rbf": derive_seed(seed, STAGE_RBF),
            },
            "environment": {
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": _scipy_version(),
            },
            "data_sha256": self.data_sha256,
            "realized": {
                "selected": list(fitted.selected),
                "delays": fitted.delays.delays,
                "d_max": fitted.delays.d_max,
                "input_dim": len(fitted.selected),
                "feature_dim": self.feature_dim,
                "hidden_dim": None if fitted.autoencoder is None else fitted.autoencoder.hidden_dim,
                "elm_k": fitted.models["elm"].K,
                "clipped_values": self.clipped,
                "test_rows": int(self.y_test.size),
            },
        }


def _scipy_version():
    import scipy

    return scipy.__version__


def _plant_seed(cfg):
    return int(cfg.data.synth.get("seed", cfg.seed))


def load_data(cfg):
    """Dataset named by the config: a CSV file, or the synthetic plant."""
    if cfg.data.path:
        ds = load_csv(cfg.data.path, cfg.data.target, cfg.data.sample_interval)
        digest = hashlib.sha256(Path(cfg.data.path).read_bytes()).hexdigest()
        return ds, digest
    synth = dict(cfg.data.synth)
    synth.setdefault("seed", cfg.seed)
    synth.setdefault("n_samples", cfg.split.train_count + cfg.split.test_count)
    try:
        spec = PlantSpec.from_dict(synth)
    except TypeError as exc:
        raise InputError(f"bad [data.synth] settings: {exc}") from None
    return generate(spec)[0], None


def _hidden_candidates(cfg, input_dim):
    if cfg.ae.hidden is not None:
        return [cfg.ae.hidden]
    valid = [c for c in cfg.ae.hidden_candidates if 1 <= c < input_dim]
    dropped = sorted(set(cfg.ae.hidden_candidates) - set(valid))
    if dropped:
        log.warning("dropping AE widths %s: not below the %d inputs", dropped, input_dim)
    if not valid:
        if input_dim < 2:
            raise InputError("the autoencoder needs at least 2 input features")
        valid = [input_dim - 1]
    return valid


def _validation_split(n):
    n_val = max(1, int(round(0.2 * n)))
    return n - n_val


def run_pipeline(cfg, variant="full", data=None):
    """Run the five stages; ``variant`` switches off one of them for ablation.

    ``data`` optionally supplies an already loaded dataset (and skips step 1's
    I/O); it must still match the split counts.
    """
    if variant not in VARIANTS:
        raise InputError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    cfg.validate()
    timings = {}
    seed = cfg.seed

    with _stage("load", timings):
        if data is None:
            ds, digest = load_data(cfg)
        else:
            ds, digest = data, None
        split = SplitSpec(cfg.split.train_count, cfg.split.test_count)
        train_ds, _ = split_chronological(ds, split)
        if cfg.delay.d_max >= split.train_count - 1:
            raise InputError("delay.d_max leaves no training rows")

    with _stage("mi", timings):
        if variant == "no_mi":
            selection = FeatureSelection.keep_all(ds.channel_names)
        else:
            selection = select_features(train_ds, cfg.mi.threshold, cfg.mi.bins)
            if not selection.selected:
                raise InputError(f"no channel exceeds the MI threshold {cfg.mi.threshold}")
    selected = selection.selected

    with _stage("delay", timings):
        if variant == "no_delay":
            table = DelayTable.zeros(selected, cfg.delay.d_max)
        else:
            table = scan_delays(train_ds, selected, cfg.delay.d_max, cfg.delay.bins)

    with _stage("normalize", timings):
        params = fit_minmax(train_ds.select(selected))
        fitted = FittedPipeline(selected, table, params, None, {})
        lagged, X, clipped = fitted.features(ds)
        is_train = lagged.index < split.train_count
        X_train, X_test = X[is_train], X[~is_train]
        y_train, y_test = lagged.target[is_train], lagged.target[~is_train]

    hidden_search = history = None
    with _stage("autoencoder", timings):
        if variant == "no_ae":
            Z_train, Z_test = X_train, X_test
        else:
            hyper = ae_mod.TrainHyper(cfg.ae.learning_rate, cfg.ae.momentum,
                                      cfg.ae.max_epochs, cfg.ae.tol)
            candidates = _hidden_candidates(cfg, X.shape[1])
            if len(candidates) > 1:
                hidden_search = ae_mod.search_hidden_size(
                    X_train, y_train, candidates,
                    {"K": cfg.elm.search_k, "seed": derive_seed(seed, STAGE_ELM),
                     "ridge_lambda": cfg.elm.ridge_lambda},
                    derive_seed(seed, STAGE_AE_SEARCH), hyper)
                # the search trains every width on all training rows; reuse the winner
                autoencoder = hidden_search.models[hidden_search.best]
                history = hidden_search.histories[hidden_search.best]
            else:
                model = ae_mod.init(X.shape[1], candidates[0], derive_seed(seed, STAGE_AE_FINAL))
                autoencoder, history = ae_mod.train(model, X_train, hyper)
            fitted.autoencoder = autoencoder
            Z_train = ae_mod.encode(autoencoder, X_train)
            Z_test = ae_mod.encode(autoencoder, X_test)

    with _stage("elm", timings):
        elm_seed = derive_seed(seed, STAGE_ELM)
        k_scores = {}
        if cfg.elm.k is not None:
            K = cfg.elm.k
        else:
            n_fit = _validation_split(Z_train.shape[0])
            K, k_scores = select_k(Z_train[:n_fit], y_train[:n_fit], Z_train[n_fit:],
                                   y_train[n_fit:], cfg.elm.k_grid, elm_seed,
                                   cfg.elm.ridge_lambda)
        fitted.models["elm"] = train_elm(Z_train, y_train, K, elm_seed, cfg.elm.ridge_lambda)

    b = cfg.baselines
    for name in b.enabled:
        with _stage(name, timings):
            if name == "mlr":
                fitted.models[name] = train_mlr(Z_train, y_train)
            elif name == "bp":
                hyper = ae_mod.TrainHyper(b.bp_learning_rate, b.bp_momentum, b.bp_max_epochs, 1e-10)
                fitted.models[name] = train_bp(Z_train, y_train, b.bp_hidden, hyper,
                                               derive_seed(seed, STAGE_BP))
            elif name == "rbf":
                fitted.models[name] = train_rbf(Z_train, y_train, b.rbf_centers,
                                                derive_seed(seed, STAGE_RBF))

    with _stage("evaluate", timings):
        predictions, reports = {}, {}
        for name, m in fitted.models.items():
            predictions[name] = m.predict(Z_test)
            reports[name] = evaluate(y_test, predictions[name], cfg.metrics.mape_denominator)

    return PipelineResult(
        variant=variant, config=cfg, fitted=fitted, selection=selection,
        reports=reports, predictions=predictions, y_test=y_test,
        test_index=lagged.index[~is_train], timings=timings,
        hidden_search=hidden_search, ae_history=history, k_scores=k_scores,
        clipped=clipped, data_sha256=digest,
    )


@dataclass
class AblationReport:
    results: dict  # variant -> PipelineResult

    def rows(self):
        out = []
        for variant, res in self.results.items():
            for name in _ordered(res.reports):
                r = res.reports[name]
                out.append({
                    "variant": variant, "model": name, "n_features": len(res.fitted.selected),
                    "feature_dim": res.feature_dim, "nmse": r.nmse,
                    "mape_percent": r.mape_percent, "r2": r.r2, "n": r.n,
                })
        return out

    def timing_rows(self):
        return [{"variant": v, **{k: r.timings[k] for k in r.timings}, "total": r.total_time}
                for v, r in self.results.items()]


def run_ablation(cfg, variants=VARIANTS):
    """Run every variant with the same master seed and the same test rows."""
    ds, digest = load_data(cfg)
    results = {}
    for v in variants:
        results[v] = run_pipeline(cfg, v, data=ds)
        results[v].data_sha256 = digest
    tests = {tuple(r.test_index) for r in results.values()}
    if len(tests) != 1:
        raise AeelmError("ablation variants evaluated on different test rows")
    return AblationReport(results)


# -- output files --------------------------------------------------------------


def _ordered(names):
    return [n for n in MODEL_ORDER if n in names] + sorted(set(names) - set(MODEL_ORDER))


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return v


def write_csv_rows(path, rows, header=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = header or (list(rows[0]) if rows else [])
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=header)
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
    return path


def _write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def selection_rows(selection):
    return [{"channel": name, "raw_mi": est.raw_mi, "normalized_mi": est.normalized_mi,
             "selected": int(chosen)} for name, est, chosen in selection.rows()]


def delay_rows(table, sample_interval=60.0):
    rows = []
    for name, scan in table.scans.items():
        rows.append({
            "channel": name,
            "delay_samples": scan.delay,
            "delay_minutes": delay_minutes(scan.delay, sample_interval),
            "mi_at_best": scan.best.normalized_mi if scan.curve else "",
            "mi_at_zero": scan.curve[0].normalized_mi if scan.curve else "",
        })
    return rows


def delay_curve_rows(table):
    return [{"channel": name, "delay": d, "raw_mi": est.raw_mi,
             "normalized_mi": est.normalized_mi}
            for name, scan in table.scans.items() for d, est in enumerate(scan.curve)]


def metrics_table_rows(reports, dataset="synthetic"):
    """One row per dataset, NMSE / MAPE / R^2 columns per model."""
    row = {"dataset": dataset}
    for name in _ordered(reports):
        r = reports[name]
        row[f"{name}_nmse"] = r.nmse
        row[f"{name}_mape_percent"] = r.mape_percent
        row[f"{name}_r2"] = r.r2
    return [row]


def write_run(result, out_dir, dataset="synthetic"):
    """Persist models, stage outputs, metrics, plot data and the manifest."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {out}: {exc}") from None
    fitted = result.fitted
    sample_interval = result.config.data.sample_interval
    files = []
    if result.selection.scores:
        files.append(write_csv_rows(out / "mi_scores.csv", selection_rows(result.selection)))
    files.append(write_csv_rows(out / "delays.csv", delay_rows(fitted.delays, sample_interval),
                                ["channel", "delay_samples", "delay_minutes", "mi_at_best",
                                 "mi_at_zero"]))
    if any(s.curve for s in fitted.delays.scans.values()):
        files.append(write_csv_rows(out / "delay_curves.csv", delay_curve_rows(fitted.delays)))
    files.append(_write_json(out / "normalization.json", fitted.normalization.to_dict()))
    models = out / "models"
    models.mkdir(exist_ok=True)
    if fitted.autoencoder is not None:
        fitted.autoencoder.save(models / "autoencoder.json")
        files.append(models / "autoencoder.json")
    for name, m in fitted.models.items():
        m.save(models / f"{name}.json")
        files.append(models / f"{name}.json")
    if result.ae_history is not None:
        files.append(write_csv_rows(
            out / "ae_history.csv",
            [{"epoch": i, "loss": v} for i, v in enumerate(result.ae_history.losses)],
            ["epoch", "loss"]))
    files.append(_write_json(out / "metrics.json",
                             {k: result.reports[k].to_dict() for k in _ordered(result.reports)}))
    files.append(write_csv_rows(out / "metrics.csv", metrics_table_rows(result.reports, dataset)))
    if result.k_scores:
        files.append(write_csv_rows(out / "elm_k_search.csv",
                                    [{"K": k, "validation_mape_percent": v}
                                     for k, v in result.k_scores.items()]))
    files.extend(emit_plot_data(result, out))
    files.append(_write_json(out / "manifest.json", result.manifest()))
    _write_json(out / "timings.json", result.timings)
    return files


def emit_plot_data(result, out_dir, ablation=None):
    """CSV series behind the hidden-size curve and the prediction and error plots.

    With an ``ablation`` report, also writes per-model MAPE with and without
    the autoencoder. Returns the list of files written.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot write plot data to {out}: {exc}") from None
    names = _ordered(result.predictions)
    files = []

    if result.hidden_search is not None:
        files.append(write_csv_rows(
            out / "hidden_size_search.csv",
            [{"hidden_size": c, "validation_mape_percent": v}
             for c, v in sorted(result.hidden_search.mape.items())]))

    trace = []
    for i, k in enumerate(result.test_index):
        row = {"k": int(k), "measured": float(result.y_test[i])}
        row.update({n: float(result.predictions[n][i]) for n in names})
        trace.append(row)
    files.append(write_csv_rows(out / "predictions.csv", trace))

    errors = {n: np.abs(result.y_test - result.predictions[n]) for n in names}
    top = max(float(e.max()) for e in errors.values())
    edges = np.linspace(0.0, top if top > 0 else 1.0, 11)
    hist = []
    for n in names:
        counts, _ = np.histogram(errors[n], bins=edges)
        hist.extend({"model": n, "bin_low": float(edges[j]), "bin_high": float(edges[j + 1]),
                     "count": int(c)} for j, c in enumerate(counts))
    files.append(write_csv_rows(out / "abs_error_histogram.csv", hist))

    box = []
    for n in names:
        q = abs_error_summary(result.y_test, result.predictions[n])
        box.append(dict(zip(("model", "min", "q1", "median", "q3", "max"), (n, *q))))
    files.append(write_csv_rows(out / "abs_error_boxplot.csv", box))

    if ablation is not None and {"full", "no_ae"} <= set(ablation.results):
        with_ae = ablation.results["full"].reports
        without = ablation.results["no_ae"].reports
        files.append(write_csv_rows(
            out / "mape_with_without_ae.csv",
            [{"model": n, "mape_with_ae": with_ae[n].mape_percent,
              "mape_without_ae": without[n].mape_percent}
             for n in _ordered(with_ae) if n in without]))
    return files


def write_ablation(report, out_dir):
    out = Path(out_dir)
    files = [write_csv_rows(out / "ablation.csv", report.rows())]
    timing_rows = report.timing_rows()
    header = ["variant"] + sorted({k for r in timing_rows for k in r} - {"variant", "total"}) + ["total"]
    files.append(write_csv_rows(out / "ablation_timings.csv", timing_rows, header))
    for variant, res in report.results.items():
        files.extend(write_run(res, out / variant))
    if "full" in report.results:
        files.extend(emit_plot_data(report.results["full"], out, ablation=report))
    return files


def load_fitted(run_dir):
    """Rebuild a FittedPipeline from the files written by ``write_run``."""
    run = Path(run_dir)
    try:
        manifest = json.loads((run / "manifest.json").read_text(encoding="utf-8"))
        norm = NormalizationParams.from_dict(
            json.loads((run / "normalization.json").read_text(encoding="utf-8")))
    except FileNotFoundError as exc:
        raise InputError(f"{run} is not a pipeline run directory: {exc}") from None
    realized = manifest["realized"]
    table = DelayTable.from_delays(realized["delays"], realized["d_max"])
    ae_path = run / "models" / "autoencoder.json"
    autoencoder = ae_mod.AutoencoderModel.load(ae_path) if ae_path.exists() else None
    models = {}
    for path in sorted((run / "models").glob("*.json")):
        if path.stem != "autoencoder":
            models[path.stem] = load_model(path)
    return FittedPipeline(tuple(realized["selected"]), table, norm, autoencoder, models), manifest
