import csv
import json

import numpy as np
import pytest

from aeelm.config import PipelineConfig
from aeelm.dataset import TimeSeriesDataset
from aeelm.errors import InputError, StageError
from aeelm.metrics import abs_error_summary
from aeelm.pipeline import (
    VARIANTS,
    emit_plot_data,
    load_fitted,
    run_pipeline,
    write_ablation,
    write_run,
)
from aeelm.schema import check_run


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def run_files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


class TestAblation:
    def test_variants_and_models(self, default_ablation):
        assert tuple(default_ablation.results) == VARIANTS
        for res in default_ablation.results.values():
            assert set(res.reports) == {"elm", "mlr", "bp", "rbf"}

    def test_shared_test_rows(self, default_ablation):
        ref = default_ablation.results["full"].test_index
        np.testing.assert_array_equal(ref, np.arange(400, 500))
        for res in default_ablation.results.values():
            np.testing.assert_array_equal(res.test_index, ref)

    def test_variant_shapes(self, default_ablation):
        r = default_ablation.results
        assert len(r["no_mi"].fitted.selected) == 23
        assert all(d == 0 for d in r["no_delay"].fitted.delays.delays.values())
        assert r["no_ae"].fitted.autoencoder is None
        assert r["no_ae"].feature_dim == len(r["no_ae"].fitted.selected)
        assert r["full"].feature_dim == r["full"].fitted.autoencoder.hidden_dim

    def test_elm_beats_linear_fit(self, default_ablation):
        reports = default_ablation.results["full"].reports
        assert reports["elm"].r2 > reports["mlr"].r2

    def test_rows(self, default_ablation):
        rows = default_ablation.rows()
        assert len(rows) == 16
        assert [r["model"] for r in rows[:4]] == ["elm", "bp", "rbf", "mlr"]


class TestNoLeakage:
    def test_test_rows_do_not_affect_fit(self, default_plant):
        ds, _ = default_plant
        cfg = PipelineConfig().replace(
            baselines=PipelineConfig().baselines.__class__(enabled=("mlr",)))
        X = ds.matrix().copy()
        y = ds.target.values.copy()
        rng = np.random.default_rng(0)
        X[400:] += rng.normal(scale=5.0, size=X[400:].shape)
        y[400:] *= 3.0
        other = TimeSeriesDataset.from_arrays(ds.channel_names, X, y)
        a = run_pipeline(cfg, data=ds)
        b = run_pipeline(cfg, data=other)
        assert a.selection.selected == b.selection.selected
        assert a.fitted.delays.delays == b.fitted.delays.delays
        assert a.fitted.normalization.to_dict() == b.fitted.normalization.to_dict()
        assert a.fitted.autoencoder.to_dict() == b.fitted.autoencoder.to_dict()
        for name in a.fitted.models:
            assert a.fitted.models[name].to_dict() == b.fitted.models[name].to_dict()
        assert not np.array_equal(a.y_test, b.y_test)


@pytest.fixture(scope="module")
def run_dir(default_ablation, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    write_run(default_ablation.results["full"], out)
    return out


class TestOutputs:
    def test_schema_clean(self, run_dir):
        assert check_run(run_dir) == []

    def test_schema_catches_bad_delay(self, run_dir, tmp_path):
        import shutil

        copy = tmp_path / "copy"
        shutil.copytree(run_dir, copy)
        assert check_run(copy, d_max=0) != []
        (copy / "models" / "elm.json").unlink()
        assert "missing models/elm.json" in check_run(copy)

    def test_predictions(self, run_dir, default_ablation):
        rows = read_csv(run_dir / "predictions.csv")
        assert len(rows) == 100
        assert list(rows[0]) == ["k", "measured", "elm", "bp", "rbf", "mlr"]
        res = default_ablation.results["full"]
        np.testing.assert_array_equal([float(r["elm"]) for r in rows], res.predictions["elm"])

    def test_boxplot_matches_summary(self, run_dir, default_ablation):
        res = default_ablation.results["full"]
        for row in read_csv(run_dir / "abs_error_boxplot.csv"):
            expected = abs_error_summary(res.y_test, res.predictions[row["model"]])
            got = [float(row[k]) for k in ("min", "q1", "median", "q3", "max")]
            assert got == list(expected)

    def test_histogram_counts(self, run_dir):
        rows = read_csv(run_dir / "abs_error_histogram.csv")
        for model in ("elm", "mlr"):
            assert sum(int(r["count"]) for r in rows if r["model"] == model) == 100

    def test_manifest(self, run_dir):
        m = json.loads((run_dir / "manifest.json").read_text())
        assert m["variant"] == "full"
        assert m["seeds"]["master"] == 42 and m["seeds"]["plant"] == 42
        assert m["realized"]["test_rows"] == 100
        assert set(m["environment"]) == {"python", "numpy", "scipy"}

    def test_manifest_replay_is_bitwise(self, run_dir, tmp_path):
        m = json.loads((run_dir / "manifest.json").read_text())
        again = run_pipeline(PipelineConfig.from_dict(m["config"]), m["variant"])
        write_run(again, tmp_path)
        a, b = run_files(run_dir), run_files(tmp_path)
        a.pop("timings.json")
        b.pop("timings.json")
        assert a == b

    def test_load_fitted_reproduces_predictions(self, run_dir, default_ablation, default_plant):
        fitted, _ = load_fitted(run_dir)
        lagged, preds = fitted.predict(default_plant[0])
        res = default_ablation.results["full"]
        keep = lagged.index >= 400
        for name, p in res.predictions.items():
            # encoding all 490 rows instead of the 100 test rows changes BLAS blocking;
            # large min-norm output weights amplify the ulp differences
            np.testing.assert_allclose(preds[name][keep], p, rtol=1e-9, atol=0)

    def test_load_fitted_rejects_other_dir(self, tmp_path):
        with pytest.raises(InputError):
            load_fitted(tmp_path)

    def test_ablation_files(self, default_ablation, tmp_path):
        write_ablation(default_ablation, tmp_path)
        assert len(read_csv(tmp_path / "ablation.csv")) == 16
        assert len(read_csv(tmp_path / "ablation_timings.csv")) == 4
        rows = read_csv(tmp_path / "mape_with_without_ae.csv")
        assert [r["model"] for r in rows] == ["elm", "bp", "rbf", "mlr"]
        for v in VARIANTS:
            assert (tmp_path / v / "metrics.json").exists()

    def test_plot_dir_not_writable(self, default_ablation, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(InputError):
            emit_plot_data(default_ablation.results["full"], blocker / "sub")


class TestErrors:
    def test_unknown_variant(self):
        with pytest.raises(InputError, match="unknown variant"):
            run_pipeline(PipelineConfig(), "no_elm")

    def test_stage_wrapping(self, default_plant):
        cfg = PipelineConfig.from_dict({"mi": {"threshold": 0.99}})
        with pytest.raises(StageError) as info:
            run_pipeline(cfg, data=default_plant[0])
        assert info.value.stage == "mi"
        assert not info.value.numerical

    def test_bad_synth_keys(self):
        cfg = PipelineConfig.from_dict({"data": {"synth": {"colour": 1}}})
        with pytest.raises(StageError, match="data.synth"):
            run_pipeline(cfg)

    def test_d_max_too_large(self, default_plant):
        cfg = PipelineConfig.from_dict({"delay": {"d_max": 399}})
        with pytest.raises(StageError, match="no training rows"):
            run_pipeline(cfg, data=default_plant[0])

    def test_fixed_width_and_k(self, default_plant):
        cfg = PipelineConfig.from_dict({"ae": {"hidden": 3}, "elm": {"k": 15},
                                        "baselines": {"enabled": []}})
        res = run_pipeline(cfg, data=default_plant[0])
        assert res.fitted.autoencoder.hidden_dim == 3
        assert res.fitted.models["elm"].K == 15
        assert res.hidden_search is None and res.k_scores == {}
        assert set(res.reports) == {"elm"}
