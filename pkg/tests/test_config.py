import pytest

from aeelm.config import PipelineConfig, load_config
from aeelm.errors import InputError


class TestDefaults:
    def test_values(self):
        cfg = PipelineConfig()
        assert cfg.seed == 42
        assert cfg.mi.threshold == 0.6
        assert cfg.delay.d_max == 10
        assert cfg.ae.hidden_candidates == (6, 7, 8, 9, 10, 11, 12)
        assert cfg.split.train_count == 400 and cfg.split.test_count == 100
        assert cfg.baselines.enabled == ("mlr", "bp", "rbf")
        assert cfg.validate() is cfg

    def test_round_trip(self):
        cfg = PipelineConfig()
        assert PipelineConfig.from_dict(cfg.to_dict()) == cfg

    def test_to_dict_lists(self):
        assert PipelineConfig().to_dict()["ae"]["hidden_candidates"] == [6, 7, 8, 9, 10, 11, 12]


class TestToml:
    def test_load(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text('seed = 7\n[mi]\nthreshold = 0.5\n[ae]\nhidden_candidates = [3, 4]\n'
                        '[data.synth]\nnoise_sigma = 0.1\n')
        cfg = load_config(path)
        assert cfg.seed == 7
        assert cfg.mi.threshold == 0.5
        assert cfg.ae.hidden_candidates == (3, 4)
        assert cfg.data.synth == {"noise_sigma": 0.1}
        assert cfg.delay.d_max == 10

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="not found"):
            load_config(tmp_path / "absent.toml")

    def test_malformed(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("seed = \n")
        with pytest.raises(InputError):
            load_config(path)


class TestValidation:
    @pytest.mark.parametrize("raw, match", [
        ({"mi": {"treshold": 0.5}}, "unknown key"),
        ({"sed": 1}, "unknown top-level"),
        ({"mi": 3}, "must be a table"),
        ({"mi": {"threshold": 1.0}}, "threshold"),
        ({"delay": {"d_max": -1}}, "d_max"),
        ({"split": {"test_count": 0}}, "split"),
        ({"ae": {"hidden_candidates": []}}, "hidden_candidates"),
        ({"ae": {"momentum": 1.0}}, "hyperparameters"),
        ({"elm": {"k_grid": []}}, "k_grid"),
        ({"elm": {"ridge_lambda": -1.0}}, "ridge"),
        ({"baselines": {"enabled": ["svr"]}}, "unknown baselines"),
        ({"metrics": {"mape_denominator": "mean"}}, "mape_denominator"),
        ({"mi": {"bins": 0}}, "bins"),
    ])
    def test_rejects(self, raw, match):
        with pytest.raises(InputError, match=match):
            PipelineConfig.from_dict(raw)

    def test_fixed_width_allows_empty_candidates(self):
        cfg = PipelineConfig.from_dict({"ae": {"hidden_candidates": [], "hidden": 4}})
        assert cfg.ae.hidden == 4

    def test_replace(self):
        assert PipelineConfig().replace(seed=3).seed == 3
