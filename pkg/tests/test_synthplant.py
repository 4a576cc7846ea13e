import numpy as np
import pytest

from aeelm.dataset import CHANNEL_NAMES, SCHEMA_BY_NAME
from aeelm.errors import InputError
from aeelm.mi import select_features
from aeelm.synthplant import (
    REFERENCE_DELAYS,
    GroundTruth,
    PlantSpec,
    evaluate_target,
    generate,
    read_truth,
    write_truth,
)


class TestSpec:
    def test_defaults(self):
        spec = PlantSpec()
        assert spec.n_samples == 500
        assert spec.relevant == REFERENCE_DELAYS
        assert len(spec.irrelevant) == 10
        assert set(spec.irrelevant) | set(spec.relevant) == set(CHANNEL_NAMES)

    def test_round_trip(self):
        spec = PlantSpec(relevant={"O2": 2, "T": 0}, seed=9)
        assert PlantSpec.from_dict(spec.to_dict()) == spec

    @pytest.mark.parametrize("kwargs", [
        {"relevant": {"O2": 11}},
        {"relevant": {"O2": -1}},
        {"relevant": {}},
        {"relevant": {"XX": 1}},
        {"noise_sigma": -0.1},
        {"drive_smoothness": 1.0},
        {"target_fn": "linear"},
        {"n_samples": 15},
        {"load_share": 1.0},
        {"relevant": {"O2": 1}, "irrelevant": ("O2",)},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InputError):
            PlantSpec(**kwargs)


class TestGeneration:
    def test_deterministic(self):
        a, _ = generate(PlantSpec(n_samples=200, seed=3))
        b, _ = generate(PlantSpec(n_samples=200, seed=3))
        np.testing.assert_array_equal(a.matrix(), b.matrix())
        np.testing.assert_array_equal(a.target.values, b.target.values)

    def test_seed_changes_data(self):
        a, _ = generate(PlantSpec(n_samples=200, seed=3))
        b, _ = generate(PlantSpec(n_samples=200, seed=4))
        assert not np.array_equal(a.target.values, b.target.values)

    def test_shape_and_names(self, default_plant):
        ds, truth = default_plant
        assert ds.n_samples == 500
        assert ds.channel_names == CHANNEL_NAMES
        assert ds.target.name == "NOx"
        assert set(truth.relevant) == set(REFERENCE_DELAYS)

    def test_within_schema_limits(self, default_plant):
        ds, _ = default_plant
        for ch in ds.channels:
            info = SCHEMA_BY_NAME[ch.name]
            assert info.lower <= ch.values.min() and ch.values.max() <= info.upper

    def test_noiseless_target_matches_truth(self):
        spec = PlantSpec(n_samples=300, noise_sigma=0.0, seed=5)
        ds, truth = generate(spec)
        n, hist = ds.n_samples, 10
        k = np.arange(hist, n)
        lagged = {name: ds.channel(name).values[k - d] for name, d in truth.delays.items()}
        np.testing.assert_allclose(evaluate_target(lagged, truth.coefficients),
                                   ds.target.values[hist:], rtol=0, atol=1e-9)

    def test_noise_level_is_relative(self):
        base = PlantSpec(n_samples=2000, noise_sigma=0.0, seed=1)
        clean, _ = generate(base)
        noisy, _ = generate(PlantSpec(n_samples=2000, noise_sigma=0.05, seed=1))
        resid = noisy.target.values - clean.target.values
        assert resid.std() == pytest.approx(0.05 * clean.target.values.std(), rel=0.05)

    def test_irrelevant_stream_isolated(self):
        a, _ = generate(PlantSpec(n_samples=200, seed=2))
        b, _ = generate(PlantSpec(n_samples=200, seed=2, channel_seeds={"F4": 999}))
        np.testing.assert_array_equal(a.target.values, b.target.values)
        for name in CHANNEL_NAMES:
            same = np.array_equal(a.channel(name).values, b.channel(name).values)
            assert same == (name != "F4")

    def test_relevant_channels_score_above_irrelevant(self, default_plant):
        ds, truth = default_plant
        sel = select_features(ds.rows(0, 400), threshold=0.6)
        rel = [sel.scores[n].normalized_mi for n in truth.relevant]
        irr = [sel.scores[n].normalized_mi for n in CHANNEL_NAMES if n not in truth.relevant]
        assert min(rel) > max(irr)
        assert set(sel.selected) <= set(truth.relevant)

    def test_independent_drivers(self):
        spec = PlantSpec(n_samples=300, relevant={"O2": 3, "T": 7}, latent_dim=0, load_share=0.0)
        ds, _ = generate(spec)
        c = np.corrcoef(ds.channel("O2").values, ds.channel("T").values)[0, 1]
        assert abs(c) < 0.3


class TestTruthFile:
    def test_round_trip(self, tmp_path, default_plant):
        _, truth = default_plant
        back = read_truth(write_truth(truth, tmp_path / "truth.json"))
        assert isinstance(back, GroundTruth)
        assert back == truth


def test_truth_echoes_reference_delays():
    _, truth = generate(PlantSpec(relevant=REFERENCE_DELAYS, n_samples=100))
    assert truth.delays == REFERENCE_DELAYS
    assert [REFERENCE_DELAYS[n] for n in REFERENCE_DELAYS] == [6, 6, 6, 5, 4, 4, 5, 5, 3, 5, 5, 4, 3]
