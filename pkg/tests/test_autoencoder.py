import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aeelm import autoencoder as ae
from aeelm.autoencoder import AutoencoderModel, TrainHyper
from aeelm.delay import DelayTable, build_lagged_matrix
from aeelm.dataset import apply_minmax, fit_minmax
from aeelm.errors import InputError
from aeelm.synthplant import REFERENCE_DELAYS, PlantSpec, generate

from oracles import central_difference, random_coordinates


def tiny(W1, b1, W2, b2):
    return AutoencoderModel(*(np.array(v, dtype=float) for v in (W1, b1, W2, b2)))


def true_delay_matrix(spec):
    ds, _ = generate(spec)
    names = list(REFERENCE_DELAYS)
    sub = ds.select(names)
    scaled, _ = apply_minmax(sub, fit_minmax(sub.rows(0, 400)))
    return build_lagged_matrix(scaled, names, DelayTable.from_delays(REFERENCE_DELAYS, 10))


class TestArchitecture:
    def test_init_shapes_and_zero_biases(self):
        m = ae.init(13, 10, seed=0)
        assert m.W1.shape == (10, 13) and m.W2.shape == (13, 10)
        assert m.input_dim == 13 and m.hidden_dim == 10
        assert not m.b1.any() and not m.b2.any()

    def test_glorot_bound(self):
        bound = math.sqrt(6.0 / 23.0)
        assert bound == pytest.approx(0.5107539184552492, abs=1e-15)
        m = ae.init(13, 10, seed=1)
        assert np.abs(m.W1).max() <= bound and np.abs(m.W2).max() <= bound

    @pytest.mark.parametrize("hidden", [0, 13, 14])
    def test_undercomplete_only(self, hidden):
        with pytest.raises(InputError):
            ae.init(13, hidden, seed=0)

    def test_encode_length(self):
        m = ae.init(13, 10, seed=0)
        h = ae.encode(m, np.full(13, 0.5))
        assert h.shape == (10,)
        assert np.all((h > 0) & (h < 1))

    def test_encode_hand_value(self):
        m = tiny([[1.0]], [0.0], [[1.0]], [0.0])
        assert ae.encode(m, [math.log(2)])[0] == pytest.approx(2 / 3, abs=1e-15)

    def test_decode_hand_value(self):
        m = tiny([[1.0]], [0.0], [[1.0]], [0.0])
        z = ae.decode(m, [2 / 3])[0]
        assert z == pytest.approx(1 / (1 + math.exp(-2 / 3)), abs=1e-15)
        assert z == pytest.approx(0.6608, abs=5e-5)

    def test_loss_hand_value(self):
        # zero weights reconstruct every input as (0.5, 0.5)
        m = tiny([[0.0, 0.0]], [0.0], [[0.0], [0.0]], [0.0, 0.0])
        assert ae.loss(m, [[1.0, 0.0]]) == 0.5

    def test_batch_matches_rows(self):
        m = ae.init(5, 3, seed=2)
        X = np.random.default_rng(0).uniform(size=(4, 5))
        H = ae.encode(m, X)
        for i in range(4):
            # BLAS may take a different kernel for a single row; agreement to 1 ulp
            np.testing.assert_allclose(ae.encode(m, X[i]), H[i], rtol=1e-14, atol=0)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            ae.encode(ae.init(5, 3, seed=0), np.zeros(4))


class TestGradient:
    @pytest.mark.parametrize("seed", range(3))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        m = ae.init(6, 3, seed=seed)
        m.b1 = rng.normal(size=3)
        m.b2 = rng.normal(size=6)
        X = rng.uniform(size=(15, 6))
        grads = ae.gradient(m, X)
        for name, idx in random_coordinates(m, ae.PARAM_NAMES, 20, rng):
            num = central_difference(lambda mm: ae.loss(mm, X), m, name, idx)
            assert abs(grads[name][idx] - num) <= 1e-4 * max(abs(num), abs(grads[name][idx]))

    def test_shapes(self):
        m = ae.init(6, 3, seed=0)
        g = ae.gradient(m, np.zeros((2, 6)))
        for name in ae.PARAM_NAMES:
            assert g[name].shape == getattr(m, name).shape


class TestTraining:
    def test_loss_decreases(self):
        X = np.random.default_rng(0).uniform(size=(50, 6))
        m = ae.init(6, 3, seed=0)
        best, hist = ae.train(m, X, TrainHyper(max_epochs=300))
        assert hist.final_loss < hist.losses[0]
        assert ae.loss(best, X) == pytest.approx(hist.final_loss, rel=1e-12)
        assert all(v >= 0 for v in hist.losses)

    def test_input_model_untouched(self):
        X = np.random.default_rng(0).uniform(size=(20, 4))
        m = ae.init(4, 2, seed=0)
        before = m.copy()
        ae.train(m, X, TrainHyper(max_epochs=20))
        for name in ae.PARAM_NAMES:
            np.testing.assert_array_equal(getattr(m, name), getattr(before, name))

    def test_bitwise_deterministic(self):
        X = np.random.default_rng(1).uniform(size=(30, 5))
        a, _ = ae.train(ae.init(5, 2, seed=4), X, TrainHyper(max_epochs=100))
        b, _ = ae.train(ae.init(5, 2, seed=4), X, TrainHyper(max_epochs=100))
        assert a.to_dict() == b.to_dict()

    def test_early_stop_on_plateau(self):
        X = np.random.default_rng(0).uniform(size=(20, 4))
        _, hist = ae.train(ae.init(4, 2, seed=0), X, TrainHyper(tol=1.0, patience=5))
        assert hist.epochs_run == 6

    def test_zero_epochs(self):
        _, hist = ae.train(ae.init(4, 2, seed=0), np.zeros((3, 4)), TrainHyper(max_epochs=0))
        assert hist.epochs_run == 0
        assert math.isnan(hist.final_loss)

    def test_halves_loss_on_plant_matrix(self):
        X = true_delay_matrix(PlantSpec()).values
        assert X.shape == (490, 13)
        _, hist = ae.train(ae.init(13, 10, seed=0), X)
        assert hist.final_loss <= 0.5 * hist.losses[0]


class TestPersistence:
    def test_json_round_trip(self, tmp_path):
        m = ae.init(7, 4, seed=3)
        m.save(tmp_path / "ae.json")
        back = AutoencoderModel.load(tmp_path / "ae.json")
        for name in ae.PARAM_NAMES:
            np.testing.assert_array_equal(getattr(back, name), getattr(m, name))

    def test_json_keys(self):
        assert set(ae.init(3, 2, seed=0).to_dict()) == {
            "input_dim", "hidden_dim", "W1", "b1", "W2", "b2"}

    def test_dimension_mismatch_rejected(self):
        d = ae.init(3, 2, seed=0).to_dict()
        d["hidden_dim"] = 5
        with pytest.raises(InputError):
            AutoencoderModel.from_dict(d)


class TestHiddenSizeSearch:
    def test_curve_and_reuse(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(size=(80, 6))
        y = 100 + X @ np.arange(1.0, 7.0)
        res = ae.search_hidden_size(X, y, [2, 3, 4], {"K": 20, "seed": 1}, seed=5,
                                    hyper=TrainHyper(max_epochs=50))
        assert set(res.mape) == {2, 3, 4}
        assert res.best == min(res.mape, key=lambda c: (res.mape[c], c))
        assert res.models[res.best].hidden_dim == res.best

    def test_empty_candidates(self):
        with pytest.raises(InputError):
            ae.search_hidden_size(np.zeros((10, 3)), np.ones(10), [], {}, seed=0)

    @pytest.mark.slow
    def test_latent_dimension_recovered(self):
        # a plant driven by 4 comparable latent factors should not compress below 4
        bests = []
        for seed in range(20):
            lag = true_delay_matrix(PlantSpec(seed=seed, load_share=0.5))
            train = lag.index < 400
            res = ae.search_hidden_size(lag.values[train], lag.target[train], range(2, 9),
                                        {"K": 100, "seed": seed}, seed)
            bests.append(res.best)
        assert sum(b >= 4 for b in bests) > 10, bests


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.data())
def test_encoded_values_in_open_unit_interval(input_dim, data):
    hidden = data.draw(st.integers(1, input_dim - 1))
    m = ae.init(input_dim, hidden, seed=data.draw(st.integers(0, 2 ** 32)))
    X = np.random.default_rng(0).uniform(size=(5, input_dim))
    H = ae.encode(m, X)
    assert H.shape == (5, hidden)
    assert np.all((H > 0) & (H < 1))
