import numpy as np
import pytest

from selreg.core import (
    Dataset,
    KTooLargeError,
    RngHandle,
    STREAM_MLP,
    STREAM_SAMPLE,
    SplitSpec,
    TableLookupRegressor,
    model_from_json,
    model_to_json,
    split_dataset,
)
from selreg.losses import empirical_squared_loss, oracle_rwr_risk, squared_risk
from selreg.models import (
    KnnConfig,
    MlpConfig,
    fit_knn,
    fit_knn_auto,
    fit_mlp,
    gradient_check,
    select_hyperparameters,
)
from selreg.oracle import random_table_rejector
from selreg.tasks import default_discrete_task


class TestKnn:
    def test_k_equals_n_predicts_global_mean(self, tiny_dataset):
        model = fit_knn(tiny_dataset, KnnConfig(k=3))
        np.testing.assert_allclose(
            model.predict(np.array([[-5.0], [7.0]])), tiny_dataset.targets.mean()
        )

    def test_k1_exact_match(self, tiny_dataset):
        model = fit_knn(tiny_dataset, KnnConfig(k=1))
        assert model.predict(np.array([[2.0]]))[0] == 4.0

    def test_two_neighbor_hand_case(self, tiny_dataset):
        # query 0.9: neighbors at x=1 (d^2=0.01) and x=0 (d^2=0.81) -> mean(1, 0)
        model = fit_knn(tiny_dataset, KnnConfig(k=2))
        assert model.predict(np.array([[0.9]]))[0] == pytest.approx(0.5, abs=1e-12)

    def test_k_too_large(self, tiny_dataset):
        with pytest.raises(KTooLargeError):
            fit_knn(tiny_dataset, KnnConfig(k=4))

    def test_distance_tie_breaks_to_lower_index(self):
        data = Dataset(np.array([[0.0], [2.0]]), np.array([10.0, 20.0]))
        model = fit_knn(data, KnnConfig(k=1))
        # query at 1.0 is equidistant; row 0 wins
        assert model.predict(np.array([[1.0]]))[0] == 10.0

    def test_round_trip_serialization(self, tiny_dataset):
        model = fit_knn(tiny_dataset, KnnConfig(k=2))
        clone = model_from_json(model_to_json(model))
        q = np.array([[0.4], [1.9]])
        np.testing.assert_array_equal(model.predict(q), clone.predict(q))


class TestSelectHyperparameters:
    @staticmethod
    def _knn_fitter(train, k):
        return fit_knn(train, KnnConfig(k=k))

    def test_singleton_grid(self, tiny_dataset):
        got = select_hyperparameters(tiny_dataset, tiny_dataset, [2], self._knn_fitter)
        assert got == 2

    def test_tie_prefers_smaller(self):
        # constant targets: every k has zero validation loss
        data = Dataset(np.arange(6, dtype=float)[:, None], np.ones(6))
        got = select_hyperparameters(data, data, [2, 4], self._knn_fitter)
        assert got == 2

    def test_small_k_wins_on_sloped_data(self):
        rng = np.random.default_rng(0)
        x = np.linspace(0, 1, 200)[:, None]
        y = 3.0 * x[:, 0]
        train = Dataset(x, y)
        val = Dataset(x + 0.001, y)
        losses = {
            k: empirical_squared_loss(fit_knn(train, KnnConfig(k=k)), val) for k in (5, 150)
        }
        assert losses[5] < losses[150]
        got = select_hyperparameters(train, val, [5, 150], self._knn_fitter)
        assert got == 5

    def test_empty_grid_rejected(self, tiny_dataset):
        with pytest.raises(ValueError):
            select_hyperparameters(tiny_dataset, tiny_dataset, [], self._knn_fitter)

    def test_auto_fit_truncates_grid_silently(self):
        data = Dataset(np.arange(8, dtype=float)[:, None], np.arange(8, dtype=float))
        model = fit_knn_auto(data, data, KnnConfig(k_grid=(5, 150)))
        assert model.k == 5


class TestMlp:
    def test_constant_zero_target_fits_fast(self):
        rng = np.random.default_rng(7)
        data = Dataset(rng.uniform(-1, 1, size=(256, 3)), np.zeros(256))
        cfg = MlpConfig(learning_rate=5e-3, epochs=50, init_seed=RngHandle(3, STREAM_MLP))
        model = fit_mlp(data, cfg)
        assert empirical_squared_loss(model, data) <= 1e-3

    def test_bit_identical_retrain(self):
        rng = np.random.default_rng(8)
        data = Dataset(rng.normal(size=(128, 2)), rng.normal(size=128))
        cfg = MlpConfig(epochs=30, init_seed=RngHandle(9, STREAM_MLP))
        a = fit_mlp(data, cfg)
        b = fit_mlp(data, cfg)
        for pa, pb in zip((a.w1, a.b1, a.w2, a.b2), (b.w1, b.b1, b.w2, b.b2)):
            np.testing.assert_array_equal(pa, pb)

    def test_linear_task_matches_least_squares_oracle(self):
        rng = np.random.default_rng(42)
        x = rng.uniform(-1, 1, size=(500, 1))
        y = 2.0 * x[:, 0] + rng.normal(0, 0.01, 500)
        train, _, test = split_dataset(Dataset(x, y), SplitSpec(seed=1))
        cfg = MlpConfig(epochs=800, init_seed=RngHandle(5, STREAM_MLP))
        model = fit_mlp(train, cfg)
        mlp_mse = empirical_squared_loss(model, test)

        design = np.column_stack([np.ones(train.n), train.features])
        beta, *_ = np.linalg.lstsq(design, train.targets, rcond=None)
        ls_pred = np.column_stack([np.ones(test.n), test.features]) @ beta
        ls_mse = float(np.mean((ls_pred - test.targets) ** 2))

        assert mlp_mse <= 5e-3
        assert mlp_mse <= ls_mse + 5e-3  # within range of the closed-form fit

    def test_weights_round_trip_with_shape_header(self):
        rng = np.random.default_rng(1)
        data = Dataset(rng.normal(size=(64, 2)), rng.normal(size=64))
        model = fit_mlp(data, MlpConfig(epochs=5, init_seed=RngHandle(2, STREAM_MLP)))
        clone = model_from_json(model_to_json(model))
        q = rng.normal(size=(5, 2))
        np.testing.assert_array_equal(model.predict(q), clone.predict(q))

    def test_batch_larger_than_n_is_clipped(self):
        rng = np.random.default_rng(3)
        data = Dataset(rng.normal(size=(20, 2)), rng.normal(size=20))
        fit_mlp(data, MlpConfig(epochs=2, batch_size=256, init_seed=RngHandle(1, STREAM_MLP)))

    def test_divergence_raises_non_finite_loss(self):
        from selreg.core import NonFiniteLossError

        rng = np.random.default_rng(4)
        data = Dataset(rng.normal(size=(32, 2)), rng.normal(size=32))
        absurd = MlpConfig(learning_rate=1e200, epochs=5, init_seed=RngHandle(2, STREAM_MLP))
        with np.errstate(all="ignore"), pytest.raises(NonFiniteLossError):
            fit_mlp(data, absurd)


class TestGradientCheck:
    def test_random_probe_passes_bar(self):
        rng = np.random.default_rng(12)
        probe = Dataset(rng.normal(size=(16, 3)), rng.normal(size=16))
        report = gradient_check(MlpConfig(init_seed=RngHandle(4, STREAM_MLP)), probe)
        assert report.max_relative_error <= 1e-4

    def test_zero_inputs_finite(self):
        probe = Dataset(np.zeros((8, 2)), np.ones(8))
        report = gradient_check(MlpConfig(init_seed=RngHandle(5, STREAM_MLP)), probe)
        assert np.isfinite(report.max_relative_error)

    def test_per_layer_diagnostics_present(self):
        rng = np.random.default_rng(13)
        probe = Dataset(rng.normal(size=(8, 2)), rng.normal(size=8))
        report = gradient_check(MlpConfig(init_seed=RngHandle(6, STREAM_MLP)), probe)
        assert set(report.per_layer) == {"w1", "b1", "w2", "b2"}

    def test_probe_size_cap(self):
        probe = Dataset(np.zeros((33, 2)), np.zeros(33))
        with pytest.raises(ValueError):
            gradient_check(MlpConfig(), probe)


class TestConsistencyProperties:
    def test_knn_excess_risk_shrinks_with_n(self):
        task = default_discrete_task()
        noise_floor = float(np.dot(task.weights, task.variances))
        medians = []
        for n in (100, 400, 1600):
            excesses = []
            for seed in range(5):
                data = task.sample(n, RngHandle(500 + seed, STREAM_SAMPLE))
                tr, va, _ = split_dataset(data, SplitSpec(seed=seed))
                f = fit_knn_auto(tr, va)
                excesses.append(squared_risk(f, task) - noise_floor)
            medians.append(float(np.median(excesses)))
        assert medians[0] > medians[1] > medians[2]

    def test_cond_mean_lookup_beats_any_competitor_for_every_rejector(self):
        task = default_discrete_task()
        f_mean = TableLookupRegressor(task.points, task.means)
        gen = np.random.default_rng(21)
        for _ in range(30):
            competitor = TableLookupRegressor(
                task.points, task.means + gen.uniform(-2, 2, task.size)
            )
            rej = random_table_rejector(gen, task)
            c = float(gen.uniform(0.2, 4.0))
            assert (
                oracle_rwr_risk(f_mean, rej, task, c)
                <= oracle_rwr_risk(competitor, rej, task, c) + 1e-12
            )
