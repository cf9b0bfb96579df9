import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from htboost import (
    BoosterConfig,
    PenaltyConfig,
    TestConfig,
    calibrate_correlation,
    calibrate_type1,
    cross_validate,
    default_grid,
    grid_search,
    kfold_indices,
    mae,
    roc_auc,
)
from htboost.evaluate import apply_grid_params, pearson

from conftest import make_signal_dataset, pairwise_auc


class TestMae:
    def test_zero(self):
        assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_simple(self):
        assert mae([0.0, 2.0], [1.0, 1.0]) == 1.0

    def test_direct(self):
        assert mae([1.0, 2.0, 3.0], [2.0, 2.0, 2.0]) == pytest.approx(2.0 / 3.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mae([1.0], [1.0, 2.0])

    @given(
        st.lists(st.integers(-10_000, 10_000), min_size=1, max_size=50),
        st.integers(-10_000, 10_000),
    )
    @settings(max_examples=80)
    def test_translation_equivariance_exact(self, values, shift):
        # integer-valued floats add without rounding, so equality is exact
        y = np.asarray(values, dtype=np.float64)
        yhat = y[::-1].copy()
        assert mae(y + shift, yhat + shift) == mae(y, yhat)

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=50), st.floats(-50, 50))
    @settings(max_examples=80)
    def test_translation_equivariance_float(self, values, shift):
        y = np.asarray(values)
        yhat = y[::-1].copy()
        assert mae(y + shift, yhat + shift) == pytest.approx(mae(y, yhat), abs=1e-9)


class TestRocAuc:
    def test_perfect_separation(self):
        assert roc_auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0

    def test_all_ties(self):
        assert roc_auc([0, 1, 0, 1], [0.5, 0.5, 0.5, 0.5]) == 0.5

    def test_hand_counted_pairs(self):
        assert roc_auc([0, 1, 1, 0], [0.1, 0.9, 0.4, 0.5]) == 0.75

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            roc_auc([1, 1], [0.1, 0.2])

    def test_matches_pairwise_oracle(self, rng):
        for _ in range(50):
            n = int(rng.integers(4, 200))
            y = rng.integers(0, 2, n).astype(float)
            if y.min() == y.max():
                y[0] = 1.0 - y[0]
            scores = np.round(rng.standard_normal(n), 1)  # force ties
            assert roc_auc(y, scores) == pairwise_auc(y, scores)

    def test_invariant_under_monotone_transform(self, rng):
        y = rng.integers(0, 2, 100).astype(float)
        y[0], y[1] = 0.0, 1.0
        s = rng.standard_normal(100)
        assert roc_auc(y, s) == pytest.approx(roc_auc(y, np.exp(s)), abs=1e-12)


class TestCrossValidate:
    def test_constant_model_identical_folds(self, rng):
        ds = make_signal_dataset(rng, 60, 2)
        cfg = BoosterConfig(n_estimators_cap=0, regularizer=TestConfig(seed=0), seed=0)
        folds = kfold_indices(60, 3, seed=1)
        result = cross_validate(ds, cfg, folds, "mae")
        assert len(result.fold_metrics) == 3
        assert result.mean_metric == pytest.approx(np.mean(result.fold_metrics))

    def test_deterministic(self, rng):
        ds = make_signal_dataset(rng, 80, 2)
        cfg = BoosterConfig(
            n_estimators_cap=8, regularizer=TestConfig(k_draws=2, rho=0.1, seed=3), seed=3
        )
        folds = kfold_indices(80, 4, seed=2)
        a = cross_validate(ds, cfg, folds, "mae")
        b = cross_validate(ds, cfg, folds, "mae")
        assert a.fold_metrics == b.fold_metrics

    def test_sane_on_linear_data(self, rng):
        ds = make_signal_dataset(rng, 150, 2)
        cfg = BoosterConfig(
            max_depth=3, n_estimators_cap=40, regularizer=TestConfig(k_draws=3, rho=0.1, seed=0)
        )
        folds = kfold_indices(150, 5, seed=0)
        result = cross_validate(ds, cfg, folds, "mae")
        assert result.mean_metric < np.std(ds.target)

    def test_parallel_matches_serial(self, rng):
        ds = make_signal_dataset(rng, 60, 2)
        cfg = BoosterConfig(
            max_depth=2, n_estimators_cap=5, regularizer=TestConfig(k_draws=2, seed=1), seed=1
        )
        folds = kfold_indices(60, 3, seed=4)
        serial = cross_validate(ds, cfg, folds, "mae", jobs=1)
        parallel = cross_validate(ds, cfg, folds, "mae", jobs=2)
        assert serial.fold_metrics == parallel.fold_metrics


class TestGridSearch:
    def base(self, seed=0, cap=5):
        return BoosterConfig(
            max_depth=2, n_estimators_cap=cap, regularizer=TestConfig(k_draws=2, seed=seed), seed=seed
        )

    def test_single_point_grid(self, rng):
        ds = make_signal_dataset(rng, 50, 2)
        folds = kfold_indices(50, 2, seed=0)
        result = grid_search(ds, {"learning_rate": [0.2]}, folds, "mae", self.base())
        assert result.best_index == 0
        assert result.best_config.learning_rate == 0.2

    def test_cartesian_count(self, rng):
        ds = make_signal_dataset(rng, 50, 2)
        folds = kfold_indices(50, 2, seed=0)
        grid = {"learning_rate": [0.1, 0.3], "max_depth": [1, 2]}
        result = grid_search(ds, grid, folds, "mae", self.base())
        assert len(result.combos) == 4

    def test_spread_ordering_and_best(self, rng):
        ds = make_signal_dataset(rng, 60, 2)
        folds = kfold_indices(60, 3, seed=1)
        grid = {"learning_rate": [0.05, 0.1, 0.3], "max_depth": [1, 3]}
        result = grid_search(ds, grid, folds, "mae", self.base())
        assert result.spread["min"] <= result.spread["mean"] <= result.spread["max"]
        assert result.mean_metrics[result.best_index] == min(result.mean_metrics)

    def test_empty_grid_rejected(self, rng):
        ds = make_signal_dataset(rng, 40, 1)
        folds = kfold_indices(40, 2, seed=0)
        with pytest.raises(ValueError):
            grid_search(ds, {}, folds, "mae", self.base())

    def test_nested_param_routing(self):
        base = self.base()
        cfg = apply_grid_params(base, {"k_draws": 5, "rho": 0.3, "learning_rate": 0.07})
        assert cfg.regularizer.k_draws == 5
        assert cfg.regularizer.rho == 0.3
        assert cfg.learning_rate == 0.07

    def test_penalty_param_routing(self):
        base = BoosterConfig(regularizer=PenaltyConfig())
        cfg = apply_grid_params(base, {"gamma": 2.0, "reg_lambda": 1.0, "n_estimators_cap": 50})
        assert cfg.regularizer.gamma == 2.0
        assert cfg.regularizer.reg_lambda == 1.0
        assert cfg.n_estimators_cap == 50

    def test_mismatched_params_rejected(self):
        with pytest.raises(ValueError):
            apply_grid_params(self.base(), {"gamma": 1.0})

    def test_default_grids(self):
        test_grid = default_grid("test")
        pen_grid = default_grid("penalties")
        assert test_grid["k_draws"] == [1, 2, 3, 4, 5, 6]
        assert pen_grid["n_estimators_cap"] == [50, 200, 1000]
        with pytest.raises(ValueError):
            default_grid("nope")


class TestCalibration:
    def test_type1_k1_near_half(self):
        rows = calibrate_type1(n=80, k_draws_list=[1], rho=0.0, trials=600, seed=2)
        row = rows[0]
        assert abs(row["pass_rate"] - 0.5) < 4 * np.sqrt(0.25 / 600)

    def test_type1_rho_one_never_passes(self):
        rows = calibrate_type1(n=80, k_draws_list=[1], rho=1.0, trials=200, seed=3)
        assert rows[0]["pass_rate"] < 0.05

    def test_type1_deterministic(self):
        a = calibrate_type1(n=60, k_draws_list=[2], rho=0.0, trials=150, seed=5)
        b = calibrate_type1(n=60, k_draws_list=[2], rho=0.0, trials=150, seed=5)
        assert a == b

    def test_type1_validates_trials(self):
        with pytest.raises(ValueError):
            calibrate_type1(n=60, k_draws_list=[1], rho=0.0, trials=10, seed=0)

    def test_correlation_extremes(self):
        rows = calibrate_correlation(2000, [0.0, 1.0], reps=20, seed=7)
        assert abs(rows[0]["mean_corr"]) < 0.03
        assert rows[1]["mean_corr"] == 1.0

    def test_correlation_deterministic(self):
        a = calibrate_correlation(500, [0.5], reps=10, seed=9)
        b = calibrate_correlation(500, [0.5], reps=10, seed=9)
        assert a == b

    def test_pass_rate_monotone_in_rho(self):
        # a moderately strong fixed candidate should pass less often as
        # the competitor gains correlation strength
        from htboost import GradHess, RngStream, TestConfig, split_test

        rng = np.random.default_rng(0)
        n = 300
        y = rng.standard_normal(n)
        g = np.mean(y) - y
        gh = GradHess(g, np.ones(n))
        null_scale = np.var(g)
        candidate = 12.0 * null_scale
        rates = []
        for rho in (0.0, 0.25, 0.5, 0.75, 1.0):
            passes = 0
            trials = 400
            for t in range(trials):
                config = TestConfig(k_draws=1, rho=rho, seed=13)
                ok, _ = split_test(candidate, n, gh, y, config, RngStream(13).child(int(rho * 100), t))
                passes += ok
            rates.append(passes / trials)
        for earlier, later in zip(rates, rates[1:]):
            assert later <= earlier + 0.05
        assert rates[-1] < rates[0]


class TestPearson:
    def test_identical_vectors_exactly_one(self, rng):
        v = rng.standard_normal(1000)
        assert pearson(v, v.copy()) == 1.0

    def test_constant_rejected(self):
        with pytest.raises(ValueError):
            pearson([1.0, 1.0], [1.0, 2.0])
