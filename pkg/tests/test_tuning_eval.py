import numpy as np
import pytest

from cornyield.errors import MissingFieldError, TooFewRowsError
from cornyield.tuning_eval import (
    ENUGU_RECORD,
    PLATEAU_RECORD,
    GridSpec,
    ModelFamily,
    PerturbationCase,
    ablation_feature_selection,
    assemble_row,
    base_cases,
    bootstrap_eval,
    fit_family,
    grid_search,
    kfold_cv,
    predict_any,
    single_point_eval,
    unforeseen_cases,
)

FOREST = ModelFamily("forest", {"n_estimators": 3, "max_depth": 4})
BOOST = ModelFamily("boost", {"n_estimators": 10, "max_depth": 2,
                              "learning_rate": 0.3,
                              "min_samples_split_fraction": 0.1})
MLP = ModelFamily("mlp", {"hidden_width": 8, "hidden_depth": 2, "epochs": 10,
                          "batch_size": 32, "learning_rate": 0.01})


@pytest.fixture(scope="module")
def toy_data():
    rng = np.random.Generator(np.random.PCG64(77))
    x = rng.uniform(0, 1, size=(120, 4))
    y = 3.0 * x[:, 0] - 2.0 * x[:, 1] + 0.1 * rng.normal(size=120)
    return x, y


class TestFamilies:
    @pytest.mark.parametrize("family", [FOREST, BOOST, MLP],
                             ids=["forest", "boost", "mlp"])
    def test_fit_and_predict(self, toy_data, family):
        x, y = toy_data
        model = fit_family(family, x, y, seed=1)
        pred = predict_any(model, x)
        assert pred.shape == (120,)
        assert np.all(np.isfinite(pred))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            ModelFamily("svm", {})


class TestKfold:
    def test_partition_properties(self, toy_data):
        x, y = toy_data
        run = kfold_cv(FOREST, x, y, k=5, seed=3)
        assert run.mode == "kfold" and len(run.reports) == 5
        sizes = [r.n for r in run.reports]
        assert sum(sizes) == 120
        assert max(sizes) - min(sizes) <= 1

    def test_leave_one_out(self):
        rng = np.random.Generator(np.random.PCG64(1))
        x = rng.uniform(size=(12, 2))
        y = rng.uniform(size=12)
        run = kfold_cv(FOREST, x, y, k=12, seed=0)
        assert all(r.n == 1 for r in run.reports)

    def test_constant_target_scores_zero(self):
        rng = np.random.Generator(np.random.PCG64(2))
        x = rng.uniform(size=(30, 2))
        y = np.full(30, 1.5)
        run = kfold_cv(FOREST, x, y, k=3, seed=0)
        assert all(r.rmse == 0.0 for r in run.reports)

    def test_bounds(self, toy_data):
        x, y = toy_data
        with pytest.raises(TooFewRowsError):
            kfold_cv(FOREST, x, y, k=1, seed=0)
        with pytest.raises(TooFewRowsError):
            kfold_cv(FOREST, x, y, k=121, seed=0)

    def test_deterministic(self, toy_data):
        x, y = toy_data
        a = kfold_cv(FOREST, x, y, k=4, seed=5)
        b = kfold_cv(FOREST, x, y, k=4, seed=5)
        assert a.reports == b.reports


class TestGridSearch:
    def test_single_combination_wins_trivially(self, toy_data):
        x, y = toy_data
        grid = GridSpec({"max_depth": [3]}, folds=3)
        best, table = grid_search(FOREST, grid, x, y, seed=0)
        assert best == {"max_depth": 3}
        assert len(table) == 1 and not table[0][2]

    def test_true_generating_depth_wins(self):
        # depth-1 step function: a stump fits it, a deeper tree only overfits
        rng = np.random.Generator(np.random.PCG64(8))
        x = rng.uniform(0, 1, size=(200, 1))
        y = np.where(x[:, 0] > 0.5, 2.0, -1.0) + 0.01 * rng.normal(size=200)
        family = ModelFamily("forest", {"n_estimators": 1, "bootstrap": False,
                                        "feature_subsample": 1.0})
        grid = GridSpec({"max_depth": [1, 12], "min_samples_split": [2]}, folds=4)
        best, table = grid_search(family, grid, x[:, :1], y, seed=2)
        assert best["max_depth"] == 1

    def test_tie_break_keeps_first_declared(self):
        rng = np.random.Generator(np.random.PCG64(9))
        x = rng.uniform(size=(40, 2))
        y = np.full(40, 2.0)  # every config scores exactly 0
        grid = GridSpec({"max_depth": [4, 2, 8]}, folds=4)
        best, table = grid_search(FOREST, grid, x, y, seed=1)
        assert best == {"max_depth": 4}
        assert [row[1] for row in table] == [0.0, 0.0, 0.0]

    def test_failed_cells_are_skipped_not_fatal(self, toy_data):
        x, y = toy_data
        grid = GridSpec({"n_estimators": [2], "max_depth": [3]}, folds=200)
        # folds > rows fails every cell -> overall failure is reported
        with pytest.raises(Exception):
            grid_search(FOREST, grid, x, y, seed=0)

    def test_combinations_order(self):
        grid = GridSpec({"a": [1, 2], "b": ["x", "y"]})
        assert grid.combinations() == [
            {"a": 1, "b": "x"}, {"a": 1, "b": "y"},
            {"a": 2, "b": "x"}, {"a": 2, "b": "y"}]


class TestBootstrap:
    def test_reports_are_finite_and_oob_sized(self, toy_data):
        x, y = toy_data
        run = bootstrap_eval(FOREST, x, y, replicates=10, seed=6)
        assert run.mode == "bootstrap" and len(run.reports) == 10
        for r in run.reports:
            assert np.isfinite(r.arse) and r.arse >= 0
            # OOB fraction of an n-resample is ~ 1/e
            assert 0 < r.n < 120

    def test_deterministic(self, toy_data):
        x, y = toy_data
        a = bootstrap_eval(FOREST, x, y, replicates=3, seed=2)
        b = bootstrap_eval(FOREST, x, y, replicates=3, seed=2)
        assert a.reports == b.reports


class TestSinglePoint:
    def test_canonical_case_lists(self):
        bases = base_cases()
        cases = unforeseen_cases()
        assert len(bases) == 2 and len(cases) == 4
        for case in cases:
            assert len(case.perturbed) == 1
            source = ENUGU_RECORD if case.label == "Enugu" else PLATEAU_RECORD
            assert case.base == source  # untouched fields bit-identical
        assert {c.perturbed[0][0] for c in cases} == {"avg_precip_mm", "silt_pct"}

    def test_identity_perturbation_equals_base(self):
        numerics = sorted(ENUGU_RECORD)
        states = ("Enugu", "Plateau")

        def predictor(rows):
            return np.asarray(rows)[:, len(states):].sum(axis=1)

        case = PerturbationCase("Enugu", dict(ENUGU_RECORD), (), 0.709388681)
        rows = single_point_eval(predictor, [case], numerics, states)
        assert rows[0]["delta"] == 0.0 and not rows[0]["changed"]
        assert rows[0]["residual"] == abs(rows[0]["predicted"] - 0.709388681)

    def test_perfect_oracle_zero_residual(self):
        numerics = sorted(ENUGU_RECORD)
        states = ("Enugu", "Plateau")
        expected = {"Enugu": 0.709388681, "Plateau": 2.60302342}

        def oracle(rows):
            rows = np.asarray(rows)
            return np.where(rows[:, 0] == 1.0, expected["Enugu"], expected["Plateau"])

        rows = single_point_eval(oracle, base_cases(), numerics, states)
        assert all(r["residual"] == 0.0 for r in rows)

    def test_direction_flags_follow_tau_signs(self):
        numerics = sorted(ENUGU_RECORD)
        states = ("Enugu", "Plateau")
        taus = {"avg_precip_mm": -0.5, "silt_pct": 0.4}

        def responsive(rows):
            rows = np.asarray(rows)
            precip = rows[:, len(states) + numerics.index("avg_precip_mm")]
            silt = rows[:, len(states) + numerics.index("silt_pct")]
            return 3.0 - 0.01 * precip + 0.02 * silt

        rows = single_point_eval(responsive, unforeseen_cases(), numerics,
                                 states, taus)
        for r in rows:
            assert r["direction_expected_up"] is True  # precip down / silt up
            assert r["direction_consistent"] is True

    def test_missing_field(self):
        case = PerturbationCase("Enugu", {"soil_ph": 5.0}, (), 1.0)
        with pytest.raises(MissingFieldError):
            single_point_eval(lambda rows: np.zeros(len(rows)), [case],
                              ["soil_ph", "sand_pct"], ("Enugu",))

    def test_assemble_row_layout(self):
        row = assemble_row({"a": 1.5, "b": 2.5}, "S2", ["a", "b"], ("S1", "S2"))
        assert list(row) == [0.0, 1.0, 1.5, 2.5]


class TestAblation:
    def test_identical_sets_identical_reports(self, toy_data):
        x, y = toy_data
        train = (x[:90], y[:90])
        test = (x[90:], y[90:])
        result = ablation_feature_selection(FOREST, train, test, train, test, seed=4)
        assert result["without_selection"] == result["with_selection"]
        assert result["delta_arse"] == 0.0

    def test_informative_subset_beats_noise_padding(self):
        rng = np.random.Generator(np.random.PCG64(10))
        x_good = rng.uniform(size=(150, 2))
        noise = rng.normal(size=(150, 6))
        y = 2.0 * x_good[:, 0] - x_good[:, 1]
        x_full = np.hstack([x_good, noise])
        family = ModelFamily("forest", {"n_estimators": 5, "max_depth": 6,
                                        "feature_subsample": 0.5})
        result = ablation_feature_selection(
            family, (x_full[:100], y[:100]), (x_full[100:], y[100:]),
            (x_good[:100], y[:100]), (x_good[100:], y[100:]), seed=1)
        assert result["with_selection"].arse < result["without_selection"].arse
