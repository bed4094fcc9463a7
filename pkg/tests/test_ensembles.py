import numpy as np
import pytest

from cornyield.ensembles import (
    BoostConfig,
    BoostModel,
    ForestConfig,
    TreeNode,
    fit_boost,
    fit_forest,
    fit_tree,
    predict_boost,
    predict_forest,
    predict_tree,
    tree_from_dict,
    tree_to_dict,
)
from cornyield.errors import EmptyInputError
from cornyield.metrics import mae
def brute_force_best_stump(x, y):
    """Try every midpoint split on every feature; exhaustive oracle."""
    best = None
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    for j in range(x.shape[1]):
        values = np.unique(x[:, j])
        for a, b in zip(values, values[1:]):
            thr = a + (b - a) / 2
            left = y[x[:, j] <= thr]
            right = y[x[:, j] > thr]
            sse = (((left - left.mean()) ** 2).sum()
                   + ((right - right.mean()) ** 2).sum())
            if best is None or sse < best[0]:
                best = (sse, j, thr, left.mean(), right.mean())
    return best
class TestFitTree:
    def test_constant_targets_single_leaf(self):
        tree = fit_tree([[1.0], [2.0], [3.0]], [4.0, 4.0, 4.0])
        assert tree.is_leaf and tree.value == 4.0
    def test_four_point_depth_one_matches_brute_force(self):
        x = [[1.0], [2.0], [3.0], [4.0]]
        y = [0.0, 0.0, 10.0, 10.0]
        tree = fit_tree(x, y, max_depth=1)
        _, j, thr, lv, rv = brute_force_best_stump(x, y)
        assert (tree.feature, tree.threshold) == (j, thr) == (0, 2.5)
        assert (tree.left.value, tree.right.value) == (lv, rv) == (0.0, 10.0)
    def test_stump_matches_brute_force_on_random_data(self, rng):
        for _ in range(30):
            x = rng.normal(size=(20, 3))
            y = rng.normal(size=20)
            tree = fit_tree(x, y, max_depth=1)
            sse, j, thr, lv, rv = brute_force_best_stump(x, y)
            assert tree.feature == j
            assert tree.threshold == pytest.approx(thr, abs=1e-12)
    def test_depth_limit_is_structural(self, rng):
        x = rng.normal(size=(200, 4))
        y = rng.normal(size=200)
        for limit in (1, 2, 3, 5):
            tree = fit_tree(x, y, max_depth=limit, min_samples_split=2)
            assert tree.depth() <= limit
    def test_memorizes_distinct_rows_without_limits(self, rng):
        x = rng.normal(size=(40, 3))
        y = rng.normal(size=40)
        tree = fit_tree(x, y, max_depth=64, min_samples_split=2)
        assert np.allclose(predict_tree(tree, x), y, atol=1e-12)
    def test_min_samples_leaf_respected(self, rng):
        x = rng.normal(size=(50, 2))
        y = rng.normal(size=50)
        tree = fit_tree(x, y, max_depth=10, min_samples_leaf=10)
        def smallest_leaf(node, rows):
            if node.is_leaf:
                return rows.shape[0]
            mask = rows[:, node.feature] <= node.threshold
            return min(smallest_leaf(node.left, rows[mask]),
                       smallest_leaf(node.right, rows[~mask]))
        assert smallest_leaf(tree, x) >= 10
    def test_empty_input(self):
        with pytest.raises(EmptyInputError):
            fit_tree(np.empty((0, 2)), [])
class TestForest:
    def test_constant_target(self, rng):
        x = rng.normal(size=(30, 3))
        model = fit_forest((x, np.full(30, 2.5)), ForestConfig(n_estimators=5), seed=0)
        assert np.all(predict_forest(model, x) == 2.5)
    def test_single_tree_no_bagging_equals_fit_tree(self, rng):
        x = rng.normal(size=(60, 4))
        y = rng.normal(size=60)
        cfg = ForestConfig(n_estimators=1, bootstrap=False, feature_subsample=1.0,
                           max_depth=6)
        forest = fit_forest((x, y), cfg, seed=3)
        solo = fit_tree(x, y, max_depth=6)
        assert np.array_equal(predict_forest(forest, x), predict_tree(solo, x))
    def test_prediction_is_mean_of_trees(self, rng):
        x = rng.normal(size=(80, 5))
        y = rng.normal(size=80)
        model = fit_forest((x, y), ForestConfig(n_estimators=7, max_depth=4), seed=1)
        probe = rng.normal(size=(1000, 5))
        stacked = np.vstack([predict_tree(t, probe) for t in model.trees])
        assert np.allclose(predict_forest(model, probe), stacked.mean(axis=0),
                           atol=1e-12)
    def test_hand_mean(self):
        trees = tuple(TreeNode(value=v) for v in (1.0, 2.0, 3.0))
        model = ForestModelStub(trees)
        assert predict_forest(model, np.zeros((1, 2)))[0] == 2.0
    def test_deterministic(self, rng):
        x = rng.normal(size=(50, 3))
        y = rng.normal(size=50)
        cfg = ForestConfig(n_estimators=4, max_depth=5)
        a = fit_forest((x, y), cfg, seed=9)
        b = fit_forest((x, y), cfg, seed=9)
        assert tree_to_dict(a.trees[0]) == tree_to_dict(b.trees[0])
        probe = rng.normal(size=(20, 3))
        assert np.array_equal(predict_forest(a, probe), predict_forest(b, probe))
    def test_default_config_matches_production_values(self):
        cfg = ForestConfig()
        assert cfg.n_estimators == 10 and cfg.max_depth == 10
def ForestModelStub(trees):
    from cornyield.ensembles import ForestModel
    return ForestModel(trees=trees, config=ForestConfig(n_estimators=len(trees)),
                       seed=0)
class TestBoost:
    def test_zero_rounds_predicts_training_mean(self, rng):
        x = rng.normal(size=(20, 2))
        y = rng.uniform(1, 3, 20)
        model = fit_boost((x, y), BoostConfig(n_estimators=0), seed=0)
        assert np.all(predict_boost(model, x) == y.mean())
    def test_single_round_squared_loss_exact(self):
        x = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0.0, 0.0, 10.0, 10.0])
        cfg = BoostConfig(n_estimators=1, max_depth=1, learning_rate=1.0,
                          min_samples_split_fraction=0.0, reg_lambda=0.0,
                          objective="squared")
        model = fit_boost((x, y), cfg, seed=0)
        assert np.array_equal(predict_boost(model, x), y)
    def test_training_error_non_increasing(self, rng):
        x = rng.normal(size=(120, 4))
        y = rng.normal(size=120) + x[:, 0]
        cfg_base = dict(max_depth=3, learning_rate=0.3,
                        min_samples_split_fraction=0.05, subsample=1.0)
        errors = []
        for rounds in range(0, 51, 5):
            model = fit_boost((x, y), BoostConfig(n_estimators=rounds, **cfg_base),
                              seed=4)
            errors.append(mae(predict_boost(model, x), y))
        assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
    def test_constant_tree_shifts_by_learning_rate(self, rng):
        x = rng.normal(size=(10, 2))
        y = rng.normal(size=10)
        model = fit_boost((x, y), BoostConfig(n_estimators=3, max_depth=2,
                                              learning_rate=0.1), seed=0)
        extended = BoostModel(base_prediction=model.base_prediction,
                              trees=model.trees + (TreeNode(value=5.0),),
                              config=model.config, seed=model.seed)
        delta = predict_boost(extended, x) - predict_boost(model, x)
        assert np.allclose(delta, 0.1 * 5.0, atol=1e-12)
    def test_accumulation_matches_manual_replay(self, rng):
        x = rng.normal(size=(40, 3))
        y = rng.normal(size=40)
        cfg = BoostConfig(n_estimators=6, max_depth=2, learning_rate=0.2,
                          min_samples_split_fraction=0.1)
        model = fit_boost((x, y), cfg, seed=7)
        probe = rng.normal(size=(15, 3))
        manual = np.full(15, model.base_prediction)
        for tree in model.trees:
            manual += cfg.learning_rate * predict_tree(tree, probe)
        assert np.array_equal(predict_boost(model, probe), manual)
    def test_subsample_draws_without_replacement_deterministically(self, rng):
        x = rng.normal(size=(60, 3))
        y = rng.normal(size=60)
        cfg = BoostConfig(n_estimators=5, max_depth=2, subsample=0.5)
        a = fit_boost((x, y), cfg, seed=11)
        b = fit_boost((x, y), cfg, seed=11)
        probe = rng.normal(size=(10, 3))
        assert np.array_equal(predict_boost(a, probe), predict_boost(b, probe))
    def test_default_config_matches_production_values(self):
        cfg = BoostConfig()
        assert (cfg.n_estimators, cfg.max_depth, cfg.learning_rate,
                cfg.min_samples_split_fraction, cfg.subsample) == (900, 10, 0.1, 0.1, 1.0)
    def test_l1_threshold_can_zero_out_leaves(self, rng):
        x = rng.normal(size=(30, 2))
        y = rng.normal(size=30) * 0.01  # tiny residuals
        cfg = BoostConfig(n_estimators=2, max_depth=2, reg_alpha=10.0)
        model = fit_boost((x, y), cfg, seed=0)
        assert np.allclose(predict_boost(model, x), y.mean(), atol=1e-12)
class TestPiecewiseConstancy:
    def test_perturbation_inside_threshold_gap_changes_nothing(self, rng):
        x = rng.normal(size=(100, 3))
        y = x[:, 0] * 2 + rng.normal(size=100)
        tree = fit_tree(x, y, max_depth=6)
        def thresholds(node, feature, acc):
            if node.is_leaf:
                return acc
            if node.feature == feature:
                acc.append(node.threshold)
            thresholds(node.left, feature, acc)
            thresholds(node.right, feature, acc)
            return acc
        cuts = sorted(thresholds(tree, 0, []))
        assert cuts, "expected splits on the informative feature"
        base = x[0].copy()
        pred_before = predict_tree(tree, base)
        # move feature 0 within its current threshold gap
        position = np.searchsorted(cuts, base[0])
        lo = cuts[position - 1] if position > 0 else base[0] - 1.0
        hi = cuts[position] if position < len(cuts) else base[0] + 1.0
        nudged = base.copy()
        nudged[0] = lo + (hi - lo) * 0.75
        if nudged[0] != base[0]:
            assert predict_tree(tree, nudged) == pred_before
class TestSerialization:
    def test_tree_dict_round_trip(self, rng):
        x = rng.normal(size=(50, 4))
        y = rng.normal(size=50)
        tree = fit_tree(x, y, max_depth=5)
        clone = tree_from_dict(tree_to_dict(tree))
        probe = rng.normal(size=(200, 4))
        assert np.array_equal(predict_tree(tree, probe), predict_tree(clone, probe))
