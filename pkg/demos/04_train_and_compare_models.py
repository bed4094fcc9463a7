"""Train the four regressors and compare them on held-out data.

Same encoded features for everyone: the one-hot state block plus the
selected numerics. The network members see min-max normalized inputs
(fitted on the training split only); the tree members take raw values.
Errors are reported three ways: root mean squared (outlier-sensitive),
mean absolute (outlier-blind), and their average, which balances the two.

Run: python demos/04_train_and_compare_models.py
"""
import numpy as np

from cornyield import simulate
from cornyield.dataset import TARGET_COLUMN, encode_features
from cornyield.feature_select import correlation_report, select_features
from cornyield.metrics import arse
from cornyield.tuning_eval import (
    ModelFamily,
    bootstrap_eval,
    fit_family,
    predict_any,
)

FAMILIES = {
    "rfr":    ModelFamily("forest", {"n_estimators": 10, "max_depth": 10}),
    "xgbr":   ModelFamily("boost", {"n_estimators": 150, "max_depth": 6,
                                    "learning_rate": 0.1,
                                    "min_samples_split_fraction": 0.1}),
    "dnnr16": ModelFamily("mlp", {"hidden_width": 16, "hidden_depth": 3,
                                  "epochs": 60, "batch_size": 100,
                                  "learning_rate": 0.001}),
    "dnnr64": ModelFamily("mlp", {"hidden_width": 64, "hidden_depth": 3,
                                  "epochs": 60, "batch_size": 100,
                                  "learning_rate": 0.001}),
}

table = simulate.modeling_table(seed=2, districts_range=(20, 30))
report = correlation_report(table, TARGET_COLUMN)
selected = select_features(report)

x, y, states, numerics = encode_features(table)
keep = [len(states) + numerics.index(n) for n in selected]
x = np.hstack([x[:, : len(states)], x[:, keep]])

rng = np.random.Generator(np.random.PCG64(1))
perm = rng.permutation(len(y))
n_train = int(0.8 * len(y))
train_idx, test_idx = perm[:n_train], perm[n_train:]
print(f"{len(y)} rows, {x.shape[1]} features "
      f"({len(states)} states + {len(selected)} numerics); "
      f"{n_train} train / {len(test_idx)} test\n")

print(f"{'model':8s} {'rmse':>10s} {'mae':>10s} {'combined':>10s}")
for tag, family in FAMILIES.items():
    model = fit_family(family, x[train_idx], y[train_idx], seed=7)
    scores = arse(predict_any(model, x[test_idx]), y[test_idx])
    print(f"{tag:8s} {scores.rmse:10.4f} {scores.mae:10.4f} {scores.arse:10.4f}")

# training-error spread over ten bootstrap resamples (out-of-bag scored)
print("\nbootstrap out-of-bag spread (combined error, 10 resamples):")
for tag in ("rfr", "dnnr16"):
    run = bootstrap_eval(FAMILIES[tag], x[train_idx], y[train_idx],
                         replicates=10, seed=3, model_tag=tag)
    values = np.array([r.arse for r in run.reports])
    print(f"{tag:8s} median {np.median(values):.4f} "
          f"range [{values.min():.4f}, {values.max():.4f}]")
