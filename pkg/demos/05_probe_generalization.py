"""Probe how trained models behave on abrupt, out-of-distribution shifts.

Two field records (Enugu and Plateau) are evaluated as-is, then with one
variable shifted hard: precipitation slashed by an order of magnitude, or
silt raised past anything in training. A model that leans on the state
indicator barely reacts; one that learned the weather/soil interaction
moves, and should move in the direction the correlation signs predict
(yield up when precipitation falls or silt rises).

Run: python demos/05_probe_generalization.py
"""
import numpy as np

from cornyield import simulate
from cornyield.dataset import TARGET_COLUMN, encode_features
from cornyield.feature_select import correlation_report, select_features
from cornyield.tuning_eval import (
    ModelFamily,
    base_cases,
    fit_family,
    predict_any,
    single_point_eval,
    unforeseen_cases,
)

table = simulate.modeling_table(seed=2, districts_range=(20, 30))
report = correlation_report(table, TARGET_COLUMN)
selected = select_features(report)
taus = dict(zip(report.names, report.taus))

x, y, states, numerics = encode_features(table)
keep = [len(states) + numerics.index(n) for n in selected]
x = np.hstack([x[:, : len(states)], x[:, keep]])

members = {
    "rfr": fit_family(ModelFamily("forest", {}), x, y, seed=5),
    "dnnr16": fit_family(ModelFamily("mlp", {"hidden_width": 16, "epochs": 60,
                                             "batch_size": 100,
                                             "learning_rate": 0.001}), x, y, seed=5),
}

cases = base_cases() + unforeseen_cases()
for tag, model in members.items():
    rows = single_point_eval(lambda r: predict_any(model, r), cases,
                             selected, states, taus)
    print(f"\n== {tag}")
    print(f"{'case':26s} {'predicted':>9s} {'delta':>8s}  moved as expected?")
    for r in rows:
        name = f"{r['label']}" + (f" {r['perturbed_field']}" if r["perturbed_field"] else " (base)")
        flag = "-" if not r["perturbed_field"] else (
            "yes" if r.get("direction_consistent") else "no")
        print(f"{name:26s} {r['predicted']:9.3f} {r['delta']:8.3f}  {flag}")
