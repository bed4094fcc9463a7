"""Persist a trained model and query it over the HTTP service.

The model file is one self-contained JSON document (parameters, feature
order, state list, normalization), so the service needs nothing else. The
service exposes three endpoints: /predict for one estimate, /whatif for a
base record plus single-field variations, /health for liveness and the
training ranges a client needs to build sliders. Here the app is driven
in-process; `cornyield serve` runs the same app on a real port.

Run: python demos/06_serve_and_query.py
"""
import json
import tempfile
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from cornyield import serving, simulate
from cornyield.dataset import TARGET_COLUMN, encode_features, fit_minmax
from cornyield.feature_select import correlation_report, select_features
from cornyield.tuning_eval import ENUGU_RECORD, ModelFamily, fit_family

table = simulate.modeling_table(seed=2, districts_range=(20, 30))
selected = select_features(correlation_report(table, TARGET_COLUMN))
x, y, states, numerics = encode_features(table)
keep = [len(states) + numerics.index(n) for n in selected]
x = np.hstack([x[:, : len(states)], x[:, keep]])

model = fit_family(ModelFamily("forest", {}), x, y, seed=5)
envelope = serving.build_envelope(model, selected, states, fit_minmax(x),
                                  training_seed=5)
path = Path(tempfile.mkdtemp(prefix="cornyield_demo_")) / "model.json"
serving.save_model(envelope, path)
print(f"model file: {path} ({path.stat().st_size} bytes)")

client = TestClient(serving.create_app(serving.load_model(path), bags_per_tonne=10.0))

request = {"state": "Enugu", **{k: v for k, v in ENUGU_RECORD.items() if k in selected}}
response = client.post("/predict", json=request).json()
print(f"\npredict: {response['yield_t_per_ha']:.3f} t/ha "
      f"= {response['yield_bags_per_ha']:.1f} bags/ha ({response['model_kind']})")

whatif = client.post("/whatif", json={
    "base": request,
    "perturbations": [{"field": "avg_precip_mm", "value": 13.5208333},
                      {"field": "silt_pct", "value": 27.1666667}],
}).json()
base = whatif[0]["yield_t_per_ha"]
print("\nwhat-if scenarios against that base:")
for entry, scenario in zip([None, "precipitation -> 13.5", "silt -> 27.2"], whatif):
    if entry is None:
        continue
    delta = scenario["yield_t_per_ha"] - base
    arrow = "up" if delta > 0 else ("down" if delta < 0 else "flat")
    print(f"  {entry:24s} {scenario['yield_t_per_ha']:.3f} t/ha ({arrow} {delta:+.3f})")

health = client.get("/health").json()
print(f"\nhealth: {health['status']}, kind={health['model_kind']}, "
      f"{len(health['states'])} states")
print("slider ranges:", json.dumps(
    {f["name"]: [round(f["min"], 2), round(f["max"], 2)]
     for f in health["features"][:3]}, indent=None), "...")
