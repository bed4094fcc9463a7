"""Every pipeline stage as the CLI runs it, against one config file.

This is the reproduction recipe: a config names the inputs, the split, the
seed, and the model settings; each experiment is then one subcommand. Rerun
any stage with the same config and the outputs are byte-identical.

Run: python demos/07_full_cli_pipeline.py
"""
import json
import tempfile
from pathlib import Path

from cornyield import simulate
from cornyield.cli import main

work = Path(tempfile.mkdtemp(prefix="cornyield_demo_"))
paths = simulate.write_raw_corpus(work / "raw", seed=2, districts_range=(6, 10))

config = {
    "seed": 11,
    "out_dir": str(work / "out"),
    "data": {
        "weather_csvs": paths["weather"],
        "soil_csvs": paths["soil"],
        "yield_series_csv": paths["yield_series"],
        "area_series_csv": paths["area_series"],
        "schema": paths["modeling_schema"],
        "modeling_csv": str(work / "out" / "modeling.csv"),
    },
    "smallholder": {"E_y": 4.0, "E_h": 4.0},
    "split": {"mode": "ratio", "train": 0.8, "val": 0.1, "test": 0.1},
    "feature_selection": {"threshold": 0.07},
    "models": {"rfr": {"n_estimators": 10, "max_depth": 10},
               "dnnr16": {"epochs": 30, "batch_size": 50}},
    "bags_per_tonne": 10.0,
}
cfg = work / "config.json"
cfg.write_text(json.dumps(config, indent=1))
print(f"workspace: {work}\n")

for argv in (
    ["preprocess", "--config", str(cfg)],
    ["select", "--config", str(cfg)],
    ["train", "--config", str(cfg), "--model", "rfr"],
    ["train", "--config", str(cfg), "--model", "dnnr16"],
    ["evaluate", "--config", str(cfg),
     "--model-file", str(work / "out" / "model_rfr.json"), "--model", "rfr",
     "--bootstrap", "--ablation"],
    ["perturb", "--config", str(cfg),
     "--model-file", str(work / "out" / "model_dnnr16.json")],
    ["predict", "--model-file", str(work / "out" / "model_rfr.json"),
     "--input", json.dumps({
         "state": "Enugu", "avg_min_temp_c": 21.69208848,
         "avg_precip_mm": 133.5208333, "avg_wind_ms": 1.498848967,
         "soil_ph": 5.466666667, "sand_pct": 59.83333333,
         "silt_pct": 10.1666667, "cultivation_area_ha": 0.545488917})],
):
    print(f"$ cornyield {' '.join(argv[:1] + [a for a in argv[1:] if not a.startswith('/')])}")
    code = main(argv)
    assert code == 0, f"subcommand failed: {argv}"
    print()

print("outputs:")
for p in sorted((work / "out").iterdir()):
    print(f"  {p.name}")
