import hashlib
import json

import pytest

from cornyield import simulate
from cornyield.cli import main

ENUGU_INPUT = {
    "state": "Enugu",
    "avg_min_temp_c": 21.69208848,
    "avg_precip_mm": 133.5208333,
    "avg_wind_ms": 1.498848967,
    "soil_ph": 5.466666667,
    "sand_pct": 59.83333333,
    "silt_pct": 10.1666667,
    "cultivation_area_ha": 0.545488917,
}


def file_hash(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Raw surrogate corpus plus a small-model config, preprocessed once."""
    root = tmp_path_factory.mktemp("cli")
    paths = simulate.write_raw_corpus(root / "raw", seed=2, districts_range=(6, 10))
    config = {
        "seed": 11,
        "out_dir": str(root / "out"),
        "data": {
            "weather_csvs": paths["weather"],
            "soil_csvs": paths["soil"],
            "yield_series_csv": paths["yield_series"],
            "area_series_csv": paths["area_series"],
            "schema": paths["modeling_schema"],
            "modeling_csv": str(root / "out" / "modeling.csv"),
        },
        "smallholder": {"E_y": 4.0, "E_h": 4.0},
        "split": {"mode": "ratio", "train": 0.8, "val": 0.1, "test": 0.1},
        "feature_selection": {"threshold": 0.07},
        "models": {
            "dnnr16": {"epochs": 8, "batch_size": 32},
            "xgbr": {"n_estimators": 40, "max_depth": 4},
            "rfr": {"n_estimators": 5, "max_depth": 6},
        },
        "bags_per_tonne": 10.0,
    }
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(config, indent=1))
    assert main(["preprocess", "--config", str(cfg_path)]) == 0
    return root, cfg_path


class TestPreprocess:
    def test_outputs_and_state_retention(self, workspace):
        root, cfg = workspace
        report = json.loads((root / "out" / "preprocess_report.json").read_text())
        assert report["states_in_raw"] == 36
        assert report["states_retained"] == 23
        assert report["rows_after_clean"] < report["rows_before_clean"]
        assert (root / "out" / "modeling.csv").exists()
        assert (root / "out" / "extended_yield_series.csv").exists()

    def test_rerun_is_byte_identical(self, workspace):
        root, cfg = workspace
        targets = ["modeling.csv", "preprocess_report.json",
                   "extended_yield_series.csv", "extended_area_series.csv"]
        before = {t: file_hash(root / "out" / t) for t in targets}
        assert main(["preprocess", "--config", str(cfg)]) == 0
        after = {t: file_hash(root / "out" / t) for t in targets}
        assert before == after

    def test_forecast_flags_present(self, workspace):
        root, _ = workspace
        lines = (root / "out" / "extended_yield_series.csv").read_text().splitlines()
        flags = {line.rsplit(",", 1)[-1] for line in lines[1:]}
        assert flags == {"true", "false"}


class TestSelect:
    def test_report_written_and_deterministic(self, workspace):
        root, cfg = workspace
        assert main(["select", "--config", str(cfg)]) == 0
        first = file_hash(root / "out" / "correlation_report.csv")
        assert main(["select", "--config", str(cfg)]) == 0
        assert file_hash(root / "out" / "correlation_report.csv") == first
        header, *rows = (root / "out" / "correlation_report.csv").read_text().splitlines()
        assert header == "variable,tau,rank,selected"
        assert len(rows) == 10  # every numeric variable is scored


@pytest.fixture(scope="module")
def trained(workspace):
    root, cfg = workspace
    assert main(["train", "--config", str(cfg), "--model", "rfr"]) == 0
    return root, cfg, root / "out" / "model_rfr.json"


class TestTrainEvaluatePerturb:
    def test_model_file_and_report(self, trained):
        root, _, model_path = trained
        assert model_path.exists()
        doc = json.loads(model_path.read_text())
        assert doc["model_kind"] == "forest"
        assert len(doc["states"]) == 23
        report = json.loads((root / "out" / "train_report_rfr.json").read_text())
        assert report["rows"]["train"] > report["rows"]["test"]

    def test_rerun_with_pinned_epoch_is_byte_identical(self, trained, monkeypatch):
        root, cfg, model_path = trained
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
        assert main(["train", "--config", str(cfg), "--model", "rfr"]) == 0
        first = file_hash(model_path)
        assert main(["train", "--config", str(cfg), "--model", "rfr"]) == 0
        assert file_hash(model_path) == first

    def test_dnnr_train_writes_loss_history(self, workspace):
        root, cfg = workspace
        assert main(["train", "--config", str(cfg), "--model", "dnnr16"]) == 0
        lines = (root / "out" / "loss_history_dnnr16.csv").read_text().splitlines()
        assert lines[0] == "epoch,train_mae,val_mae"
        assert len(lines) == 9  # 8 configured epochs

    def test_evaluate_writes_metrics_row(self, trained):
        root, cfg, model_path = trained
        assert main(["evaluate", "--config", str(cfg), "--model-file",
                     str(model_path), "--model", "rfr"]) == 0
        lines = (root / "out" / "metrics_rfr.csv").read_text().splitlines()
        assert lines[0] == "model,split,rmse,mae,arse,n"
        tag, split_name, rmse, mae, arse, n = lines[1].split(",")
        assert tag == "rfr" and split_name == "test"
        assert float(arse) == pytest.approx((float(rmse) + float(mae)) / 2)

    def test_evaluate_bootstrap_table(self, trained):
        root, cfg, model_path = trained
        assert main(["evaluate", "--config", str(cfg), "--model-file",
                     str(model_path), "--model", "rfr", "--bootstrap"]) == 0
        lines = (root / "out" / "bootstrap_rfr.csv").read_text().splitlines()
        assert len(lines) == 11  # header + 10 replicates

    def test_evaluate_ablation_table(self, trained):
        root, cfg, model_path = trained
        assert main(["evaluate", "--config", str(cfg), "--model-file",
                     str(model_path), "--model", "rfr", "--ablation"]) == 0
        lines = (root / "out" / "ablation_rfr.csv").read_text().splitlines()
        assert [line.split(",")[0] for line in lines] == ["mode", "w/o-FS", "w-FS"]

    def test_perturb_emits_two_base_and_four_unforeseen(self, trained):
        root, cfg, model_path = trained
        assert main(["perturb", "--config", str(cfg), "--model-file",
                     str(model_path)]) == 0
        lines = (root / "out" / "perturbation_forest.csv").read_text().splitlines()
        assert len(lines) == 7
        unperturbed = [line for line in lines[1:] if line.split(",")[1] == ""]
        assert len(unperturbed) == 2
        for line in lines[3:]:
            assert line.split(",")[7] in ("true", "false")  # direction flag

    def test_predict_repeatable_and_exact(self, trained, capsys):
        _, _, model_path = trained
        argv = ["predict", "--model-file", str(model_path),
                "--input", json.dumps(ENUGU_INPUT)]
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        assert capsys.readouterr().out == first
        body = json.loads(first)
        assert body["yield_bags_per_ha"] == body["yield_t_per_ha"] * 10.0

    def test_predict_missing_field_lists_it(self, trained, capsys):
        _, _, model_path = trained
        partial = dict(ENUGU_INPUT)
        del partial["soil_ph"]
        code = main(["predict", "--model-file", str(model_path),
                     "--input", json.dumps(partial)])
        assert code == 1
        err = capsys.readouterr().err
        assert err.startswith("error: MissingFieldError:")
        assert "soil_ph" in err


class TestErrors:
    def test_unknown_model_tag_is_usage_error(self, workspace, capsys):
        _, cfg = workspace
        with pytest.raises(SystemExit):
            main(["train", "--config", str(cfg), "--model", "mystery"])

    def test_missing_config(self, capsys):
        assert main(["select", "--config", "/nonexistent/config.json"]) == 1
        assert capsys.readouterr().err.startswith("error: ConfigError:")

    def test_seed_is_mandatory(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"out_dir": "out"}))
        assert main(["select", "--config", str(cfg)]) == 1
        assert "seed" in capsys.readouterr().err
