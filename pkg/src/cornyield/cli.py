"""Command-line pipeline: each experiment is one subcommand over one
declarative JSON config.

Subcommands: preprocess, select, train, evaluate, perturb, predict, serve.
Every run is deterministic under a fixed config and seed; reruns produce
byte-identical CSV and model files (model timestamps honor
SOURCE_DATE_EPOCH, the reproducible-build convention). Seeds are mandatory
in the config: silent default randomness is how unreproducible results
happen. Set CORNYIELD_LOG=debug for verbose logging.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import dnnr, ensembles, feature_select, serving, timeseries, tuning_eval
from .metrics import arse
from .dataset import (
    SOIL_COLUMNS,
    STATE_COLUMN,
    TARGET_COLUMN,
    WEATHER_COLUMNS,
    Dataset,
    SmallholderScaleConfig,
    SplitSpec,
    VariableSchema,
    apply_minmax,
    aggregate_mean,
    clean,
    counts_from_ratio,
    fit_minmax,
    load_csv,
    merge,
    one_hot,
    onehot_block_names,
    read_schema,
    scale_to_smallholder,
    select_columns,
    split,
    write_csv,
)
from .errors import ConfigError, ToolkitError

log = logging.getLogger("cornyield")

MODEL_TAGS = ("dnnr16", "dnnr64", "rfr", "xgbr")
_TAG_KIND = {"dnnr16": "mlp", "dnnr64": "mlp", "rfr": "forest", "xgbr": "boost"}

DEFAULT_MODEL_PARAMS = {
    "dnnr16": {"hidden_width": 16, "hidden_depth": 3, "epochs": 60,
               "batch_size": 100, "learning_rate": 0.001, "optimizer": "adam"},
    "dnnr64": {"hidden_width": 64, "hidden_depth": 3, "epochs": 60,
               "batch_size": 100, "learning_rate": 0.001, "optimizer": "adam"},
    "rfr": {"n_estimators": 10, "max_depth": 10},
    "xgbr": {"n_estimators": 900, "max_depth": 10, "learning_rate": 0.1,
             "min_samples_split_fraction": 0.1, "subsample": 1.0},
}


# -- config -----------------------------------------------------------------

class PipelineConfig:
    """Validated view over the experiment's JSON config file. All relative
    paths resolve against the config file's own directory."""

    def __init__(self, doc: dict, base_dir: Path):
        self.doc = doc
        self.base = base_dir
        if "seed" not in doc:
            raise ConfigError("config must set 'seed'; implicit randomness is not allowed")
        self.seed = int(doc["seed"])
        self.out_dir = self.path(doc.get("out_dir", "out"), must_exist=False)
        self.bags_per_tonne = float(doc.get("bags_per_tonne",
                                            serving.DEFAULT_BAGS_PER_TONNE))
        self.forecast_steps = int(doc.get("forecast_steps", 6))
        self.fs_threshold = float(
            doc.get("feature_selection", {}).get(
                "threshold", feature_select.DEFAULT_SELECTION_THRESHOLD))

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {p} does not exist")
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {p} is not valid JSON: {exc}") from None
        return cls(doc, p.parent.resolve())

    def path(self, value: str, must_exist: bool = True) -> Path:
        p = Path(value)
        if not p.is_absolute():
            p = self.base / p
        if must_exist and not p.exists():
            raise ConfigError(f"configured path {p} does not exist")
        return p

    def data(self, key: str, required: bool = True):
        section = self.doc.get("data", {})
        if key not in section:
            if required:
                raise ConfigError(f"config is missing data.{key}")
            return None
        return section[key]

    def model_params(self, tag: str) -> dict:
        if tag not in MODEL_TAGS:
            raise ConfigError(f"unknown model tag {tag!r}; choose from {MODEL_TAGS}")
        params = dict(DEFAULT_MODEL_PARAMS[tag])
        params.update(self.doc.get("models", {}).get(tag, {}))
        return params

    def family(self, tag: str) -> tuning_eval.ModelFamily:
        return tuning_eval.ModelFamily(_TAG_KIND[tag], self.model_params(tag))

    def split_counts(self, n_rows: int) -> tuple[int, int, int]:
        section = self.doc.get("split")
        if not section:
            raise ConfigError("config is missing the 'split' section")
        if section.get("mode", "counts") == "ratio":
            return counts_from_ratio(n_rows, float(section["train"]),
                                     float(section["val"]), float(section["test"]))
        counts = (int(section["train"]), int(section["val"]), int(section["test"]))
        if sum(counts) != n_rows:
            raise ConfigError(
                f"split counts {counts} sum to {sum(counts)}, dataset has {n_rows} rows")
        return counts

    def smallholder(self, derived_o_t: float, derived_o_h: float) -> SmallholderScaleConfig:
        section = self.doc.get("smallholder")
        if not section or "E_y" not in section or "E_h" not in section:
            raise ConfigError("config must set smallholder.E_y and smallholder.E_h")
        o_t = section.get("O_t")
        o_h = section.get("O_h")
        return SmallholderScaleConfig(
            E_y=float(section["E_y"]), E_h=float(section["E_h"]),
            O_t=float(o_t) if o_t is not None else derived_o_t,
            O_h=float(o_h) if o_h is not None else derived_o_h)


def _created_at() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()
    return datetime.now(timezone.utc).isoformat()


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


# -- dataset assembly shared by train/evaluate/perturb -------------------------

def _load_modeling(cfg: PipelineConfig) -> Dataset:
    schema = read_schema(cfg.path(cfg.data("schema")))
    table = load_csv(cfg.path(cfg.data("modeling_csv")), schema)
    return clean(table)


def _selected_numerics(cfg: PipelineConfig, table: Dataset) -> tuple[list[str], feature_select.CorrelationReport]:
    report = feature_select.correlation_report(table, TARGET_COLUMN)
    selected = feature_select.select_features(report, cfg.fs_threshold)
    return selected, report


def _encode(table: Dataset, numerics: list[str]) -> tuple[Dataset, tuple[str, ...]]:
    """One-hot the state block, keep the chosen numerics plus the target."""
    states = table.levels[STATE_COLUMN]
    encoded = one_hot(table, STATE_COLUMN, states)
    keep = onehot_block_names(STATE_COLUMN, states) + list(numerics) + [TARGET_COLUMN]
    return select_columns(encoded, keep), states


def _ordered_matrix(table: Dataset, states, numerics) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix in the serving layout: one-hot block, then numerics."""
    cols = [table.column(n) for n in onehot_block_names(STATE_COLUMN, states)]
    cols += [table.column(n) for n in numerics]
    return np.column_stack(cols), table.target_vector()


def _split_encoded(cfg: PipelineConfig, encoded: Dataset):
    counts = cfg.split_counts(encoded.n_rows)
    return split(encoded, SplitSpec(*counts, seed=cfg.seed))


# -- subcommands -----------------------------------------------------------------

def cmd_preprocess(cfg: PipelineConfig) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)

    weather_schema = (
        (VariableSchema(STATE_COLUMN, "categorical"),
         VariableSchema("district", "categorical"))
        + tuple(VariableSchema(c, "numeric") for c in WEATHER_COLUMNS))
    soil_schema = (
        (VariableSchema(STATE_COLUMN, "categorical"),
         VariableSchema("district", "categorical"))
        + tuple(VariableSchema(c, "numeric") for c in SOIL_COLUMNS))

    weather_tables = [load_csv(cfg.path(p), weather_schema)
                      for p in cfg.data("weather_csvs")]
    soil_tables = [load_csv(cfg.path(p), soil_schema) for p in cfg.data("soil_csvs")]
    log.info("aggregating %d weather and %d soil tables",
             len(weather_tables), len(soil_tables))
    weather = aggregate_mean(weather_tables, (STATE_COLUMN, "district"))
    soil = aggregate_mean(soil_tables, (STATE_COLUMN, "district"))
    env_table = merge(weather, soil, (STATE_COLUMN, "district"))

    # extend the short yearly series before averaging them into one value
    yields = timeseries.read_long_series(cfg.path(cfg.data("yield_series_csv")))
    areas = timeseries.read_long_series(cfg.path(cfg.data("area_series_csv")))
    extended_rows = {"yield": [], "area": []}
    orders = {}
    state_yield = {}
    state_area = {}
    for label, source, rows_out, log_first in (
            ("yield", yields, extended_rows["yield"], False),
            ("area", areas, extended_rows["area"], True)):
        for state in sorted(source):
            years, series = source[state]
            fit_series = timeseries.log_series(series) if log_first else series
            order = timeseries.select_order(fit_series)
            model = timeseries.fit_arima(fit_series, order)
            future = timeseries.forecast(model, fit_series, cfg.forecast_steps)
            orders[f"{label}/{state}"] = [order.p, order.d, order.q]
            rows_out.extend((state, y, v, False) for y, v in zip(years, series.values))
            rows_out.extend((state, years[-1] + 1 + i, v, True)
                            for i, v in enumerate(future))
            mean_level = float(np.mean(np.concatenate([series.values, future])))
            (state_yield if label == "yield" else state_area)[state] = mean_level

    timeseries.write_long_series(out / "extended_yield_series.csv", extended_rows["yield"])
    timeseries.write_long_series(out / "extended_area_series.csv", extended_rows["area"])

    scale_cfg = cfg.smallholder(derived_o_t=max(state_yield.values()),
                                derived_o_h=max(state_area.values()))
    series_states = tuple(sorted(set(state_yield) & set(state_area)))
    state_rows = np.array([
        [float(i),
         scale_to_smallholder(state_area[s], scale_cfg, "hectare"),
         scale_to_smallholder(state_yield[s], scale_cfg, "yield")]
        for i, s in enumerate(series_states)])
    state_table = Dataset(
        (VariableSchema(STATE_COLUMN, "categorical"),
         VariableSchema("cultivation_area_ha", "numeric", "ha"),
         VariableSchema(TARGET_COLUMN, "target", "t/ha")),
        state_rows, series_states, {STATE_COLUMN: series_states})

    merged = merge(env_table, state_table, STATE_COLUMN)
    schema = read_schema(cfg.path(cfg.data("schema")))
    modeling = select_columns(merged, [s.name for s in schema])
    raw_rows = modeling.n_rows
    cleaned = clean(modeling)
    retained = sorted(set(cleaned.labels(STATE_COLUMN)))

    write_csv(cleaned, out / "modeling.csv")
    report = {
        "rows_before_clean": raw_rows,
        "rows_after_clean": cleaned.n_rows,
        "states_in_raw": len(set(env_table.labels(STATE_COLUMN))),
        "states_retained": len(retained),
        "retained_state_names": retained,
        "series_orders": orders,
        "scale": {"E_y": scale_cfg.E_y, "E_h": scale_cfg.E_h,
                  "O_t": scale_cfg.O_t, "O_h": scale_cfg.O_h},
    }
    (out / "preprocess_report.json").write_text(json.dumps(report, indent=1, sort_keys=True))
    print(f"preprocess: {raw_rows} rows -> {cleaned.n_rows} clean, "
          f"{len(retained)} states retained -> {out / 'modeling.csv'}")
    return 0


def cmd_select(cfg: PipelineConfig) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    table = _load_modeling(cfg)
    selected, report = _selected_numerics(cfg, table)
    feature_select.write_report_csv(report, out / "correlation_report.csv", selected)
    print(f"select: kept {len(selected)} of {len(report.names)} variables: "
          f"{', '.join(selected)}")
    return 0


def _fit_tagged_model(cfg: PipelineConfig, tag: str, x_train, y_train,
                      x_val=None, y_val=None):
    """Returns (fitted model, loss history or None). MLP members are fed
    min-max normalized features; the params ride along in the model."""
    params = cfg.model_params(tag)
    if _TAG_KIND[tag] == "mlp":
        norm = fit_minmax(x_train)
        arch = dnnr.MlpArchitecture(input_width=x_train.shape[1],
                                    hidden_depth=params.pop("hidden_depth", 3),
                                    hidden_width=params.pop("hidden_width", 64))
        train_cfg = dnnr.TrainConfig(seed=cfg.seed, **params)
        val = ((apply_minmax(norm, x_val), y_val)
               if x_val is not None and len(x_val) else None)
        model, history = dnnr.train(arch, train_cfg,
                                    (apply_minmax(norm, x_train), y_train),
                                    val, norm=norm)
        return model, history
    if _TAG_KIND[tag] == "forest":
        return ensembles.fit_forest((x_train, y_train),
                                    ensembles.ForestConfig(**params), cfg.seed), None
    return ensembles.fit_boost((x_train, y_train),
                               ensembles.BoostConfig(**params), cfg.seed), None


def cmd_train(cfg: PipelineConfig, tag: str, use_selection: bool = True) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    table = _load_modeling(cfg)
    if use_selection:
        numerics, _ = _selected_numerics(cfg, table)
    else:
        numerics = [s.name for s in table.schema if s.kind == "numeric"]
    encoded, states = _encode(table, numerics)
    train_set, val_set, _test_set = _split_encoded(cfg, encoded)

    x_train, y_train = _ordered_matrix(train_set, states, numerics)
    x_val, y_val = _ordered_matrix(val_set, states, numerics)
    model, history = _fit_tagged_model(cfg, tag, x_train, y_train, x_val, y_val)

    envelope = serving.build_envelope(
        model, feature_names=numerics, states=states,
        minmax=fit_minmax(x_train), training_seed=cfg.seed,
        created_at=_created_at())
    model_path = out / f"model_{tag}.json"
    serving.save_model(envelope, model_path)

    if history is not None:
        _write_rows(out / f"loss_history_{tag}.csv",
                    ["epoch", "train_mae", "val_mae"], history)
    train_report = {
        "tag": tag, "kind": _TAG_KIND[tag], "seed": cfg.seed,
        "rows": {"train": train_set.n_rows, "val": val_set.n_rows,
                 "test": _test_set.n_rows},
        "features": list(numerics), "states": len(states),
        "feature_selection": use_selection,
    }
    (out / f"train_report_{tag}.json").write_text(
        json.dumps(train_report, indent=1, sort_keys=True))
    print(f"train: {tag} -> {model_path}")
    return 0


def cmd_evaluate(cfg: PipelineConfig, model_path: str, tag: str,
                 with_bootstrap: bool = False, with_ablation: bool = False) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    envelope = serving.load_model(cfg.path(model_path))
    table = _load_modeling(cfg)
    numerics = list(envelope.feature_names)
    encoded, states = _encode(table, numerics)
    if tuple(states) != envelope.states:
        raise ConfigError("dataset states do not match the model envelope")
    train_set, _val_set, test_set = _split_encoded(cfg, encoded)
    x_test, y_test = _ordered_matrix(test_set, states, numerics)

    report = arse(envelope.predict(x_test), y_test)
    _write_rows(out / f"metrics_{tag}.csv",
                ["model", "split", "rmse", "mae", "arse", "n"],
                [[tag, "test", report.rmse, report.mae, report.arse, report.n]])
    print(f"evaluate: {tag} test rmse={report.rmse:.6g} mae={report.mae:.6g} "
          f"arse={report.arse:.6g}")

    if with_bootstrap:
        x_train, y_train = _ordered_matrix(train_set, states, numerics)
        run = tuning_eval.bootstrap_eval(cfg.family(tag), x_train, y_train,
                                         replicates=10, seed=cfg.seed, model_tag=tag)
        _write_rows(out / f"bootstrap_{tag}.csv",
                    ["replicate", "rmse", "mae", "arse", "n_oob"],
                    [[i, r.rmse, r.mae, r.arse, r.n]
                     for i, r in enumerate(run.reports)])
        print(f"evaluate: wrote bootstrap_{tag}.csv ({len(run.reports)} replicates)")

    if with_ablation:
        all_numerics = [s.name for s in table.schema if s.kind == "numeric"]
        enc_full, _ = _encode(table, all_numerics)
        full_train, _fv, full_test = _split_encoded(cfg, enc_full)
        result = tuning_eval.ablation_feature_selection(
            cfg.family(tag),
            _ordered_matrix(full_train, states, all_numerics),
            _ordered_matrix(full_test, states, all_numerics),
            (_ordered_matrix(train_set, states, numerics)),
            (_ordered_matrix(test_set, states, numerics)),
            seed=cfg.seed)
        rows = [["w/o-FS", tag, result["without_selection"].rmse,
                 result["without_selection"].mae, result["without_selection"].arse],
                ["w-FS", tag, result["with_selection"].rmse,
                 result["with_selection"].mae, result["with_selection"].arse]]
        _write_rows(out / f"ablation_{tag}.csv",
                    ["mode", "model", "rmse", "mae", "arse"], rows)
        print(f"evaluate: wrote ablation_{tag}.csv "
              f"(arse delta {result['delta_arse']:+.6g})")
    return 0


def cmd_perturb(cfg: PipelineConfig, model_path: str) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    envelope = serving.load_model(cfg.path(model_path))
    table = _load_modeling(cfg)
    report = feature_select.correlation_report(table, TARGET_COLUMN)
    taus = dict(zip(report.names, report.taus))

    cases = tuning_eval.base_cases() + tuning_eval.unforeseen_cases()
    rows = tuning_eval.single_point_eval(
        envelope.predict, cases, envelope.feature_names, envelope.states, taus)
    header = ["label", "perturbed_field", "predicted", "expected", "residual",
              "changed", "delta", "direction_expected_up", "direction_consistent"]
    csv_rows = [[r["label"], r["perturbed_field"], r["predicted"], r["expected"],
                 r["residual"], str(r["changed"]).lower(), r["delta"],
                 str(r.get("direction_expected_up", "")).lower(),
                 str(r.get("direction_consistent", "")).lower()]
                for r in rows]
    _write_rows(out / f"perturbation_{envelope.model_kind}.csv", header, csv_rows)
    print(f"perturb: {len(rows)} rows -> perturbation_{envelope.model_kind}.csv")
    return 0


def cmd_predict(model_path: str, input_spec: str,
                bags_per_tonne: float = serving.DEFAULT_BAGS_PER_TONNE) -> int:
    envelope = serving.load_model(model_path)
    if input_spec.startswith("@"):
        body = json.loads(Path(input_spec[1:]).read_text())
    else:
        body = json.loads(input_spec)
    state, record = serving.validated_record(body, envelope)
    response = serving.predict_record(envelope, state, record, bags_per_tonne)
    print(json.dumps(response, sort_keys=True))
    return 0


def cmd_serve(model_path: str, host: str, port: int, bags_per_tonne: float) -> int:
    import uvicorn

    envelope = serving.load_model(model_path)
    app = serving.create_app(envelope, bags_per_tonne)
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


# -- argument wiring ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cornyield",
        description="corn yield prediction pipeline: preprocessing, feature "
                    "selection, training, evaluation, and serving")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="experiment JSON config")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the config output directory")
        return p

    with_config(sub.add_parser("preprocess", help="raw corpus -> cleaned modeling CSV"))
    with_config(sub.add_parser("select", help="correlation report and selection CSV"))

    p_train = with_config(sub.add_parser("train", help="fit one model and persist it"))
    p_train.add_argument("--model", required=True, choices=MODEL_TAGS)
    p_train.add_argument("--no-feature-selection", action="store_true",
                         help="train on every numeric variable")

    p_eval = with_config(sub.add_parser("evaluate", help="test metrics and optional "
                                                         "bootstrap/ablation tables"))
    p_eval.add_argument("--model-file", required=True)
    p_eval.add_argument("--model", required=True, choices=MODEL_TAGS)
    p_eval.add_argument("--bootstrap", action="store_true")
    p_eval.add_argument("--ablation", action="store_true")

    p_perturb = with_config(sub.add_parser("perturb", help="single-point unseen/"
                                                           "unforeseen probe table"))
    p_perturb.add_argument("--model-file", required=True)

    p_predict = sub.add_parser("predict", help="one yield estimate to stdout")
    p_predict.add_argument("--model-file", required=True)
    p_predict.add_argument("--input", required=True,
                           help="request JSON, inline or @file")
    p_predict.add_argument("--bags-per-tonne", type=float,
                           default=serving.DEFAULT_BAGS_PER_TONNE)

    p_serve = sub.add_parser("serve", help="host the prediction HTTP service")
    p_serve.add_argument("--model-file", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--bags-per-tonne", type=float,
                         default=serving.DEFAULT_BAGS_PER_TONNE)
    return parser


def _config_from_args(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = int(args.seed)
    if args.out:
        cfg.out_dir = Path(args.out).resolve()
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("CORNYIELD_LOG", "warning").upper(),
                      logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "preprocess":
            return cmd_preprocess(_config_from_args(args))
        if args.command == "select":
            return cmd_select(_config_from_args(args))
        if args.command == "train":
            return cmd_train(_config_from_args(args), args.model,
                             use_selection=not args.no_feature_selection)
        if args.command == "evaluate":
            return cmd_evaluate(_config_from_args(args), args.model_file, args.model,
                                with_bootstrap=args.bootstrap,
                                with_ablation=args.ablation)
        if args.command == "perturb":
            return cmd_perturb(_config_from_args(args), args.model_file)
        if args.command == "predict":
            return cmd_predict(args.model_file, args.input, args.bags_per_tonne)
        if args.command == "serve":
            return cmd_serve(args.model_file, args.host, args.port,
                             args.bags_per_tonne)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ToolkitError, TypeError, ZeroDivisionError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
