"""Model-selection and generalization harnesses: exhaustive grid search over
k-fold cross-validation, bootstrap out-of-bag error distributions, the
single-point unseen/unforeseen probes, and the feature-selection ablation.

A ModelFamily names one of the three regressor kinds plus its constructor
parameters; the harnesses stay agnostic of what they train. MLP members fit
their own min-max normalization on each fold's training rows (never on held
out rows) and carry it, so every family exposes the same raw-row predict.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from . import dnnr, ensembles
from .dataset import apply_minmax, fit_minmax
from .errors import (
    DegenerateResampleError,
    MissingFieldError,
    TooFewRowsError,
    ToolkitError,
)
from .metrics import arse


@dataclass(frozen=True)
class ModelFamily:
    kind: str      # "mlp" | "forest" | "boost"
    params: dict   # constructor keywords for the kind's config

    def __post_init__(self):
        if self.kind not in ("mlp", "forest", "boost"):
            raise ValueError(f"unknown model kind {self.kind!r}")

    def with_params(self, **overrides) -> "ModelFamily":
        merged = dict(self.params)
        merged.update(overrides)
        return ModelFamily(self.kind, merged)


@dataclass(frozen=True)
class GridSpec:
    values: dict           # parameter name -> candidate list
    scoring: str = "mae"
    folds: int = 10

    def __post_init__(self):
        if not self.values or any(len(v) == 0 for v in self.values.values()):
            raise ValueError("every grid dimension needs at least one candidate")
        if self.scoring != "mae":
            raise ValueError("grid search scores by mae")

    def combinations(self) -> list[dict]:
        keys = list(self.values)
        return [dict(zip(keys, combo))
                for combo in itertools.product(*(self.values[k] for k in keys))]


@dataclass(frozen=True)
class EvalRun:
    model_tag: str
    reports: tuple
    mode: str   # "kfold" | "bootstrap"
    seed: int


@dataclass(frozen=True)
class PerturbationCase:
    label: str                 # state name; also drives the one-hot block
    base: dict                 # numeric feature name -> value
    perturbed: tuple           # ((field, new value), ...)
    expected: float            # t/ha for the unperturbed record

    def __post_init__(self):
        for name, _ in self.perturbed:
            if name not in self.base:
                raise MissingFieldError(f"perturbed field {name!r} not in base record")


# -- family fit/predict ---------------------------------------------------------

def fit_family(family: ModelFamily, x: np.ndarray, y: np.ndarray, seed: int):
    """Train one member of the family on raw (unnormalized) rows."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if family.kind == "forest":
        return ensembles.fit_forest((x, y), ensembles.ForestConfig(**family.params), seed)
    if family.kind == "boost":
        return ensembles.fit_boost((x, y), ensembles.BoostConfig(**family.params), seed)
    params = dict(family.params)
    arch = dnnr.MlpArchitecture(
        input_width=x.shape[1],
        hidden_depth=params.pop("hidden_depth", 3),
        hidden_width=params.pop("hidden_width", 64))
    cfg = dnnr.TrainConfig(seed=seed, **params)
    norm = fit_minmax(x)
    model, _ = dnnr.train(arch, cfg, (apply_minmax(norm, x), y), norm=norm)
    return model


def predict_any(model, rows) -> np.ndarray:
    """Raw-row predictions for any fitted model kind."""
    x = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if isinstance(model, ensembles.ForestModel):
        return ensembles.predict_forest(model, x)
    if isinstance(model, ensembles.BoostModel):
        return ensembles.predict_boost(model, x)
    if isinstance(model, dnnr.MlpModel):
        if model.norm is not None:
            x = apply_minmax(model.norm, x)
        return dnnr.predict(model, x)
    raise TypeError(f"not a fitted model: {type(model)!r}")


# -- cross-validation and search --------------------------------------------------

def kfold_cv(family: ModelFamily, x, y, k: int, seed: int,
             model_tag: str = "") -> EvalRun:
    """Deterministic shuffle, k near-equal folds, each held out once."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n = x.shape[0]
    if k < 2 or k > n:
        raise TooFewRowsError(f"k must be in [2, {n}], got {k}")
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    folds = np.array_split(perm, k)
    child_seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(k)]
    reports = []
    for i, hold in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        model = fit_family(family, x[train_idx], y[train_idx], child_seeds[i])
        reports.append(arse(predict_any(model, x[hold]), y[hold]))
    return EvalRun(model_tag=model_tag or family.kind, reports=tuple(reports),
                   mode="kfold", seed=seed)


def grid_search(family: ModelFamily, grid: GridSpec, x, y, seed: int):
    """Score every parameter combination by mean k-fold MAE.

    Returns (best combination dict, table). Table rows are
    (combination, mean_mae, failed); a cell whose training raises a toolkit
    error is marked failed and skipped, not fatal. Ties keep the earliest
    combination in declared grid order.
    """
    table = []
    best = None
    best_score = np.inf
    for combo in grid.combinations():
        try:
            run = kfold_cv(family.with_params(**combo), x, y, grid.folds, seed)
            score = float(np.mean([r.mae for r in run.reports]))
            failed = False
        except ToolkitError:
            score, failed = float("nan"), True
        table.append((combo, score, failed))
        if not failed and score < best_score:
            best, best_score = combo, score
    if best is None:
        raise ToolkitError("every grid cell failed")
    return best, table


def bootstrap_eval(family: ModelFamily, x, y, replicates: int = 10,
                   seed: int = 0, model_tag: str = "") -> EvalRun:
    """Resample the training set with replacement, train, score on the rows
    the resample missed. The replicate errors are the data behind the
    training-error violin summaries."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n = x.shape[0]
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    streams = iter(np.random.SeedSequence(seed).spawn(replicates * 6))
    reports = []
    for _ in range(replicates):
        oob = np.empty(0, dtype=np.intp)
        idx = child = None
        for _attempt in range(6):  # first draw plus up to 5 retries
            child = next(streams)
            rng = np.random.Generator(np.random.PCG64(child))
            idx = rng.integers(0, n, size=n)
            oob = np.setdiff1d(np.arange(n), idx)
            if oob.size > 0:
                break
        if oob.size == 0:
            raise DegenerateResampleError("no out-of-bag rows after 5 retries")
        model = fit_family(family, x[idx], y[idx], int(child.generate_state(1)[0]))
        reports.append(arse(predict_any(model, x[oob]), y[oob]))
    return EvalRun(model_tag=model_tag or family.kind, reports=tuple(reports),
                   mode="bootstrap", seed=seed)


# -- single-point generalization probes --------------------------------------------

# Field-measured records for two test states at opposite ends of the
# country, with their recorded yields, and the four abrupt single-variable
# shifts probed against them (precipitation slashed, silt raised).
ENUGU_RECORD = {
    "avg_min_temp_c": 21.69208848,
    "avg_precip_mm": 133.5208333,
    "avg_wind_ms": 1.498848967,
    "soil_ph": 5.466666667,
    "sand_pct": 59.83333333,
    "silt_pct": 10.1666667,
    "cultivation_area_ha": 0.545488917,
}
ENUGU_EXPECTED = 0.709388681
PLATEAU_RECORD = {
    "avg_min_temp_c": 16.68546347,
    "avg_precip_mm": 99.125,
    "avg_wind_ms": 2.417177081,
    "soil_ph": 5.566666667,
    "sand_pct": 35.5,
    "silt_pct": 27.33333333,
    "cultivation_area_ha": 1.686767501,
}
PLATEAU_EXPECTED = 2.60302342


def base_cases() -> list[PerturbationCase]:
    """The two unperturbed single-point records (unseen-sample check)."""
    return [
        PerturbationCase("Enugu", dict(ENUGU_RECORD), (), ENUGU_EXPECTED),
        PerturbationCase("Plateau", dict(PLATEAU_RECORD), (), PLATEAU_EXPECTED),
    ]


def unforeseen_cases() -> list[PerturbationCase]:
    """The four abrupt one-variable shifts (unforeseen-sample check)."""
    return [
        PerturbationCase("Enugu", dict(ENUGU_RECORD),
                         (("avg_precip_mm", 13.5208333),), ENUGU_EXPECTED),
        PerturbationCase("Enugu", dict(ENUGU_RECORD),
                         (("silt_pct", 27.1666667),), ENUGU_EXPECTED),
        PerturbationCase("Plateau", dict(PLATEAU_RECORD),
                         (("avg_precip_mm", 9.125),), PLATEAU_EXPECTED),
        PerturbationCase("Plateau", dict(PLATEAU_RECORD),
                         (("silt_pct", 50.33333333),), PLATEAU_EXPECTED),
    ]


def assemble_row(record: Mapping[str, float], state: str,
                 numeric_names: Sequence[str], states: Sequence[str]) -> np.ndarray:
    """Build a model input row: one-hot state block, then numerics in order."""
    if state not in states:
        raise MissingFieldError(f"state {state!r} not in the model's category list")
    row = np.zeros(len(states) + len(numeric_names))
    row[list(states).index(state)] = 1.0
    for i, name in enumerate(numeric_names):
        if name not in record:
            raise MissingFieldError(f"record is missing field {name!r}")
        row[len(states) + i] = float(record[name])
    return row


def single_point_eval(predict_fn: Callable, cases: Sequence[PerturbationCase],
                      numeric_names: Sequence[str], states: Sequence[str],
                      taus: Mapping[str, float] | None = None) -> list[dict]:
    """Evaluate each case and its perturbed variant identically.

    Residuals compare against the recorded unperturbed yield (the true
    yield under an abrupt shift is unknowable). For perturbed cases the row
    also carries the prediction delta and, when a tau map is given, whether
    the delta's direction agrees with the variable's correlation sign.
    """
    rows = []
    for case in cases:
        base_row = assemble_row(case.base, case.label, numeric_names, states)
        base_pred = float(predict_fn(base_row[None, :])[0])
        record = dict(case.base)
        for name, value in case.perturbed:
            record[name] = value
        pred = (float(predict_fn(assemble_row(record, case.label, numeric_names,
                                              states)[None, :])[0])
                if case.perturbed else base_pred)
        row = {
            "label": case.label,
            "perturbed_field": case.perturbed[0][0] if case.perturbed else "",
            "predicted": pred,
            "expected": case.expected,
            "residual": abs(pred - case.expected),
            "changed": pred != base_pred,
            "delta": pred - base_pred,
        }
        if case.perturbed and taus is not None:
            name, new_value = case.perturbed[0]
            move = np.sign(new_value - case.base[name]) * np.sign(taus.get(name, 0.0))
            row["direction_expected_up"] = bool(move > 0)
            row["direction_consistent"] = bool(
                (row["delta"] > 0) == (move > 0)) if row["delta"] != 0 else False
        rows.append(row)
    return rows


def ablation_feature_selection(family: ModelFamily, full_train, full_test,
                               selected_train, selected_test, seed: int) -> dict:
    """Train the same family twice with one seed: once on the full feature
    set, once on the selected subset; report both and the deltas."""
    model_full = fit_family(family, full_train[0], full_train[1], seed)
    model_sel = fit_family(family, selected_train[0], selected_train[1], seed)
    report_full = arse(predict_any(model_full, full_test[0]), full_test[1])
    report_sel = arse(predict_any(model_sel, selected_test[0]), selected_test[1])
    return {
        "without_selection": report_full,
        "with_selection": report_sel,
        "delta_rmse": report_full.rmse - report_sel.rmse,
        "delta_mae": report_full.mae - report_sel.mae,
        "delta_arse": report_full.arse - report_sel.arse,
    }
