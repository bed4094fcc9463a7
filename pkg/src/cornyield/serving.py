"""Versioned model persistence and the HTTP prediction service.

A model file is one self-contained JSON document: kind, parameter tree,
feature order, state category list, and the training-time normalization,
so serving never reads training artifacts. Floats serialize via their
shortest round-trip form, which makes save -> load -> predict bit-identical
with the in-memory model.

The service hosts exactly one envelope, read-only after startup:
POST /predict for a single estimate, POST /whatif for a base record plus
single-field variations, GET /health for liveness and slider metadata.
Numeric inputs beyond the training range are served, not rejected; probing
out-of-distribution scenarios is the point of the what-if loop.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import dnnr, ensembles
from .dataset import MinMaxParams, apply_minmax
from .errors import (
    CorruptFileError,
    MissingFieldError,
    NonFiniteValueError,
    UnknownStateError,
    VersionMismatchError,
)

FORMAT_VERSION = 1
DEFAULT_BAGS_PER_TONNE = 10.0  # 100 kg bags

_KIND_OF_TYPE = {dnnr.MlpModel: "mlp", ensembles.ForestModel: "forest",
                 ensembles.BoostModel: "boost"}


@dataclass(frozen=True)
class ModelEnvelope:
    model_kind: str
    model: object                  # MlpModel | ForestModel | BoostModel
    feature_names: tuple           # numeric input names, in input order
    states: tuple                  # one-hot category order (block precedes numerics)
    minmax: MinMaxParams           # per-input-column training min/max (raw scale)
    normalize_inputs: bool         # True for mlp, False for tree models
    training_seed: int
    created_at: str
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        width = len(self.states) + len(self.feature_names)
        if self.minmax.min.size != width:
            raise ValueError(
                f"normalization covers {self.minmax.min.size} columns, input width is {width}")
        if _input_width(self.model) != width:
            raise ValueError(
                f"model expects {_input_width(self.model)} inputs, envelope declares {width}")

    @property
    def input_width(self) -> int:
        return len(self.states) + len(self.feature_names)

    def predict(self, rows) -> np.ndarray:
        """Raw assembled rows (one-hot block + numerics) to t/ha estimates."""
        x = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if self.normalize_inputs:
            x = apply_minmax(self.minmax, x)
        if self.model_kind == "forest":
            return ensembles.predict_forest(self.model, x)
        if self.model_kind == "boost":
            return ensembles.predict_boost(self.model, x)
        return dnnr.predict(self.model, x)


def _input_width(model) -> int:
    if isinstance(model, dnnr.MlpModel):
        return model.architecture.input_width
    probe = getattr(model, "trees")

    def max_feature(node) -> int:
        if node.is_leaf:
            return -1
        return max(node.feature, max_feature(node.left), max_feature(node.right))

    needed = max((max_feature(t) for t in probe), default=-1) + 1
    return needed  # trees only bound the width from below


def build_envelope(model, feature_names, states, minmax: MinMaxParams,
                   training_seed: int, created_at: str | None = None) -> ModelEnvelope:
    kind = _KIND_OF_TYPE.get(type(model))
    if kind is None:
        raise TypeError(f"unsupported model type {type(model)!r}")
    width = len(states) + len(feature_names)
    if isinstance(model, dnnr.MlpModel) and model.architecture.input_width != width:
        raise ValueError("feature/state lists do not match the network input width")
    return ModelEnvelope(
        model_kind=kind, model=model,
        feature_names=tuple(feature_names), states=tuple(states),
        minmax=minmax, normalize_inputs=(kind == "mlp"),
        training_seed=int(training_seed),
        created_at=created_at or datetime.now(timezone.utc).isoformat())


# ModelEnvelope validates width against the model; tree models only bound it
# from below, so the envelope's declared width is authoritative for them.
def _check_tree_width(model, width: int) -> None:
    if not isinstance(model, dnnr.MlpModel) and _input_width(model) > width:
        raise ValueError("a tree references a feature beyond the declared width")


# -- JSON round trip -----------------------------------------------------------

def _payload_of(env: ModelEnvelope) -> dict:
    m = env.model
    if env.model_kind == "mlp":
        return {
            "architecture": {
                "input_width": m.architecture.input_width,
                "hidden_depth": m.architecture.hidden_depth,
                "hidden_width": m.architecture.hidden_width,
                "activation": m.architecture.activation,
                "output_width": m.architecture.output_width,
            },
            "layers": [{"w": w.tolist(), "b": b.tolist()} for w, b in m.layers],
        }
    if env.model_kind == "forest":
        return {
            "config": {
                "n_estimators": m.config.n_estimators,
                "max_depth": m.config.max_depth,
                "min_samples_split": m.config.min_samples_split,
                "min_samples_leaf": m.config.min_samples_leaf,
                "bootstrap": m.config.bootstrap,
                "feature_subsample": m.config.feature_subsample,
            },
            "seed": m.seed,
            "trees": [ensembles.tree_to_dict(t) for t in m.trees],
        }
    return {
        "config": {
            "n_estimators": m.config.n_estimators,
            "max_depth": m.config.max_depth,
            "learning_rate": m.config.learning_rate,
            "min_samples_split_fraction": m.config.min_samples_split_fraction,
            "subsample": m.config.subsample,
            "reg_lambda": m.config.reg_lambda,
            "reg_alpha": m.config.reg_alpha,
            "objective": m.config.objective,
        },
        "seed": m.seed,
        "base_prediction": m.base_prediction,
        "trees": [ensembles.tree_to_dict(t) for t in m.trees],
    }


def _model_from_payload(kind: str, payload: dict, minmax: MinMaxParams):
    if kind == "mlp":
        arch = dnnr.MlpArchitecture(**payload["architecture"])
        layers = tuple((np.asarray(layer["w"], dtype=np.float64),
                        np.asarray(layer["b"], dtype=np.float64))
                       for layer in payload["layers"])
        return dnnr.MlpModel(layers, arch, norm=minmax)
    trees = tuple(ensembles.tree_from_dict(t) for t in payload["trees"])
    if kind == "forest":
        return ensembles.ForestModel(trees=trees, seed=int(payload["seed"]),
                                     config=ensembles.ForestConfig(**payload["config"]))
    if kind == "boost":
        return ensembles.BoostModel(trees=trees, seed=int(payload["seed"]),
                                    base_prediction=float(payload["base_prediction"]),
                                    config=ensembles.BoostConfig(**payload["config"]))
    raise VersionMismatchError(f"unknown model kind {kind!r}")


def envelope_to_json(env: ModelEnvelope) -> str:
    doc = {
        "format_version": env.format_version,
        "model_kind": env.model_kind,
        "feature_names": list(env.feature_names),
        "states": list(env.states),
        "minmax": {"min": env.minmax.min.tolist(), "max": env.minmax.max.tolist()},
        "normalize_inputs": env.normalize_inputs,
        "training_seed": env.training_seed,
        "created_at": env.created_at,
        "payload": _payload_of(env),
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def save_model(env: ModelEnvelope, path) -> None:
    Path(path).write_text(envelope_to_json(env), encoding="utf-8")


def load_model(path) -> ModelEnvelope:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptFileError(f"{path}: not a valid model file: {exc}") from None
    if not isinstance(doc, dict):
        raise CorruptFileError(f"{path}: expected a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: format_version {version!r}, "
                                   f"this build reads {FORMAT_VERSION}")
    try:
        minmax = MinMaxParams(min=np.asarray(doc["minmax"]["min"], dtype=np.float64),
                              max=np.asarray(doc["minmax"]["max"], dtype=np.float64))
        model = _model_from_payload(doc["model_kind"], doc["payload"], minmax)
        env = ModelEnvelope(
            model_kind=doc["model_kind"], model=model,
            feature_names=tuple(doc["feature_names"]), states=tuple(doc["states"]),
            minmax=minmax, normalize_inputs=bool(doc["normalize_inputs"]),
            training_seed=int(doc["training_seed"]),
            created_at=str(doc["created_at"]), format_version=int(version))
        _check_tree_width(model, env.input_width)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFileError(f"{path}: malformed model document: {exc}") from None
    return env


# -- request handling ------------------------------------------------------------

def validated_record(body: dict, env: ModelEnvelope) -> tuple[str, dict]:
    """Extract (state, numeric record) from a request body, or raise."""
    allowed = {"state", *env.feature_names}
    extras = set(body) - allowed
    if extras:
        raise ValueError(f"unexpected fields: {sorted(extras)}")
    if "state" not in body:
        raise MissingFieldError("missing field 'state'")
    state = body["state"]
    if not isinstance(state, str):
        raise ValueError("'state' must be a string")
    if state not in env.states:
        raise UnknownStateError(f"unknown state {state!r}")
    record = {}
    for name in env.feature_names:
        if name not in body:
            raise MissingFieldError(f"missing field {name!r}")
        value = body[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"field {name!r} must be a number")
        if not math.isfinite(value):
            raise NonFiniteValueError(f"field {name!r} is not finite")
        record[name] = float(value)
    return state, record


def predict_record(env: ModelEnvelope, state: str, record: dict,
                    bags_per_tonne: float) -> dict:
    row = np.zeros(env.input_width)
    row[env.states.index(state)] = 1.0
    for i, name in enumerate(env.feature_names):
        row[len(env.states) + i] = record[name]
    tonnes = float(env.predict(row[None, :])[0])
    return {
        "yield_t_per_ha": tonnes,
        "yield_bags_per_ha": tonnes * bags_per_tonne,
        "model_kind": env.model_kind,
        "format_version": env.format_version,
    }


def create_app(env: ModelEnvelope, bags_per_tonne: float = DEFAULT_BAGS_PER_TONNE):
    """FastAPI application around one immutable envelope."""
    from fastapi import Body, FastAPI
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse

    app = FastAPI(title="corn yield prediction service")
    # the what-if client is a static page served from elsewhere
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    started = time.monotonic()

    def error_response(exc: Exception) -> JSONResponse:
        if isinstance(exc, MissingFieldError):
            code = "MissingField"
        elif isinstance(exc, UnknownStateError):
            code = "UnknownState"
        elif isinstance(exc, NonFiniteValueError):
            code = "NonFiniteValue"
        else:
            return JSONResponse(status_code=422,
                                content={"error": "SchemaViolation", "detail": str(exc)})
        return JSONResponse(status_code=400, content={"error": code, "detail": str(exc)})

    @app.post("/predict")
    def predict(body: dict = Body(...)):
        try:
            state, record = validated_record(body, env)
        except Exception as exc:  # noqa: BLE001 - every failure maps to a status
            return error_response(exc)
        return predict_record(env, state, record, bags_per_tonne)

    @app.post("/whatif")
    def whatif(body: dict = Body(...)):
        extras = set(body) - {"base", "perturbations"}
        if extras or "base" not in body:
            return error_response(ValueError(
                f"expected fields 'base' and 'perturbations', got {sorted(body)}"))
        perturbations = body.get("perturbations", [])
        if not isinstance(perturbations, list):
            return error_response(ValueError("'perturbations' must be a list"))
        try:
            state, record = validated_record(body["base"], env)
        except Exception as exc:  # noqa: BLE001
            return error_response(exc)
        responses = [predict_record(env, state, record, bags_per_tonne)]
        for entry in perturbations:
            if not isinstance(entry, dict) or set(entry) != {"field", "value"}:
                return error_response(ValueError(
                    "each perturbation must be {'field': ..., 'value': ...}"))
            name = entry["field"]
            if name not in env.feature_names:
                return error_response(MissingFieldError(
                    f"perturbation field {name!r} is not a model input"))
            value = entry["value"]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                return error_response(ValueError(f"perturbation {name!r} must be a number"))
            if not math.isfinite(value):
                return error_response(NonFiniteValueError(
                    f"perturbation {name!r} is not finite"))
            varied = dict(record)
            varied[name] = float(value)
            responses.append(predict_record(env, state, varied, bags_per_tonne))
        return responses

    @app.get("/health")
    def health():
        offset = len(env.states)
        return {
            "status": "ok",
            "model_kind": env.model_kind,
            "format_version": env.format_version,
            "uptime_s": time.monotonic() - started,
            "bags_per_tonne": bags_per_tonne,
            "states": list(env.states),
            "features": [
                {"name": name,
                 "min": float(env.minmax.min[offset + i]),
                 "max": float(env.minmax.max[offset + i])}
                for i, name in enumerate(env.feature_names)
            ],
        }

    return app
