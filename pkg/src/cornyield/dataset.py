"""Column-typed tables: CSV ingestion, cleaning, aggregation, encoding,
splitting, and min-max normalization.

A Dataset couples a schema (name/kind/unit per column) with a float64 row
matrix. Categorical columns hold indices into a per-column level list until
one-hot expansion replaces them with binary indicator columns. Missing cells
are NaN; nothing is imputed, incomplete records are dropped by clean().

All types are frozen; every operation returns a new Dataset.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CountMismatchError,
    EmptyDatasetError,
    MalformedCsvError,
    SchemaMismatchError,
    UnknownCategoryError,
)

KINDS = ("numeric", "categorical", "target")

# Spelled values that mean "this cell is empty" in source CSVs.
_MISSING_TOKENS = {"", "na", "nan", "none", "null", "n/a"}

# Canonical modeling columns. The seven field-measurable explanatory
# variables plus the state categorical and the yield target; the wider raw
# corpus also carries the three weakly associated variables that selection
# usually drops (average/max temperature, clay).
STATE_COLUMN = "state"
TARGET_COLUMN = "yield_t_ha"
SELECTED_NUMERIC = (
    "avg_min_temp_c",
    "avg_precip_mm",
    "avg_wind_ms",
    "soil_ph",
    "sand_pct",
    "silt_pct",
    "cultivation_area_ha",
)
EXTRA_NUMERIC = ("avg_temp_c", "avg_max_temp_c", "clay_pct")

# Raw corpus layout: per-location weather extracts (one file per spatial
# resolution) and soil profiles (one file per sampling depth).
WEATHER_COLUMNS = ("avg_temp_c", "avg_min_temp_c", "avg_max_temp_c",
                   "avg_precip_mm", "avg_wind_ms")
SOIL_COLUMNS = ("soil_ph", "sand_pct", "silt_pct", "clay_pct")

# The 23 states left after removing those with incomplete records,
# lexicographic; this order freezes the one-hot column layout.
CANONICAL_STATES = (
    "Abia", "Abuja", "Akwa Ibom", "Anambra", "Bayelsa", "Benue",
    "Cross River", "Delta", "Ebonyi", "Edo", "Ekiti", "Enugu", "Imo",
    "Kebbi", "Kwara", "Lagos", "Ogun", "Ondo", "Osun", "Oyo", "Plateau",
    "Rivers", "Taraba",
)


@dataclass(frozen=True)
class VariableSchema:
    name: str
    kind: str
    unit: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown column kind {self.kind!r}")
        if not self.name:
            raise ValueError("column name must be non-empty")


def _check_schema(schema: Sequence[VariableSchema]) -> tuple[VariableSchema, ...]:
    names = [s.name for s in schema]
    if len(set(names)) != len(names):
        raise ValueError("duplicate column names in schema")
    # side tables (weather-only, soil-only) carry no target until merged;
    # more than one target is always a mistake
    if sum(1 for s in schema if s.kind == "target") > 1:
        raise ValueError("schema must declare at most one target column")
    return tuple(schema)


@dataclass(frozen=True)
class Dataset:
    schema: tuple[VariableSchema, ...]
    rows: np.ndarray                       # float64 (n_rows, n_columns)
    row_ids: tuple[str, ...]
    levels: dict = field(default_factory=dict)  # categorical name -> tuple of labels

    def __post_init__(self):
        object.__setattr__(self, "schema", _check_schema(self.schema))
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != len(self.schema):
            raise ValueError("row matrix width must equal schema length")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        if len(self.row_ids) != rows.shape[0]:
            raise ValueError("row_ids length must equal row count")

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        """Explanatory column count (everything except the target)."""
        return len(self.schema) - 1

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.schema]

    def index_of(self, name: str) -> int:
        for i, s in enumerate(self.schema):
            if s.name == name:
                return i
        raise KeyError(name)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.index_of(name)]

    def labels(self, name: str) -> list[str]:
        """String labels of a categorical column, per row."""
        lv = self.levels[name]
        return [lv[int(i)] for i in self.column(name)]

    def feature_matrix(self) -> np.ndarray:
        """All non-target columns; requires categoricals already expanded."""
        for s in self.schema:
            if s.kind == "categorical":
                raise ValueError(f"categorical column {s.name!r} not yet encoded")
        cols = [i for i, s in enumerate(self.schema) if s.kind != "target"]
        return self.rows[:, cols]

    def feature_names(self) -> list[str]:
        return [s.name for s in self.schema if s.kind != "target"]

    def target_vector(self) -> np.ndarray:
        idx = [i for i, s in enumerate(self.schema) if s.kind == "target"]
        if not idx:
            raise ValueError("dataset has no target column")
        return self.rows[:, idx[0]]

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.schema, self.rows[idx].copy(),
                       tuple(self.row_ids[i] for i in idx), dict(self.levels))


@dataclass(frozen=True)
class SplitSpec:
    train_count: int
    val_count: int
    test_count: int
    seed: int


@dataclass(frozen=True)
class MinMaxParams:
    min: np.ndarray
    max: np.ndarray
    fitted_on: str = "train_only"

    def __post_init__(self):
        mn = np.asarray(self.min, dtype=np.float64).ravel()
        mx = np.asarray(self.max, dtype=np.float64).ravel()
        if mn.shape != mx.shape:
            raise ValueError("min and max must have equal length")
        if np.any(mn > mx):
            raise ValueError("per-column min must not exceed max")
        mn.setflags(write=False)
        mx.setflags(write=False)
        object.__setattr__(self, "min", mn)
        object.__setattr__(self, "max", mx)


@dataclass(frozen=True)
class SmallholderScaleConfig:
    """Rescaling anchors: per-state aggregates are mapped down to what a
    smallholder plot can realistically produce."""
    E_y: float  # max expected smallholder yield, t/ha
    E_h: float  # max expected smallholder hectares
    O_t: float  # original per-state yield
    O_h: float  # original per-state hectares


# -- CSV ingestion -----------------------------------------------------------

def read_schema(path) -> tuple[VariableSchema, ...]:
    """Schema file: CSV with header name,kind,unit."""
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["name", "kind", "unit"]:
            raise MalformedCsvError(f"schema file {path}: expected header name,kind,unit")
        entries = [VariableSchema(r["name"].strip(), r["kind"].strip(), r["unit"].strip())
                   for r in reader]
    return _check_schema(entries)


def write_schema(schema: Sequence[VariableSchema], path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "kind", "unit"])
        for s in schema:
            writer.writerow([s.name, s.kind, s.unit])


def load_csv(path, schema: Sequence[VariableSchema],
             id_columns: Sequence[str] = ("state", "district")) -> Dataset:
    """Parse a comma-delimited UTF-8 CSV whose header matches the schema.

    Numeric and target cells parse as float64; empty or NA-spelled cells
    become the NaN sentinel (dropped later by clean, never imputed).
    Categorical cells are collected into a sorted level list per column.
    Row ids join whichever of id_columns exist in the schema.
    """
    schema = _check_schema(schema)
    expected = [s.name for s in schema]
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsvError(f"{path}: empty file") from None
        if [h.strip() for h in header] != expected:
            raise MalformedCsvError(
                f"{path}: header {header} does not match schema {expected}")
        raw_rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise MalformedCsvError(
                    f"{path}:{lineno}: expected {len(expected)} cells, got {len(row)}")
            raw_rows.append([c.strip() for c in row])

    n = len(raw_rows)
    matrix = np.full((n, len(schema)), np.nan, dtype=np.float64)
    levels: dict[str, tuple[str, ...]] = {}

    for j, spec in enumerate(schema):
        cells = [r[j] for r in raw_rows]
        if spec.kind == "categorical":
            present = sorted({c for c in cells if c.lower() not in _MISSING_TOKENS})
            level_index = {label: k for k, label in enumerate(present)}
            levels[spec.name] = tuple(present)
            for i, c in enumerate(cells):
                if c.lower() in _MISSING_TOKENS:
                    continue
                matrix[i, j] = level_index[c]
        else:
            for i, c in enumerate(cells):
                if c.lower() in _MISSING_TOKENS:
                    continue
                try:
                    matrix[i, j] = float(c)
                except ValueError:
                    raise TypeError(
                        f"{path}: non-numeric value {c!r} in numeric column "
                        f"{spec.name!r} (row {i + 2})") from None

    ids = _build_row_ids(schema, raw_rows, id_columns)
    return Dataset(schema, matrix, ids, levels)


def _build_row_ids(schema, raw_rows, id_columns) -> tuple[str, ...]:
    idx = [i for i, s in enumerate(schema) if s.name in id_columns]
    if not idx:
        return tuple(str(i) for i in range(len(raw_rows)))
    return tuple("/".join(row[i] for i in idx) for row in raw_rows)


def write_csv(d: Dataset, path) -> None:
    """Audit output: categorical columns written back as labels, numerics
    via repr so a rerun is byte-identical."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(d.names)
        cat = {s.name for s in d.schema if s.kind == "categorical"}
        for i in range(d.n_rows):
            out = []
            for j, s in enumerate(d.schema):
                v = d.rows[i, j]
                if s.name in cat:
                    out.append("" if np.isnan(v) else d.levels[s.name][int(v)])
                else:
                    out.append("" if np.isnan(v) else repr(float(v)))
            writer.writerow(out)


# -- row operations ----------------------------------------------------------

def clean(d: Dataset) -> Dataset:
    """Drop rows holding any missing sentinel, then exact duplicate rows
    (first occurrence wins). Idempotent; row order otherwise preserved."""
    complete = ~np.isnan(d.rows).any(axis=1)
    keep: list[int] = []
    seen: set[bytes] = set()
    for i in np.flatnonzero(complete):
        key = d.rows[i].tobytes()
        if key in seen:
            continue
        seen.add(key)
        keep.append(int(i))
    if not keep:
        raise EmptyDatasetError("cleaning removed every row")
    return d.take(keep)


def aggregate_mean(tables: Sequence[Dataset], key: str | Sequence[str]) -> Dataset:
    """Per-key mean of every numeric column across a list of same-schema
    tables (e.g. one weather table per spatial resolution, one soil table
    per sampling depth).

    Key columns must be categorical and cover every categorical column, and
    each table must carry exactly the key values of the first table. Missing
    cells stay missing: NaN in any contributing cell makes the mean NaN.
    """
    if not tables:
        raise SchemaMismatchError("no tables to aggregate")
    key_names = (key,) if isinstance(key, str) else tuple(key)
    first = tables[0]
    for t in tables[1:]:
        if t.schema != first.schema:
            raise SchemaMismatchError("tables do not share a schema")
        for name in key_names:
            if t.levels.get(name) != first.levels.get(name):
                raise SchemaMismatchError(f"key column {name!r} levels differ")
    cat_names = {s.name for s in first.schema if s.kind == "categorical"}
    if not set(key_names) <= cat_names:
        raise ValueError("key columns must be categorical")
    if cat_names - set(key_names):
        raise ValueError("every categorical column must be part of the key")

    key_idx = [first.index_of(n) for n in key_names]

    def key_of(t: Dataset, i: int) -> tuple:
        return tuple(t.rows[i, j] for j in key_idx)

    order: list[tuple] = []
    seen: set[tuple] = set()
    for i in range(first.n_rows):
        k = key_of(first, i)
        if k not in seen:
            seen.add(k)
            order.append(k)

    groups: dict[tuple, list[np.ndarray]] = {k: [] for k in order}
    for t in tables:
        covered = set()
        for i in range(t.n_rows):
            k = key_of(t, i)
            if k not in groups:
                raise SchemaMismatchError(f"key {k} absent from first table")
            groups[k].append(t.rows[i])
            covered.add(k)
        if covered != seen:
            raise SchemaMismatchError("key values do not align across tables")

    out = np.empty((len(order), len(first.schema)), dtype=np.float64)
    ids = []
    id_by_key = {key_of(first, i): first.row_ids[i] for i in range(first.n_rows)}
    for r, k in enumerate(order):
        stack = np.vstack(groups[k])
        for j, spec in enumerate(first.schema):
            if spec.name in key_names:
                out[r, j] = k[key_idx.index(first.index_of(spec.name))]
            else:
                out[r, j] = np.mean(stack[:, j])
        ids.append(id_by_key[k])
    return Dataset(first.schema, out, tuple(ids), dict(first.levels))


def merge(left: Dataset, right: Dataset, key: str | Sequence[str]) -> Dataset:
    """Left-outer join: append the right table's non-key columns to every
    left row, keyed on shared categorical columns. Left keys absent from the
    right produce NaN cells, so a later clean() reveals and drops them.

    The right table must have at most one row per key. At most one of the
    two tables may declare a target column (checked by schema assembly).
    """
    key_names = (key,) if isinstance(key, str) else tuple(key)
    for name in key_names:
        if left.levels.get(name) is None or right.levels.get(name) is None:
            raise SchemaMismatchError(f"key column {name!r} must be categorical in both tables")

    right_extra = [s for s in right.schema if s.name not in key_names]
    for s in right_extra:
        if s.name in {c.name for c in left.schema}:
            raise SchemaMismatchError(f"column {s.name!r} present in both tables")
        if s.kind == "categorical":
            raise SchemaMismatchError("merge only appends numeric/target columns")

    left_has_target = any(s.kind == "target" for s in left.schema)
    if left_has_target and any(s.kind == "target" for s in right_extra):
        raise SchemaMismatchError("both tables declare a target column")
    schema = list(left.schema) + list(right_extra)

    # label-keyed lookup: level indices differ between tables
    def label_key(t: Dataset, i: int) -> tuple[str, ...]:
        return tuple(t.levels[n][int(t.rows[i, t.index_of(n)])]
                     if not np.isnan(t.rows[i, t.index_of(n)]) else ""
                     for n in key_names)

    right_rows: dict[tuple, np.ndarray] = {}
    right_idx = [right.index_of(s.name) for s in right_extra]
    for i in range(right.n_rows):
        k = label_key(right, i)
        if k in right_rows:
            raise SchemaMismatchError(f"right table has duplicate key {k}")
        right_rows[k] = right.rows[i, right_idx]

    out = np.full((left.n_rows, len(schema)), np.nan, dtype=np.float64)
    out[:, :len(left.schema)] = left.rows
    for i in range(left.n_rows):
        hit = right_rows.get(label_key(left, i))
        if hit is not None:
            out[i, len(left.schema):] = hit
    return Dataset(tuple(schema), out, left.row_ids, dict(left.levels))


def select_columns(d: Dataset, names: Iterable[str]) -> Dataset:
    """Keep the named columns (plus nothing else), in original schema order."""
    wanted = set(names)
    idx = [i for i, s in enumerate(d.schema) if s.name in wanted]
    missing = wanted - {d.schema[i].name for i in idx}
    if missing:
        raise KeyError(f"unknown columns: {sorted(missing)}")
    schema = tuple(d.schema[i] for i in idx)
    levels = {s.name: d.levels[s.name] for s in schema if s.kind == "categorical"}
    return Dataset(schema, d.rows[:, idx].copy(), d.row_ids, levels)


def scale_to_smallholder(value: float, cfg: SmallholderScaleConfig, which: str) -> float:
    """Map a per-state aggregate onto the smallholder range: the value's
    share of the state aggregate times the maximum a smallholder expects."""
    if which == "yield":
        if cfg.O_t == 0:
            raise ZeroDivisionError("original per-state yield is zero")
        return (value / cfg.O_t) * cfg.E_y
    if which == "hectare":
        if cfg.O_h == 0:
            raise ZeroDivisionError("original per-state hectares is zero")
        return (value / cfg.O_h) * cfg.E_h
    raise ValueError(f"which must be 'yield' or 'hectare', got {which!r}")


def one_hot(d: Dataset, column: str, categories: Sequence[str]) -> Dataset:
    """Replace a categorical column with |categories| indicator columns
    (named column=label), in the given category order. Every observed label
    must appear in the list; a missing cell poisons its whole block with NaN
    so clean() drops the row."""
    col_idx = d.index_of(column)
    if d.schema[col_idx].kind != "categorical":
        raise ValueError(f"{column!r} is not categorical")
    cats = list(categories)
    pos = {c: k for k, c in enumerate(cats)}
    observed = d.levels[column]
    for label in observed:
        if label not in pos:
            raise UnknownCategoryError(f"{column}={label!r} not in category list")

    block = np.zeros((d.n_rows, len(cats)), dtype=np.float64)
    raw = d.rows[:, col_idx]
    for i in range(d.n_rows):
        if np.isnan(raw[i]):
            block[i, :] = np.nan
        else:
            block[i, pos[observed[int(raw[i])]]] = 1.0

    schema = (d.schema[:col_idx]
              + tuple(VariableSchema(f"{column}={c}", "numeric") for c in cats)
              + d.schema[col_idx + 1:])
    rows = np.hstack([d.rows[:, :col_idx], block, d.rows[:, col_idx + 1:]])
    levels = {k: v for k, v in d.levels.items() if k != column}
    return Dataset(schema, rows, d.row_ids, levels)


def onehot_block_names(column: str, categories: Sequence[str]) -> list[str]:
    return [f"{column}={c}" for c in categories]


# -- splitting and normalization ----------------------------------------------

def split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministic shuffle by seed, then partition into train/val/test."""
    total = spec.train_count + spec.val_count + spec.test_count
    if total != d.n_rows:
        raise CountMismatchError(
            f"split counts sum to {total} but dataset has {d.n_rows} rows")
    perm = np.random.Generator(np.random.PCG64(spec.seed)).permutation(d.n_rows)
    a = spec.train_count
    b = a + spec.val_count
    return d.take(perm[:a]), d.take(perm[a:b]), d.take(perm[b:])


def counts_from_ratio(n: int, train: float, val: float, test: float) -> tuple[int, int, int]:
    """Ratio mode: largest-remainder rounding so the counts always sum to n."""
    total = train + val + test
    shares = [train / total * n, val / total * n, test / total * n]
    counts = [int(np.floor(s)) for s in shares]
    rem = n - sum(counts)
    order = sorted(range(3), key=lambda i: shares[i] - counts[i], reverse=True)
    for i in range(rem):
        counts[order[i % 3]] += 1
    return counts[0], counts[1], counts[2]


def encode_features(d: Dataset, numerics: Sequence[str] | None = None):
    """Standard model-input encoding: one-hot state block first, then the
    chosen numeric columns (all of them by default), target last.

    Returns (features, target, states, numeric names). This is the layout
    every trained model and every serving envelope assumes.
    """
    states = d.levels[STATE_COLUMN]
    if numerics is None:
        numerics = [s.name for s in d.schema if s.kind == "numeric"]
    encoded = one_hot(d, STATE_COLUMN, states)
    cols = [encoded.column(n) for n in onehot_block_names(STATE_COLUMN, states)]
    cols += [encoded.column(n) for n in numerics]
    return np.column_stack(cols), encoded.target_vector(), states, list(numerics)


def fit_minmax(train) -> MinMaxParams:
    """Per-column min/max over the training features only; reused verbatim
    for validation, test, and serving so no statistic leaks out of train."""
    x = train.feature_matrix() if isinstance(train, Dataset) else np.asarray(train, dtype=np.float64)
    return MinMaxParams(min=x.min(axis=0), max=x.max(axis=0))


def apply_minmax(params: MinMaxParams, rows) -> np.ndarray:
    """(x - min) / (max - min) per column; constant columns map to 0.0.
    Out-of-range inputs pass through unclamped (values beyond the training
    range map outside [0, 1]), which the generalization probes rely on."""
    x = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    span = params.max - params.min
    safe = np.where(span == 0.0, 1.0, span)
    out = (x - params.min) / safe
    out[:, span == 0.0] = 0.0
    return out if np.asarray(rows).ndim == 2 else out[0]


def invert_minmax(params: MinMaxParams, rows) -> np.ndarray:
    """Inverse transform; constant columns recover their single value."""
    x = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    span = params.max - params.min
    out = x * span + params.min
    return out if np.asarray(rows).ndim == 2 else out[0]
