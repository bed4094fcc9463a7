"""Deterministic synthetic surrogate of the environmental corpus.

The real per-location extracts (WorldClim-style weather grids, AfSIS-style
soil profiles, national yield/area series) are not redistributable with the
package, so pipelines, demos, and tests run against this generator instead.
It reproduces the corpus *shape*, not its numbers:

- 36 states, of which only the canonical 23 have yield/area series; the
  rest surface as missing cells after the merge and get cleaned away.
- district-level weather/soil readings, one table per spatial resolution
  (4) and per soil depth (9), averaged during preprocessing.
- state-level yearly yield and cultivation-area series (12 years), to be
  extended by forecasting before averaging.
- association signs chosen to mirror the field data: cultivation area and
  silt pull yield up, precipitation and sand pull it down, pH/wind help
  mildly, minimum temperature hurts mildly, and average/max temperature
  and clay are near-noise (so selection drops them).

Everything derives from one seed; identical seeds give identical files.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset import (
    CANONICAL_STATES,
    SOIL_COLUMNS,
    STATE_COLUMN,
    TARGET_COLUMN,
    WEATHER_COLUMNS,
    Dataset,
    VariableSchema,
    write_schema,
)
from .timeseries import write_long_series

EXTRA_STATES = (
    "Adamawa", "Bauchi", "Borno", "Gombe", "Jigawa", "Kaduna", "Kano",
    "Katsina", "Kogi", "Nasarawa", "Niger", "Sokoto", "Yobe",
)
ALL_STATES = tuple(sorted(CANONICAL_STATES + EXTRA_STATES))

WEATHER_RESOLUTIONS = ("30s", "2.5m", "5m", "10m")
SOIL_DEPTHS_CM = ("0_5", "5_10", "10_15", "15_30", "30_45",
                  "45_60", "60_80", "80_100", "100_120")
SERIES_YEARS = tuple(range(1995, 2007))

MODELING_SCHEMA = (
    (VariableSchema(STATE_COLUMN, "categorical"),)
    + tuple(VariableSchema(n, "numeric", _UNIT) for n, _UNIT in [
        ("avg_temp_c", "C"), ("avg_min_temp_c", "C"), ("avg_max_temp_c", "C"),
        ("avg_precip_mm", "mm"), ("avg_wind_ms", "m s^-1"),
        ("soil_ph", ""), ("sand_pct", "g 100g^-1"), ("silt_pct", "g 100g^-1"),
        ("clay_pct", "g 100g^-1"), ("cultivation_area_ha", "ha"),
    ])
    + (VariableSchema(TARGET_COLUMN, "target", "t/ha"),)
)


# Effect of each variable on yield (sign and relative weight). Area and
# silt help, precipitation and sand hurt, the last three are deliberate
# near-noise so a sensible threshold drops them.
DRIVER_WEIGHTS = {
    "cultivation_area_ha": 1.30,
    "silt_pct": 0.70,
    "avg_precip_mm": -0.85,
    "sand_pct": -0.55,
    "soil_ph": 0.45,
    "avg_wind_ms": 0.35,
    "avg_min_temp_c": -0.35,
    "avg_temp_c": 0.0,
    "avg_max_temp_c": 0.0,
    "clay_pct": 0.0,
}

# Within-state jitter scale per variable; also normalizes the district-level
# deviations that feed the yield response. The three no-effect variables get
# wide jitter relative to their narrow state ranges, so their pairwise ranks
# are dominated by district randomness and their correlation stays near 0.
JITTER_SCALE = {
    "avg_temp_c": 2.0, "avg_min_temp_c": 0.5, "avg_max_temp_c": 2.2,
    "avg_precip_mm": 6.0, "avg_wind_ms": 0.15, "soil_ph": 0.2,
    "sand_pct": 2.5, "silt_pct": 2.0, "clay_pct": 8.0,
}


def _state_profile(rng: np.random.Generator, n_states: int) -> dict:
    """Latent per-state climate/soil centers and the drivers of yield."""
    precip = rng.uniform(40.0, 220.0, n_states)
    silt = rng.uniform(5.0, 45.0, n_states)
    sand = rng.uniform(20.0, 70.0, n_states)
    ph = rng.uniform(4.5, 7.5, n_states)
    wind = rng.uniform(0.8, 3.5, n_states)
    min_temp = rng.uniform(14.0, 24.0, n_states)
    # the three no-effect variables vary little between states (their
    # within-state jitter is what dominates their ranks)
    avg_temp = rng.uniform(25.0, 27.0, n_states)
    max_temp = avg_temp + rng.uniform(5.5, 6.5, n_states)
    clay = rng.uniform(22.0, 28.0, n_states)
    area = rng.uniform(0.25, 2.6, n_states)  # smallholder-scale hectares

    def unit(v):
        return (v - v.min()) / (v.max() - v.min())

    values = {
        "avg_temp_c": avg_temp, "avg_min_temp_c": min_temp,
        "avg_max_temp_c": max_temp, "avg_precip_mm": precip,
        "avg_wind_ms": wind, "soil_ph": ph, "sand_pct": sand,
        "silt_pct": silt, "clay_pct": clay,
        "cultivation_area_ha": area,
    }
    drivers = sum(w * unit(values[name]) for name, w in DRIVER_WEIGHTS.items() if w)
    drivers = drivers + rng.normal(0.0, 0.06, n_states)
    values["yield_t_ha"] = 0.35 + 2.9 * unit(drivers)  # t/ha, smallholder range
    return values


def _district_counts(rng: np.random.Generator, states, districts_range) -> dict:
    lo, hi = districts_range
    return {s: int(rng.integers(lo, hi + 1)) for s in states}


def simulate_corpus(seed: int = 0, districts_range: tuple[int, int] = (4, 8)) -> dict:
    """Build the whole raw corpus in memory.

    Returns a dict with per-resolution weather tables, per-depth soil
    tables (lists of row dicts), the yearly series per state, the latent
    state profile, and the scaling anchors implied by the series.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    profile = _state_profile(rng, len(ALL_STATES))
    counts = _district_counts(rng, ALL_STATES, districts_range)

    districts = {s: [f"{s} D{k + 1:02d}" for k in range(counts[s])] for s in ALL_STATES}
    district_truth = {}
    for si, state in enumerate(ALL_STATES):
        for d in districts[state]:
            district_truth[d] = {
                k: float(profile[k][si] + rng.normal(0, scale))
                for k, scale in JITTER_SCALE.items()
            }

    # per-resolution measurement noise, scaled to each variable's range
    weather_noise = {"avg_temp_c": 0.3, "avg_min_temp_c": 0.25,
                     "avg_max_temp_c": 0.35, "avg_precip_mm": 1.5,
                     "avg_wind_ms": 0.08}
    weather_tables = {}
    for res in WEATHER_RESOLUTIONS:
        rows = []
        for state in ALL_STATES:
            for d in districts[state]:
                truth = district_truth[d]
                rows.append({
                    "state": state, "district": d,
                    **{c: truth[c] + rng.normal(0, weather_noise[c])
                       for c in WEATHER_COLUMNS},
                })
        weather_tables[res] = rows

    soil_tables = {}
    for depth in SOIL_DEPTHS_CM:
        rows = []
        for state in ALL_STATES:
            for d in districts[state]:
                truth = district_truth[d]
                rows.append({
                    "state": state, "district": d,
                    **{c: truth[c] + rng.normal(0, 0.08 if c == "soil_ph" else 1.2)
                       for c in SOIL_COLUMNS},
                })
        soil_tables[depth] = rows

    # Yearly aggregate series for the canonical states only (states without
    # published series are exactly what the merge step later exposes).
    yield_series = {}
    area_series = {}
    for si, state in enumerate(ALL_STATES):
        if state not in CANONICAL_STATES:
            continue
        base_yield_kt = 80.0 + 700.0 * (profile["yield_t_ha"][si] - 0.35) / 2.9
        base_area_kha = 30.0 + 400.0 * (profile["cultivation_area_ha"][si] - 0.25) / 2.35
        trend = rng.uniform(-0.015, 0.03)  # some states drift, some do not
        wiggle = rng.normal(0, 0.03, len(SERIES_YEARS))
        years = np.arange(len(SERIES_YEARS))
        yield_series[state] = base_yield_kt * (1 + trend * years + wiggle)
        area_series[state] = base_area_kha * (1 + trend * 0.6 * years
                                              + rng.normal(0, 0.025, len(SERIES_YEARS)))

    return {
        "profile": profile,
        "states": ALL_STATES,
        "districts": districts,
        "weather": weather_tables,
        "soil": soil_tables,
        "yield_series": yield_series,
        "area_series": area_series,
    }


def _rows_to_csv(path: Path, columns, rows) -> None:
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for c in columns:
            v = row[c]
            cells.append(v if isinstance(v, str) else ("" if v is None else repr(float(v))))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def write_raw_corpus(out_dir, seed: int = 0,
                     districts_range: tuple[int, int] = (4, 8)) -> dict:
    """Write the corpus as the CSV layout the preprocess command ingests.

    A few defects are planted on purpose: one duplicated district row and a
    couple of blanked weather cells, so cleaning has real work to do.
    Returns the path map plus the corpus dict.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = simulate_corpus(seed, districts_range)
    rng = np.random.Generator(np.random.PCG64(seed + 1))

    weather_cols = ("state", "district") + WEATHER_COLUMNS
    soil_cols = ("state", "district") + SOIL_COLUMNS
    paths = {"weather": [], "soil": []}

    for res, rows in corpus["weather"].items():
        rows = [dict(r) for r in rows]
        # blank a couple of cells in canonical states: those rows must fall
        # to cleaning without removing the whole state
        for _ in range(2):
            victim = rows[int(rng.integers(0, len(rows)))]
            victim[WEATHER_COLUMNS[int(rng.integers(0, len(WEATHER_COLUMNS)))]] = None
        path = out / f"weather_{res.replace('.', '_')}.csv"
        _rows_to_csv(path, weather_cols, rows)
        paths["weather"].append(str(path))

    for depth, rows in corpus["soil"].items():
        rows = [dict(r) for r in rows]
        rows.append(dict(rows[0]))  # one exact duplicate district reading
        path = out / f"soil_depth_{depth}.csv"
        _rows_to_csv(path, soil_cols, rows)
        paths["soil"].append(str(path))

    yield_rows = [(s, y, v, False)
                  for s, series in sorted(corpus["yield_series"].items())
                  for y, v in zip(SERIES_YEARS, series)]
    area_rows = [(s, y, v, False)
                 for s, series in sorted(corpus["area_series"].items())
                 for y, v in zip(SERIES_YEARS, series)]
    write_long_series(out / "yield_series.csv", yield_rows)
    write_long_series(out / "area_series.csv", area_rows)
    paths["yield_series"] = str(out / "yield_series.csv")
    paths["area_series"] = str(out / "area_series.csv")

    write_schema(MODELING_SCHEMA, out / "modeling_schema.csv")
    paths["modeling_schema"] = str(out / "modeling_schema.csv")
    paths["corpus"] = corpus
    return paths


def modeling_table(seed: int = 0, districts_range: tuple[int, int] = (4, 8),
                   e_yield: float = 4.0, e_hectares: float = 4.0,
                   district_effect: float = 0.12) -> Dataset:
    """Shortcut to a cleaned-shape modeling table without running the whole
    preprocess chain: district weather/soil truth joined to the state-level
    smallholder-scaled yield/area. Canonical states only, no missing cells.

    district_effect > 0 modulates the state yield by the district's
    weather/soil deviations (same signs as the state-level drivers), giving
    feature-driven learners a within-state signal; at 0 every district of a
    state shares the state value exactly, like a per-state yield ledger.
    """
    corpus = simulate_corpus(seed, districts_range)
    states = corpus["states"]
    profile = corpus["profile"]
    state_index = {s: i for i, s in enumerate(states)}
    weight_total = sum(abs(w) for w in DRIVER_WEIGHTS.values())

    o_t = max(float(np.mean(v)) for v in corpus["yield_series"].values())
    o_h = max(float(np.mean(v)) for v in corpus["area_series"].values())

    # per-district means across the resolution/depth tables, one pass each
    sums: dict[str, dict[str, float]] = {}
    counts: dict[str, dict[str, int]] = {}
    for tables, cols in ((corpus["weather"], WEATHER_COLUMNS),
                         (corpus["soil"], SOIL_COLUMNS)):
        for rows_ in tables.values():
            for r in rows_:
                d = r["district"]
                acc = sums.setdefault(d, {})
                cnt = counts.setdefault(d, {})
                for c in cols:
                    acc[c] = acc.get(c, 0.0) + r[c]
                    cnt[c] = cnt.get(c, 0) + 1

    rows = []
    ids = []
    level = {s: i for i, s in enumerate(CANONICAL_STATES)}
    for state in states:
        if state not in CANONICAL_STATES:
            continue
        scaled_yield = float(np.mean(corpus["yield_series"][state])) / o_t * e_yield
        scaled_area = float(np.mean(corpus["area_series"][state])) / o_h * e_hectares
        for d in corpus["districts"][state]:
            truth = {c: sums[d][c] / counts[d][c] for c in sums[d]}
            row = [float(level[state])]
            for spec in MODELING_SCHEMA[1:-1]:
                if spec.name == "cultivation_area_ha":
                    row.append(scaled_area)
                else:
                    row.append(float(truth[spec.name]))
            deviation = sum(
                w * (truth[name] - profile[name][state_index[state]]) / JITTER_SCALE[name]
                for name, w in DRIVER_WEIGHTS.items()
                if w and name in JITTER_SCALE
            ) / weight_total
            row.append(scaled_yield * (1.0 + district_effect * deviation))
            rows.append(row)
            ids.append(d)
    return Dataset(MODELING_SCHEMA, np.asarray(rows), tuple(ids),
                   {STATE_COLUMN: CANONICAL_STATES})
