"""Walk the raw environmental corpus into one clean modeling table.

The corpus arrives as many small CSVs: a weather table per spatial
resolution, a soil table per sampling depth, and one short yearly series of
yield and cultivation area per state. Preprocessing averages the
resolutions/depths, extends the series by six forecast steps, rescales the
state aggregates to smallholder capacity, merges everything, and drops
incomplete or duplicated records. States without yield records fall out
naturally: the merge leaves their rows with missing cells.

Run: python demos/01_preprocess_corpus.py
"""
import tempfile
from pathlib import Path

import numpy as np

from cornyield import simulate, timeseries
from cornyield.dataset import (
    SOIL_COLUMNS,
    STATE_COLUMN,
    TARGET_COLUMN,
    WEATHER_COLUMNS,
    Dataset,
    VariableSchema,
    aggregate_mean,
    clean,
    load_csv,
    merge,
    scale_to_smallholder,
    select_columns,
    SmallholderScaleConfig,
)

work = Path(tempfile.mkdtemp(prefix="cornyield_demo_"))
paths = simulate.write_raw_corpus(work, seed=0, districts_range=(5, 9))
print(f"raw corpus written under {work}")

id_schema = (VariableSchema(STATE_COLUMN, "categorical"),
             VariableSchema("district", "categorical"))
weather_schema = id_schema + tuple(VariableSchema(c, "numeric") for c in WEATHER_COLUMNS)
soil_schema = id_schema + tuple(VariableSchema(c, "numeric") for c in SOIL_COLUMNS)

weather = aggregate_mean([load_csv(p, weather_schema) for p in paths["weather"]],
                         (STATE_COLUMN, "district"))
soil = aggregate_mean([load_csv(p, soil_schema) for p in paths["soil"]],
                      (STATE_COLUMN, "district"))
env = merge(weather, soil, (STATE_COLUMN, "district"))
print(f"aggregated {len(paths['weather'])} weather resolutions and "
      f"{len(paths['soil'])} soil depths -> {env.n_rows} district rows")

# extend each state's 12-point series by 6 forecast steps, then average
yields = timeseries.read_long_series(paths["yield_series"])
areas = timeseries.read_long_series(paths["area_series"])
state_yield, state_area = {}, {}
for state in sorted(yields):
    for store, (_, series), log_first in ((state_yield, yields[state], False),
                                          (state_area, areas[state], True)):
        fit_series = timeseries.log_series(series) if log_first else series
        order = timeseries.select_order(fit_series)
        model = timeseries.fit_arima(fit_series, order)
        future = timeseries.forecast(model, fit_series, 6)
        store[state] = float(np.mean(np.concatenate([series.values, future])))

scale = SmallholderScaleConfig(E_y=4.0, E_h=4.0,
                               O_t=max(state_yield.values()),
                               O_h=max(state_area.values()))
states = tuple(sorted(state_yield))
state_table = Dataset(
    (VariableSchema(STATE_COLUMN, "categorical"),
     VariableSchema("cultivation_area_ha", "numeric", "ha"),
     VariableSchema(TARGET_COLUMN, "target", "t/ha")),
    np.array([[float(i),
               scale_to_smallholder(state_area[s], scale, "hectare"),
               scale_to_smallholder(state_yield[s], scale, "yield")]
              for i, s in enumerate(states)]),
    states, {STATE_COLUMN: states})
print(f"series extended and rescaled for {len(states)} states "
      f"(anchors O_t={scale.O_t:.1f} kt, O_h={scale.O_h:.1f} kha)")

merged = merge(env, state_table, STATE_COLUMN)
modeling = select_columns(merged, [s.name for s in simulate.MODELING_SCHEMA])
cleaned = clean(modeling)
retained = sorted(set(cleaned.labels(STATE_COLUMN)))
print(f"merged table: {modeling.n_rows} rows -> {cleaned.n_rows} after cleaning")
print(f"states retained: {len(retained)} of {len(set(env.labels(STATE_COLUMN)))}")
print("sample row:", {n: round(float(v), 3) for n, v in zip(cleaned.names, cleaned.rows[0])})
