"""Extend a dozen-point yearly series the way an analyst would.

Yield ledgers stop years before the soil surveys do, so the series must be
pushed forward before the sources can be merged. The recipe: test for a
unit root, difference until stationary, read the tentative lag orders off
the autocorrelation diagnostics, fit, forecast. Cultivation-area series are
skewed, so they are fitted on the log scale and mapped back.

Run: python demos/02_extend_short_series.py
"""
import numpy as np

from cornyield import simulate, timeseries

corpus = simulate.simulate_corpus(seed=0, districts_range=(4, 6))
years = list(simulate.SERIES_YEARS)

for state in ("Ogun", "Anambra", "Taraba"):
    series = timeseries.Series(corpus["yield_series"][state], label=state)
    adf = timeseries.adf_test(series)
    order = timeseries.select_order(series)
    model = timeseries.fit_arima(series, order)
    future = timeseries.forecast(model, series, 6)
    verdict = "stationary" if adf.stationary else "needs differencing"
    print(f"{state:8s} p-value {adf.p_value:8.6f} ({verdict}), "
          f"picked order ({order.p},{order.d},{order.q})")
    print(f"         history {np.round(series.values[-4:], 1)} "
          f"-> {years[-1] + 1}..{years[-1] + 6}: {np.round(future, 1)}")

# area series travel through the log scale and come back in hectares
state = "Ogun"
area = timeseries.Series(corpus["area_series"][state], label=state)
logged = timeseries.log_series(area)
order = timeseries.select_order(logged)
model = timeseries.fit_arima(logged, order)
future = timeseries.forecast(model, logged, 6)
print(f"\n{state} cultivation area, log-fitted order "
      f"({order.p},{order.d},{order.q}): {np.round(future, 1)} (back in kha)")

# the diagnostics the orders are read from
diffed = timeseries.difference(logged, order.d)
print("acf :", np.round(timeseries.acf(diffed, 5), 2))
print("pacf:", np.round(timeseries.pacf(diffed, 5), 2))
