"""Short-series extension: stationarity testing, differencing, and
autoregressive moving-average fitting/forecasting.

Yearly yield and cultivation-area records are only a dozen points long, so
everything here is built for small n: the unit-root regression uses one
lagged difference by default, orders are capped at 5, and estimation
minimizes the conditional sum of squared one-step errors (start-up errors
pinned at zero) rather than a full likelihood.

Cultivation-area series are heavily skewed; log-transform them before
fitting (log_series) and forecasts come back in level units automatically.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateInputError, NonConvergenceError, SeriesTooShortError

ADF_SIGNIFICANCE = 0.05
MAX_ORDER = 5  # cap on AR and MA orders for ~12-point yearly series

# Response-surface coefficients for the unit-root t-statistic's p-value
# (constant-only regression, one series). Tabulated regression constants
# from MacKinnon's published approximation; p = Phi(poly(stat)).
_TAU_STAR = -1.61
_TAU_MIN = -18.83
_TAU_MAX = 2.74
_SMALLP = (2.1659, 1.4412, 0.038269)            # quadratic, stat <= _TAU_STAR
_LARGEP = (1.7339, 0.93202, -0.12745, -0.010368)  # cubic, stat > _TAU_STAR


@dataclass(frozen=True)
class Series:
    values: np.ndarray
    label: str = ""
    log_transformed: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError(f"series {self.label!r} contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0:
            raise ValueError("orders must be non-negative")
        if self.p + self.q < 1 and self.d < 1:
            raise ValueError("(0,0,0) does nothing; need p+q >= 1 or d >= 1")


@dataclass(frozen=True)
class ArimaModel:
    order: ArimaOrder
    alpha: float             # constant
    ar: np.ndarray           # lag coefficients on past values
    ma: np.ndarray           # lag coefficients on past one-step errors
    residuals: np.ndarray    # in-sample one-step errors on the differenced scale
    sigma2: float
    converged: bool = True
    stationary_roots: bool = True  # flagged, never enforced

    def __post_init__(self):
        for name in ("ar", "ma", "residuals"):
            v = np.asarray(getattr(self, name), dtype=np.float64).ravel()
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if self.ar.size != self.order.p or self.ma.size != self.order.q:
            raise ValueError("coefficient lengths must match the order")


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    p_value: float
    lags_used: int

    @property
    def stationary(self) -> bool:
        return self.p_value < ADF_SIGNIFICANCE


def log_series(s: Series) -> Series:
    if np.any(s.values <= 0):
        raise ValueError(f"series {s.label!r} has non-positive values; cannot log-transform")
    return Series(np.log(s.values), s.label, log_transformed=True)


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _mackinnon_pvalue(stat: float) -> float:
    if stat > _TAU_MAX:
        return 1.0
    if stat < _TAU_MIN:
        return 0.0
    coefs = _SMALLP if stat <= _TAU_STAR else _LARGEP
    poly = 0.0
    for k, c in enumerate(coefs):
        poly += c * stat ** k
    return _norm_cdf(poly)


def adf_test(s: Series, max_lag: int = 1) -> AdfResult:
    """Unit-root test: regress the first difference on the lagged level,
    max_lag lagged differences, and a constant; the t-ratio on the lagged
    level maps to a p-value through the tabulated response surface.
    p < 0.05 rejects the unit root, i.e. the series counts as stationary.
    """
    y = s.values
    n = y.size
    if n <= max_lag + 2:
        raise SeriesTooShortError(f"need more than {max_lag + 2} points, have {n}")
    dy = np.diff(y)
    if np.all(dy == dy[0]) and dy[0] == 0.0:
        raise DegenerateInputError("constant series: unit-root regression undefined")

    # rows t = max_lag .. len(dy)-1
    rows = len(dy) - max_lag
    cols = [y[max_lag:n - 1]]                      # lagged level
    for i in range(1, max_lag + 1):
        cols.append(dy[max_lag - i:len(dy) - i])   # lagged differences
    cols.append(np.ones(rows))
    x = np.column_stack(cols)
    target = dy[max_lag:]

    beta, *_ = np.linalg.lstsq(x, target, rcond=None)
    resid = target - x @ beta
    dof = rows - x.shape[1]
    if dof <= 0:
        raise SeriesTooShortError("not enough observations for the regression")
    sigma2 = float(resid @ resid) / dof
    xtx_inv = np.linalg.pinv(x.T @ x)
    se = math.sqrt(max(sigma2 * xtx_inv[0, 0], 0.0))
    if se == 0.0:
        raise DegenerateInputError("zero-variance regressor; t-ratio undefined")
    stat = float(beta[0] / se)
    return AdfResult(statistic=stat, p_value=_mackinnon_pvalue(stat), lags_used=max_lag)


def difference(s: Series, d: int) -> Series:
    """Apply the first-difference operator d times."""
    if d >= len(s):
        raise SeriesTooShortError(f"cannot difference {len(s)} points {d} times")
    v = s.values
    for _ in range(d):
        v = np.diff(v)
    return Series(v, s.label, s.log_transformed)


def integrate(levels_tail, diffs) -> np.ndarray:
    """Undo differencing: given the last d observed levels and a run of
    d-th differences, rebuild the level path step by step. Exact inverse of
    difference over the reconstructed range."""
    tail = np.asarray(levels_tail, dtype=np.float64).ravel()
    d = tail.size
    if d == 0:
        return np.asarray(diffs, dtype=np.float64).copy()
    # most recent value at each differencing order 0..d-1
    state = []
    level = tail
    for _ in range(d):
        state.append(level[-1])
        level = np.diff(level)
    out = np.empty(len(diffs), dtype=np.float64)
    for i, w in enumerate(np.asarray(diffs, dtype=np.float64).ravel()):
        acc = w
        for k in range(d - 1, -1, -1):
            acc = state[k] + acc
            state[k] = acc
        out[i] = acc
    return out


def acf(s: Series, max_lag: int) -> np.ndarray:
    """Sample autocorrelation for lags 0..max_lag (lag 0 is 1 by definition)."""
    y = s.values
    if max_lag >= y.size:
        raise SeriesTooShortError(f"max_lag {max_lag} >= length {y.size}")
    centered = y - y.mean()
    denom = float(centered @ centered)
    if denom == 0.0:
        raise DegenerateInputError("constant series: autocorrelation undefined")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = float(centered[k:] @ centered[:-k]) / denom
    return out


def pacf(s: Series, max_lag: int) -> np.ndarray:
    """Partial autocorrelation via the Durbin-Levinson recursion."""
    r = acf(s, max_lag)
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    phi_prev = np.zeros(0)
    for k in range(1, max_lag + 1):
        if k == 1:
            phi_kk = r[1]
            phi = np.array([phi_kk])
        else:
            num = r[k] - float(phi_prev @ r[k - 1:0:-1])
            den = 1.0 - float(phi_prev @ r[1:k])
            phi_kk = num / den if den != 0.0 else 0.0
            phi = np.empty(k)
            phi[:k - 1] = phi_prev - phi_kk * phi_prev[::-1]
            phi[k - 1] = phi_kk
        out[k] = phi_kk
        phi_prev = phi
    return out


def _yule_walker(w: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return np.zeros(0)
    centered = w - w.mean()
    denom = float(centered @ centered)
    if denom == 0.0:
        return np.zeros(p)
    r = np.empty(p + 1)
    r[0] = 1.0
    for k in range(1, p + 1):
        r[k] = float(centered[k:] @ centered[:-k]) / denom
    toep = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            toep[i, j] = r[abs(i - j)]
    try:
        return np.linalg.solve(toep, r[1:])
    except np.linalg.LinAlgError:
        return np.zeros(p)


def _css_residuals(w: np.ndarray, p: int, q: int, theta: np.ndarray) -> np.ndarray:
    """One-step errors with pre-sample errors pinned at zero, from t = p on."""
    alpha = theta[0]
    ar = theta[1:1 + p]
    ma = theta[1 + p:]
    n = w.size
    eps = np.zeros(n)
    for t in range(p, n):
        pred = alpha
        for i in range(p):
            pred += ar[i] * w[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= p:
                pred += ma[j] * eps[t - 1 - j]
        eps[t] = w[t] - pred
    return eps[p:]


def fit_arima(s: Series, order: ArimaOrder, max_iter: int = 500) -> ArimaModel:
    """Fit by minimizing the conditional sum of squared one-step errors on
    the differenced series with a quasi-Newton search. AR coefficients start
    at their Yule-Walker estimates, the constant at the matching mean level,
    and error-lag coefficients at zero.

    Fitted lag polynomials are not constrained to the stationary region
    (too brittle on a dozen points); non-stationary roots are only flagged.
    """
    p, d, q = order.p, order.d, order.q
    w = difference(s, d).values
    if w.size < p + q + 2:
        raise SeriesTooShortError(
            f"need at least {p + q + 2} points after differencing, have {w.size}")

    ar0 = _yule_walker(w, p)
    alpha0 = float(w.mean()) * (1.0 - float(ar0.sum()))
    x0 = np.concatenate([[alpha0], ar0, np.zeros(q)])

    def objective(theta):
        eps = _css_residuals(w, p, q, theta)
        return float(eps @ eps)

    result = minimize(objective, x0, method="BFGS",
                      options={"maxiter": max_iter, "gtol": 1e-10})
    if not result.success and result.nit >= max_iter:
        raise NonConvergenceError(
            f"quasi-Newton search hit the {max_iter}-iteration cap")

    theta = result.x
    eps = _css_residuals(w, p, q, theta)
    ar = theta[1:1 + p]
    roots_ok = True
    if p > 0:
        roots = np.roots(np.concatenate([[1.0], -ar]))
        roots_ok = bool(np.all(np.abs(roots) < 1.0 + 1e-9)) if roots.size else True
    return ArimaModel(order=order, alpha=float(theta[0]), ar=ar,
                      ma=theta[1 + p:], residuals=eps,
                      sigma2=float(eps @ eps) / eps.size if eps.size else 0.0,
                      converged=bool(result.success), stationary_roots=roots_ok)


def forecast(m: ArimaModel, s: Series, h: int) -> np.ndarray:
    """Recursive h-step forecast with future one-step errors set to zero.
    Differencing is undone against the observed tail, and log-transformed
    series are exponentiated back, so the result is always in level units.
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    p, d, q = m.order.p, m.order.d, m.order.q
    w_hist = list(difference(s, d).values)
    eps_hist = [0.0] * (len(w_hist) - m.residuals.size) + list(m.residuals)

    preds = []
    for _ in range(h):
        pred = m.alpha
        for i in range(p):
            pred += m.ar[i] * w_hist[-1 - i]
        for j in range(q):
            pred += m.ma[j] * eps_hist[-1 - j]
        preds.append(pred)
        w_hist.append(pred)
        eps_hist.append(0.0)

    levels = integrate(s.values[len(s) - d:], preds) if d > 0 else np.asarray(preds)
    return np.exp(levels) if s.log_transformed else levels


def select_order(s: Series, max_order: int = MAX_ORDER) -> ArimaOrder:
    """Pick (p, d, q) the way an analyst reads the diagnostic plots:
    d is the least differencing in {0,1,2} that passes the unit-root test,
    then p and q are the last lags whose partial/plain autocorrelations
    leave the +-1.96/sqrt(n) band on the differenced series.
    """
    if len(s) < 8:
        raise SeriesTooShortError(f"need at least 8 points, have {len(s)}")

    chosen_d = 2
    for d in (0, 1, 2):
        w = difference(s, d)
        if np.all(w.values == w.values[0]):
            chosen_d = d  # flat after differencing: nothing left to remove
            break
        try:
            if adf_test(w, max_lag=1).stationary:
                chosen_d = d
                break
        except (SeriesTooShortError, DegenerateInputError):
            continue

    w = difference(s, chosen_d)
    n = len(w)
    band = 1.96 / math.sqrt(n)
    max_lag = min(max_order, n - 2)
    p = q = 0
    if max_lag >= 1 and not np.all(w.values == w.values[0]):
        pv = pacf(w, max_lag)
        av = acf(w, max_lag)
        for k in range(1, max_lag + 1):
            if abs(pv[k]) > band:
                p = k
            if abs(av[k]) > band:
                q = k
    if p == 0 and q == 0 and chosen_d == 0:
        p = 1  # a do-nothing model is not a model
    return ArimaOrder(p, chosen_d, q)


# -- long-format CSV (state, year, value) -------------------------------------

def read_long_series(path) -> dict[str, tuple[list[int], Series]]:
    """Per-state yearly series from (state, year, value) rows, year-sorted."""
    by_state: dict[str, list[tuple[int, float]]] = {}
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"state", "year", "value"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns state,year,value")
        for row in reader:
            by_state.setdefault(row["state"], []).append(
                (int(row["year"]), float(row["value"])))
    out = {}
    for state, pairs in by_state.items():
        pairs.sort()
        years = [y for y, _ in pairs]
        out[state] = (years, Series(np.array([v for _, v in pairs]), label=state))
    return out


def write_long_series(path, rows) -> None:
    """rows: iterable of (state, year, value, forecasted)."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state", "year", "value", "forecasted"])
        for state, year, value, flagged in rows:
            writer.writerow([state, year, repr(float(value)), str(bool(flagged)).lower()])
