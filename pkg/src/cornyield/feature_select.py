"""Kendall rank correlation and correlation-based feature selection.

The selection statistic is Kendall's tau: the normalized difference between
concordant and discordant pairs. Environmental tables carry ties (repeated
soil readings across districts), so the tie-adjusted denominator (tau-b) is
the primary coefficient; the untied normalization (tau-a, pairs / n(n-1)/2)
is reported alongside it. Both reduce to the same number on tie-free data.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, EmptySelectionError, LengthMismatchError

# Threshold that keeps the seven field-measurable variables (area, silt,
# precipitation, sand, pH, wind, min temperature) while dropping the weakly
# associated ones (average/max temperature, clay). Overridable per run.
DEFAULT_SELECTION_THRESHOLD = 0.07


@dataclass(frozen=True)
class KendallResult:
    tau: float       # tie-adjusted (tau-b)
    tau_a: float     # pair-count normalization: (C - D) / (n(n-1)/2)
    n: int
    concordant: int
    discordant: int


@dataclass(frozen=True)
class CorrelationReport:
    names: tuple[str, ...]
    taus: tuple[float, ...]
    ranking: tuple[int, ...]  # permutation of indices, |tau| descending

    def ranked_names(self) -> list[str]:
        return [self.names[i] for i in self.ranking]

    def tau_of(self, name: str) -> float:
        return self.taus[self.names.index(name)]


def kendall_tau(x, y) -> KendallResult:
    """Kendall correlation between two equal-length vectors.

    Counts every i<j pair: concordant pairs move in the same direction in
    x and y, discordant pairs in opposite directions; pairs tied in either
    variable count toward neither. The coefficient is the pair surplus
    normalized by the geometric mean of untied pair counts (tau-b), so it
    stays within [-1, 1] in the presence of ties.

    Raises DegenerateInputError when either vector is constant (every pair
    tied in that variable makes the coefficient undefined).
    """
    xv = np.asarray(x, dtype=np.float64).ravel()
    yv = np.asarray(y, dtype=np.float64).ravel()
    if xv.size != yv.size:
        raise LengthMismatchError(f"x has {xv.size} values, y has {yv.size}")
    n = xv.size
    if n < 2:
        raise LengthMismatchError("need at least 2 observations")

    sx = np.sign(xv[:, None] - xv[None, :])
    sy = np.sign(yv[:, None] - yv[None, :])
    upper = np.triu_indices(n, k=1)
    prod = sx[upper] * sy[upper]

    concordant = int(np.count_nonzero(prod > 0))
    discordant = int(np.count_nonzero(prod < 0))
    s = concordant - discordant

    n0 = n * (n - 1) // 2
    ties_x = n0 - int(np.count_nonzero(sx[upper]))
    ties_y = n0 - int(np.count_nonzero(sy[upper]))
    if ties_x == n0 or ties_y == n0:
        raise DegenerateInputError("constant vector: tau undefined")

    tau_a = s / n0
    tau_b = s / np.sqrt(float(n0 - ties_x) * float(n0 - ties_y))
    return KendallResult(tau=float(tau_b), tau_a=float(tau_a), n=n,
                         concordant=concordant, discordant=discordant)


def kendall_tau_bruteforce(x, y) -> KendallResult:
    """Plain O(n^2) pair loop. Oracle twin of kendall_tau; kept unvectorized
    on purpose so the two implementations share no code path."""
    xv = [float(v) for v in np.asarray(x).ravel()]
    yv = [float(v) for v in np.asarray(y).ravel()]
    if len(xv) != len(yv):
        raise LengthMismatchError("length mismatch")
    n = len(xv)
    if n < 2:
        raise LengthMismatchError("need at least 2 observations")
    concordant = discordant = ties_x = ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = xv[i] - xv[j]
            dy = yv[i] - yv[j]
            if dx == 0:
                ties_x += 1
            if dy == 0:
                ties_y += 1
            p = (0 if dx == 0 else (1 if dx > 0 else -1)) * \
                (0 if dy == 0 else (1 if dy > 0 else -1))
            if p > 0:
                concordant += 1
            elif p < 0:
                discordant += 1
    n0 = n * (n - 1) // 2
    if ties_x == n0 or ties_y == n0:
        raise DegenerateInputError("constant vector: tau undefined")
    s = concordant - discordant
    return KendallResult(tau=float(s / ((float(n0 - ties_x) * float(n0 - ties_y)) ** 0.5)),
                         tau_a=float(s / n0), n=n,
                         concordant=concordant, discordant=discordant)


def correlation_report(dataset, target: str) -> CorrelationReport:
    """Tau of every numeric explanatory column against the target column.

    Categorical (one-hot) columns are excluded: rank correlation against a
    binary indicator says nothing useful about a 23-level geography code.
    Ranking sorts by |tau| descending with lexicographic name tie-break.
    """
    target_col = dataset.column(target)
    names = []
    taus = []
    for spec in dataset.schema:
        if spec.kind != "numeric":
            continue
        names.append(spec.name)
        taus.append(kendall_tau(dataset.column(spec.name), target_col).tau)
    order = sorted(range(len(names)), key=lambda i: (-abs(taus[i]), names[i]))
    return CorrelationReport(names=tuple(names), taus=tuple(taus), ranking=tuple(order))


def select_features(report: CorrelationReport, threshold: float = DEFAULT_SELECTION_THRESHOLD) -> list[str]:
    """Names with |tau| >= threshold, strongest first.

    Raises EmptySelectionError if nothing passes; a model with zero
    explanatory variables is a configuration mistake, not a result.
    """
    if not 0.0 <= threshold < 1.0:
        raise ValueError(f"threshold must be in [0, 1), got {threshold}")
    kept = [report.names[i] for i in report.ranking
            if abs(report.taus[i]) >= threshold]
    if not kept:
        raise EmptySelectionError(f"no variable reaches |tau| >= {threshold}")
    return kept


def write_report_csv(report: CorrelationReport, path, selected: list[str] | None = None) -> None:
    """Emit (variable, tau, rank, selected) rows; the plot-ready form of the
    correlation color map."""
    rank_of = {idx: r + 1 for r, idx in enumerate(report.ranking)}
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variable", "tau", "rank", "selected"])
        for i, name in enumerate(report.names):
            writer.writerow([
                name,
                repr(report.taus[i]),
                rank_of[i],
                int(selected is None or name in selected),
            ])
