"""Counterfactual output paths built from pre-crisis growth."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .errors import InsufficientHistory, SeriesTooShort
from .ingest import GdpSeries

DEFAULT_HP_LAMBDA = 100.0


class TrendMethod(enum.Enum):
    HP_FILTERED = "HpFiltered"
    AVERAGE_GROWTH = "AverageGrowth"


@dataclass(frozen=True)
class TrendSpec:
    """How pre-crisis growth is measured.

    Parameters
    ----------
    method : TrendMethod
    window_years : int
        Length of the pre-crisis window, 3 or 10.
    smoothing : float
        HP penalty; ignored for ``AVERAGE_GROWTH``.
    history : {"full", "window"}
        For HP trends, filter the whole pre-onset history or only the window.
    anchor : {"observed", "filtered"}
        Level the counterfactual starts from in the year before onset.
    """

    method: TrendMethod
    window_years: int
    smoothing: float = DEFAULT_HP_LAMBDA
    history: str = "full"
    anchor: str = "observed"

    def __post_init__(self):
        if self.window_years not in (3, 10):
            raise ValueError(f"window_years must be 3 or 10, got {self.window_years}")
        if not self.smoothing > 0:
            raise ValueError("smoothing must be positive")
        if self.history not in ("full", "window"):
            raise ValueError(f"history must be 'full' or 'window', got {self.history!r}")
        if self.anchor not in ("observed", "filtered"):
            raise ValueError(f"anchor must be 'observed' or 'filtered', got {self.anchor!r}")


@dataclass(frozen=True)
class Counterfactual:
    onset_year: int
    base_level: float
    growth_rate: float

    def __post_init__(self):
        if not (self.base_level > 0 and self.growth_rate > 0):
            raise ValueError("base_level and growth_rate must be positive")

    def level(self, year: int) -> float:
        return self.base_level * self.growth_rate ** (year - self.onset_year + 1)

    def levels(self, horizon: int) -> np.ndarray:
        return self.base_level * self.growth_rate ** np.arange(1, horizon + 1)


def hp_filter(series, smoothing: float = DEFAULT_HP_LAMBDA) -> np.ndarray:
    r"""Hodrick-Prescott trend of a series.

    Minimises ``sum((y - t)**2) + smoothing * sum(diff(t, 2)**2)``, i.e.
    ``(I + smoothing * D'D) t = y`` with ``D`` the second-difference operator.
    The pentadiagonal system is solved for the cycle ``c = y - t`` instead,
    ``(I + smoothing * D'D) c = smoothing * D'D y``, by banded Cholesky. The
    right-hand side vanishes for affine input, so lines come back exactly
    even when the penalty makes the system ill-conditioned.

    Parameters
    ----------
    series : array_like
        1-d series of length at least 4.
    smoothing : float
        Penalty on the squared second differences of the trend.

    Returns
    -------
    ndarray
        The trend component.
    """
    y = np.asarray(series, dtype=float)
    if y.ndim != 1:
        raise ValueError("hp_filter expects a 1-d series")
    n = y.size
    if n < 4:
        raise SeriesTooShort(f"hp_filter needs at least 4 observations, got {n}")
    if not smoothing > 0:
        raise ValueError("smoothing must be positive")

    # upper banded storage of I + smoothing * D'D: rows are the 2nd super-, 1st super- and main diagonal
    ab = np.zeros((3, n))
    main = np.full(n, 6.0)
    main[[0, -1]] = 1.0
    main[[1, -2]] = 5.0
    off1 = np.full(n - 1, -4.0)
    off1[[0, -1]] = -2.0
    ab[2] = 1.0 + smoothing * main
    ab[1, 1:] = smoothing * off1
    ab[0, 2:] = smoothing
    # D'D y without forming D: minus the second difference of the zero-padded second difference
    rhs = smoothing * np.diff(np.concatenate([[0.0, 0.0], np.diff(y, 2), [0.0, 0.0]]), 2)
    return y - solveh_banded(ab, rhs, check_finite=False)


def hp_normal_matrix(n: int, smoothing: float) -> np.ndarray:
    """Dense ``I + smoothing * D'D``; used for diagnostics and tests."""
    d = np.zeros((n - 2, n))
    for i in range(n - 2):
        d[i, i:i + 3] = (1.0, -2.0, 1.0)
    return np.eye(n) + smoothing * d.T @ d


def _hp_log_trend(series: GdpSeries, onset_year: int, spec: TrendSpec) -> np.ndarray:
    start = series.first_year if spec.history == "full" else onset_year - spec.window_years - 1
    logs = np.log(series.window(start, onset_year - 1))
    if logs.size < 4:
        raise InsufficientHistory(
            f"{series.country_id} {onset_year}: HP filter needs 4 pre-onset years, have {logs.size}")
    return hp_filter(logs, spec.smoothing)


def precrisis_growth(series: GdpSeries, onset_year: int, spec: TrendSpec) -> float:
    """Average gross annual growth over the window ending the year before onset.

    The average is geometric: ``(x[onset-1] / x[onset-1-w]) ** (1/w)`` of the
    raw series, or of the HP trend of log GDP for ``HP_FILTERED``.
    """
    w = spec.window_years
    first = onset_year - w - 1
    if not series.covers(first, onset_year - 1):
        raise InsufficientHistory(
            f"{series.country_id} {onset_year}: needs GDP for {first}-{onset_year - 1}")
    if spec.method is TrendMethod.AVERAGE_GROWTH:
        return float((series[onset_year - 1] / series[first]) ** (1.0 / w))
    trend = _hp_log_trend(series, onset_year, spec)
    return float(np.exp((trend[-1] - trend[-1 - w]) / w))


def build_counterfactual(series: GdpSeries, onset_year: int, spec: TrendSpec) -> Counterfactual:
    growth = precrisis_growth(series, onset_year, spec)
    base = series[onset_year - 1]
    if spec.anchor == "filtered" and spec.method is TrendMethod.HP_FILTERED:
        base = float(np.exp(_hp_log_trend(series, onset_year, spec)[-1]))
    return Counterfactual(onset_year, base, growth)
