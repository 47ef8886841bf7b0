"""Network power forecasts and the rewards-per-sector signal agents consume."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .supply import SupplyParams, SupplyState, baseline_function, minted_cumulative
from .units import DEFAULT_SECTOR_SIZE, GiB

POWER_FLOOR = float(GiB)


@dataclass(frozen=True)
class LinearModel:
    slope: float
    intercept: float

    def __call__(self, day):
        return self.intercept + self.slope * np.asarray(day, dtype=float)


@dataclass
class PowerForecast:
    start_day: int
    horizon: int
    rbp_hat: np.ndarray
    qap_hat: np.ndarray
    minting_rate_hat: np.ndarray
    rewards_per_sector: np.ndarray  # FIL per CC sector per day


def fit_linear(days, values, window: int | None = None) -> LinearModel:
    """Ordinary least-squares line over the trailing ``window`` days of history.

    The window is measured in days back from the latest observation, so a
    window of 2 keeps the last two daily points.
    """
    x = np.asarray(days, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape:
        raise ValueError("days and values must have the same length")
    if window is not None:
        if window < 1:
            raise ValueError("window must be >= 1")
        keep = x > x.max() - window if len(x) else np.zeros(0, dtype=bool)
        x, y = x[keep], y[keep]
    if len(x) < 2:
        raise ValueError(f"need at least 2 points to fit a line, got {len(x)}")
    # centred to keep the normal equations well conditioned at large day indices
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0:
        raise ValueError("all history points fall on the same day")
    slope = float(dx @ (y - ym)) / sxx
    return LinearModel(slope=slope, intercept=float(ym - slope * xm))


def forecast_power(model: LinearModel, start_day: int, horizon: int, floor: float = POWER_FLOOR) -> np.ndarray:
    """Evaluate the fitted line on ``start_day .. start_day + horizon - 1``, floored at ``floor``."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    days = np.arange(start_day, start_day + horizon, dtype=float)
    return np.maximum(model(days), floor)


def expected_minting_rate(rbp_hat, supply_state: SupplyState, params: SupplyParams) -> np.ndarray:
    """Daily minting along a forecast RBP path that starts the day after ``supply_state.day``."""
    rbp_hat = np.asarray(rbp_hat, dtype=float)
    if rbp_hat.size == 0:
        raise ValueError("rbp_hat must be nonempty")
    if np.any(rbp_hat < 0):
        raise ValueError("rbp_hat must be >= 0")
    last = supply_state.day
    days = np.arange(last + 1, last + 1 + rbp_hat.size)
    capped = np.minimum(baseline_function(days, params), rbp_hat)
    cumsum = supply_state.capped_rbp_cumsum + np.cumsum(capped)
    minted = minted_cumulative(days, cumsum, params)
    prev = minted_cumulative(last, supply_state.capped_rbp_cumsum, params)
    return np.diff(np.concatenate(([prev], minted)))


def rewards_per_sector(minting_rate_hat, qap_hat, sector_size: float = DEFAULT_SECTOR_SIZE,
                       sector_quality: float = 1.0) -> np.ndarray:
    """Expected FIL per sector per day: minting times the sector's share of network QAP."""
    m = np.asarray(minting_rate_hat, dtype=float)
    q = np.asarray(qap_hat, dtype=float)
    if np.any(q <= 0):
        raise ValueError("qap_hat must be strictly positive")
    return m * (sector_size * sector_quality) / q


class Forecaster(ABC):
    """Produces a :class:`PowerForecast` from realized history.

    Alternative models (e.g. sampling-based ones) plug in by subclassing.
    """

    @abstractmethod
    def forecast(self, days, rbp, qap, supply_state: SupplyState, params: SupplyParams,
                 horizon: int) -> PowerForecast:
        ...


class LinearForecaster(Forecaster):
    """Linear extrapolation of RBP and QAP levels over a trailing window."""

    def __init__(self, window: int = 90, floor: float = POWER_FLOOR, sector_size: float = DEFAULT_SECTOR_SIZE):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window
        self.floor = floor
        self.sector_size = sector_size

    def _extrapolate(self, days, values, start_day, horizon):
        if len(days) >= 2:
            model = fit_linear(days, values, self.window)
        else:
            # a single observation carries no trend
            model = LinearModel(0.0, float(values[-1]) if len(values) else 0.0)
        return forecast_power(model, start_day, horizon, self.floor)

    def forecast(self, days, rbp, qap, supply_state, params, horizon):
        start = supply_state.day + 1
        # only the trailing window is needed; slicing keeps daily refits cheap
        days = np.asarray(days[-self.window:], dtype=float)
        rbp_hat = self._extrapolate(days, np.asarray(rbp[-self.window:], dtype=float), start, horizon)
        qap_hat = self._extrapolate(days, np.asarray(qap[-self.window:], dtype=float), start, horizon)
        m_hat = expected_minting_rate(rbp_hat, supply_state, params)
        rps = rewards_per_sector(m_hat, qap_hat, self.sector_size, 1.0)
        return PowerForecast(start, horizon, rbp_hat, qap_hat, m_hat, rps)
