"""Shared fixtures: synthetic daily OHLCV feeds in the Yahoo CSV layout."""

import datetime as dt
import math
from typing import Callable, List

import numpy as np
import pytest

from py_lstm_returns.data import CSV_HEADER


# 300 calendar days before 2015-01-01, so a 400-day feed splits 299 / 100
# under the default date ranges
SANITY_START = dt.date(2014, 3, 7)


def _csv_text(dates: List[dt.date], opens, highs, lows, closes, volumes) -> str:
    lines = [','.join(CSV_HEADER)]
    for d, o, h, l, c, v in zip(dates, opens, highs, lows, closes, volumes):
        lines.append(f"{d.isoformat()},{o!r},{h!r},{l!r},{c!r},{c!r},{v!r}")
    return '\n'.join(lines) + '\n'


def _days(start: dt.date, n: int) -> List[dt.date]:
    return [start + dt.timedelta(days=k) for k in range(n)]


def sine_ohlcv(n_days: int, start: dt.date = SANITY_START, period: float = 16.0,
               amplitude: float = 0.1) -> str:
    """Prices oscillate as 100·exp(a·sin); every return row is a deterministic function of phase"""
    t = np.arange(n_days, dtype=np.float64)
    w = 2.0 * math.pi / period
    closes = 100.0 * np.exp(amplitude * np.sin(w * t))
    opens = 100.0 * np.exp(amplitude * np.sin(w * (t - 0.5)))
    highs = np.maximum(opens, closes) * 1.01
    lows = np.minimum(opens, closes) * 0.99
    volumes = 1e6 * (1.0 + 0.5 * np.sin(w * t + 1.0))
    return _csv_text(_days(start, n_days), opens.tolist(), highs.tolist(), lows.tolist(),
                     closes.tolist(), volumes.tolist())


def growth_ohlcv(n_days: int, rate: float = 0.01, start: dt.date = SANITY_START) -> str:
    """Every price grows by `rate` per day, volume is constant"""
    prices = (100.0 * (1.0 + rate) ** np.arange(n_days)).tolist()
    return _csv_text(_days(start, n_days), prices, prices, prices, prices, [1e6] * n_days)


@pytest.fixture
def make_sine_csv() -> Callable[..., str]:
    return sine_ohlcv


@pytest.fixture
def make_growth_csv() -> Callable[..., str]:
    return growth_ohlcv


@pytest.fixture
def write_csv(tmp_path) -> Callable[..., str]:
    """Write CSV text under tmp_path and return the path"""
    def write(text: str, name: str = 'data.csv') -> str:
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return str(path)
    return write
