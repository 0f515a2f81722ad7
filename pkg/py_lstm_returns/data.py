#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LSTM Returns Market Data

Yahoo-layout daily CSV → records → percentage-change returns → date split
→ sliding windows → shuffled batches.
"""

import io
import os
import datetime as dt
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from .ndmath import RngState
from .utils import DataError, assert_


FEATURES = ('open', 'high', 'low', 'close', 'volume')
TARGETS = ('open', 'high', 'low', 'close')
CSV_HEADER = ['Date', 'Open', 'High', 'Low', 'Close', 'Adj Close', 'Volume']

TRAIN_RANGE = (dt.date(2005, 1, 1), dt.date(2014, 12, 31))
TEST_RANGE = (dt.date(2015, 1, 1), dt.date(2015, 12, 31))


@dataclass(frozen=True)
class OhlcvRecord:
    """One trading day"""
    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: float

    def values(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in FEATURES)


@dataclass
class ReturnsSeries:
    """
    N rows of returns built from N+1 records

    Row t is raw[t+1] / raw[t] - 1 and is dated raw[t+1].date.
    """
    dates: List[dt.date]
    inputs: np.ndarray          # N x 5, columns in FEATURES order
    raw: List[OhlcvRecord]

    def __len__(self) -> int:
        return len(self.dates)

    def next_day_targets(self) -> np.ndarray:
        """(N-1) x 4: the O,H,L,C returns of the day after each of rows 0..N-2"""
        return self.inputs[1:, :len(TARGETS)]


@dataclass
class WindowSample:
    x: np.ndarray   # L x 5
    y: np.ndarray   # L x 4, row j = O,H,L,C returns one day after x row j


@dataclass
class Batch:
    samples: List[WindowSample]

    def __post_init__(self):
        assert_(len(self.samples) >= 1, "A batch needs at least one window")
        lengths = {len(s.x) for s in self.samples}
        assert_(len(lengths) == 1, f"Batch mixes window lengths {sorted(lengths)}")

    def __len__(self) -> int:
        return len(self.samples)

    def inputs(self) -> np.ndarray:
        """Time-major (L, B, 5)"""
        return np.stack([s.x for s in self.samples], axis=1)

    def targets(self) -> np.ndarray:
        """Time-major (L, B, 4)"""
        return np.stack([s.y for s in self.samples], axis=1)


def _line(pos: int) -> int:
    """File line of a data row (the header is line 1)"""
    return pos + 2


def _first_bad(mask: pd.Series) -> int:
    """Positional index of the first True in mask"""
    return int(np.flatnonzero(mask.to_numpy())[0])


def _exact_float(text: str) -> float:
    """Correctly rounded decimal parse; NaN marks an unparsable cell"""
    try:
        return float(text)
    except ValueError:
        return float('nan')


def parse_csv(text: str) -> List[OhlcvRecord]:
    """
    Parse a Yahoo historical export

    Header: Date,Open,High,Low,Close[,Adj Close],Volume. Adj Close is
    ignored. Records come back sorted by date.
    """
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataError("CSV is empty")
    except pd.errors.ParserError as e:
        raise DataError(f"CSV could not be parsed: {e}")

    columns = [c.strip() for c in frame.columns]
    allowed = (CSV_HEADER, [c for c in CSV_HEADER if c != 'Adj Close'])
    if columns not in allowed:
        raise DataError(f"Unexpected CSV header {','.join(columns)}; "
                        f"expected {','.join(CSV_HEADER)} (Adj Close optional)")
    frame.columns = columns

    dates = pd.to_datetime(frame['Date'].str.strip(), format='%Y-%m-%d', errors='coerce')
    if dates.isna().any():
        pos = _first_bad(dates.isna())
        raise DataError(f"Malformed date {frame['Date'].iloc[pos]!r} on line {_line(pos)}")

    numeric = {}
    for column in ('Open', 'High', 'Low', 'Close', 'Volume'):
        values = frame[column].str.strip().map(_exact_float).astype(np.float64)
        bad = values.isna() | ~np.isfinite(values.fillna(0.0))
        if bad.any():
            pos = _first_bad(bad)
            raise DataError(f"Malformed {column} value {frame[column].iloc[pos]!r} on line {_line(pos)}")
        numeric[column] = values.astype(np.float64)

    duplicated = dates.duplicated()
    if duplicated.any():
        pos = _first_bad(duplicated)
        raise DataError(f"Duplicate date {dates.iloc[pos].date().isoformat()} on line {_line(pos)}")

    for column in ('Open', 'High', 'Low', 'Close'):
        bad = numeric[column] <= 0
        if bad.any():
            pos = _first_bad(bad)
            raise DataError(f"Non-positive {column} price on line {_line(pos)} "
                            f"({dates.iloc[pos].date().isoformat()})")
    if (numeric['Volume'] < 0).any():
        pos = _first_bad(numeric['Volume'] < 0)
        raise DataError(f"Negative volume on line {_line(pos)} ({dates.iloc[pos].date().isoformat()})")

    body = pd.DataFrame(numeric)[['Open', 'Close']]
    inconsistent = (numeric['Low'] > body.min(axis=1)) | (numeric['High'] < body.max(axis=1))
    if inconsistent.any():
        logger.warning(f"{int(inconsistent.sum())} rows have low/high outside the open-close range "
                       f"(first on line {_line(_first_bad(inconsistent))})")

    records = [
        OhlcvRecord(d.date(), o, h, l, c, v)
        for d, o, h, l, c, v in zip(dates, numeric['Open'], numeric['High'],
                                    numeric['Low'], numeric['Close'], numeric['Volume'])
    ]
    records.sort(key=lambda r: r.date)
    logger.debug(f"Parsed {len(records)} daily records")
    return records


def read_csv_file(path: str) -> List[OhlcvRecord]:
    """Read and parse a CSV file from disk"""
    if not os.path.isfile(path):
        raise DataError(f"Data file not found: {path}", code='DATA_NOT_FOUND')
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise DataError(f"Error reading data file {path}: {e}", code='DATA_NOT_FOUND')
    return parse_csv(text)


def format_csv(records: Sequence[OhlcvRecord]) -> str:
    """Write records back out in the Yahoo layout (Adj Close = Close)"""
    frame = pd.DataFrame({
        'Date': [r.date.isoformat() for r in records],
        'Open': [r.open for r in records],
        'High': [r.high for r in records],
        'Low': [r.low for r in records],
        'Close': [r.close for r in records],
        'Adj Close': [r.close for r in records],
        'Volume': [r.volume for r in records],
    }, columns=CSV_HEADER)
    return frame.to_csv(index=False, float_format='%.17g', lineterminator='\n')


def to_returns(records: Sequence[OhlcvRecord]) -> ReturnsSeries:
    """Percentage change x_t / x_{t-1} - 1 for every feature"""
    if len(records) < 2:
        raise DataError(f"Need at least 2 records to form returns, got {len(records)}",
                        code='SERIES_TOO_SHORT')
    raw = list(records)
    prices = np.array([r.values() for r in raw], dtype=np.float64)
    divisors = prices[:-1]
    zero_volume = divisors[:, FEATURES.index('volume')] == 0
    if zero_volume.any():
        day = raw[int(np.flatnonzero(zero_volume)[0])].date
        raise DataError(f"Zero volume on {day.isoformat()} makes the next volume return undefined")
    inputs = prices[1:] / divisors - 1.0
    return ReturnsSeries([r.date for r in raw[1:]], inputs, raw)


def returns_to_prices(first: OhlcvRecord, inputs: np.ndarray) -> np.ndarray:
    """Rebuild the (N+1) x 5 value path by compounding returns onto `first`"""
    growth = np.cumprod(1.0 + np.asarray(inputs, dtype=np.float64), axis=0)
    start = np.array(first.values(), dtype=np.float64)
    return np.vstack([start, start * growth])


def _slice(series: ReturnsSeries, lo: int, hi: int) -> ReturnsSeries:
    # Rows lo..hi-1 need records lo..hi
    return ReturnsSeries(series.dates[lo:hi], series.inputs[lo:hi].copy(), series.raw[lo:hi + 1])


def select_range(series: ReturnsSeries, start: dt.date, end: dt.date, side: str = 'selected') -> ReturnsSeries:
    """Return rows dated within [start, end]; EMPTY_SPLIT when there are none"""
    assert_(start <= end, f"{side.capitalize()} range {start}..{end} is reversed")
    dates = np.array(series.dates, dtype='datetime64[D]')
    idx = np.flatnonzero((dates >= np.datetime64(start)) & (dates <= np.datetime64(end)))
    if idx.size == 0:
        raise DataError(f"No {side} rows between {start.isoformat()} and {end.isoformat()}",
                        code='EMPTY_SPLIT')
    return _slice(series, int(idx[0]), int(idx[-1]) + 1)


def split_by_date(series: ReturnsSeries,
                  train_start: dt.date = TRAIN_RANGE[0], train_end: dt.date = TRAIN_RANGE[1],
                  test_start: dt.date = TEST_RANGE[0], test_end: dt.date = TEST_RANGE[1],
                  ) -> Tuple[ReturnsSeries, ReturnsSeries]:
    """Partition return rows by date; all bounds inclusive"""
    assert_(train_end < test_start or test_end < train_start,
            f"Train range {train_start}..{train_end} overlaps test range {test_start}..{test_end}")
    train = select_range(series, train_start, train_end, 'train')
    test = select_range(series, test_start, test_end, 'test')
    logger.debug(f"Split {len(series)} return rows into {len(train)} train / {len(test)} test")
    return train, test


def window_count(n: int, length: int, stride: int = 1) -> int:
    """floor((N - L - 1) / stride) + 1, or 0 when no window fits"""
    if n < length + 1:
        return 0
    return (n - length - 1) // stride + 1


def make_windows(series: ReturnsSeries, length: int, stride: int = 1) -> List[WindowSample]:
    """Sliding windows of `length` rows; targets look one row ahead"""
    assert_(length >= 1 and stride >= 1, f"Window length and stride must be positive, got {length}, {stride}")
    n = len(series)
    if n < length + 1:
        raise DataError(f"Series of N={n} returns is too short for windows of L={length} "
                        f"(needs L+1={length + 1})", code='SERIES_TOO_SHORT')
    x_all = series.inputs
    y_all = series.inputs[:, :len(TARGETS)]
    return [WindowSample(x_all[o:o + length], y_all[o + 1:o + length + 1])
            for o in range(0, n - length, stride)]


def make_batches(windows: Sequence[WindowSample], batch_size: int, rng: RngState) -> List[Batch]:
    """Shuffle with the seeded stream, then chunk; the last batch may be short"""
    assert_(batch_size >= 1, f"Batch size must be positive, got {batch_size}")
    assert_(len(windows) >= 1, "Cannot batch an empty window list")
    order = rng.permutation(len(windows))
    return [Batch([windows[i] for i in order[k:k + batch_size]])
            for k in range(0, len(order), batch_size)]
