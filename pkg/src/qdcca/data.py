"""Quote ingestion and return-matrix construction.

Input files are minute bars, either one CSV per ticker with columns
``timestamp,price`` or a single wide CSV ``timestamp,<ticker>,...``.
Timestamps may be epoch seconds, epoch minutes or ISO-8601 and are stored
as epoch minutes throughout.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import (
    EmptyIntersectionError,
    QuoteParseError,
    ShapeMismatchError,
    ZeroVarianceError,
)


@dataclass(frozen=True)
class QuoteSeries:
    """One asset's minute-bar price history."""

    ticker: str
    timestamps: np.ndarray  # int64 epoch minutes, strictly increasing
    prices: np.ndarray      # float64, > 0

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        px = np.asarray(self.prices, dtype=np.float64)
        if ts.shape != px.shape or ts.ndim != 1:
            raise ShapeMismatchError(
                f"{self.ticker}: timestamps and prices must be equal-length 1-D arrays"
            )
        if ts.size and np.any(np.diff(ts) <= 0):
            bad = int(np.argmax(np.diff(ts) <= 0)) + 1
            raise QuoteParseError(
                f"timestamps not strictly increasing at row {bad + 1}",
                path=self.ticker,
            )
        if np.any(~np.isfinite(px)) or np.any(px <= 0):
            bad = int(np.argmax(~np.isfinite(px) | (px <= 0)))
            raise QuoteParseError(
                f"nonpositive or non-finite price at row {bad + 1}",
                path=self.ticker,
            )
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", px)

    def __len__(self) -> int:
        return int(self.timestamps.size)


@dataclass
class ReturnMatrix:
    """N aligned return series on a shared timestamp grid."""

    tickers: tuple[str, ...]
    timestamps: np.ndarray  # int64 epoch minutes, length T
    values: np.ndarray      # float64 (N, T)
    normalized: bool = False
    filled: np.ndarray | None = None  # bool (T,), True where zero-filled

    @property
    def n_assets(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]


@dataclass
class AlignmentReport:
    """Per-series retention after restriction to the common grid."""

    retention: dict[str, float] = field(default_factory=dict)
    excluded: dict[str, str] = field(default_factory=dict)
    filled_fraction: float = 0.0
    grid: str = "intersection"


_ISO_HINTS = ("-", ":", "T")


def _parse_timestamp(token: str, path: str, line_no: int) -> int:
    token = token.strip()
    if any(h in token for h in _ISO_HINTS):
        try:
            dt = datetime.fromisoformat(token.replace("Z", "+00:00"))
        except ValueError as exc:
            raise QuoteParseError(f"bad timestamp {token!r}: {exc}", path, line_no)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        seconds = dt.timestamp()
    else:
        try:
            seconds = float(token)
        except ValueError as exc:
            raise QuoteParseError(f"bad timestamp {token!r}: {exc}", path, line_no)
        # Epoch minutes are plausible below ~1e8 (year 2160); anything larger
        # is epoch seconds.
        if seconds < 1e8:
            seconds *= 60.0
    minutes = seconds / 60.0
    rounded = round(minutes)
    if abs(minutes - rounded) > 1e-6:
        raise QuoteParseError(
            f"timestamp {token!r} is not on a whole minute", path, line_no
        )
    return int(rounded)


def _parse_price(token: str, path: str, line_no: int) -> float:
    try:
        price = float(token)
    except ValueError as exc:
        raise QuoteParseError(f"bad price {token!r}: {exc}", path, line_no)
    if not math.isfinite(price) or price <= 0:
        raise QuoteParseError(f"nonpositive price {token!r}", path, line_no)
    return price


def _is_header(row) -> bool:
    try:
        float(row[0])
        return False
    except ValueError:
        return "-" not in row[0] and ":" not in row[0]


def _require_sorted(ts: np.ndarray, path: str):
    gaps = np.diff(ts)
    if np.any(gaps <= 0):
        bad = int(np.argmax(gaps <= 0))
        raise QuoteParseError(
            "timestamps not strictly increasing", path, line=bad + 2
        )


def _load_narrow(path: str, ticker: str) -> QuoteSeries:
    timestamps, prices = [], []
    seen = set()
    with open(path, newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row or (line_no == 1 and _is_header(row)):
                continue
            if len(row) < 2:
                raise QuoteParseError("expected `timestamp,price`", path, line_no)
            ts = _parse_timestamp(row[0], path, line_no)
            if ts in seen:
                raise QuoteParseError(f"duplicate timestamp {row[0]!r}", path, line_no)
            seen.add(ts)
            timestamps.append(ts)
            prices.append(_parse_price(row[1], path, line_no))
    if len(timestamps) < 2:
        raise QuoteParseError("fewer than 2 rows", path)
    ts_arr = np.asarray(timestamps, dtype=np.int64)
    _require_sorted(ts_arr, path)
    return QuoteSeries(
        ticker=ticker,
        timestamps=ts_arr,
        prices=np.asarray(prices, dtype=np.float64),
    )


def _load_wide(path: str) -> list[QuoteSeries]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise QuoteParseError("empty file", path)
        if len(header) < 2 or _is_header([header[0]]) is False:
            raise QuoteParseError(
                "wide CSV needs a `timestamp,<ticker>,...` header row", path, 1
            )
        tickers = [h.strip() for h in header[1:]]
        timestamps, columns = [], [[] for _ in tickers]
        seen = set()
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(tickers) + 1:
                raise QuoteParseError(
                    f"expected {len(tickers) + 1} columns, got {len(row)}", path, line_no
                )
            ts = _parse_timestamp(row[0], path, line_no)
            if ts in seen:
                raise QuoteParseError(f"duplicate timestamp {row[0]!r}", path, line_no)
            seen.add(ts)
            timestamps.append(ts)
            for k, token in enumerate(row[1:]):
                columns[k].append(_parse_price(token, path, line_no))
    if len(timestamps) < 2:
        raise QuoteParseError("fewer than 2 rows", path)
    ts_arr = np.asarray(timestamps, dtype=np.int64)
    _require_sorted(ts_arr, path)
    return [
        QuoteSeries(
            ticker=t,
            timestamps=ts_arr,
            prices=np.asarray(columns[k], dtype=np.float64),
        )
        for k, t in enumerate(tickers)
    ]


def load_quotes(path: str) -> list[QuoteSeries]:
    """Load quotes from a directory of per-ticker CSVs or one wide CSV."""
    if os.path.isdir(path):
        series = []
        for name in sorted(os.listdir(path)):
            if not name.lower().endswith(".csv"):
                continue
            ticker = os.path.splitext(name)[0]
            series.append(_load_narrow(os.path.join(path, name), ticker))
        if not series:
            raise QuoteParseError("no .csv files found", path)
        return series
    with open(path, newline="") as fh:
        header = fh.readline()
    if header.count(",") >= 2:
        return _load_wide(path)
    ticker = os.path.splitext(os.path.basename(path))[0]
    return [_load_narrow(path, ticker)]


def log_returns(quotes: QuoteSeries) -> np.ndarray:
    """Log-price differences; length T - 1."""
    if len(quotes) < 2:
        raise ShapeMismatchError(f"{quotes.ticker}: need at least 2 prices")
    return np.diff(np.log(quotes.prices))


def normalize(x) -> np.ndarray:
    """Shift to zero mean and scale to unit variance (divisor-T convention)."""
    arr = np.asarray(x, dtype=np.float64)
    mean = arr.mean()
    std = arr.std()
    if std == 0.0 or not np.isfinite(std):
        raise ZeroVarianceError("cannot normalize a constant series")
    return (arr - mean) / std


def rebase_prices(alt: QuoteSeries, base: QuoteSeries) -> QuoteSeries:
    """Re-express ``alt`` in units of ``base`` on their common timestamps."""
    common, ia, ib = np.intersect1d(
        alt.timestamps, base.timestamps, assume_unique=True, return_indices=True
    )
    if common.size == 0:
        raise EmptyIntersectionError(
            f"{alt.ticker} and {base.ticker} share no timestamps"
        )
    return QuoteSeries(
        ticker=alt.ticker,
        timestamps=common,
        prices=alt.prices[ia] / base.prices[ib],
    )


def align_series(series: list[QuoteSeries]) -> tuple[np.ndarray, np.ndarray, AlignmentReport]:
    """Restrict every series to the intersection of all timestamp grids.

    Returns (timestamps, prices (N, T), report with per-series retention).
    """
    if len(series) < 2:
        raise ShapeMismatchError("need at least 2 series to align")
    common = series[0].timestamps
    for qs in series[1:]:
        common = np.intersect1d(common, qs.timestamps, assume_unique=True)
    if common.size == 0:
        raise EmptyIntersectionError("series share no common timestamps")
    report = AlignmentReport()
    prices = np.empty((len(series), common.size))
    for k, qs in enumerate(series):
        idx = np.searchsorted(qs.timestamps, common)
        prices[k] = qs.prices[idx]
        report.retention[qs.ticker] = common.size / len(qs)
    return common, prices, report


def build_return_matrix(
    series: list[QuoteSeries],
    *,
    base: str | None = None,
    grid: str = "uniform",
    stable_threshold: float = 1e-6,
) -> tuple[ReturnMatrix, AlignmentReport]:
    """Full ingestion path: optional re-basing, stable-asset exclusion,
    alignment and gap handling.

    grid = "uniform" keeps the wall-clock minute grid and fills missing
    minutes with zero returns (marked in ``filled`` so windows with too many
    fills can be skipped); grid = "intersection" re-indexes the common
    samples contiguously, eliminating session gaps.
    """
    if grid not in ("uniform", "intersection"):
        raise ShapeMismatchError(f"unknown grid policy {grid!r}")
    excluded: dict[str, str] = {}
    # Peg detection runs on the raw quote-currency series: re-based, a
    # pegged asset is just the inverse of the base and looks volatile.
    kept = []
    for qs in series:
        if log_returns(qs).std() < stable_threshold:
            excluded[qs.ticker] = "near-zero return variance (pegged to quote currency)"
        else:
            kept.append(qs)
    if base is not None:
        base_series = next((s for s in series if s.ticker == base), None)
        if base_series is None:
            raise ShapeMismatchError(f"base ticker {base!r} not among inputs")
        rebased = []
        for qs in kept:
            if qs.ticker == base:
                excluded[qs.ticker] = "base asset of the re-based universe"
                continue
            rebased.append(rebase_prices(qs, base_series))
        kept = rebased
    if len(kept) < 2:
        raise ShapeMismatchError("fewer than 2 series left after exclusions")
    timestamps, prices, report = align_series(kept)
    report.excluded = excluded
    report.grid = grid
    tickers = tuple(qs.ticker for qs in kept)
    if grid == "intersection":
        returns = np.diff(np.log(prices), axis=1)
        return (
            ReturnMatrix(
                tickers=tickers,
                timestamps=timestamps[1:],
                values=returns,
                filled=np.zeros(timestamps.size - 1, dtype=bool),
            ),
            report,
        )
    full = np.arange(timestamps[0], timestamps[-1] + 1, dtype=np.int64)
    raw = np.diff(np.log(prices), axis=1)
    values = np.zeros((len(kept), full.size - 1))
    pos = np.searchsorted(full, timestamps[1:])
    values[:, pos - 1] = raw
    filled = np.ones(full.size - 1, dtype=bool)
    filled[pos - 1] = False
    report.filled_fraction = float(filled.mean())
    return (
        ReturnMatrix(
            tickers=tickers,
            timestamps=full[1:],
            values=values,
            filled=filled,
        ),
        report,
    )
