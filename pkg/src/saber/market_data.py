"""Immutable market data store with point-in-time (cutoff-enforced) views.

Data is loaded once from CSV/JSONL files and never mutated afterwards. Every
strategy-facing read goes through :class:`PointInTimeView`, which refuses to
return any bar or text record dated after its cutoff; this is the look-ahead
guard. Survivorship is handled by :class:`Universe`, which keeps membership
intervals for delisted symbols alongside live ones.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InsufficientHistory,
    LookAheadViolation,
    MalformedRow,
    MissingFile,
    UnknownSymbol,
    UnsortedOrDuplicateDate,
)

PRICE_HEADER = ["date", "open", "high", "low", "close", "adj_close", "volume"]
MEMBERSHIP_HEADER = ["symbol", "start_date", "end_date", "delisted"]
TEXT_KINDS = ("news", "filing_10k", "filing_10q")


@dataclass(frozen=True)
class PriceBar:
    date: dt.date
    open: float
    high: float
    low: float
    close: float
    adj_close: float
    volume: float


@dataclass(frozen=True)
class TextRecord:
    symbol: str
    date: dt.date
    kind: str
    text: str


class PriceSeries:
    """Date-sorted daily bars for one symbol, with column arrays for kernels."""

    def __init__(self, symbol: str, bars: Sequence[PriceBar]):
        self.symbol = symbol
        self.bars: tuple[PriceBar, ...] = tuple(bars)
        self._ordinals = np.array([b.date.toordinal() for b in self.bars], dtype=np.int64)
        self.open = np.array([b.open for b in self.bars])
        self.high = np.array([b.high for b in self.bars])
        self.low = np.array([b.low for b in self.bars])
        self.close = np.array([b.close for b in self.bars])
        self.adj_close = np.array([b.adj_close for b in self.bars])
        self.volume = np.array([b.volume for b in self.bars])

    def __len__(self) -> int:
        return len(self.bars)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PriceSeries)
            and self.symbol == other.symbol
            and self.bars == other.bars
        )

    @property
    def dates(self) -> tuple[dt.date, ...]:
        return tuple(b.date for b in self.bars)

    def count_until(self, cutoff: dt.date) -> int:
        """Number of bars dated at or before ``cutoff``."""
        return int(np.searchsorted(self._ordinals, cutoff.toordinal(), side="right"))

    def index_of(self, date: dt.date) -> int | None:
        i = int(np.searchsorted(self._ordinals, date.toordinal()))
        if i < len(self.bars) and self.bars[i].date == date:
            return i
        return None

    def dates_between(self, start: dt.date, end: dt.date) -> list[dt.date]:
        """Bar dates d with start <= d < end."""
        lo = int(np.searchsorted(self._ordinals, start.toordinal(), side="left"))
        hi = int(np.searchsorted(self._ordinals, end.toordinal(), side="left"))
        return [self.bars[i].date for i in range(lo, hi)]

    def last_date_before(self, date: dt.date) -> dt.date | None:
        i = int(np.searchsorted(self._ordinals, date.toordinal(), side="left"))
        return self.bars[i - 1].date if i > 0 else None


@dataclass(frozen=True)
class MembershipInterval:
    symbol: str
    start_date: dt.date
    end_date: dt.date | None
    delisted: bool

    def contains(self, date: dt.date) -> bool:
        if date < self.start_date:
            return False
        return self.end_date is None or date <= self.end_date


class Universe:
    """Point-in-time index membership, including delisted symbols."""

    def __init__(self, intervals: Iterable[MembershipInterval]):
        self.intervals = tuple(intervals)
        by_symbol: dict[str, list[MembershipInterval]] = {}
        for iv in self.intervals:
            by_symbol.setdefault(iv.symbol, []).append(iv)
        for symbol, ivs in by_symbol.items():
            ivs.sort(key=lambda iv: iv.start_date)
            for a, b in zip(ivs, ivs[1:]):
                if a.end_date is None or a.end_date >= b.start_date:
                    raise MalformedRow(0, f"overlapping membership intervals for {symbol}")
        self._by_symbol = by_symbol

    def constituents_at(self, date: dt.date) -> set[str]:
        """Symbols with a membership interval containing ``date``."""
        return {
            symbol
            for symbol, ivs in self._by_symbol.items()
            if any(iv.contains(date) for iv in ivs)
        }

    @property
    def symbols(self) -> set[str]:
        return set(self._by_symbol)


class PointInTimeView:
    """Read-only lens over one symbol's data, clamped to ``cutoff`` (inclusive)."""

    def __init__(self, store: "MarketDataStore", symbol: str, cutoff: dt.date):
        self.store = store
        self.symbol = symbol
        self.cutoff = cutoff
        self._series = store.series(symbol)
        self._n = self._series.count_until(cutoff)

    @property
    def available(self) -> int:
        """Number of observable bars (dated <= cutoff)."""
        return self._n

    @property
    def last_date(self) -> dt.date | None:
        return self._series.bars[self._n - 1].date if self._n else None

    def with_cutoff(self, cutoff: dt.date) -> "PointInTimeView":
        return PointInTimeView(self.store, self.symbol, cutoff)

    def _check(self, date: dt.date) -> None:
        if date > self.cutoff:
            raise LookAheadViolation(
                f"{self.symbol}: {date} is after cutoff {self.cutoff}"
            )

    def bar_at(self, date: dt.date) -> PriceBar | None:
        self._check(date)
        i = self._series.index_of(date)
        return self._series.bars[i] if i is not None else None

    def window_bars(self, n: int) -> tuple[PriceBar, ...]:
        """Last ``n`` bars at or before cutoff, oldest first."""
        if n == 0:
            return ()
        if n > self._n:
            raise InsufficientHistory(n, self._n)
        return self._series.bars[self._n - n : self._n]

    def window_adj_close(self, n: int) -> np.ndarray:
        if n > self._n:
            raise InsufficientHistory(n, self._n)
        return self._series.adj_close[self._n - n : self._n]

    def window_hlc(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Raw (high, low, close) arrays for the last ``n`` bars."""
        if n > self._n:
            raise InsufficientHistory(n, self._n)
        s = self._series
        lo = self._n - n
        return s.high[lo : self._n], s.low[lo : self._n], s.close[lo : self._n]

    def bars_between(self, start: dt.date, end: dt.date) -> tuple[PriceBar, ...]:
        """Bars with start <= date <= end; ``end`` must not pass the cutoff."""
        self._check(end)
        return tuple(
            b for b in self._series.bars[: self._n] if start <= b.date <= end
        )

    def texts(self, kinds: set[str] | None = None) -> list[TextRecord]:
        return self.store.texts_until(self.symbol, self.cutoff, kinds)


class MarketDataStore:
    """Write-once container for price series, membership, and text records."""

    def __init__(self) -> None:
        self._series: dict[str, PriceSeries] = {}
        self._texts: dict[str, list[TextRecord]] = {}

    def add_series(self, series: PriceSeries) -> None:
        self._series[series.symbol] = series

    def add_texts(self, records: Iterable[TextRecord]) -> None:
        for rec in records:
            self._texts.setdefault(rec.symbol, []).append(rec)
        for recs in self._texts.values():
            recs.sort(key=lambda r: r.date)

    @property
    def symbols(self) -> set[str]:
        return set(self._series)

    def series(self, symbol: str) -> PriceSeries:
        try:
            return self._series[symbol]
        except KeyError:
            raise UnknownSymbol(symbol) from None

    def view_until(self, symbol: str, cutoff: dt.date) -> PointInTimeView:
        """Point-in-time view; every read is clamped to dates <= cutoff."""
        return PointInTimeView(self, symbol, cutoff)

    def texts_until(
        self, symbol: str, cutoff: dt.date, kinds: set[str] | None = None
    ) -> list[TextRecord]:
        """Text records dated <= cutoff, sorted by date; empty list is valid."""
        return [
            r
            for r in self._texts.get(symbol, [])
            if r.date <= cutoff and (kinds is None or r.kind in kinds)
        ]


# -- loaders -------------------------------------------------------------------

def _parse_price_row(row: list[str], line: int) -> PriceBar:
    if len(row) != len(PRICE_HEADER):
        raise MalformedRow(line, f"expected {len(PRICE_HEADER)} columns, got {len(row)}")
    try:
        date = dt.date.fromisoformat(row[0])
        o, h, l, c, ac, v = (float(x) for x in row[1:])
    except ValueError as exc:
        raise MalformedRow(line, str(exc)) from None
    if min(o, h, l, c, ac) <= 0:
        raise MalformedRow(line, "prices must be strictly positive")
    if v < 0:
        raise MalformedRow(line, "volume must be non-negative")
    if l > min(o, c) or h < max(o, c):
        raise MalformedRow(line, "low/high inconsistent with open/close")
    return PriceBar(date, o, h, l, c, ac, v)


def load_price_csv(path: str | Path, symbol: str | None = None) -> PriceSeries:
    """Load one symbol's daily bars from CSV.

    The header must be exactly ``date,open,high,low,close,adj_close,volume``.
    Rows violating the bar invariants are rejected with their line number.
    The symbol defaults to the file's stem.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "empty file") from None
        if header != PRICE_HEADER:
            raise MalformedRow(1, f"bad header {header!r}")
        bars: list[PriceBar] = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            bar = _parse_price_row(row, line)
            if bars and bar.date <= bars[-1].date:
                raise UnsortedOrDuplicateDate(bar.date)
            bars.append(bar)
    return PriceSeries(symbol or path.stem, bars)


def load_prices_dir(directory: str | Path, store: MarketDataStore | None = None) -> MarketDataStore:
    """Load every ``<TICKER>.csv`` in a directory into a store."""
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingFile(str(directory))
    store = store or MarketDataStore()
    for path in sorted(directory.glob("*.csv")):
        store.add_series(load_price_csv(path))
    return store


def load_membership_csv(path: str | Path) -> Universe:
    """Load membership intervals; empty end_date means the symbol is still a member."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    intervals: list[MembershipInterval] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "empty file") from None
        if header != MEMBERSHIP_HEADER:
            raise MalformedRow(1, f"bad header {header!r}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise MalformedRow(line, "expected 4 columns")
            symbol, start_s, end_s, delisted_s = row
            try:
                start = dt.date.fromisoformat(start_s)
                end = dt.date.fromisoformat(end_s) if end_s else None
            except ValueError as exc:
                raise MalformedRow(line, str(exc)) from None
            if delisted_s not in ("true", "false"):
                raise MalformedRow(line, f"delisted must be true/false, got {delisted_s!r}")
            if end is not None and end < start:
                raise MalformedRow(line, "end_date before start_date")
            intervals.append(MembershipInterval(symbol, start, end, delisted_s == "true"))
    return Universe(intervals)


def load_texts_jsonl(path: str | Path) -> list[TextRecord]:
    """Load optional text records (one JSON object per line)."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    records: list[TextRecord] = []
    with path.open() as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rec = TextRecord(
                    symbol=obj["symbol"],
                    date=dt.date.fromisoformat(obj["date"]),
                    kind=obj["kind"],
                    text=obj["text"],
                )
            except (ValueError, KeyError, TypeError) as exc:
                raise MalformedRow(line_no, str(exc)) from None
            if rec.kind not in TEXT_KINDS:
                raise MalformedRow(line_no, f"unknown kind {rec.kind!r}")
            records.append(rec)
    return records
