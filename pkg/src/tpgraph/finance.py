"""Daily price tables and log-return ingestion."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .stats import DataError, ObservationMatrix


@dataclass(frozen=True)
class PriceTable:
    dates: tuple
    prices: np.ndarray
    tickers: tuple

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=np.float64)
        if prices.ndim != 2 or prices.shape != (len(self.dates), len(self.tickers)):
            raise DataError("prices must be a T x p matrix matching dates and tickers")
        if len(set(self.tickers)) != len(self.tickers):
            raise DataError("duplicate ticker")
        bad = np.argwhere(~(prices > 0))
        if bad.size:
            r, c = bad[0]
            raise DataError(f"nonpositive price {prices[r, c]!r} on {self.dates[r]} for {self.tickers[c]}")
        for a, b in zip(self.dates, self.dates[1:]):
            if not _parse_date(a) < _parse_date(b):
                raise DataError(f"dates not strictly increasing at {b}")
        object.__setattr__(self, "prices", prices)

    @classmethod
    def read_csv(cls, path) -> "PriceTable":
        """CSV with a ``date`` column followed by one closing-price column per ticker."""
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
        if len(rows) < 2:
            raise DataError(f"{path}: need a header and at least one row")
        header = [c.strip() for c in rows[0]]
        tickers = tuple(header[1:])
        if not tickers:
            raise DataError(f"{path}: no ticker columns")
        dates, values = [], []
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: ragged row")
            dates.append(row[0].strip())
            parsed = []
            for ticker, cell in zip(tickers, row[1:]):
                cell = cell.strip()
                if cell == "" or cell.lower() in ("na", "nan", "null"):
                    raise DataError(f"{path}:{lineno}: missing price for {ticker} on {row[0]}")
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataError(f"{path}:{lineno}: bad price {cell!r} for {ticker}") from None
            values.append(parsed)
        return cls(tuple(dates), np.array(values), tickers)


def _parse_date(text: str) -> datetime:
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        raise DataError(f"unparseable date {text!r}; expected ISO 8601") from None


def log_returns(table: PriceTable, centered: bool = True) -> ObservationMatrix:
    """``log(S_t / S_{t-1})`` per ticker; column means removed when ``centered``."""
    if len(table.dates) < 2:
        raise DataError("need at least two dates")
    p = table.prices
    x = np.log(p[1:] / p[:-1])
    if centered:
        x = x - x.mean(axis=0)
    return ObservationMatrix(x, table.tickers)
