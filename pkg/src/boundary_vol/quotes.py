"""Best bid/ask quote ingestion.

Input is a CSV file with one row per order-book event. A
:class:`QuoteSchema` maps the file's column names to the three required
fields (time, ask price, bid price) and carries the time unit and a price
divisor, so LOBSTER-style files (integer prices in units of 1e-4 dollars,
optionally without a header) load with a schema block such as::

    {"time": "Time", "ask_price": "AskPrice1", "bid_price": "BidPrice1",
     "time_unit": "s", "price_scale": 10000}

Processing order: rows outside the session window are dropped, crossed
quotes (ask < bid) are dropped, consecutive rows sharing a timestamp keep
only the last (prevailing) quote, and consecutive identical quotes are
merged into one event with a multiplicity. Every dropped row is counted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ConfigError, DataError

TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}


@dataclass(frozen=True)
class QuoteSchema:
    """Column map and units for quote files.

    Parameters
    ----------
    time, ask_price, bid_price : str
        Column names in the file.
    time_unit : {"s", "ms", "us", "ns"}
    price_scale : float
        Raw prices are divided by this before taking logs.
    session_start, session_end : float, optional
        Session window in seconds; defaults to the first and last retained
        timestamps.
    columns : tuple of str, optional
        Column names for a headerless file.
    """

    time: str = "time"
    ask_price: str = "ask_price"
    bid_price: str = "bid_price"
    time_unit: str = "s"
    price_scale: float = 1.0
    session_start: float | None = None
    session_end: float | None = None
    columns: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.time_unit not in TIME_UNITS:
            raise ConfigError(f"time_unit must be one of {sorted(TIME_UNITS)}")
        if not self.price_scale > 0:
            raise ConfigError("price_scale must be positive")
        if (self.session_start is not None and self.session_end is not None
                and not self.session_end > self.session_start):
            raise ConfigError("session_end must exceed session_start")

    @classmethod
    def from_dict(cls, d: Mapping | None) -> "QuoteSchema":
        d = dict(d or {})
        if d.get("columns") is not None:
            d["columns"] = tuple(d["columns"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown schema keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class QuoteSeries:
    """One trading day of best quotes on the rescaled horizon [0, 1].

    ``best_ask`` and ``best_bid`` are log-prices at the retained events;
    ``multiplicity`` counts the raw rows merged into each event.
    ``counts`` reconciles the raw row count with the retained events.
    """

    day_id: str
    timestamps: np.ndarray
    best_ask: np.ndarray
    best_bid: np.ndarray
    multiplicity: np.ndarray
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float)
        if len(t) == 0:
            raise DataError("quote series is empty")
        if not (len(t) == len(self.best_ask) == len(self.best_bid) == len(self.multiplicity)):
            raise DataError("quote arrays differ in length")
        if np.any(np.diff(t) <= 0):
            raise DataError("timestamps must be strictly increasing")
        if t[0] < 0 or t[-1] > 1:
            raise DataError("timestamps must lie in [0, 1]")
        if np.any(np.asarray(self.best_ask) < np.asarray(self.best_bid)):
            raise DataError("best ask below best bid")

    def side_values(self, side: str) -> np.ndarray:
        """Log-prices of one side with consecutive repeats of that side merged."""
        if side not in ("ask", "bid"):
            raise ConfigError("side must be 'ask' or 'bid'")
        v = np.asarray(self.best_ask if side == "ask" else self.best_bid, dtype=float)
        keep = np.concatenate(([True], v[1:] != v[:-1]))
        return v[keep]

    @property
    def n_ask(self) -> int:
        return len(self.side_values("ask"))

    @property
    def n_bid(self) -> int:
        return len(self.side_values("bid"))

    def summary(self) -> dict:
        return {"day_id": self.day_id, "events": len(self.timestamps),
                "n_ask": self.n_ask, "n_bid": self.n_bid, **self.counts}


def _rows(path: Path, schema: QuoteSchema):
    with open(path, newline="") as fh:
        if schema.columns is not None:
            reader = csv.DictReader(fh, fieldnames=list(schema.columns))
        else:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise DataError(f"{path}: empty file")
            missing = {schema.time, schema.ask_price, schema.bid_price} - set(reader.fieldnames)
            if missing:
                raise DataError(f"{path}: missing columns {sorted(missing)}")
        # Header is line 1 unless the file is headerless.
        first = 1 if schema.columns is not None else 2
        for i, row in enumerate(reader, start=first):
            try:
                yield i, float(row[schema.time]), float(row[schema.ask_price]), float(row[schema.bid_price])
            except (TypeError, ValueError, KeyError) as exc:
                raise DataError(f"{path}: unparsable row {i}: {exc}") from None


def ingest_quotes_csv(path, schema: QuoteSchema | Mapping | None = None, day_id: str | None = None) -> QuoteSeries:
    """Load one day of best quotes.

    Raises
    ------
    DataError
        On an empty file, missing columns, a timestamp smaller than its
        predecessor (reporting the first such row) or a non-positive price.

    Examples
    --------
    A three-row file with times 0, 1800 and 3600 seconds yields rescaled
    timestamps ``(0, 0.5, 1)``.
    """
    path = Path(path)
    if not isinstance(schema, QuoteSchema):
        schema = QuoteSchema.from_dict(schema)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    unit = TIME_UNITS[schema.time_unit]
    times, asks, bids = [], [], []
    rows_read = crossed = outside = 0
    prev = -math.inf
    for line, t, a, b in _rows(path, schema):
        rows_read += 1
        t *= unit
        if not math.isfinite(t) or t < prev:
            raise DataError(f"{path}: time decreases at row {line}")
        prev = t
        if not (a > 0 and b > 0) or not (math.isfinite(a) and math.isfinite(b)):
            raise DataError(f"{path}: non-positive price at row {line}")
        if (schema.session_start is not None and t < schema.session_start) or (
                schema.session_end is not None and t > schema.session_end):
            outside += 1
            continue
        if a < b:
            crossed += 1
            continue
        times.append(t)
        asks.append(a / schema.price_scale)
        bids.append(b / schema.price_scale)
    if rows_read == 0:
        raise DataError(f"{path}: empty file")
    if not times:
        raise DataError(f"{path}: no valid quotes")

    t = np.asarray(times)
    ask = np.log(np.asarray(asks))
    bid = np.log(np.asarray(bids))
    # Last quote per timestamp is the prevailing one.
    last = np.concatenate((t[1:] != t[:-1], [True]))
    same_time = int(np.sum(~last))
    t, ask, bid = t[last], ask[last], bid[last]
    change = np.concatenate(([True], (ask[1:] != ask[:-1]) | (bid[1:] != bid[:-1])))
    starts = np.flatnonzero(change)
    multiplicity = np.diff(np.append(starts, len(t)))
    duplicates = int(len(t) - len(starts))
    t, ask, bid = t[starts], ask[starts], bid[starts]

    t0 = schema.session_start if schema.session_start is not None else t[0]
    t1 = schema.session_end if schema.session_end is not None else t[-1]
    if not t1 > t0:
        raise DataError(f"{path}: session has zero length")
    counts = {
        "rows_read": rows_read,
        "crossed": crossed,
        "outside_session": outside,
        "same_timestamp": same_time,
        "duplicates": duplicates,
        "retained": int(len(t)),
    }
    return QuoteSeries(
        day_id=day_id or path.stem,
        timestamps=(t - t0) / (t1 - t0),
        best_ask=ask,
        best_bid=bid,
        multiplicity=multiplicity,
        counts=counts,
    )


def write_quotes_csv(path, series: QuoteSeries) -> None:
    """Write a series with exp-transformed prices in the default schema."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "ask_price", "bid_price"])
        for t, a, b in zip(series.timestamps, series.best_ask, series.best_bid):
            w.writerow([repr(float(t)), repr(float(np.exp(a))), repr(float(np.exp(b)))])
