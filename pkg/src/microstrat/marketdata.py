"""Tick and bar data: ingestion, validation, resampling, synthesis, log returns.

Timestamps are integer nanoseconds since epoch and are interpreted in the
exchange's local clock. A session calendar (intraday open/close intervals,
seconds of day) constrains where ticks may live; resampling never builds a
bar across a session break.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError

NS_PER_SEC = 1_000_000_000
NS_PER_DAY = 86_400 * NS_PER_SEC

# CSI300 index futures hours: 09:30-11:30 and 13:00-15:00.
CSI300_SESSIONS: tuple[tuple[int, int], ...] = (
    (9 * 3600 + 1800, 11 * 3600 + 1800),
    (13 * 3600, 15 * 3600),
)

TICK_CSV_HEADER = ("ts_ns", "price", "volume", "bid1", "ask1")
BAR_CSV_HEADER = ("ts_ns", "open", "high", "low", "close", "volume")


# ---------------------------------------------------------------------------
# Session calendar
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SessionCalendar:
    """Intraday trading sessions as (open, close) seconds-of-day pairs."""

    sessions: tuple[tuple[int, int], ...] = CSI300_SESSIONS

    def __post_init__(self) -> None:
        if not self.sessions:
            raise DataError("calendar needs at least one session")
        prev_close = -1
        for open_s, close_s in self.sessions:
            if not (0 <= open_s < close_s <= 86_400):
                raise DataError(f"bad session interval ({open_s}, {close_s})")
            if open_s <= prev_close:
                raise DataError("sessions must be disjoint and increasing")
            prev_close = close_s

    @property
    def opens_ns(self) -> np.ndarray:
        return np.array([s[0] for s in self.sessions], dtype=np.int64) * NS_PER_SEC

    @property
    def closes_ns(self) -> np.ndarray:
        return np.array([s[1] for s in self.sessions], dtype=np.int64) * NS_PER_SEC

    def seconds_per_day(self) -> int:
        return sum(close - open_ for open_, close in self.sessions)

    def session_index(self, ts: np.ndarray) -> np.ndarray:
        """Session slot of each timestamp, or -1 when outside every session."""
        sod = np.asarray(ts, dtype=np.int64) % NS_PER_DAY
        idx = np.searchsorted(self.opens_ns, sod, side="right") - 1
        ok = (idx >= 0) & (sod <= self.closes_ns[np.clip(idx, 0, None)])
        return np.where(ok, idx, -1)


DEFAULT_CALENDAR = SessionCalendar()


# ---------------------------------------------------------------------------
# Core containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Tick:
    """One trade: epoch-ns timestamp, price, integer volume, optional L1 quotes."""

    ts: int
    price: float
    volume: int
    bid1: float | None = None
    ask1: float | None = None

    def __post_init__(self) -> None:
        if not self.price > 0:
            raise DataError(f"tick price must be positive, got {self.price}")
        if self.volume < 1:
            raise DataError(f"tick volume must be >= 1, got {self.volume}")
        if self.bid1 is not None and not self.bid1 > 0:
            raise DataError("bid1 must be positive when present")
        if self.ask1 is not None and not self.ask1 > 0:
            raise DataError("ask1 must be positive when present")
        if self.bid1 is not None and self.ask1 is not None and self.bid1 > self.ask1:
            raise DataError(f"crossed quotes: bid1 {self.bid1} > ask1 {self.ask1}")


@dataclass(frozen=True)
class TickSeries:
    """Validated, time-ordered trades for one instrument.

    Columns are stored as numpy arrays; missing quotes are NaN. All ticks must
    fall inside a calendar session.
    """

    ts: np.ndarray
    price: np.ndarray
    volume: np.ndarray
    bid1: np.ndarray | None = None
    ask1: np.ndarray | None = None
    instrument: str = "SYN"
    calendar: SessionCalendar = field(default=DEFAULT_CALENDAR)

    def __post_init__(self) -> None:
        ts = np.ascontiguousarray(self.ts, dtype=np.int64)
        price = np.ascontiguousarray(self.price, dtype=np.float64)
        volume = np.ascontiguousarray(self.volume, dtype=np.int64)
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "price", price)
        object.__setattr__(self, "volume", volume)
        n = ts.shape[0]
        if price.shape[0] != n or volume.shape[0] != n:
            raise DataError("tick columns must have equal length")
        for name in ("bid1", "ask1"):
            col = getattr(self, name)
            if col is not None:
                col = np.ascontiguousarray(col, dtype=np.float64)
                if col.shape[0] != n:
                    raise DataError("tick columns must have equal length")
                object.__setattr__(self, name, col)
        if n == 0:
            return
        if not np.all(price > 0):
            i = int(np.flatnonzero(~(price > 0))[0])
            raise DataError(f"non-positive price at tick {i}")
        if not np.all(volume >= 1):
            i = int(np.flatnonzero(volume < 1)[0])
            raise DataError(f"volume < 1 at tick {i}")
        if n > 1 and np.any(np.diff(ts) < 0):
            i = int(np.flatnonzero(np.diff(ts) < 0)[0])
            raise DataError(f"timestamps decrease between ticks {i} and {i + 1}")
        if self.bid1 is not None and self.ask1 is not None:
            both = np.isfinite(self.bid1) & np.isfinite(self.ask1)
            if np.any(self.bid1[both] > self.ask1[both]):
                i = int(np.flatnonzero(both)[np.flatnonzero(self.bid1[both] > self.ask1[both])[0]])
                raise DataError(f"crossed quotes at tick {i}")
        if np.any(self.calendar.session_index(ts) < 0):
            i = int(np.flatnonzero(self.calendar.session_index(ts) < 0)[0])
            raise DataError(f"tick {i} falls outside every session interval")

    def __len__(self) -> int:
        return int(self.ts.shape[0])

    def __getitem__(self, i: int) -> Tick:
        def opt(col: np.ndarray | None) -> float | None:
            if col is None or not np.isfinite(col[i]):
                return None
            return float(col[i])

        return Tick(int(self.ts[i]), float(self.price[i]), int(self.volume[i]),
                    opt(self.bid1), opt(self.ask1))

    def __iter__(self) -> Iterator[Tick]:
        for i in range(len(self)):
            yield self[i]

    def day_index(self) -> np.ndarray:
        """Calendar day (epoch days) per tick."""
        return self.ts // NS_PER_DAY

    def session_uid(self) -> np.ndarray:
        """Globally unique session id per tick (day and intraday session)."""
        n_sess = len(self.calendar.sessions)
        return self.day_index() * n_sess + self.calendar.session_index(self.ts)

    @classmethod
    def from_ticks(cls, ticks: Sequence[Tick], instrument: str = "SYN",
                   calendar: SessionCalendar = DEFAULT_CALENDAR) -> "TickSeries":
        if not ticks:
            return cls(np.empty(0, np.int64), np.empty(0), np.empty(0, np.int64),
                       None, None, instrument, calendar)
        has_q = any(t.bid1 is not None or t.ask1 is not None for t in ticks)
        bid = np.array([math.nan if t.bid1 is None else t.bid1 for t in ticks]) if has_q else None
        ask = np.array([math.nan if t.ask1 is None else t.ask1 for t in ticks]) if has_q else None
        return cls(np.array([t.ts for t in ticks], np.int64),
                   np.array([t.price for t in ticks]),
                   np.array([t.volume for t in ticks], np.int64),
                   bid, ask, instrument, calendar)


@dataclass(frozen=True)
class ReturnSeries:
    """Log returns ln(P_t / P_{t-1}) with the timestamp of the later price."""

    ts: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        ts = np.ascontiguousarray(self.ts, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if ts.shape[0] != values.shape[0]:
            raise DataError("return timestamps and values must align")
        if not np.all(np.isfinite(values)):
            raise DataError("return values must be finite")
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class BarSeries:
    """OHLCV bars on a fixed interval; bars never span a session break."""

    interval_ns: int
    ts: np.ndarray
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: np.ndarray

    def __post_init__(self) -> None:
        if self.interval_ns <= 0:
            raise DataError("bar interval must be positive")
        cols = {}
        for name in ("open", "high", "low", "close"):
            cols[name] = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, cols[name])
        object.__setattr__(self, "ts", np.ascontiguousarray(self.ts, dtype=np.int64))
        object.__setattr__(self, "volume", np.ascontiguousarray(self.volume, dtype=np.int64))
        n = self.ts.shape[0]
        for name in ("open", "high", "low", "close", "volume"):
            if getattr(self, name).shape[0] != n:
                raise DataError("bar columns must have equal length")
        if n == 0:
            return
        if np.any(self.high < np.maximum(self.open, self.close)):
            raise DataError("bar high below open/close")
        if np.any(self.low > np.minimum(self.open, self.close)):
            raise DataError("bar low above open/close")
        if np.any(self.volume < 0):
            raise DataError("bar volume must be non-negative")
        if n > 1 and np.any(np.diff(self.ts) <= 0):
            raise DataError("bar timestamps must strictly increase")

    def __len__(self) -> int:
        return int(self.ts.shape[0])


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


def load_ticks(path: str, instrument: str = "SYN",
               calendar: SessionCalendar = DEFAULT_CALENDAR) -> TickSeries:
    """Load a tick CSV (``ts_ns,price,volume[,bid1,ask1]``) into a TickSeries.

    Rows are validated against the tick invariants; the first bad row aborts
    the load with its line number.
    """
    ts, price, vol, bid, ask = [], [], [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = tuple(h.strip() for h in header)
        if header == TICK_CSV_HEADER[:3]:
            has_quotes = False
        elif header == TICK_CSV_HEADER:
            has_quotes = True
        else:
            raise DataError(f"{path}: unrecognized tick header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != (5 if has_quotes else 3):
                raise DataError(f"{path}: line {lineno}: expected "
                                f"{5 if has_quotes else 3} fields, got {len(row)}")
            try:
                t = int(row[0])
                p = float(row[1])
                v = int(row[2])
                b = float(row[3]) if has_quotes and row[3] != "" else math.nan
                a = float(row[4]) if has_quotes and row[4] != "" else math.nan
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from None
            if not p > 0:
                raise DataError(f"{path}: line {lineno}: price must be positive")
            if v < 1:
                raise DataError(f"{path}: line {lineno}: volume must be >= 1")
            ts.append(t)
            price.append(p)
            vol.append(v)
            bid.append(b)
            ask.append(a)
    if not ts:
        raise DataError(f"{path}: no data rows")
    return TickSeries(np.array(ts, np.int64), np.array(price), np.array(vol, np.int64),
                      np.array(bid) if has_quotes else None,
                      np.array(ask) if has_quotes else None,
                      instrument, calendar)


def save_ticks(path: str, ticks: TickSeries) -> None:
    """Write the tick CSV schema, including quote columns when present."""
    has_quotes = ticks.bid1 is not None and ticks.ask1 is not None
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TICK_CSV_HEADER if has_quotes else TICK_CSV_HEADER[:3])
        for i in range(len(ticks)):
            row = [int(ticks.ts[i]), f"{ticks.price[i]:.12g}", int(ticks.volume[i])]
            if has_quotes:
                row += [f"{ticks.bid1[i]:.12g}", f"{ticks.ask1[i]:.12g}"]
            writer.writerow(row)


def load_bars(path: str, interval_ns: int) -> BarSeries:
    """Load a bar CSV (``ts_ns,open,high,low,close,volume``)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if tuple(h.strip() for h in header) != BAR_CSV_HEADER:
            raise DataError(f"{path}: unrecognized bar header {tuple(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise DataError(f"{path}: line {lineno}: expected 6 fields")
            try:
                rows.append((int(row[0]), float(row[1]), float(row[2]),
                             float(row[3]), float(row[4]), int(row[5])))
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    a = np.array(rows, dtype=np.float64)
    return BarSeries(interval_ns, a[:, 0].astype(np.int64), a[:, 1], a[:, 2],
                     a[:, 3], a[:, 4], a[:, 5].astype(np.int64))


def save_bars(path: str, bars: BarSeries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(BAR_CSV_HEADER)
        for i in range(len(bars)):
            writer.writerow([int(bars.ts[i]), f"{bars.open[i]:.12g}", f"{bars.high[i]:.12g}",
                             f"{bars.low[i]:.12g}", f"{bars.close[i]:.12g}", int(bars.volume[i])])


# ---------------------------------------------------------------------------
# Returns and resampling
# ---------------------------------------------------------------------------


def log_returns(prices: np.ndarray | Sequence[float],
                timestamps: np.ndarray | None = None) -> ReturnSeries:
    """Log returns of an ordered positive price vector.

    values[t] = ln(prices[t+1] / prices[t]); the series is one shorter than
    the prices. Timestamps default to the index of the later price.
    """
    p = np.ascontiguousarray(prices, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] < 2:
        raise DataError("need at least 2 prices for returns")
    if not np.all(p > 0):
        raise DataError("prices must be positive")
    values = np.diff(np.log(p))
    if timestamps is None:
        ts = np.arange(1, p.shape[0], dtype=np.int64)
    else:
        ts = np.ascontiguousarray(timestamps, dtype=np.int64)
        if ts.shape[0] == p.shape[0]:
            ts = ts[1:]
        elif ts.shape[0] != values.shape[0]:
            raise DataError("timestamps must match prices or returns length")
    return ReturnSeries(ts, values)


def session_log_returns(bars: BarSeries,
                        calendar: SessionCalendar = DEFAULT_CALENDAR) -> ReturnSeries:
    """Close-to-close log returns that never cross a session break."""
    if len(bars) < 2:
        raise DataError("need at least 2 bars for returns")
    sess = (bars.ts // NS_PER_DAY) * len(calendar.sessions) + calendar.session_index(bars.ts)
    same = sess[1:] == sess[:-1]
    values = np.diff(np.log(bars.close))[same]
    ts = bars.ts[1:][same]
    return ReturnSeries(ts, values)


def resample(ticks: TickSeries, interval_ns: int) -> BarSeries:
    """Aggregate ticks into OHLCV bars of the given interval.

    Bar boundaries are anchored at each session open, so no bar spans a
    session break. Intervals containing no ticks produce no bar.
    """
    if interval_ns <= 0:
        raise DataError("bar interval must be positive")
    if len(ticks) == 0:
        raise DataError("cannot resample an empty tick series")
    cal = ticks.calendar
    sod = ticks.ts % NS_PER_DAY
    sess_idx = cal.session_index(ticks.ts)
    open_ns = cal.opens_ns[sess_idx]
    bar_in_sess = (sod - open_ns) // interval_ns
    day = ticks.ts // NS_PER_DAY
    # Composite group key; ticks are time ordered so keys are non-decreasing.
    key = ((day * len(cal.sessions) + sess_idx) * (NS_PER_DAY // interval_ns + 1)
           + bar_in_sess)
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    ends = np.r_[starts[1:], len(ticks)]
    bar_ts = day[starts] * NS_PER_DAY + open_ns[starts] + bar_in_sess[starts] * interval_ns
    opens = ticks.price[starts]
    closes = ticks.price[ends - 1]
    highs = np.maximum.reduceat(ticks.price, starts)
    lows = np.minimum.reduceat(ticks.price, starts)
    vols = np.add.reduceat(ticks.volume, starts)
    return BarSeries(interval_ns, bar_ts, opens, highs, lows, closes, vols)


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for the synthetic tick generator.

    Log returns follow a conditional-heteroscedasticity recursion
    h_t = omega + alpha * eps_{t-1}^2 + beta * h_{t-1} with Gaussian shocks,
    an optional AR(1) term phi in the mean, and log-normal volumes rounded up
    to at least 1 contract. Output is deterministic given the seed.
    """

    omega: float = 1e-6
    alpha: float = 0.05
    beta: float = 0.90
    mu: float = 0.0
    phi: float = 0.0
    count: int = 10_000
    seed: int = 0
    start_price: float = 3000.0
    tick_interval_ms: int = 500
    spread: float = 0.2
    volume_log_mean: float = 1.0
    volume_log_sigma: float = 1.0
    start_day: int = 17_000
    instrument: str = "SYN"

    def __post_init__(self) -> None:
        if not self.omega > 0:
            raise DataError("omega must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise DataError("alpha and beta must be non-negative")
        if self.alpha + self.beta >= 1:
            raise DataError(f"alpha + beta must be < 1, got {self.alpha + self.beta}")
        if abs(self.phi) >= 1:
            raise DataError("phi must satisfy |phi| < 1")
        if self.count < 2:
            raise DataError("count must be >= 2")
        if self.start_price <= 0 or self.spread < 0 or self.tick_interval_ms <= 0:
            raise DataError("invalid start_price, spread, or tick interval")


def synth_ticks(spec: SynthSpec,
                calendar: SessionCalendar = DEFAULT_CALENDAR) -> TickSeries:
    """Generate a deterministic synthetic TickSeries from a SynthSpec."""
    rng = np.random.default_rng(spec.seed)
    n = spec.count
    z = rng.standard_normal(n - 1)
    h = np.empty(n - 1)
    # Sequential variance recursion; eps_t^2 = z_t^2 h_t keeps it scalar.
    hv = spec.omega / (1.0 - spec.alpha - spec.beta)
    coef = spec.alpha * z * z + spec.beta
    h[0] = hv
    for t in range(1, n - 1):
        hv = spec.omega + coef[t - 1] * hv
        h[t] = hv
    eps = z * np.sqrt(h)
    if spec.phi != 0.0:
        from scipy.signal import lfilter

        r = lfilter([1.0], [1.0, -spec.phi], spec.mu + eps)
    else:
        r = spec.mu + eps
    prices = spec.start_price * np.exp(np.cumsum(np.r_[0.0, r]))
    if np.any(prices <= spec.spread / 2):
        raise DataError("synthetic path hit non-positive quotes; lower spread or variance")

    volumes = np.ceil(rng.lognormal(spec.volume_log_mean, spec.volume_log_sigma, n))
    volumes = np.maximum(volumes, 1.0).astype(np.int64)

    interval_ns = spec.tick_interval_ms * 1_000_000
    slots_per_sess = [int((c - o) * NS_PER_SEC // interval_ns)
                      for o, c in calendar.sessions]
    per_day = sum(slots_per_sess)
    cum = np.cumsum([0] + slots_per_sess)
    idx = np.arange(n, dtype=np.int64)
    day = spec.start_day + idx // per_day
    within = idx % per_day
    sess = np.searchsorted(cum, within, side="right") - 1
    offset = within - cum[sess]
    ts = day * NS_PER_DAY + calendar.opens_ns[sess] + offset * interval_ns

    half = spec.spread / 2.0
    bid = prices - half if spec.spread > 0 else None
    ask = prices + half if spec.spread > 0 else None
    return TickSeries(ts, prices, volumes, bid, ask, spec.instrument, calendar)


# ---------------------------------------------------------------------------
# Descriptive statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DescriptiveStats:
    """First four moments of a return series.

    Kurtosis is reported non-excess (a normal sample is near 3). Skewness and
    kurtosis are NaN for a degenerate (constant) series.
    """

    mean: float
    std: float
    skewness: float
    kurtosis: float
    n: int

    @property
    def is_degenerate(self) -> bool:
        return math.isnan(self.skewness)


def descriptive_stats(returns: ReturnSeries | np.ndarray) -> DescriptiveStats:
    """Mean, sample std, and population skewness / non-excess kurtosis."""
    x = returns.values if isinstance(returns, ReturnSeries) else np.asarray(returns, float)
    n = x.shape[0]
    if n < 4:
        raise DataError("need at least 4 observations for descriptive stats")
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d * d))
    std = float(np.sqrt(np.sum(d * d) / (n - 1)))
    if m2 == 0.0:
        return DescriptiveStats(mean, 0.0, math.nan, math.nan, n)
    skew = float(np.mean(d ** 3) / m2 ** 1.5)
    kurt = float(np.mean(d ** 4) / (m2 * m2))
    return DescriptiveStats(mean, std, skew, kurt, n)
