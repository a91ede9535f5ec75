"""Margin-aware sequential backtest engine and performance indicators.

Replay walks minute bars built from the tick stream. Every decision at a bar
close uses only data that ended strictly before that instant: volatility
state advances on each completed session return, VPIN reads the latest
completed bucket, and the bucket size and price-change scale are frozen on
the warmup day. Entries fill passively at the signalled book side; stops and
margin calls pay the spread. Cash, margin and fees move through a
double-entry ledger whose residual is tracked and exposed.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, NonConvergenceError
from .marketdata import NS_PER_DAY, TickSeries, resample
from .strategy import (
    SIDE_BUY,
    SIDE_NONE,
    SIDE_SELL,
    SVM_FEATURE_LAGS,
    Signal,
    StrategyConfig,
    adjust_delta1,
    calibrate_delta1,
    calibrate_vpin_thresholds,
    garch_signal,
    make_svm_dataset,
    position_size,
    stop_loss_check,
    svm_gate,
)
from .svm import Kernel, Scaler, train_smo
from .volatility import GarchSpec, fit_garch
from .vpin import (
    DEFAULT_BUCKETS_PER_DAY,
    DEFAULT_WINDOW,
    bucket_fill,
    classify_buckets,
    compute_vpin,
    sigma_delta_p,
)

VARIANTS = ("G", "G+S", "G+V", "G+V+S")

MINUTE_NS = 60_000_000_000


@dataclass(frozen=True)
class CostModel:
    capital: float = 1e7
    margin_rate: float = 0.25
    fee_rate: float = 6.87e-4
    multiplier: float = 300.0
    tick_size: float = 0.2
    maintenance_rate: float | None = None  # None: 75% of the initial margin

    def __post_init__(self) -> None:
        if self.capital <= 0 or self.multiplier <= 0 or self.tick_size < 0:
            raise DataError("capital and multiplier must be positive")
        if not 0 < self.margin_rate <= 1 or self.fee_rate < 0:
            raise DataError("bad margin or fee rate")
        if self.maintenance_rate is not None and not 0 < self.maintenance_rate <= 1:
            raise DataError("bad maintenance rate")

    @property
    def maintenance(self) -> float:
        return self.maintenance_rate if self.maintenance_rate is not None \
            else 0.75 * self.margin_rate


@dataclass(frozen=True)
class EngineConfig:
    """Replay schedule and model windows, all in bars unless noted."""

    bar_interval_ns: int = MINUTE_NS
    warmup_days: int = 1
    garch_spec: GarchSpec = field(default=GarchSpec(1, 1, False, "ar1"))
    garch_window: int = 2000
    garch_refit_every: int = 240
    garch_min_obs: int = 200
    delta1_every: int = 60
    delta1_window: int = 60
    initial_delta1: float = 0.4
    sigma_window: int = 120
    buckets_per_day: int = DEFAULT_BUCKETS_PER_DAY
    vpin_window: int = DEFAULT_WINDOW
    svm_kernel_sigma: float = 1.0
    svm_c: float = 1.0
    svm_min_rows: int = 60
    svm_max_rows: int = 1500
    trading_days_per_year: int = 244

    def __post_init__(self) -> None:
        if self.warmup_days < 1:
            raise DataError("need at least one warmup day")
        if self.bar_interval_ns <= 0 or self.garch_window < 100:
            raise DataError("bad bar interval or window")


@dataclass(frozen=True)
class Trade:
    ts: int
    side: str
    qty: int
    price: float
    fee: float
    realized: float
    position_after: int
    cash_after: float
    kind: str  # open | close | stop | margin-call


@dataclass(frozen=True)
class SignalRecord:
    ts: int
    side: str
    quote: str | None
    delta1: float
    vpin: float
    layer_trace: str


@dataclass(frozen=True)
class Metrics:
    total_return: float
    annualized_return: float
    relative_return_vs_benchmark: float
    alpha: float
    beta: float
    max_drawdown: float
    sharpe: float


@dataclass(frozen=True)
class BacktestReport:
    total_return: float
    annualized_return: float
    relative_return_vs_benchmark: float
    alpha: float
    beta: float
    max_drawdown: float
    sharpe: float
    trade_count: int
    variant: str

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise DataError(f"unknown variant {self.variant!r}")
        if self.max_drawdown > 1e-12:
            raise DataError(f"max drawdown must be <= 0, got {self.max_drawdown}")


@dataclass(frozen=True)
class BacktestResult:
    report: BacktestReport
    equity_ts: np.ndarray
    equity: np.ndarray
    benchmark: np.ndarray
    trades: tuple[Trade, ...]
    signal_log: tuple[SignalRecord, ...]
    margin_calls: int
    max_ledger_residual: float
    data_hash: str


class Account:
    """Cash, one net futures position, and the double-entry residual."""

    def __init__(self, costs: CostModel):
        self.costs = costs
        self.cash = costs.capital
        self.position = 0  # signed contracts
        self.entry_price = 0.0
        self.margin_held = 0.0
        self.fees_paid = 0.0
        self.equity_ts: list[int] = []
        self.equity: list[float] = []
        self.max_residual = 0.0

    def unrealized(self, price: float) -> float:
        return (price - self.entry_price) * self.position * self.costs.multiplier

    def equity_at(self, price: float) -> float:
        return self.cash + self.margin_held + self.unrealized(price)

    def mark(self, ts: int, price: float) -> float:
        eq = self.equity_at(price)
        self.equity_ts.append(ts)
        self.equity.append(eq)
        return eq

    def _book(self, d_cash: float, d_margin: float, fee: float, realized: float):
        residual = d_cash + d_margin + fee - realized
        self.max_residual = max(self.max_residual, abs(residual))

    def open(self, ts: int, side: str, qty: int, price: float,
             kind: str = "open") -> Trade:
        if self.position != 0:
            raise DataError("cannot open onto an existing position")
        if qty < 1:
            raise DataError("need at least one contract")
        notional = qty * price * self.costs.multiplier
        margin = notional * self.costs.margin_rate
        fee = notional * self.costs.fee_rate
        cash0, margin0 = self.cash, self.margin_held
        self.cash -= margin + fee
        self.margin_held += margin
        self.fees_paid += fee
        self.position = qty if side == SIDE_BUY else -qty
        self.entry_price = price
        self._book(self.cash - cash0, self.margin_held - margin0, fee, 0.0)
        return Trade(ts, side, qty, price, fee, 0.0, self.position, self.cash, kind)

    def close(self, ts: int, price: float, kind: str = "close") -> Trade:
        if self.position == 0:
            raise DataError("no position to close")
        qty = abs(self.position)
        side = SIDE_SELL if self.position > 0 else SIDE_BUY
        notional = qty * price * self.costs.multiplier
        fee = notional * self.costs.fee_rate
        realized = (price - self.entry_price) * self.position * self.costs.multiplier
        cash0, margin0 = self.cash, self.margin_held
        self.cash += self.margin_held + realized - fee
        self.margin_held = 0.0
        self.fees_paid += fee
        self.position = 0
        self.entry_price = 0.0
        self._book(self.cash - cash0, self.margin_held - margin0, fee, realized)
        return Trade(ts, side, qty, price, fee, realized, 0, self.cash, kind)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def compute_metrics(equity: np.ndarray, benchmark: np.ndarray,
                    periods_per_year: int) -> Metrics:
    """Return, drawdown and regression indicators for one equity curve."""
    e = np.asarray(equity, dtype=np.float64)
    b = np.asarray(benchmark, dtype=np.float64)
    if e.shape[0] < 2 or e.shape[0] != b.shape[0]:
        raise DataError("need two aligned curve points at least")
    if e[0] <= 0 or b[0] <= 0:
        raise DataError("curves must start positive")
    if periods_per_year < 1:
        raise DataError("periods_per_year must be >= 1")
    total = float(e[-1] / e[0] - 1.0)
    bench_total = float(b[-1] / b[0] - 1.0)
    n_periods = e.shape[0] - 1

    def annualize(tr: float) -> float:
        if 1.0 + tr <= 0.0:
            return -1.0
        return float((1.0 + tr) ** (periods_per_year / n_periods) - 1.0)

    ann = annualize(total)
    bench_ann = annualize(bench_total)
    rs = np.diff(e) / e[:-1]
    rb = np.diff(b) / b[:-1]
    var_b = float(np.var(rb, ddof=1)) if n_periods > 1 else 0.0
    if var_b > 0:
        cov = float(np.cov(rs, rb, ddof=1)[0, 1])
        beta = cov / var_b
    else:
        beta = math.nan  # benchmark never moved; slope is undefined
    alpha = ann - beta * bench_ann if math.isfinite(beta) else math.nan
    sd = float(np.std(rs, ddof=1)) if n_periods > 1 else 0.0
    sharpe = float(np.mean(rs) / sd * math.sqrt(periods_per_year)) if sd > 0 else 0.0
    dd = float(np.min(e / np.maximum.accumulate(e) - 1.0))
    return Metrics(total_return=total, annualized_return=ann,
                   relative_return_vs_benchmark=total - bench_total,
                   alpha=alpha, beta=beta, max_drawdown=dd, sharpe=sharpe)


def _data_hash(ticks: TickSeries) -> str:
    digest = hashlib.md5()
    digest.update(ticks.ts.tobytes())
    digest.update(ticks.price.tobytes())
    digest.update(ticks.volume.tobytes())
    return digest.hexdigest()


def variant_tag(cfg: StrategyConfig) -> str:
    return "G" + ("+V" if cfg.use_vpin else "") + ("+S" if cfg.use_svm else "")


# ---------------------------------------------------------------------------
# Volatility state advanced return by return
# ---------------------------------------------------------------------------


class _GarchState:
    def __init__(self, fit):
        self.fit = fit
        spec = fit.spec
        self.p, self.q = spec.p, spec.q
        self.leverage = spec.leverage
        self.mean_model = spec.mean_model
        k = max(self.p, 1)
        self.e2 = [float(v) for v in (fit.residuals[::-1][:k] ** 2)]
        self.neg = [bool(v) for v in (fit.residuals[::-1][:k] < 0)]
        self.h = [float(v) for v in fit.cond_variance[::-1][:max(self.q, 1)]]
        self.r_last = fit.last_return

    def variance_forecast(self) -> float:
        f = self.fit
        v = f.omega
        for i in range(self.p):
            v += f.alphas[i] * self.e2[i]
        if self.leverage:
            v += f.leverage_coef * self.e2[0] * self.neg[0]
        for j in range(self.q):
            v += f.gammas[j] * self.h[j]
        return v

    def mean_forecast(self) -> float:
        if self.mean_model == "zero":
            return 0.0
        if self.mean_model == "constant":
            return float(self.fit.mean_params[0])
        mu, phi = self.fit.mean_params
        return float(mu + phi * self.r_last)

    def update(self, r_new: float) -> float:
        """Absorb one session return; returns its conditional variance."""
        h_new = self.variance_forecast()
        eps = r_new - self.mean_forecast()
        self.e2 = [eps * eps] + self.e2[:-1]
        self.neg = [eps < 0.0] + self.neg[:-1]
        self.h = [h_new] + self.h[:-1]
        self.r_last = r_new
        return h_new


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------


def run_backtest(ticks: TickSeries, cfg: StrategyConfig,
                 costs: CostModel | None = None,
                 engine: EngineConfig | None = None) -> BacktestResult:
    """Sequential replay of the layered strategy over one tick stream."""
    if not cfg.use_garch:
        raise DataError("the direction layer cannot be disabled")
    costs = costs if costs is not None else CostModel()
    eng = engine if engine is not None else EngineConfig()

    bars = resample(ticks, eng.bar_interval_ns)
    n_bars = len(bars)
    day_codes = bars.ts // NS_PER_DAY
    days = np.unique(day_codes)
    if days.shape[0] < eng.warmup_days + 1:
        raise DataError(f"need at least {eng.warmup_days + 1} trading days, "
                        f"got {days.shape[0]}")
    day_ord = np.searchsorted(days, day_codes)
    n_sess = len(ticks.calendar.sessions)
    bar_uid = day_codes * n_sess + ticks.calendar.session_index(bars.ts)
    closes = bars.close
    decision_ts = bars.ts + eng.bar_interval_ns
    rets = np.full(n_bars, np.nan)
    same = bar_uid[1:] == bar_uid[:-1]
    rets[1:][same] = np.log(closes[1:][same] / closes[:-1][same])

    # VPIN stream with scale parameters frozen on the warmup day
    warm_mask = (ticks.ts // NS_PER_DAY) < days[eng.warmup_days]
    n_warm = int(warm_mask.sum())
    warm_ticks = TickSeries(ticks.ts[:n_warm], ticks.price[:n_warm],
                            ticks.volume[:n_warm],
                            None if ticks.bid1 is None else ticks.bid1[:n_warm],
                            None if ticks.ask1 is None else ticks.ask1[:n_warm],
                            ticks.instrument, ticks.calendar)
    sigma_dp = sigma_delta_p(warm_ticks)
    bucket_volume = max(1.0, round(float(ticks.volume[:n_warm].sum())
                                   / eng.warmup_days / eng.buckets_per_day))
    buckets = classify_buckets(bucket_fill(ticks, bucket_volume), sigma_dp)
    vpin_values = np.empty(0)
    vpin_end_ts = np.empty(0, dtype=np.int64)
    if len(buckets) >= eng.vpin_window:
        vs = compute_vpin(buckets, eng.vpin_window, bucket_volume)
        vpin_values, vpin_end_ts = vs.values, vs.end_ts
    bucket_end_ts = np.array([b.end_ts for b in buckets], dtype=np.int64)
    end_idx = np.searchsorted(ticks.ts, bucket_end_ts, side="right") - 1
    bucket_end_price = ticks.price[end_idx] if len(buckets) else np.empty(0)
    # |relative price move| over each bucket, rated against its predecessor
    bucket_fluct = np.full(len(buckets), np.nan)
    if len(buckets) > 1:
        bucket_fluct[1:] = np.abs(bucket_end_price[1:] / bucket_end_price[:-1] - 1.0)

    account = Account(costs)
    trades: list[Trade] = []
    signal_log: list[SignalRecord] = []
    margin_calls = 0

    garch: _GarchState | None = None
    ret_stream: list[float] = []
    bars_since_fit = 0
    delta1 = eng.initial_delta1
    day_min_d1 = day_max_d1 = delta1
    delta2, delta3 = cfg.delta2, cfg.delta3
    pair_f: list[float] = []
    pair_r: list[float] = []
    pending_pair_z: float | None = None
    z_hist: list[float] = []
    rz_hist: list[float] = []
    svm_rows_f: list[float] = []
    svm_rows_r: list[float] = []
    svm_rows_v: list[float] = []
    svm_rows_next: list[float] = []
    pending_svm: tuple[float, float, float] | None = None
    svm_model = None
    svm_scaler = None
    current_day = -1

    def quote_price(tick_idx: int, book_side: str) -> float:
        arr = ticks.bid1 if book_side == "bid" else ticks.ask1
        if arr is not None and math.isfinite(arr[tick_idx]):
            return float(arr[tick_idx])
        px = float(ticks.price[tick_idx])
        half = costs.tick_size / 2.0
        return px - half if book_side == "bid" else px + half

    def latest_vpin(now_ns: int) -> float:
        k = int(np.searchsorted(vpin_end_ts, now_ns, side="left"))
        return float(vpin_values[k - 1]) if k > 0 else math.nan

    def recalibrate_vpin_thresholds(now_ns: int):
        nonlocal delta2, delta3
        w = eng.vpin_window
        # vpin value i belongs to bucket j = i + w - 1; fluct looks 2 ahead
        pairs_v, pairs_f = [], []
        for i in range(vpin_values.shape[0]):
            j = i + w - 1 + cfg.basket_delay
            if j >= len(buckets) or bucket_end_ts[j] >= now_ns:
                break
            if math.isfinite(bucket_fluct[j]):
                pairs_v.append(vpin_values[i])
                pairs_f.append(bucket_fluct[j])
        if len(pairs_v) >= 30 and np.ptp(pairs_v) > 0:
            th = calibrate_vpin_thresholds(np.asarray(pairs_v),
                                           np.asarray(pairs_f),
                                           cfg.fluct_hi, cfg.fluct_lo)
            delta2, delta3 = th.delta2, th.delta3

    def refit_svm():
        nonlocal svm_model, svm_scaler
        if len(svm_rows_next) < eng.svm_min_rows:
            return
        lo = max(0, len(svm_rows_next) - eng.svm_max_rows)
        try:
            X, y = make_svm_dataset(svm_rows_f[lo:], svm_rows_r[lo:],
                                    svm_rows_v[lo:], svm_rows_next[lo:])
            if np.unique(y).shape[0] < 2:
                return
            scaler = Scaler.fit(X)
            model = train_smo(scaler.transform(X), y, c=eng.svm_c,
                              kernel=Kernel.rbf(eng.svm_kernel_sigma))
        except (DataError, NonConvergenceError):
            return
        svm_model, svm_scaler = model, scaler

    def refit_garch():
        nonlocal garch, bars_since_fit
        window = ret_stream[-eng.garch_window:]
        if len(window) < eng.garch_min_obs:
            return
        try:
            garch = _GarchState(fit_garch(np.asarray(window), eng.garch_spec))
        except (DataError, NonConvergenceError):
            return
        bars_since_fit = 0

    for t in range(n_bars):
        now = int(decision_ts[t])
        trading = day_ord[t] >= eng.warmup_days

        # fold in the bar that just closed
        h_t = math.nan
        if math.isfinite(rets[t]):
            ret_stream.append(float(rets[t]))
            if garch is not None:
                h_t = garch.update(float(rets[t]))
        bars_since_fit += 1

        if day_ord[t] != current_day:
            current_day = int(day_ord[t])
            day_min_d1 = day_max_d1 = delta1
            if trading:
                if cfg.use_vpin and vpin_values.shape[0]:
                    recalibrate_vpin_thresholds(now)
                if cfg.use_svm:
                    refit_svm()

        if garch is None or bars_since_fit >= eng.garch_refit_every:
            refit_garch()

        # settle pending next-return bookkeeping before issuing a new signal
        if math.isfinite(rets[t]):
            if pending_pair_z is not None:
                pair_f.append(pending_pair_z)
                pair_r.append(float(rets[t]))
            if pending_svm is not None:
                svm_rows_f.append(pending_svm[0])
                svm_rows_r.append(pending_svm[1])
                svm_rows_v.append(pending_svm[2])
                svm_rows_next.append(float(rets[t]))
        pending_pair_z = None
        pending_svm = None

        if not trading:
            continue

        price_idx = int(np.searchsorted(ticks.ts, now, side="left")) - 1
        mark_price = closes[t]
        equity = account.mark(now, mark_price)

        if account.position != 0:
            maint = abs(account.position) * mark_price * costs.multiplier \
                * costs.maintenance
            if equity < maint:
                book = "bid" if account.position > 0 else "ask"
                trades.append(account.close(now, quote_price(price_idx, book),
                                            kind="margin-call"))
                margin_calls += 1
            else:
                lo = max(0, t - eng.sigma_window)
                seg = closes[lo:t + 1]
                sigma_px = float(np.std(np.diff(seg))) if seg.shape[0] > 20 else 0.0
                side = SIDE_BUY if account.position > 0 else SIDE_SELL
                if sigma_px > 0 and stop_loss_check(
                        account.entry_price, mark_price, sigma_px,
                        cfg.stop_loss_sigmas, side):
                    book = "bid" if account.position > 0 else "ask"
                    trades.append(account.close(
                        now, quote_price(price_idx, book), kind="stop"))

        if t % eng.delta1_every == 0 and len(pair_f) >= 30:
            lo = max(0, len(pair_f) - eng.delta1_window)
            if len(pair_f) - lo >= 30:
                delta1 = calibrate_delta1(np.asarray(pair_f[lo:]),
                                          np.asarray(pair_r[lo:]), cfg)
                day_min_d1 = min(day_min_d1, delta1)
                day_max_d1 = max(day_max_d1, delta1)

        vpin_now = latest_vpin(now)
        vpin_trace: tuple[str, ...] = ()
        if cfg.use_vpin and math.isfinite(vpin_now):
            if vpin_now > delta2:
                vpin_trace = ("vpin-hi",)
            elif vpin_now < delta3:
                vpin_trace = ("vpin-lo",)
            delta1 = adjust_delta1(delta1, vpin_now, delta2, delta3,
                                   day_max_d1, day_min_d1)
            day_min_d1 = min(day_min_d1, delta1)
            day_max_d1 = max(day_max_d1, delta1)

        if garch is None:
            continue
        var_fc = garch.variance_forecast()
        mean_fc = garch.mean_forecast()
        z = mean_fc / math.sqrt(var_fc)
        z_hist.append(z)
        if math.isfinite(h_t) and h_t > 0:
            rz_hist.append(float(rets[t]) / math.sqrt(h_t))
        pending_pair_z = z

        sig = garch_signal((mean_fc, var_fc), delta1, timestamp=now)
        if cfg.use_svm and sig.side != SIDE_NONE and svm_model is not None \
                and len(z_hist) >= SVM_FEATURE_LAGS \
                and len(rz_hist) >= SVM_FEATURE_LAGS:
            feats = np.concatenate([z_hist[-SVM_FEATURE_LAGS:],
                                    rz_hist[-SVM_FEATURE_LAGS:],
                                    [vpin_now if math.isfinite(vpin_now) else 0.5]])
            sig = svm_gate(svm_model, svm_scaler.transform(feats[None, :])[0], sig)
        if len(z_hist) >= SVM_FEATURE_LAGS and len(rz_hist) >= SVM_FEATURE_LAGS:
            pending_svm = (z, rz_hist[-1],
                           vpin_now if math.isfinite(vpin_now) else 0.5)

        if sig.side == SIDE_SELL and account.position > 0:
            trades.append(account.close(now, quote_price(price_idx, "ask")))
        elif sig.side == SIDE_BUY and account.position < 0:
            trades.append(account.close(now, quote_price(price_idx, "bid")))
        if sig.side != SIDE_NONE and account.position == 0:
            book = "bid" if sig.side == SIDE_BUY else "ask"
            px = quote_price(price_idx, book)
            commitment = position_size(
                max(account.cash, 0.0), vpin_now if math.isfinite(vpin_now) else 0.5,
                delta2, delta3, fraction=cfg.position_fraction,
                reduce_factor=cfg.size_reduce, boost_factor=cfg.size_boost,
                cap_fraction=cfg.size_cap, vpin_layer=cfg.use_vpin)
            qty = int(commitment // (px * costs.multiplier * costs.margin_rate))
            if qty >= 1:
                trades.append(account.open(now, sig.side, qty, px))

        signal_log.append(SignalRecord(now, sig.side, sig.quote, delta1,
                                       vpin_now,
                                       "|".join(vpin_trace + sig.layer_trace)))

    equity_ts = np.asarray(account.equity_ts, dtype=np.int64)
    equity = np.asarray(account.equity)
    if equity.shape[0] < 2:
        raise DataError("not enough trading bars to evaluate")
    mark_idx = np.searchsorted(decision_ts, equity_ts)
    bench_px = closes[mark_idx]
    benchmark = costs.capital * bench_px / bench_px[0]
    bars_per_day = ticks.calendar.seconds_per_day() \
        // (eng.bar_interval_ns // 1_000_000_000)
    ppy = int(bars_per_day * eng.trading_days_per_year)
    m = compute_metrics(equity, benchmark, ppy)
    report = BacktestReport(total_return=m.total_return,
                            annualized_return=m.annualized_return,
                            relative_return_vs_benchmark=m.relative_return_vs_benchmark,
                            alpha=m.alpha, beta=m.beta,
                            max_drawdown=m.max_drawdown, sharpe=m.sharpe,
                            trade_count=len(trades), variant=variant_tag(cfg))
    return BacktestResult(report=report, equity_ts=equity_ts, equity=equity,
                          benchmark=benchmark, trades=tuple(trades),
                          signal_log=tuple(signal_log),
                          margin_calls=margin_calls,
                          max_ledger_residual=account.max_residual,
                          data_hash=_data_hash(ticks))


def run_variants(ticks: TickSeries, cfg: StrategyConfig,
                 costs: CostModel | None = None,
                 engine: EngineConfig | None = None) -> dict[str, BacktestResult]:
    """The four layer combinations on identical data, keyed by variant tag."""
    out: dict[str, BacktestResult] = {}
    for use_vpin, use_svm in ((False, False), (False, True),
                              (True, False), (True, True)):
        variant_cfg = replace(cfg, use_garch=True, use_vpin=use_vpin,
                              use_svm=use_svm)
        result = run_backtest(ticks, variant_cfg, costs, engine)
        out[result.report.variant] = result
    return out
