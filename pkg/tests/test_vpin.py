"""Bucket construction, bulk volume classification, and VPIN values."""
import numpy as np
import pytest

from microstrat.errors import DataError
from microstrat.marketdata import SynthSpec, TickSeries, synth_ticks
from microstrat.vpin import (
    VolumeBucket,
    bucket_fill,
    bvc_split,
    classify_buckets,
    compute_vpin,
    default_bucket_volume,
    sigma_delta_p,
    vpin_from_ticks,
)

NS_PER_SEC = 1_000_000_000
NS_PER_DAY = 86_400 * NS_PER_SEC
DAY = 17_000


def make_ticks(prices, volumes):
    """Ticks one second apart inside the morning session."""
    n = len(prices)
    ts = DAY * NS_PER_DAY + (34_200 + np.arange(n, dtype=np.int64)) * NS_PER_SEC
    return TickSeries(ts, np.asarray(prices, float), np.asarray(volumes, np.int64))


# ---------------------------------------------------------------------------
# bucket_fill
# ---------------------------------------------------------------------------


def test_bucket_fill_splits_boundary_tick():
    ticks = make_ticks([100.0, 101.0], [30, 30])
    buckets = bucket_fill(ticks, 40.0)
    assert len(buckets) == 2
    first, second = buckets
    assert first.complete and not second.complete
    np.testing.assert_array_equal(first.volume, [30.0, 10.0])
    np.testing.assert_array_equal(first.delta_p, [0.0, 1.0])
    np.testing.assert_array_equal(second.volume, [20.0])
    np.testing.assert_array_equal(second.delta_p, [1.0])
    assert first.index == 1 and second.index == 2
    assert first.end_ts == second.start_ts == int(ticks.ts[1])


def test_bucket_fill_exact_single_tick():
    buckets = bucket_fill(make_ticks([100.0], [40]), 40.0)
    assert len(buckets) == 1
    assert buckets[0].complete
    assert buckets[0].total == 40.0


def test_bucket_fill_underfill_gives_no_complete_bucket():
    buckets = bucket_fill(make_ticks([100.0, 100.5], [10, 10]), 40.0)
    assert [b.complete for b in buckets] == [False]
    assert buckets[0].total == 20.0


def test_bucket_fill_rejects_bad_inputs():
    ticks = make_ticks([100.0], [10])
    with pytest.raises(DataError):
        bucket_fill(ticks, 0.0)
    with pytest.raises(DataError):
        bucket_fill(TickSeries(np.empty(0, np.int64), np.empty(0),
                               np.empty(0, np.int64)), 40.0)


def test_bucket_fill_conserves_volume_exactly():
    ticks = synth_ticks(SynthSpec(count=100_000, seed=21))
    v = default_bucket_volume(ticks)
    assert v == float(int(v))
    buckets = bucket_fill(ticks, v)
    total = sum(b.total for b in buckets)
    assert total == float(ticks.volume.sum())
    for b in buckets[:-1]:
        assert b.complete
        assert b.total == v


def test_bucket_fill_handles_tick_larger_than_bucket():
    buckets = bucket_fill(make_ticks([100.0], [100]), 30.0)
    assert [b.complete for b in buckets] == [True, True, True, False]
    assert [b.total for b in buckets] == [30.0, 30.0, 30.0, 10.0]


# ---------------------------------------------------------------------------
# bvc_split
# ---------------------------------------------------------------------------


def test_bvc_split_even_on_zero_change():
    v_b, v_s = bvc_split(0.0, 1.0, 80.0)
    assert v_b == pytest.approx(40.0, abs=1e-12)
    assert v_s == pytest.approx(40.0, abs=1e-12)


def test_bvc_split_saturates_in_the_tail():
    v_b, _ = bvc_split(10.0, 1.0, 1.0)
    assert v_b > 0.999999


def test_bvc_split_one_sigma_table_value():
    v_b, v_s = bvc_split(0.5, 0.5, 100.0)
    assert v_b == pytest.approx(84.1345, abs=1e-3)
    assert v_b + v_s == 100.0


def test_bvc_split_rejects_degenerate_sigma():
    with pytest.raises(DataError):
        bvc_split(0.1, 0.0, 10.0)
    with pytest.raises(DataError):
        bvc_split(0.1, 1.0, 0.0)


# ---------------------------------------------------------------------------
# sigma_delta_p
# ---------------------------------------------------------------------------


def test_sigma_delta_p_alternating_unit_changes():
    ticks = make_ticks([10.0, 11.0, 10.0, 11.0, 10.0], [1, 1, 1, 1, 1])
    assert sigma_delta_p(ticks) == pytest.approx(1.0, abs=1e-12)


def test_sigma_delta_p_degenerate_inputs():
    with pytest.raises(DataError):
        sigma_delta_p(make_ticks([10.0, 10.0, 10.0], [1, 1, 1]))
    with pytest.raises(DataError):
        sigma_delta_p(make_ticks([10.0, 10.2], [1, 1]))


# ---------------------------------------------------------------------------
# classification and VPIN
# ---------------------------------------------------------------------------


def test_classify_buckets_invariants():
    ticks = synth_ticks(SynthSpec(count=20_000, seed=22))
    buckets = classify_buckets(bucket_fill(ticks, 500.0), sigma_delta_p(ticks))
    assert buckets
    for b in buckets:
        assert 0.0 <= b.buy_volume <= b.total
        assert b.buy_volume + b.sell_volume == pytest.approx(b.total, abs=1e-9)
        assert b.total == 500.0


def test_vpin_zero_when_perfectly_balanced():
    # constant prices give dP = 0 everywhere; classify at an external sigma
    ticks = make_ticks([100.0] * 40, [10] * 40)
    buckets = classify_buckets(bucket_fill(ticks, 50.0), sigma_dp=1.0)
    series = compute_vpin(buckets, window=4)
    np.testing.assert_allclose(series.values, 0.0, atol=1e-12)


def test_vpin_one_when_all_volume_buys():
    # strictly rising prices with a tiny sigma saturate the classifier; the
    # very first tick has no prior price, so its dP=0 fragment dilutes only
    # the windows containing bucket 1
    prices = 100.0 + np.arange(40.0)
    buckets = classify_buckets(bucket_fill(make_ticks(prices, [10] * 40), 50.0),
                               sigma_dp=1e-6)
    series = compute_vpin(buckets, window=4)
    assert series.values[0] > 0.9
    assert np.all(series.values[1:] > 1.0 - 1e-6)
    assert np.all(series.values <= 1.0)


def test_vpin_direct_formula_two_buckets():
    buckets = [
        VolumeBucket(index=1, buy_volume=25.0, sell_volume=15.0, total=40.0,
                     start_ts=0, end_ts=1),
        VolumeBucket(index=2, buy_volume=35.0, sell_volume=5.0, total=40.0,
                     start_ts=1, end_ts=2),
    ]
    series = compute_vpin(buckets, window=2, bucket_volume=40.0)
    assert len(series) == 1
    assert series.values[0] == pytest.approx(0.5, abs=1e-12)
    assert series.bucket_indices[0] == 2


def test_vpin_needs_enough_buckets():
    buckets = [VolumeBucket(index=1, buy_volume=1.0, sell_volume=1.0, total=2.0,
                            start_ts=0, end_ts=1)]
    with pytest.raises(DataError):
        compute_vpin(buckets, window=2)


def test_vpin_series_layout_and_range():
    ticks = synth_ticks(SynthSpec(count=60_000, seed=23))
    series = vpin_from_ticks(ticks, window=50)
    assert np.all(series.values >= 0.0) and np.all(series.values <= 1.0)
    assert series.bucket_indices[0] == 50
    assert np.all(np.diff(series.bucket_indices) == 1)
    assert np.all(np.diff(series.end_ts) >= 0)


def test_vpin_monotone_in_price_change_scale_for_one_sided_buckets():
    # a monotone price path keeps every fragment's dP sign non-negative, so
    # scaling dP up (equivalently shrinking sigma) can only push VPIN up
    rng = np.random.default_rng(24)
    prices = 100.0 + np.cumsum(rng.uniform(0.0, 0.1, 500))
    volumes = rng.integers(1, 20, 500)
    raw = bucket_fill(make_ticks(prices, volumes), 200.0)
    lo = compute_vpin(classify_buckets(raw, sigma_dp=0.10), window=5)
    hi = compute_vpin(classify_buckets(raw, sigma_dp=0.05), window=5)
    assert np.all(hi.values >= lo.values - 1e-12)


def test_vpin_pipeline_is_deterministic():
    ticks = synth_ticks(SynthSpec(count=30_000, seed=25))
    a = vpin_from_ticks(ticks)
    b = vpin_from_ticks(ticks)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.end_ts, b.end_ts)
