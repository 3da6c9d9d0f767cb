import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mase_loop, smape_loop
from sslearn.evaluation import (
    EvalConfig,
    EvalRecord,
    bundled_panel,
    evaluate_panel,
    evaluate_series,
    mase,
    naive2_forecast,
    owa,
    read_panel,
    seasonal_indices,
    seasonality_test,
    smape,
    synthetic_panel,
    write_panel,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_smape_examples():
    assert smape([3.0, 4.0], [3.0, 4.0]) == 0.0
    assert smape([1.0], [0.0]) == 200.0
    assert smape([0.0, 5.0], [0.0, 5.0]) == 0.0
    # (2/2)(10/210 + 20/380) * 100
    expect = (10 / 210 + 20 / 380) * 100
    assert smape([100, 200], [110, 180]) == pytest.approx(expect, rel=1e-14)
    assert smape([100, 200], [110, 180]) == pytest.approx(10.025062656641603, rel=1e-12)


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=20))
def test_smape_symmetry_and_oracle(pairs):
    a = [p[0] for p in pairs]
    f = [p[1] for p in pairs]
    assert smape(a, f) == pytest.approx(smape(f, a), rel=1e-12, abs=1e-12)
    assert smape(a, f) == pytest.approx(smape_loop(a, f), rel=1e-12, abs=1e-12)
    assert 0.0 <= smape(a, f) <= 200.0


def test_mase_examples():
    train = np.array([1.0, 2.0, 4.0, 3.0, 5.0])
    assert mase(train, [6.0, 7.0], [6.0, 7.0], 1) == 0.0
    # in-sample seasonal naive error constant 2, out-of-sample error constant 2
    train = np.array([1.0, 5.0, 3.0, 7.0, 5.0, 9.0])
    actual = np.array([7.0, 11.0])
    naive = train[-2:]
    assert mase(train, actual, naive, 2) == pytest.approx(1.0)


@settings(max_examples=50)
@given(
    st.lists(st.floats(-100, 100), min_size=6, max_size=30),
    st.lists(st.floats(-100, 100), min_size=1, max_size=6),
    st.integers(1, 4),
    st.floats(0.1, 1e3),
    st.booleans(),
)
def test_mase_oracle_and_scale_invariance(train, actual, s, k, flip):
    train = np.array(train)
    actual = np.array(actual)
    fc = actual[::-1] + 1.0
    if np.all(train[s:] == train[:-s]):
        with pytest.raises(ValueError):
            mase(train, actual, fc, s)
        return
    ours = mase(train, actual, fc, s)
    assert ours == pytest.approx(mase_loop(train, actual, fc, s), rel=1e-12)
    k = -k if flip else k
    assert mase(k * train, k * actual, k * fc, s) == pytest.approx(ours, rel=1e-9)


def test_metric_errors():
    with pytest.raises(ValueError):
        smape([1, 2], [1])
    with pytest.raises(ValueError):
        smape([], [])
    with pytest.raises(ValueError, match="zero"):
        mase([2.0, 2.0, 2.0], [1.0], [1.0], 1)
    with pytest.raises(ValueError):
        mase([1.0, 2.0], [1.0], [1.0], 2)


def test_naive2_on_white_noise_repeats_the_last_value():
    flagged = 0
    for seed in range(300):
        y = 50 + np.random.default_rng(seed).normal(size=72)
        if seasonality_test(y, 12):
            flagged += 1
        else:
            np.testing.assert_array_equal(naive2_forecast(y, 12, 5), np.full(5, y[-1]))
    # a 90% test flags roughly one white-noise series in ten
    assert 0.04 <= flagged / 300 <= 0.16


def test_naive2_continues_a_multiplicative_cycle():
    s = 12
    idx = 1 + 0.3 * np.sin(2 * np.pi * np.arange(s) / s)
    idx /= idx.mean()
    y = 40.0 * np.tile(idx, 5)
    assert seasonality_test(y, s)
    f = naive2_forecast(y, s, 18)
    np.testing.assert_allclose(f, 40.0 * idx[np.arange(60, 78) % s], rtol=1e-12)
    np.testing.assert_allclose(seasonal_indices(y, s)[:s], idx, rtol=1e-12)


def test_naive2_falls_back_without_enough_data():
    y = 10 + np.tile([1.0, 5.0, 2.0, 8.0], 2)
    np.testing.assert_array_equal(naive2_forecast(y, 4, 3), np.full(3, y[-1]))
    neg = np.tile([-1.0, 1.0, 3.0], 6)
    np.testing.assert_array_equal(naive2_forecast(neg, 3, 2), np.full(2, 3.0))
    np.testing.assert_array_equal(naive2_forecast([4.0], 1, 2), [4.0, 4.0])


def records(model, values):
    return [EvalRecord(sid, model, 6, sm, ma) for sid, (sm, ma) in values.items()]


def test_owa_examples():
    base = {"a": (10.0, 1.0), "b": (20.0, 2.0), "c": (30.0, 0.5)}
    n2 = records("Naive2", base)
    assert owa(n2, n2) == 1.0
    half = {k: (sm / 2, ma / 2) for k, (sm, ma) in base.items()}
    assert owa(records("M", half), n2) == pytest.approx(0.5)
    toy = {"a": (5.0, 2.0), "b": (12.0, 1.0), "c": (40.0, 0.25)}
    # spreadsheet-style: column means, ratios, average
    sm_ratio = ((5 + 12 + 40) / 3) / ((10 + 20 + 30) / 3)
    ma_ratio = ((2 + 1 + 0.25) / 3) / ((1 + 2 + 0.5) / 3)
    assert owa(records("M", toy), n2) == pytest.approx((sm_ratio + ma_ratio) / 2, rel=1e-14)


@given(st.permutations(["a", "b", "c", "d"]))
def test_owa_is_invariant_to_reordering(order):
    rng = np.random.default_rng(1)
    vals_m = {k: (rng.uniform(1, 50), rng.uniform(0.1, 3)) for k in "abcd"}
    vals_n = {k: (rng.uniform(1, 50), rng.uniform(0.1, 3)) for k in "abcd"}
    m, n = records("M", vals_m), records("Naive2", vals_n)
    ref = owa(m, n)
    m2 = [r for k in order for r in m if r.series_id == k]
    assert owa(m2, n) == pytest.approx(ref, rel=1e-15)


def test_owa_errors():
    n2 = records("Naive2", {"a": (1.0, 1.0)})
    with pytest.raises(ValueError):
        owa([], n2)
    with pytest.raises(ValueError):
        owa(records("M", {"b": (1.0, 1.0)}), n2)
    with pytest.raises(ValueError, match="zero"):
        owa(n2, records("Naive2", {"a": (0.0, 0.0)}))


def test_record_validation():
    with pytest.raises(ValueError):
        EvalRecord("a", "M", 1, 250.0, 1.0)
    with pytest.raises(ValueError):
        EvalRecord("a", "M", 1, 10.0, -1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        EvalConfig(models=("SSL",))
    with pytest.raises(ValueError):
        EvalConfig(models=("Naive2", "ARIMA"))
    with pytest.raises(ValueError):
        EvalConfig(horizon=0)


def test_panel_round_trip_and_directory_input(tmp_path):
    panel = synthetic_panel(n_series=3, length=40, horizon=6)
    path = tmp_path / "long.csv"
    write_panel(panel, path)
    back = read_panel(path)
    assert list(back) == list(panel)
    for k in panel:
        np.testing.assert_array_equal(back[k], panel[k])
    d = tmp_path / "dir"
    d.mkdir()
    (d / "x.csv").write_text("t,value\n1,1.5\n2,\n3,2.5\n")
    got = read_panel(d)
    np.testing.assert_array_equal(np.isnan(got["x"]), [False, True, False])


def test_panel_errors_name_the_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,t,value\na,1,1.0\na,2,oops\n")
    with pytest.raises(ValueError, match=":3:"):
        read_panel(path)
    path.write_text("id,t,value\na,1,1.0\na,3,2.0\n")
    with pytest.raises(ValueError, match="contiguous"):
        read_panel(path)


def test_bundled_panel_is_the_seeded_synthetic_panel():
    bundled = bundled_panel()
    fresh = synthetic_panel()
    assert len(bundled) == 20
    for k in fresh:
        np.testing.assert_allclose(bundled[k], fresh[k], rtol=1e-15)


def test_evaluate_series_scores_every_model():
    y = synthetic_panel(n_series=1, seed=5)["S01"]
    recs = evaluate_series("S01", y, EvalConfig())
    assert [r.model for r in recs] == ["Naive2", "SSL", "SSL-O"]
    for r in recs:
        assert 0 <= r.smape <= 200 and r.mase >= 0


def test_naive2_against_itself_on_a_panel(tmp_path):
    panel = synthetic_panel(n_series=4, seed=11)
    rep = evaluate_panel(panel, EvalConfig(models=("Naive2",)))
    assert rep.aggregate["Naive2"]["OWA"] == 1.0
    rep.write(tmp_path / "per.csv", tmp_path / "agg.json")
    agg = json.loads((tmp_path / "agg.json").read_text())
    assert agg["Naive2"]["OWA"] == 1.0
    lines = (tmp_path / "per.csv").read_text().splitlines()
    assert len(lines) == 1 + 4
