from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import coef_from_structural, random_structural, simulate_structural
from sslearn.matrix import (
    TimeSeries,
    build_design,
    build_forecast_rows,
    seasonal_index,
    seasonal_support,
)

GOLDEN = Path(__file__).parent / "golden"


def read_golden(name):
    lines = (GOLDEN / name).read_text().splitlines()
    header = lines[0].split(",")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return header, rows


def design(T, s, **kw):
    return build_design(TimeSeries(np.zeros(T), s), **kw)


@pytest.mark.parametrize("t,s,expected", [(3, 2, 1), (1, 12, 1), (25, 12, 1), (12, 12, 12), (13, 12, 1)])
def test_seasonal_index_examples(t, s, expected):
    assert seasonal_index(t, s) == expected


@given(st.integers(1, 500), st.integers(1, 24))
def test_seasonal_index_is_shifted_modulus(t, s):
    assert seasonal_index(t, s) == (t - 1) % s + 1


@pytest.mark.parametrize("t,s,expected", [(5, 2, [3, 5]), (2, 2, []), (7, 2, [3, 5, 7]), (30, 12, [18, 30])])
def test_seasonal_support_examples(t, s, expected):
    assert seasonal_support(t, s) == expected


def test_small_design_matches_golden():
    header, rows = read_golden("design_T5_s2.csv")
    d = design(5, 2)
    assert d.names == header[1:]
    np.testing.assert_array_equal(d.values, rows[:, 1:])
    np.testing.assert_array_equal(d.row_times, rows[:, 0])


def test_forecast_rows_match_golden():
    header, rows = read_golden("forecast_rows_T5_s2_H2.csv")
    f = build_forecast_rows(design(5, 2), 2)
    assert f.names == header[1:]
    np.testing.assert_array_equal(f.values, rows[:, 1:])
    np.testing.assert_array_equal(f.row_times, [6, 7])


def test_csv_dump_is_byte_identical_to_golden():
    assert design(5, 2).to_csv() == (GOLDEN / "design_T5_s2.csv").read_text()


def test_two_points_without_season():
    d = design(2, 1)
    # the slope innovation at the last time has no column (see forecast rows)
    assert d.names == ["mu1", "xi_2", "nu1"]
    np.testing.assert_array_equal(d.values, [[1, 0, 0], [1, 1, 1]])


def test_outliers_append_identity():
    base = design(5, 2).values
    d = design(5, 2, outliers=True)
    assert d.shape == (5, 20)
    np.testing.assert_array_equal(d.values[:, :15], base)
    np.testing.assert_array_equal(d.values[:, 15:], np.eye(5))
    assert d.names[15:] == [f"o_{t}" for t in range(1, 6)]


def test_exogenous_columns_follow_and_need_matching_rows():
    X = np.arange(10.0).reshape(5, 2)
    d = build_design(TimeSeries(np.zeros(5), 2), exogenous=X)
    np.testing.assert_array_equal(d.values[:, -2:], X)
    assert d.names[-2:] == ["beta_1", "beta_2"]
    with pytest.raises(ValueError):
        build_design(TimeSeries(np.zeros(5), 2), exogenous=X[:4])


def test_terminal_stabilization_marks_latest_innovations():
    d = design(30, 4, outliers=True, stabilize_terminal=True)
    off = {n for n, c in zip(d.names, d.constrained) if c}
    assert "xi_30" in off and "zeta_29" in off and "omega_30" in off
    # window of one period: zeta_27..29 and omega_27..30 constrained
    assert {"zeta_27", "zeta_28", "omega_27", "omega_28", "omega_29"} <= off
    assert "zeta_26" not in off and "omega_26" not in off
    assert "o_30" not in off and "xi_29" not in off


def test_forecast_rows_intercept_only():
    d = design(5, 2)
    theta = np.zeros(d.shape[1])
    theta[d.column_index("mu1")] = 2.0
    np.testing.assert_array_equal(build_forecast_rows(d, 4).values @ theta, [2, 2, 2, 2])


def test_forecast_rows_without_season():
    T = 6
    row = build_forecast_rows(design(T, 1), 1).values[0]
    np.testing.assert_array_equal(row, [1] + [1] * (T - 1) + [T] + list(range(T - 1, 1, -1)))


def test_forecast_rows_need_future_exogenous():
    d = build_design(TimeSeries(np.zeros(6), 2), exogenous=np.ones((6, 2)))
    with pytest.raises(ValueError):
        build_forecast_rows(d, 2)
    with pytest.raises(ValueError):
        build_forecast_rows(d, 2, np.ones((3, 2)))
    f = build_forecast_rows(d, 2, np.full((2, 2), 3.0))
    np.testing.assert_array_equal(f.values[:, -2:], 3.0)


@given(st.integers(2, 40), st.sampled_from([2, 3, 4, 12]))
def test_omega_entries_are_support_differences(T, s):
    d = design(T, s)
    for row, t in zip(d.values, d.row_times):
        M = set(seasonal_support(int(t), s))
        for name, v in zip(d.names, row):
            if name.startswith("omega_"):
                j = int(name.split("_")[1])
                assert v == (j in M) - (j + 1 in M)


@given(st.integers(2, 40), st.sampled_from([2, 3, 4, 12]))
def test_exactly_one_seasonal_dummy_per_row(T, s):
    d = design(T, s)
    np.testing.assert_array_equal(d.values[:, d.mask("gamma_init")].sum(axis=1), 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 60), st.sampled_from([1, 2, 4, 12]), st.integers(0, 2**31))
def test_design_reproduces_the_recursions(T, s, seed):
    rng = np.random.default_rng(seed)
    mu1, nu1, head, xi, zeta, omega = random_structural(rng, T, s)
    mu, nu, gamma = simulate_structural(T, s, mu1, nu1, head, xi, zeta, omega)
    # gamma_s is implied by the recursion; it is a free state in the regression
    full = np.r_[head, gamma[s - 1]] if s > 1 and T >= s else np.r_[head, 0.0]
    d = design(T, s)
    theta = coef_from_structural(d.names, s, mu1, nu1, full, xi, zeta, omega)
    np.testing.assert_allclose(d.values @ theta, mu + gamma, rtol=1e-9, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.sampled_from([1, 2, 4, 12]))
def test_forecast_row_formula_continues_in_sample(T, s):
    # rows built for T-1 and extended one step equal the in-sample row T
    short = design(T - 1, s) if T > 2 else None
    if short is None:
        return
    ext = build_forecast_rows(short, 1)
    full = design(T, s)
    for name, v in zip(ext.names, ext.values[0]):
        assert full.values[-1, full.column_index(name)] == v
