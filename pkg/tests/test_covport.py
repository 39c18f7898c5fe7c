import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import optimize, stats

from jumpsync.covport import (CovarianceEstimate, RebalanceRule, backtest, efficient_frontier,
                              min_variance_weights, modified_sharpe, realized_covariance,
                              sharpe_diff_test)
from jumpsync.errors import InfeasibleConstraintError, NumericalError, SchemaError


def test_realized_covariance_single_vector():
    v = np.array([0.1, -0.2, 0.3])
    np.testing.assert_allclose(realized_covariance(v[None, :]).matrix, np.outer(v, v))


def test_realized_covariance_duplicate_assets():
    r = np.random.default_rng(0).normal(size=(50, 1))
    C = realized_covariance(np.hstack([r, r])).matrix
    assert C[0, 0] == C[1, 1] == C[0, 1] == C[1, 0]


def test_realized_covariance_per_asset_lists():
    a, b = [0.1, 0.2], [0.3, -0.1]
    C = realized_covariance([a, b]).matrix
    assert C[0, 1] == pytest.approx(0.1 * 0.3 - 0.2 * 0.1)
    with pytest.raises(SchemaError):
        realized_covariance([[0.1, 0.2], [0.3]])


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 40), st.integers(1, 6)),
              elements=st.floats(-1, 1)))
def test_covariance_symmetric_psd(r):
    est = realized_covariance(r)
    np.testing.assert_array_equal(est.matrix, est.matrix.T)
    assert est.is_psd()


def test_two_asset_kkt_weights():
    # min w1^2 + 4 w2^2 s.t. w1 + w2 = 1  =>  w1 = 4/5, w2 = 1/5
    w = min_variance_weights(np.diag([1.0, 4.0]), [0.03, 0.03], 0.03)
    np.testing.assert_allclose(w, [0.8, 0.2], atol=1e-10)


def test_identity_equal_means_gives_equal_weights():
    w = min_variance_weights(np.eye(4), np.full(4, 0.01), 0.01)
    np.testing.assert_allclose(w, 0.25, atol=1e-12)


def test_weights_match_numerical_optimizer():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(60, 5))
    C, mu = A.T @ A / 60, rng.normal(0.01, 0.01, 5)
    target = float(np.mean(mu))
    cons = [{"type": "eq", "fun": lambda w: w.sum() - 1},
            {"type": "eq", "fun": lambda w: w @ mu - target}]
    ref = optimize.minimize(lambda w: w @ C @ w, np.full(5, 0.2), constraints=cons,
                            method="SLSQP", options={"ftol": 1e-15, "maxiter": 500}).x
    np.testing.assert_allclose(min_variance_weights(C, mu, target), ref, atol=1e-6)


def test_min_variance_beats_equal_weights():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(100, 4))
    C = A.T @ A
    mu = np.full(4, 0.02)
    w = min_variance_weights(C, mu, 0.02)
    eq = np.full(4, 0.25)
    assert w @ C @ w <= eq @ C @ eq


def test_unreachable_target_with_equal_means():
    with pytest.raises(InfeasibleConstraintError):
        min_variance_weights(np.eye(2), [0.1, 0.1], 0.2)


def test_singular_covariance_uses_ridge():
    C = np.ones((3, 3))
    w = min_variance_weights(C, [0.01, 0.02, 0.03], 0.02)
    assert w.sum() == pytest.approx(1, abs=1e-10)


def test_zero_covariance_is_numerical_error():
    with pytest.raises(NumericalError):
        min_variance_weights(np.zeros((2, 2)), [0.01, 0.02], 0.015)


def test_frontier_two_asset_closed_form():
    # With two assets the constraints pin the weights: w1 = (t - m2) / (m1 - m2).
    C, mu = np.diag([1.0, 4.0]), np.array([0.01, 0.05])
    pts = efficient_frontier(C, mu, 11)
    for pt in pts:
        w1 = (pt.target - 0.05) / (0.01 - 0.05)
        np.testing.assert_allclose(pt.weights, [w1, 1 - w1], atol=1e-12)
        assert pt.variance == pytest.approx(w1 ** 2 + 4 * (1 - w1) ** 2)
    assert pts[0].target == 0.01 and pts[-1].target == 0.05


def test_frontier_constraints_and_convexity():
    rng = np.random.default_rng(9)
    A = rng.normal(size=(390, 30)) * 1e-3
    C, mu = A.T @ A, rng.normal(5e-4, 1e-3, 30)
    pts = efficient_frontier(C, mu, 100)
    for pt in pts:
        assert abs(pt.weights.sum() - 1) < 1e-10
        assert abs(pt.weights @ mu - pt.target) < 1e-10
    var = np.array([pt.variance for pt in pts])
    assert np.all(np.diff(var, 2) >= -1e-12 * var.max())


def test_frontier_equal_means_degenerates():
    pts = efficient_frontier(np.diag([1.0, 2.0, 3.0]), [0.1, 0.1, 0.1], 5)
    for pt in pts[1:]:
        np.testing.assert_allclose(pt.weights, pts[0].weights)


def _msr_oracle(x, alpha=0.05):
    m, s = x.mean(), x.std()
    S, K = stats.skew(x), stats.kurtosis(x)
    z = stats.norm.ppf(alpha)
    zcf = z + (z * z - 1) * S / 6 + (z ** 3 - 3 * z) * K / 24 - (2 * z ** 3 - 5 * z) * S * S / 36
    return m / -(m + zcf * s)


def test_modified_sharpe_matches_oracle():
    x = np.random.default_rng(0).gamma(2.0, 0.01, 500) - 0.015
    assert modified_sharpe(x) == pytest.approx(_msr_oracle(x), rel=1e-10)


def test_modified_sharpe_normal_close_to_classical():
    x = np.random.default_rng(1).normal(0.05, 1, 100_000)
    z = stats.norm.ppf(0.05)
    classical = x.mean() / -(x.mean() + z * x.std())
    assert modified_sharpe(x) == pytest.approx(classical, rel=0.05)


def test_modified_sharpe_degenerate_and_short():
    with pytest.raises(NumericalError):
        modified_sharpe(np.zeros(40))
    with pytest.raises(ValueError):
        modified_sharpe(np.ones(10))


def test_modified_sharpe_numerator_antisymmetric():
    x = np.random.default_rng(2).normal(0.001, 0.01, 100)
    # sign of the ratio follows the sign of the mean (mVaR stays positive here)
    assert np.sign(modified_sharpe(x)) == np.sign(x.mean())
    assert np.sign(modified_sharpe(-x)) == -np.sign(x.mean())


def test_sharpe_test_identical_series():
    x = np.random.default_rng(3).normal(size=100)
    assert sharpe_diff_test(x, x, rng_seed=0).p_value == 1.0


def test_sharpe_test_deterministic_and_bounded():
    rng = np.random.default_rng(4)
    a, b = rng.normal(0.001, 0.01, 250), rng.normal(0.0005, 0.01, 250)
    r1 = sharpe_diff_test(a, b, 200, 5, rng_seed=7)
    r2 = sharpe_diff_test(a, b, 200, 5, rng_seed=7)
    assert r1.p_value == r2.p_value
    assert 0 < r1.p_value <= 1


def test_sharpe_test_detects_large_difference():
    rng = np.random.default_rng(5)
    a, b = rng.normal(0.004, 0.01, 500), rng.normal(-0.002, 0.01, 500)
    assert sharpe_diff_test(a, b, 500, 5, rng_seed=1).p_value < 0.05


def test_sharpe_test_argument_errors():
    with pytest.raises(ValueError):
        sharpe_diff_test(np.ones(8), np.zeros(8), block_len=5)
    with pytest.raises(ValueError):
        sharpe_diff_test(np.ones(20), np.zeros(21))


@pytest.mark.slow
def test_sharpe_test_size():
    rng = np.random.default_rng(123)
    rejections = 0
    for trial in range(500):
        a, b = rng.normal(5e-4, 0.01, 250), rng.normal(5e-4, 0.01, 250)
        rejections += sharpe_diff_test(a, b, 1000, 5, rng_seed=trial).p_value < 0.10
    assert 0.05 <= rejections / 500 <= 0.15


def _panel(days=40, slots=20, p=3, seed=0):
    rng = np.random.default_rng(seed)
    raw = rng.normal(1e-4, 1e-3, (days, slots, p))
    etf = raw.mean(axis=2)
    return raw, etf


def test_backtest_zero_rearrangements_identical():
    raw, etf = _panel()
    res = backtest(raw, raw.copy(), etf, [3, 10, 20], RebalanceRule(n_boot=100))
    np.testing.assert_array_equal(res.raw.returns, res.rearranged.returns)
    assert res.p_value == 1.0


def test_backtest_no_rearrangement_days_is_equal_weight():
    raw, etf = _panel()
    res = backtest(raw, raw, etf, [])
    np.testing.assert_allclose(res.raw.weights, 1 / 3)
    expected = np.expm1(raw.sum(axis=1)).mean(axis=1)
    np.testing.assert_allclose(res.raw.returns, expected)


def test_backtest_constant_prices_closing_value_one():
    raw = np.zeros((35, 10, 2))
    res = backtest(raw, raw, np.zeros((35, 10)), [5])
    assert res.raw.closing_value == 1.0 and res.rearranged.closing_value == 1.0


def test_backtest_weights_held_until_next_rearrangement():
    raw, etf = _panel(seed=2)
    rea = raw.copy()
    rea[5, :3] = rea[5, :3][::-1]
    res = backtest(raw, rea, etf, [5, 12])
    w = res.rearranged.weights
    np.testing.assert_allclose(w[:6], 1 / 3)
    assert np.all(w[6:13] == w[6]) and not np.allclose(w[6], 1 / 3)
    assert np.all(w[13:] == w[13])
    for d in (5, 12):
        assert abs(res.rearranged.targets[d]) >= 0
    np.testing.assert_allclose(w.sum(axis=1), 1, atol=1e-10)


def test_backtest_reset_restores_equal_weights():
    raw, etf = _panel(seed=3)
    res = backtest(raw, raw, etf, [5], reset_days=[20])
    np.testing.assert_allclose(res.raw.weights[20:], 1 / 3)


def test_backtest_skips_days_with_missing_data():
    raw, etf = _panel(seed=4)
    raw[7, 3, 1] = np.nan
    res = backtest(raw, raw, etf, [7])
    assert res.skipped_days == [7]


def test_backtest_deterministic_and_table():
    raw, etf = _panel(seed=6)
    rea = raw.copy()
    rea[10] = rea[10][::-1]
    a = backtest(raw, rea, etf, [10], RebalanceRule(n_boot=100, rng_seed=1), n_cojumps=2, n_rearranged=1)
    b = backtest(raw, rea, etf, [10], RebalanceRule(n_boot=100, rng_seed=1), n_cojumps=2, n_rearranged=1)
    assert a.to_csv() == b.to_csv()
    row = a.table_row()
    assert row["Days"] == 1 and row["#CJ"] == 2 and row["#CJ-R"] == 1
    assert a.to_csv().splitlines()[0].startswith("Days,#CJ,#CJ-R")


def test_covariance_estimate_validation():
    with pytest.raises(SchemaError):
        CovarianceEstimate(np.zeros((2, 3)))
    assert CovarianceEstimate(np.eye(2)).frobenius_distance(np.zeros((2, 2))) == pytest.approx(2 ** 0.5)
