import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumpsync.errors import ConfigError
from jumpsync.simgen import (JumpEvent, SimConfig, StepFunction, draw_step_function,
                             observed_jump_component, sample_brownian_bridge, sample_every,
                             simulate, simulate_efficient)


def test_config_defaults_and_derived_variances():
    cfg = SimConfig()
    assert cfg.daily_variance == pytest.approx(0.039 / 252)
    assert cfg.step_variance == pytest.approx(0.039 / 252 / 23_400)
    # noise-to-signal ratio 0.5: omega^2 = 0.25 * daily variance / G
    assert cfg.noise_variance == pytest.approx(0.25 * 0.039 / 252 / 23_400)
    assert cfg.seconds_per_step == 1.0


def test_config_rejects_unknown_and_invalid():
    with pytest.raises(ConfigError):
        SimConfig.from_dict({"n_assets": 2, "bogus": 1})
    with pytest.raises(ConfigError):
        SimConfig(noise_ratio=-1)
    with pytest.raises(ConfigError):
        SimConfig(n_assets=2, weights=(1.0,))


def test_config_json_roundtrip(tmp_path):
    cfg = SimConfig(n_assets=3, common_jumps=True, jump_window=(10, 20), weights=(0.2, 0.3, 0.5))
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert SimConfig.from_json(path) == cfg


def test_zero_intensity_gives_continuous_path():
    cfg = SimConfig(grid_points_per_day=500, jump_intensity=0.0, rng_seed=1)
    res = simulate(cfg)
    assert res.efficient.jumps == []
    assert np.all(res.observed.jump_component == 0)
    assert res.efficient.continuous.shape == (501, 1)


def test_diffusion_variance_matches_config():
    cfg = SimConfig(grid_points_per_day=2000, horizon_days=50, jump_intensity=0, rng_seed=3)
    path = simulate_efficient(cfg)
    rv = np.sum(np.diff(path.continuous[:, 0]) ** 2) / cfg.horizon_days
    # 100k squared N(0, s^2) increments: relative sd of the mean is sqrt(2/1e5)
    assert rv == pytest.approx(cfg.daily_variance, rel=0.02)


def test_common_jumps_share_times():
    cfg = SimConfig(n_assets=4, grid_points_per_day=1000, common_jumps=True,
                    jumps_per_day=2, rng_seed=5)
    path = simulate_efficient(cfg)
    assert len(path.jumps) == 8
    times = {}
    for j in path.jumps:
        times.setdefault(j.index, set()).add(j.asset)
    assert all(assets == {0, 1, 2, 3} for assets in times.values())


def test_jump_window_respected():
    cfg = SimConfig(n_assets=2, grid_points_per_day=1000, horizon_days=3, jumps_per_day=5,
                    jump_window=(100, 200), rng_seed=2)
    for j in simulate_efficient(cfg).jumps:
        assert 100 <= j.index % 1000 <= 200


def test_etf_is_weighted_efficient_price():
    cfg = SimConfig(n_assets=3, grid_points_per_day=300, weights=(0.5, 0.25, 0.25), rng_seed=4)
    res = simulate(cfg)
    np.testing.assert_allclose(res.etf_prices, res.efficient.combined @ np.array([0.5, 0.25, 0.25]))


def test_bridge_endpoints_exact():
    rng = np.random.default_rng(0)
    t = np.array([0.0, 0.1, 0.5, 0.9, 1.0])
    levels = sample_brownian_bridge(0.0, 1.0, t, rng)
    assert levels[0] == 0.0 and levels[-1] == 1.0


def test_bridge_moments():
    # Pinned bridge at time t: mean t, variance t (1 - t) for unit volatility.
    rng = np.random.default_rng(1)
    draws = np.array([sample_brownian_bridge(0, 1, [0, 0.3, 1], rng)[1] for _ in range(20000)])
    assert draws.mean() == pytest.approx(0.3, abs=0.01)
    assert draws.var() == pytest.approx(0.21, rel=0.05)


def test_bridge_rejects_unsorted_times():
    with pytest.raises(ValueError):
        sample_brownian_bridge(0, 1, [0, 0.6, 0.3, 1])


def test_step_function_example():
    sf = StepFunction.from_levels([0, 10, 25], [0.0, 0.4, 1.0])
    np.testing.assert_allclose(sf.increments, [0.0, 0.4, 0.6])
    assert sf.n_steps == 2
    assert sf.total_delay == 25
    np.testing.assert_array_equal(sf.grid_offsets(60.0), [0, 1, 1])


def test_immediate_step_function():
    sf = StepFunction.immediate()
    np.testing.assert_array_equal(sf.increments, [1.0])
    assert sf.total_delay == 0


def test_step_count_distribution():
    cfg = SimConfig(rng_seed=0)
    rng = np.random.default_rng(0)
    jump = JumpEvent(0, 100, 0.01, 0)
    counts = np.array([draw_step_function(jump, cfg, rng).n_steps for _ in range(5000)])
    # Binomial(5, 0.4): mean 2, P(0) = 0.6^5
    assert counts.mean() == pytest.approx(2.0, abs=0.06)
    assert np.mean(counts == 0) == pytest.approx(0.6 ** 5, abs=0.015)


def test_step_delays_respect_cap():
    cfg = SimConfig(max_delay_seconds=120)
    rng = np.random.default_rng(2)
    jump = JumpEvent(0, 100, 0.01, 0)
    for _ in range(2000):
        sf = draw_step_function(jump, cfg, rng)
        assert sf.total_delay <= 120
        assert sf.levels[-1] == 1.0


def test_step_function_near_close_is_truncated():
    cfg = SimConfig(max_redraws=1, step_wait_scale=1000.0, step_count_prob=1.0)
    jump = JumpEvent(0, 23_399, 0.01, 0)
    sf = draw_step_function(jump, cfg, np.random.default_rng(0))
    assert sf.total_delay <= 1
    assert sf.levels[-1] == 1.0


def test_observed_jump_reaches_full_size():
    jump = JumpEvent(0, 10, 0.05, 0)
    sf = StepFunction.from_levels([0, 3, 7], [0.0, 0.5, 1.0])
    comp = observed_jump_component([jump], [sf], 30, 1)
    assert comp[9, 0] == 0 and comp[12, 0] == 0
    assert comp[13, 0] == pytest.approx(0.025)
    assert comp[17, 0] == pytest.approx(0.05) and comp[-1, 0] == pytest.approx(0.05)


def test_simulation_deterministic():
    cfg = SimConfig(n_assets=2, grid_points_per_day=2000, rng_seed=11)
    a, b = simulate(cfg), simulate(cfg)
    np.testing.assert_array_equal(a.observed.combined, b.observed.combined)


def test_sample_every():
    prices = np.arange(13.0)
    np.testing.assert_array_equal(sample_every(prices, 4), [0, 4, 8, 12])
    with pytest.raises(ValueError):
        sample_every(prices, 5)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 23_399))
def test_step_function_properties(seed, index):
    cfg = SimConfig()
    sf = draw_step_function(JumpEvent(0, index, 0.01, 0), cfg, np.random.default_rng(seed))
    assert math.isclose(sf.increments.sum(), 1.0, abs_tol=1e-12)
    assert np.all(np.diff(sf.offsets) > 0)
    assert sf.levels[-1] == 1.0
    assert index + sf.total_delay <= 23_400
