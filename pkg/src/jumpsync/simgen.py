"""
Simulation of efficient and sluggishly observed log prices.

The efficient price of each asset is a driftless Brownian motion plus a
compound Poisson jump process. The observed price adds i.i.d. microstructure
noise to the continuous part and impounds every efficient jump gradually,
through a random step function whose levels are sampled from a Brownian
bridge running from 0 (jump arrival) to 1 (jump fully priced in).

All arrays are laid out as ``(time, asset)``. Time is an integer grid index:
price index 0 is the open of the first day, and day ``d`` covers price
indices ``d * G .. (d + 1) * G`` where ``G = grid_points_per_day``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

__all__ = [
    "SimConfig",
    "JumpEvent",
    "EfficientPath",
    "StepFunction",
    "ObservedPath",
    "SimulationResult",
    "simulate_efficient",
    "draw_step_function",
    "sample_brownian_bridge",
    "observed_jump_component",
    "contaminate",
    "simulate",
    "sample_every",
]


@dataclass(frozen=True)
class SimConfig:
    """Parameters of the sluggish-price data generating process.

    ``annualized_vol`` is converted to a daily integrated variance through
    ``trading_days_per_year``; the per-step diffusion variance is that daily
    variance divided by ``grid_points_per_day``. Waiting times between the
    steps of a delayed jump are measured in seconds and mapped to the grid
    through ``day_seconds / grid_points_per_day``. ``jumps_per_day`` fixes
    the daily jump count instead of drawing it from the Poisson law.
    """

    n_assets: int = 1
    grid_points_per_day: int = 23_400
    horizon_days: int = 1
    annualized_vol: float = math.sqrt(0.039)
    trading_days_per_year: int = 252
    noise_ratio: float = 0.5
    jump_intensity: float = 1.0
    jumps_per_day: int | None = None
    jump_size_mean: float = 0.0
    jump_size_sd: float = 0.01
    step_count_trials: int = 5
    step_count_prob: float = 0.4
    step_wait_scale: float = 15.0
    bridge_vol: float = 1.0
    day_seconds: float = 23_400.0
    common_jumps: bool = False
    diffusion_corr: float = 0.0
    weights: tuple[float, ...] | None = None
    jump_window: tuple[int, int] | None = None
    max_delay_seconds: float | None = None
    max_redraws: int = 50
    initial_log_price: float = 0.0
    rng_seed: int | None = None

    def __post_init__(self):
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.jump_window is not None:
            object.__setattr__(self, "jump_window", tuple(int(v) for v in self.jump_window))
        self.validate()

    def validate(self) -> None:
        for name in ("n_assets", "grid_points_per_day", "horizon_days",
                     "step_count_trials", "trading_days_per_year", "max_redraws"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)!r}")
        for name in ("annualized_vol", "noise_ratio", "jump_intensity",
                     "jump_size_sd", "step_wait_scale", "bridge_vol"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be a finite value >= 0, got {value!r}")
        if not 0.0 <= self.step_count_prob <= 1.0:
            raise ConfigError("step_count_prob must lie in [0, 1]")
        if not 0.0 <= self.diffusion_corr < 1.0:
            raise ConfigError("diffusion_corr must lie in [0, 1)")
        if self.day_seconds <= 0:
            raise ConfigError("day_seconds must be positive")
        if self.weights is not None:
            if len(self.weights) != self.n_assets:
                raise ConfigError("weights must have one entry per asset")
            if any(w < 0 for w in self.weights):
                raise ConfigError("weights must be non-negative")
        if self.jump_window is not None:
            lo, hi = self.jump_window
            if not 1 <= lo <= hi <= self.grid_points_per_day:
                raise ConfigError("jump_window must satisfy 1 <= lo <= hi <= grid_points_per_day")
        if self.jumps_per_day is not None and int(self.jumps_per_day) < 0:
            raise ConfigError("jumps_per_day must be >= 0")
        if self.max_delay_seconds is not None and self.max_delay_seconds < 0:
            raise ConfigError("max_delay_seconds must be >= 0")

    @property
    def n_returns(self) -> int:
        return self.grid_points_per_day * self.horizon_days

    @property
    def seconds_per_step(self) -> float:
        return self.day_seconds / self.grid_points_per_day

    @property
    def daily_variance(self) -> float:
        return self.annualized_vol ** 2 / self.trading_days_per_year

    @property
    def step_variance(self) -> float:
        return self.daily_variance / self.grid_points_per_day

    @property
    def noise_variance(self) -> float:
        # noise ratio = sqrt(n * omega^2 / integrated variance), solved for omega^2
        return self.noise_ratio ** 2 * self.daily_variance / self.grid_points_per_day

    @property
    def asset_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.n_assets, 1.0 / self.n_assets)
        return np.asarray(self.weights, dtype=float)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path: str | Path) -> "SimConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key in ("weights", "jump_window"):
            if out[key] is not None:
                out[key] = list(out[key])
        return out


@dataclass(frozen=True)
class JumpEvent:
    """An efficient jump: ``size`` added to ``asset`` from price index ``index`` on."""

    id: int
    index: int
    size: float
    asset: int

    def day_of(self, grid_points_per_day: int) -> int:
        return (self.index - 1) // grid_points_per_day


@dataclass
class EfficientPath:
    continuous: np.ndarray
    jump_component: np.ndarray
    jumps: list[JumpEvent]

    @property
    def combined(self) -> np.ndarray:
        return self.continuous + self.jump_component


@dataclass(frozen=True)
class StepFunction:
    """Progress-to-efficiency step function of one delayed jump.

    ``offsets`` are integer seconds after the jump arrival, ``levels`` the
    bridge values sampled there and ``increments`` their first differences
    (the first increment is the first level itself).
    """

    jump_id: int
    offsets: np.ndarray
    levels: np.ndarray
    increments: np.ndarray = field(repr=False)

    @property
    def n_steps(self) -> int:
        return len(self.offsets) - 1

    @property
    def total_delay(self) -> int:
        return int(self.offsets[-1])

    def grid_offsets(self, seconds_per_step: float) -> np.ndarray:
        """Offsets converted to grid steps (rounded up)."""
        return np.ceil(self.offsets / seconds_per_step - 1e-12).astype(np.int64)

    @classmethod
    def from_levels(cls, offsets, levels, jump_id: int = 0) -> "StepFunction":
        offsets = np.asarray(offsets, dtype=np.int64)
        levels = np.asarray(levels, dtype=float)
        if offsets.shape != levels.shape or offsets.ndim != 1 or len(offsets) == 0:
            raise ValueError("offsets and levels must be equal-length 1-d sequences")
        if offsets[0] != 0 or np.any(np.diff(offsets) <= 0):
            raise ValueError("offsets must start at 0 and be strictly increasing")
        increments = np.diff(levels, prepend=0.0)
        return cls(jump_id, offsets, levels, increments)

    @classmethod
    def from_waits(cls, waits, levels, jump_id: int = 0) -> "StepFunction":
        offsets = np.concatenate([[0], np.cumsum(np.asarray(waits, dtype=np.int64))])
        return cls.from_levels(offsets, levels, jump_id)

    @classmethod
    def immediate(cls, jump_id: int = 0) -> "StepFunction":
        return cls.from_levels([0], [1.0], jump_id)


@dataclass
class ObservedPath:
    continuous: np.ndarray
    jump_component: np.ndarray
    noise: np.ndarray
    step_functions: list[StepFunction]

    @property
    def combined(self) -> np.ndarray:
        return self.continuous + self.jump_component


@dataclass
class SimulationResult:
    config: SimConfig
    efficient: EfficientPath
    observed: ObservedPath

    @property
    def weights(self) -> np.ndarray:
        return self.config.asset_weights

    @property
    def etf_prices(self) -> np.ndarray:
        """Index tracker priced off the efficient stock prices."""
        return self.efficient.combined @ self.weights


def _rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def simulate_efficient(config: SimConfig, rng=None) -> EfficientPath:
    """Draw efficient log prices X = X^c + X^d on the configured grid.

    Parameters
    ----------
    config : SimConfig
    rng : numpy Generator or seed, optional
        Defaults to a generator seeded with ``config.rng_seed``.

    Returns
    -------
    EfficientPath
        Continuous and jump components, each of shape
        ``(n_returns + 1, n_assets)``, and the list of drawn jumps.
    """
    config.validate()
    rng = _rng(config.rng_seed if rng is None else rng)
    n, p, G = config.n_returns, config.n_assets, config.grid_points_per_day

    sd = math.sqrt(config.step_variance)
    shocks = rng.standard_normal((n, p))
    if config.diffusion_corr > 0 and p > 1:
        common = rng.standard_normal((n, 1))
        rho = config.diffusion_corr
        shocks = math.sqrt(1.0 - rho) * shocks + math.sqrt(rho) * common
    continuous = np.empty((n + 1, p))
    continuous[0] = config.initial_log_price
    np.cumsum(sd * shocks, axis=0, out=continuous[1:])
    continuous[1:] += config.initial_log_price

    lo, hi = config.jump_window if config.jump_window is not None else (1, G)

    def draw_count():
        if config.jumps_per_day is not None:
            return int(config.jumps_per_day)
        return rng.poisson(config.jump_intensity)

    jumps: list[JumpEvent] = []
    for day in range(config.horizon_days):
        if config.common_jumps:
            count = draw_count()
            slots = np.sort(rng.integers(lo, hi + 1, size=count))
            for slot in slots:
                sizes = rng.normal(config.jump_size_mean, config.jump_size_sd, size=p)
                for k in range(p):
                    jumps.append(JumpEvent(len(jumps), day * G + int(slot), float(sizes[k]), k))
        else:
            for k in range(p):
                count = draw_count()
                slots = np.sort(rng.integers(lo, hi + 1, size=count))
                sizes = rng.normal(config.jump_size_mean, config.jump_size_sd, size=count)
                for slot, size in zip(slots, sizes):
                    jumps.append(JumpEvent(len(jumps), day * G + int(slot), float(size), k))

    increments = np.zeros((n + 1, p))
    for jump in jumps:
        increments[jump.index, jump.asset] += jump.size
    jump_component = np.cumsum(increments, axis=0)
    return EfficientPath(continuous, jump_component, jumps)


def sample_brownian_bridge(t_start: float, t_end: float, sample_times, rng=None,
                           volatility: float = 1.0) -> np.ndarray:
    """Sample a Brownian bridge pinned at 0 (``t_start``) and 1 (``t_end``).

    Values are drawn sequentially from the exact conditional Gaussian law:
    given the level ``v`` at the previous time ``s``, the level at ``t`` has
    mean ``v + (t - s) / (t_end - s) * (1 - v)`` and variance
    ``volatility**2 * (t - s) * (t_end - t) / (t_end - s)``.
    A sample time equal to ``t_end`` returns exactly 1.
    """
    if not t_start < t_end:
        raise ValueError("t_start must be smaller than t_end")
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1:
        raise ValueError("sample_times must be one-dimensional")
    if np.any(np.diff(times) < 0):
        raise ValueError("sample_times must be sorted")
    if len(times) and (times[0] < t_start or times[-1] > t_end):
        raise ValueError("sample_times must lie within [t_start, t_end]")
    if volatility < 0:
        raise ValueError("volatility must be non-negative")
    rng = _rng(rng)

    levels = np.empty(len(times))
    prev_t, prev_v = float(t_start), 0.0
    for i, t in enumerate(times):
        if t == t_start:
            levels[i] = 0.0
            continue
        if t == t_end:
            levels[i] = 1.0
            prev_t, prev_v = t, 1.0
            continue
        span = t_end - prev_t
        mean = prev_v + (t - prev_t) / span * (1.0 - prev_v)
        var = volatility ** 2 * (t - prev_t) * (t_end - t) / span
        prev_v = mean + math.sqrt(var) * rng.standard_normal() if var > 0 else mean
        prev_t = t
        levels[i] = prev_v
    return levels


def draw_step_function(jump: JumpEvent, config: SimConfig, rng=None,
                       last_index: int | None = None) -> StepFunction:
    """Draw the step function that spreads ``jump`` over time.

    The number of steps is Binomial(``step_count_trials``, ``step_count_prob``);
    waits are ``ceil(Exp(mean = step_wait_scale * n_steps))`` seconds; levels
    come from a Brownian bridge on the delay interval (time rescaled to
    [0, 1]). A zero step count means the jump is impounded immediately.

    Delays that overrun ``last_index`` (by default the end of the jump's day)
    or ``config.max_delay_seconds`` are redrawn up to ``config.max_redraws``
    times; after that the step function is truncated and its last retained
    level forced to 1.
    """
    rng = _rng(rng)
    n_steps = int(rng.binomial(config.step_count_trials, config.step_count_prob))
    if n_steps == 0:
        return StepFunction.immediate(jump.id)

    G = config.grid_points_per_day
    if last_index is None:
        last_index = (jump.day_of(G) + 1) * G
    room_seconds = (last_index - jump.index) * config.seconds_per_step
    if config.max_delay_seconds is not None:
        room_seconds = min(room_seconds, config.max_delay_seconds)

    scale = config.step_wait_scale * n_steps
    for _ in range(config.max_redraws):
        waits = np.maximum(1, np.ceil(rng.exponential(scale, size=n_steps))).astype(np.int64)
        offsets = np.concatenate([[0], np.cumsum(waits)])
        if offsets[-1] <= room_seconds:
            break
    total = float(offsets[-1])
    levels = sample_brownian_bridge(0.0, 1.0, offsets / total, rng, config.bridge_vol)
    if offsets[-1] > room_seconds:
        keep = offsets <= room_seconds
        offsets, levels = offsets[keep], levels[keep]
        levels[-1] = 1.0
    return StepFunction.from_levels(offsets, levels, jump.id)


def observed_jump_component(jumps, step_functions, n_points: int, n_assets: int,
                            seconds_per_step: float = 1.0) -> np.ndarray:
    """Evaluate the sluggish jump component Y^d on the price grid.

    Each step ``d`` of jump ``j`` adds ``increments[d] * size_j`` to the
    asset's observed jump level from grid index
    ``index_j + ceil(offsets[d] / seconds_per_step)`` onward.
    """
    if len(jumps) != len(step_functions):
        raise ValueError("need one step function per jump")
    delta = np.zeros((n_points, n_assets))
    for jump, steps in zip(jumps, step_functions):
        where = jump.index + steps.grid_offsets(seconds_per_step)
        ok = where < n_points
        np.add.at(delta[:, jump.asset], where[ok], steps.increments[ok] * jump.size)
    return np.cumsum(delta, axis=0)


def contaminate(efficient: EfficientPath, config: SimConfig, rng=None,
                step_functions: list[StepFunction] | None = None) -> ObservedPath:
    """Turn an efficient path into observed prices Y = (X^c + u) + Y^d."""
    rng = _rng(rng)
    shape = efficient.continuous.shape
    noise = math.sqrt(config.noise_variance) * rng.standard_normal(shape)
    if step_functions is None:
        step_functions = [draw_step_function(j, config, rng) for j in efficient.jumps]
    jump_component = observed_jump_component(
        efficient.jumps, step_functions, shape[0], shape[1], config.seconds_per_step)
    return ObservedPath(efficient.continuous + noise, jump_component, noise, step_functions)


def simulate(config: SimConfig, rng=None) -> SimulationResult:
    """Efficient path plus its sluggish observation, from one RNG stream."""
    rng = _rng(config.rng_seed if rng is None else rng)
    efficient = simulate_efficient(config, rng)
    observed = contaminate(efficient, config, rng)
    return SimulationResult(config, efficient, observed)


def sample_every(prices: np.ndarray, every: int, grid_points_per_day: int | None = None) -> np.ndarray:
    """Coarsen a price grid by keeping every ``every``-th observation.

    With ``grid_points_per_day`` given, the day boundaries must fall on the
    coarse grid.
    """
    if every < 1:
        raise ValueError("every must be >= 1")
    if grid_points_per_day is not None and grid_points_per_day % every:
        raise ValueError("grid_points_per_day must be a multiple of every")
    if (len(prices) - 1) % every:
        raise ValueError("number of returns must be a multiple of every")
    return prices[::every]
