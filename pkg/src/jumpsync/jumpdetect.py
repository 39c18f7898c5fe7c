"""
Intraday jump detection with a periodicity-adjusted Lee-Mykland test.

Returns are handled as a ``(days, slots)`` matrix per asset. Each return is
divided by the intraday periodicity factor of its slot and by a local
bipower-variation volatility estimate; the absolute ratio is compared with
the Gumbel critical value of the maximum of ``n`` absolute normals.
Flagged returns are moved wholly into the jump part.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ReturnSeries",
    "JumpClassification",
    "estimate_periodicity",
    "gumbel_threshold",
    "local_bipower_volatility",
    "detect_jumps",
]

_MU1 = math.sqrt(2.0 / math.pi)  # E|Z| for standard normal Z
_MAD_TO_SD = 1.482602218505602


@dataclass
class ReturnSeries:
    """Log returns of one asset on a regular intraday grid."""

    values: np.ndarray
    slots_per_day: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.slots_per_day < 1:
            raise ValueError("slots_per_day must be >= 1")
        if len(self.values) % self.slots_per_day:
            raise ValueError("number of returns must be a multiple of slots_per_day")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("returns must not contain missing values")

    @classmethod
    def from_prices(cls, prices, slots_per_day: int) -> "ReturnSeries":
        return cls(np.diff(np.asarray(prices, dtype=float)), slots_per_day)

    @property
    def n_days(self) -> int:
        return len(self.values) // self.slots_per_day

    @property
    def day_boundaries(self) -> np.ndarray:
        return np.arange(0, len(self.values) + 1, self.slots_per_day)

    def by_day(self) -> np.ndarray:
        return self.values.reshape(self.n_days, self.slots_per_day)


@dataclass
class JumpClassification:
    """Split of observed returns into a sparse jump part and a continuous part."""

    jump_returns: np.ndarray
    continuous_returns: np.ndarray
    test_stats: np.ndarray
    threshold: float

    @property
    def is_jump(self) -> np.ndarray:
        return self.jump_returns != 0

    @property
    def jump_indices(self) -> np.ndarray:
        return np.flatnonzero(self.is_jump)

    @classmethod
    def from_mask(cls, returns, mask, test_stats=None, threshold=np.nan) -> "JumpClassification":
        returns = np.asarray(returns, dtype=float)
        mask = np.asarray(mask, dtype=bool)
        jumps = np.where(mask, returns, 0.0)
        cont = np.where(mask, 0.0, returns)
        stats = np.full(returns.shape, np.nan) if test_stats is None else np.asarray(test_stats)
        return cls(jumps, cont, stats, float(threshold))


def _as_series(returns, slots_per_day=None) -> ReturnSeries:
    if isinstance(returns, ReturnSeries):
        return returns
    arr = np.asarray(returns, dtype=float)
    if arr.ndim == 2:
        return ReturnSeries(arr.ravel(), arr.shape[1])
    return ReturnSeries(arr, slots_per_day or len(arr))


def estimate_periodicity(returns, min_days: int = 5, bandwidth: int = 5):
    """Robust intraday periodicity factors, one per slot.

    Each day is first standardized by its bipower-variation volatility, so
    that day-to-day volatility changes do not leak into the slot profile.
    The factor of a slot is the median absolute deviation of the
    standardized returns pooled over all days and the ``bandwidth``
    neighbouring slots on either side. Factors are normalized to unit mean
    square.

    Parameters
    ----------
    returns : ReturnSeries or array of shape (days, slots)
    min_days : int
        With fewer days the estimate is unreliable and unit factors are
        returned with the fallback flag set.
    bandwidth : int
        Half-width of the slot pooling window.

    Returns
    -------
    factors : ndarray of shape (slots,)
    fallback : bool
        True when unit factors were returned because of insufficient data.
    """
    series = _as_series(returns)
    m = series.slots_per_day
    if series.n_days < min_days:
        warnings.warn(f"{series.n_days} day(s) of data, need {min_days}; "
                      "using unit periodicity factors", RuntimeWarning, stacklevel=2)
        return np.ones(m), True

    r = series.by_day()
    bv = math.pi / 2 * np.sum(np.abs(r[:, 1:]) * np.abs(r[:, :-1]), axis=1) * m / (m - 1)
    daily_sd = np.sqrt(bv / m)
    daily_sd[daily_sd == 0] = 1.0
    z = np.abs(r / daily_sd[:, None])

    factors = np.empty(m)
    for slot in range(m):
        lo, hi = max(0, slot - bandwidth), min(m, slot + bandwidth + 1)
        pooled = z[:, lo:hi].ravel()
        factors[slot] = _MAD_TO_SD * np.median(np.abs(pooled))
    if not np.all(factors > 0):
        warnings.warn("degenerate slot scale; using unit periodicity factors",
                      RuntimeWarning, stacklevel=2)
        return np.ones(m), True
    return factors / math.sqrt(np.mean(factors ** 2)), False


def gumbel_threshold(n: int, alpha: float) -> float:
    """Critical value for |return| / local volatility at level ``alpha``.

    Uses the Lee-Mykland normalizing constants of the maximum of ``n``
    absolute standardized returns.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if n < 2:
        raise ValueError("need at least two observations")
    log_n = math.log(n)
    root = math.sqrt(2.0 * log_n)
    c_n = root / _MU1 - (math.log(math.pi) + math.log(log_n)) / (2.0 * _MU1 * root)
    s_n = 1.0 / (_MU1 * root)
    beta = -math.log(-math.log(1.0 - alpha))
    return c_n + s_n * beta


def local_bipower_volatility(returns: np.ndarray, window: int) -> np.ndarray:
    """Local volatility from bipower variation over the preceding ``window``.

    For observation ``i >= window`` the estimate uses the products
    ``|r_j||r_{j-1}|`` for ``j = i - window + 2 .. i - 1`` (``window - 2``
    terms, none involving ``r_i``). Earlier observations borrow the first
    ``window`` returns, minus the products that involve ``r_i``. The
    result is scaled so that it estimates ``E|r| = sqrt(2/pi) * sigma``,
    matching the Lee-Mykland convention.
    """
    r = np.abs(np.asarray(returns, dtype=float))
    n = len(r)
    if window < 10:
        raise ValueError("window must be >= 10")
    if window > n:
        raise ValueError(f"window ({window}) longer than the sample ({n})")
    bp = np.zeros(n)
    bp[1:] = r[1:] * r[:-1]
    csum = np.concatenate([[0.0], np.cumsum(bp)])

    var = np.empty(n)
    i = np.arange(window, n)
    var[window:] = (csum[i] - csum[i - window + 2]) / (window - 2)

    last = min(window, n - 1)
    total = csum[last + 1] - csum[1]
    for i in range(min(window, n)):
        excluded, count = 0.0, last
        for j in (i, i + 1):
            if 1 <= j <= last:
                excluded += bp[j]
                count -= 1
        var[i] = (total - excluded) / count
    return np.sqrt(np.maximum(var, 0.0))


def detect_jumps(returns, periodicity=None, alpha: float = 0.001, window: int = 78,
                 slots_per_day: int | None = None) -> JumpClassification:
    """Flag jumps and split the returns into jump and continuous parts.

    Parameters
    ----------
    returns : ReturnSeries, array of shape (days, slots) or 1-d array
    periodicity : array of shape (slots,), optional
        Slot factors from :func:`estimate_periodicity`; unit factors if omitted.
    alpha : float
        Significance level of the Gumbel test, 0.001 by default.
    window : int
        Number of past returns used for the local bipower volatility.

    Returns
    -------
    JumpClassification
        Arrays have the flattened shape of the input.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    series = _as_series(returns, slots_per_day)
    r = series.values
    factors = np.ones(series.slots_per_day) if periodicity is None else np.asarray(periodicity, float)
    if factors.shape != (series.slots_per_day,):
        raise ValueError("periodicity must have one factor per intraday slot")
    scale = np.tile(factors, series.n_days)
    standardized = r / scale

    vol = local_bipower_volatility(standardized, window)
    absr = np.abs(standardized)
    with np.errstate(divide="ignore", invalid="ignore"):
        stats = np.where(vol > 0, absr / vol, np.where(absr > 0, np.inf, 0.0))
    threshold = gumbel_threshold(len(r), alpha)
    mask = stats > threshold
    return JumpClassification.from_mask(r, mask, stats, threshold)
