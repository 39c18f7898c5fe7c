"""
Realized covariance and daily minimum-variance portfolios.

The realized covariance of a day is the sum of outer products of its
intraday return vectors. Portfolio weights solve the two-constraint
Markowitz problem (full investment and a target mean) in closed form.
Performance is summarized by the closing value, the standard deviation of
daily returns and a modified Sharpe ratio whose denominator is the
Cornish-Fisher value-at-risk; two strategies are compared with a
studentized circular block bootstrap of the Sharpe difference.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .errors import InfeasibleConstraintError, NumericalError, SchemaError

__all__ = [
    "CovarianceEstimate",
    "FrontierPoint",
    "RebalanceRule",
    "PortfolioRun",
    "SharpeTest",
    "BacktestResult",
    "realized_covariance",
    "min_variance_weights",
    "efficient_frontier",
    "modified_sharpe",
    "sharpe_diff_test",
    "backtest",
    "PERFORMANCE_COLUMNS",
]

log = logging.getLogger(__name__)

MIN_SHARPE_OBS = 30


@dataclass
class CovarianceEstimate:
    """One day's ``p x p`` realized covariance with its source tag."""

    matrix: np.ndarray
    source: str = "raw"

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise SchemaError("covariance must be a square matrix")

    @property
    def p(self) -> int:
        return self.matrix.shape[0]

    def is_psd(self, rel_tol: float = 1e-10) -> bool:
        eig = np.linalg.eigvalsh(self.matrix)
        return bool(eig.min() >= -rel_tol * max(np.trace(self.matrix), 0.0))

    def frobenius_distance(self, other) -> float:
        other = other.matrix if isinstance(other, CovarianceEstimate) else np.asarray(other)
        return float(np.linalg.norm(self.matrix - other, "fro"))


def realized_covariance(returns, source: str = "raw") -> CovarianceEstimate:
    """Sum of ``r_i r_i'`` over the intraday return vectors of one day.

    Parameters
    ----------
    returns : array of shape (n, p), or a sequence of p per-asset arrays
        A 2-d array is read as rows of return vectors. A list or tuple is
        read as one return series per asset, which must have equal length.
    source : str
        Tag stored on the estimate (``raw``, ``rearranged``, ``efficient``).
    """
    if isinstance(returns, (list, tuple)):
        lengths = {len(np.ravel(r)) for r in returns}
        if len(lengths) > 1:
            raise SchemaError(f"per-asset return series differ in length: {sorted(lengths)}")
        r = np.column_stack([np.ravel(np.asarray(x, dtype=float)) for x in returns])
    else:
        r = np.asarray(returns, dtype=float)
        if r.ndim == 1:
            r = r[None, :]
    if r.ndim != 2:
        raise SchemaError("returns must be a 2-d (time, asset) array")
    cov = r.T @ r
    return CovarianceEstimate(0.5 * (cov + cov.T), source)


def _solve_two(cov, mu, ridge: float):
    """Solve ``C x = [1, mu]``, regularizing an ill-conditioned ``C``."""
    p = len(mu)
    rhs = np.column_stack([np.ones(p), mu])
    cov = np.asarray(cov, dtype=float)
    if np.all(np.isfinite(cov)) and np.linalg.cond(cov) < 1e12:
        return np.linalg.solve(cov, rhs)
    trace = np.trace(cov)
    if not np.isfinite(trace) or trace <= 0:
        raise NumericalError("covariance matrix has no positive variance")
    reg = cov + ridge * trace / p * np.eye(p)
    log.debug("ridge-regularized covariance (eps=%g)", ridge)
    try:
        if np.linalg.cond(reg) > 1e15:
            raise np.linalg.LinAlgError
        return np.linalg.solve(reg, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("covariance singular even after ridge regularization") from exc


def min_variance_weights(cov, mu, target: float, ridge: float = 1e-8) -> np.ndarray:
    """Minimum-variance weights with ``w'1 = 1`` and ``w'mu = target``.

    The Lagrangian solution is ``w = C^{-1}(l1 1 + l2 mu)`` with the two
    multipliers fixed by the constraints. When all means coincide the
    return constraint is redundant and the global minimum-variance
    portfolio is returned (provided ``target`` equals the common mean).

    Raises
    ------
    NumericalError
        If the covariance is singular even after adding a ridge of
        ``ridge * trace(C) / p`` to the diagonal.
    InfeasibleConstraintError
        If all means are equal and differ from ``target``.
    """
    mu = np.asarray(mu, dtype=float).ravel()
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (len(mu), len(mu)):
        raise SchemaError("covariance and mean vector dimensions differ")
    x = _solve_two(cov, mu, ridge)
    x1, xm = x[:, 0], x[:, 1]
    a, b, c = x1.sum(), xm.sum(), mu @ xm
    d = a * c - b * b
    scale = max(abs(a * c), b * b, np.finfo(float).tiny)
    if abs(d) <= 1e-12 * scale:
        if not np.isclose(target, mu.mean(), rtol=1e-9, atol=1e-14):
            raise InfeasibleConstraintError("all expected returns are equal; target unreachable")
        return x1 / a
    w = ((c - b * target) * x1 + (a * target - b) * xm) / d
    # One Newton step on the two linear constraints removes rounding drift.
    g = np.array([w.sum() - 1.0, w @ mu - target])
    jac = np.array([[a, b], [b, c]])
    w -= np.column_stack([x1, xm]) @ np.linalg.solve(jac, g)
    return w


@dataclass
class FrontierPoint:
    target: float
    weights: np.ndarray
    variance: float


def efficient_frontier(cov, mu, n_targets: int = 100, ridge: float = 1e-8) -> list[FrontierPoint]:
    """Minimum-variance portfolios on an even grid of target returns.

    The grid runs from the lowest to the highest expected return.
    """
    mu = np.asarray(mu, dtype=float).ravel()
    cov = np.asarray(cov, dtype=float)
    if n_targets < 1:
        raise ValueError("n_targets must be positive")
    grid = np.linspace(mu.min(), mu.max(), n_targets)
    points = []
    for t in grid:
        w = min_variance_weights(cov, mu, t, ridge)
        points.append(FrontierPoint(float(t), w, float(w @ cov @ w)))
    return points


# -- performance statistics --------------------------------------------------

def _moment_sharpe(m1, m2, m3, m4, z):
    """Modified Sharpe from raw moments; vectorized over leading axes."""
    var = m2 - m1 ** 2
    sd = np.sqrt(var)
    c3 = m3 - 3 * m1 * m2 + 2 * m1 ** 3
    c4 = m4 - 4 * m1 * m3 + 6 * m1 ** 2 * m2 - 3 * m1 ** 4
    skew = c3 / var ** 1.5
    kurt = c4 / var ** 2 - 3.0
    z_cf = (z + (z ** 2 - 1) * skew / 6 + (z ** 3 - 3 * z) * kurt / 24
            - (2 * z ** 3 - 5 * z) * skew ** 2 / 36)
    mvar = -(m1 + z_cf * sd)
    return m1 / mvar


def modified_sharpe(excess_returns, alpha: float = 0.05) -> float:
    """Mean excess return over its Cornish-Fisher modified value-at-risk.

    The modified VaR at level ``alpha`` is ``-(m + z_cf s)``, where ``z_cf``
    is the normal ``alpha`` quantile corrected for sample skewness and
    excess kurtosis. Moments are population (``1/n``) moments.

    Raises
    ------
    ValueError
        With fewer than 30 observations.
    NumericalError
        If the series has zero variance or a zero modified VaR.
    """
    x = np.asarray(excess_returns, dtype=float).ravel()
    if len(x) < MIN_SHARPE_OBS:
        raise ValueError(f"need at least {MIN_SHARPE_OBS} observations, got {len(x)}")
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    if np.ptp(x) == 0:
        raise NumericalError("zero-variance series: modified Sharpe undefined")
    z = NormalDist().inv_cdf(alpha)
    m = [np.mean(x ** k) for k in range(1, 5)]
    with np.errstate(divide="ignore", invalid="ignore"):
        value = float(_moment_sharpe(*m, z))
    if not np.isfinite(value):
        raise NumericalError("modified VaR is zero: modified Sharpe undefined")
    return value


@dataclass
class SharpeTest:
    """Studentized bootstrap test of ``msr(a) - msr(b) = 0``."""

    difference: float
    std_error: float
    p_value: float
    n_boot: int
    block_len: int


def _power_terms(y):
    """Per-period terms ``(a, a^2, a^3, a^4, b, ..., b^4)``; y has shape (..., T, 2)."""
    y2 = y * y
    terms = np.stack([y, y2, y2 * y, y2 * y2], axis=-1)       # (..., T, 2, 4)
    return terms.reshape(*y.shape[:-1], 8)


def _diff_from_moments(m, z):
    return _moment_sharpe(*(m[..., k] for k in range(4)), z) - \
        _moment_sharpe(*(m[..., 4 + k] for k in range(4)), z)


def _gradient(m, z):
    """Central-difference gradient of the Sharpe difference, shape (..., 8)."""
    grad = np.empty_like(m)
    for k in range(8):
        step = 1e-6 * np.maximum(np.abs(m[..., k]), 1e-12)
        up, down = m.copy(), m.copy()
        up[..., k] += step
        down[..., k] -= step
        grad[..., k] = (_diff_from_moments(up, z) - _diff_from_moments(down, z)) / (2 * step)
    return grad


def _block_psi(terms, block_len):
    """Block estimate of the long-run covariance of the moment terms."""
    T = terms.shape[-2]
    k = T // block_len
    terms = terms[..., : k * block_len, :]
    terms = terms - terms.mean(axis=-2, keepdims=True)
    blocks = terms.reshape(*terms.shape[:-2], k, block_len, 8).sum(axis=-2) / math.sqrt(block_len)
    return np.einsum("...ki,...kj->...ij", blocks, blocks) / k


def _std_error(terms, block_len, z):
    m = terms.mean(axis=-2)
    g = _gradient(m, z)
    psi = _block_psi(terms, block_len)
    var = np.einsum("...i,...ij,...j->...", g, psi, g) / terms.shape[-2]
    return _diff_from_moments(m, z), np.sqrt(np.maximum(var, 0.0))


def sharpe_diff_test(returns_a, returns_b, n_boot: int = 1000, block_len: int = 5,
                     rng_seed=None, alpha: float = 0.05) -> SharpeTest:
    """Two-sided test of equal modified Sharpe ratios of paired series.

    Circular blocks of ``block_len`` observations are resampled jointly from
    both series; each bootstrap difference is centred at the sample
    difference and studentized with its own block standard error. The
    p-value is ``(1 + #{|t*| >= |t|}) / (1 + n_boot)``.

    Raises
    ------
    ValueError
        If the series differ in length or are shorter than ``2 * block_len``.
    """
    a = np.asarray(returns_a, dtype=float).ravel()
    b = np.asarray(returns_b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError("paired series must have equal length")
    T = len(a)
    if block_len < 1 or T < 2 * block_len:
        raise ValueError(f"series of length {T} too short for block length {block_len}")
    if np.array_equal(a, b):
        return SharpeTest(0.0, 0.0, 1.0, n_boot, block_len)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise NumericalError("zero-variance series: modified Sharpe undefined")

    z = NormalDist().inv_cdf(alpha)
    terms = _power_terms(np.column_stack([a, b]))
    with np.errstate(divide="ignore", invalid="ignore"):
        diff, se = _std_error(terms, block_len, z)
        diff, se = float(diff), float(se)
        if not np.isfinite(diff):
            raise NumericalError("modified Sharpe undefined for one of the series")
        if se == 0:
            return SharpeTest(diff, se, 1.0 if diff == 0 else 0.0, n_boot, block_len)
        t_obs = abs(diff) / se

        rng = np.random.default_rng(rng_seed)
        n_blocks = -(-T // block_len)
        starts = rng.integers(0, T, size=(n_boot, n_blocks))
        idx = (starts[:, :, None] + np.arange(block_len)).reshape(n_boot, -1)[:, :T] % T
        d_star, se_star = _std_error(terms[idx], block_len, z)
        t_star = np.abs(d_star - diff) / se_star
    exceed = np.sum(~(t_star < t_obs))   # NaN statistics count as exceedances
    p = (1.0 + exceed) / (1.0 + n_boot)
    return SharpeTest(diff, se, float(min(p, 1.0)), n_boot, block_len)


# -- backtest -------------------------------------------------------------------

@dataclass(frozen=True)
class RebalanceRule:
    """How the portfolio is rebuilt on a rearrangement day.

    Parameters
    ----------
    target : "min_variance" or float
        ``min_variance`` takes the lowest-variance point of the frontier
        grid; a number is used as the target mean daily log return.
    n_targets : int
        Size of the target-return grid.
    lookback_days : int
        Trailing window of daily returns used to estimate the mean vector.
    min_history : int
        Optimization is skipped until this many past days are available.
    ridge : float
    sharpe_alpha : float
        VaR level of the modified Sharpe ratio.
    n_boot, block_len, rng_seed
        Bootstrap settings of the Sharpe difference test.
    """

    target: str | float = "min_variance"
    n_targets: int = 100
    lookback_days: int = 60
    min_history: int = 1
    ridge: float = 1e-8
    sharpe_alpha: float = 0.05
    n_boot: int = 1000
    block_len: int = 5
    rng_seed: int | None = 0


@dataclass
class PortfolioRun:
    """Daily weights and performance of one strategy."""

    label: str
    weights: np.ndarray
    returns: np.ndarray
    values: np.ndarray
    excess_returns: np.ndarray
    targets: dict = field(default_factory=dict)

    @property
    def closing_value(self) -> float:
        return float(self.values[-1]) if len(self.values) else 1.0

    @property
    def sd(self) -> float:
        return float(np.std(self.returns, ddof=1)) if len(self.returns) > 1 else float("nan")

    def msharpe(self, alpha: float = 0.05) -> float:
        try:
            return modified_sharpe(self.excess_returns, alpha)
        except (ValueError, NumericalError):
            return float("nan")


PERFORMANCE_COLUMNS = ["Days", "#CJ", "#CJ-R", "Close raw", "Close RA", "SD raw", "SD RA",
                       "mSharpe raw", "mSharpe RA", "p-value"]


@dataclass
class BacktestResult:
    raw: PortfolioRun
    rearranged: PortfolioRun
    rearrangement_days: list
    test: SharpeTest | None
    n_cojumps: int = 0
    n_rearranged: int = 0
    rule: RebalanceRule = field(default_factory=RebalanceRule)
    skipped_days: list = field(default_factory=list)

    @property
    def p_value(self) -> float:
        return self.test.p_value if self.test is not None else float("nan")

    def table_row(self) -> dict:
        a = self.rule.sharpe_alpha
        values = [len(self.rearrangement_days), self.n_cojumps, self.n_rearranged,
                  self.raw.closing_value, self.rearranged.closing_value,
                  self.raw.sd, self.rearranged.sd,
                  self.raw.msharpe(a), self.rearranged.msharpe(a), self.p_value]
        return dict(zip(PERFORMANCE_COLUMNS, values))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=PERFORMANCE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v)
                         for k, v in self.table_row().items()})
        return buf.getvalue()

    def to_json(self, **kwargs) -> str:
        row = {k: (None if isinstance(v, float) and math.isnan(v) else v)
               for k, v in self.table_row().items()}
        return json.dumps(row, **kwargs)


def _pick_target(cov, mu, rule: RebalanceRule):
    if rule.target == "min_variance":
        if np.ptp(mu) == 0:
            return float(mu[0]), min_variance_weights(cov, mu, float(mu[0]), rule.ridge)
        frontier = efficient_frontier(cov, mu, rule.n_targets, rule.ridge)
        best = min(frontier, key=lambda pt: pt.variance)
        return best.target, best.weights
    target = float(rule.target)
    return target, min_variance_weights(cov, mu, target, rule.ridge)


def backtest(raw_returns, rearranged_returns, etf_returns, rearrangement_days=(),
             rule: RebalanceRule | None = None, reset_days=(), n_cojumps: int = 0,
             n_rearranged: int = 0) -> BacktestResult:
    """Daily minimum-variance backtest with raw and rearranged covariances.

    On every rearrangement day the realized covariance of that day (from
    raw or from rearranged intraday returns) and the trailing mean of daily
    returns define new weights, which are held from the next day until the
    next rearrangement day. Before the first optimization, and from every
    ``reset_days`` entry on, the portfolio is equally weighted. The two runs
    differ only in the covariance input.

    Parameters
    ----------
    raw_returns, rearranged_returns : array of shape (days, slots, p)
        Intraday log returns. Days whose returns are not all finite are
        skipped as rearrangement days and logged.
    etf_returns : array of shape (days, slots) or (days,)
        Benchmark log returns, used for the excess returns of the Sharpe
        ratio.
    rearrangement_days : iterable of int
    rule : RebalanceRule
    reset_days : iterable of int
    n_cojumps, n_rearranged : int
        Event counts copied into the performance table.

    Returns
    -------
    BacktestResult
    """
    rule = rule or RebalanceRule()
    raw = np.asarray(raw_returns, dtype=float)
    rea = np.asarray(rearranged_returns, dtype=float)
    if raw.ndim != 3 or raw.shape != rea.shape:
        raise SchemaError("raw and rearranged returns must share shape (days, slots, p)")
    n_days, _, p = raw.shape
    etf = np.asarray(etf_returns, dtype=float)
    etf_daily = etf.sum(axis=1) if etf.ndim == 2 else etf.ravel()
    if etf_daily.shape != (n_days,):
        raise SchemaError("one ETF return series per day required")

    daily = np.nansum(raw, axis=1)                       # (days, p) daily log returns
    simple = np.expm1(daily)
    etf_simple = np.expm1(etf_daily)
    days = sorted({int(d) for d in rearrangement_days})
    resets = {int(d) for d in reset_days}

    skipped = []
    runs = {}
    for label, intraday in (("raw", raw), ("rearranged", rea)):
        w = np.full(p, 1.0 / p)
        weights = np.empty((n_days, p))
        targets = {}
        pending = None
        day_set = set(days)
        for d in range(n_days):
            if d in resets:
                w, pending = np.full(p, 1.0 / p), None
            elif pending is not None:
                w, pending = pending, None
            weights[d] = w
            if d not in day_set:
                continue
            if not np.all(np.isfinite(intraday[d])) or d < rule.min_history:
                if label == "raw":
                    skipped.append(d)
                    log.info("day %d skipped: incomplete data or history", d)
                continue
            cov = realized_covariance(intraday[d], label).matrix
            mu = daily[max(0, d + 1 - rule.lookback_days): d + 1].mean(axis=0)
            try:
                targets[d], pending = _pick_target(cov, mu, rule)
            except (NumericalError, InfeasibleConstraintError) as exc:
                if label == "raw":
                    skipped.append(d)
                log.info("day %d skipped: %s", d, exc)
        port = np.einsum("dk,dk->d", weights, simple)
        runs[label] = PortfolioRun(label, weights, port, np.cumprod(1.0 + port),
                                   port - etf_simple, targets)

    test = None
    a, b = runs["raw"].excess_returns, runs["rearranged"].excess_returns
    try:
        test = sharpe_diff_test(b, a, rule.n_boot, rule.block_len, rule.rng_seed, rule.sharpe_alpha)
    except (ValueError, NumericalError) as exc:
        log.info("Sharpe difference test not available: %s", exc)
    return BacktestResult(runs["raw"], runs["rearranged"], days, test, n_cojumps, n_rearranged,
                          rule, skipped)
