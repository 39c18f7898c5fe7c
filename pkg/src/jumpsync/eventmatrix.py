"""
Synthetic-index spreads and jump-event matrices around ETF jumps.

The synthetic index return is the weighted sum of the constituents' log
returns; its difference with the ETF return is the return spread. Inside an
event window, the spread decomposes into weighted stock jump returns (one
column per detected jump, the movable part) plus a fixed target column
(weighted continuous stock returns minus the ETF return).

Indices into return arrays are 0-based: return ``i`` is
``price[i + 1] - price[i]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError

__all__ = [
    "PricePanel",
    "SpreadSeries",
    "EventWindow",
    "JumpEventMatrix",
    "synthetic_index",
    "return_spread",
    "event_windows",
    "build_jump_event_matrix",
    "row_sums",
]


@dataclass
class PricePanel:
    """Aligned stock log prices, index weights and the ETF log price.

    Parameters
    ----------
    log_prices : array of shape (n_points, p)
    weights : array of shape (n_points, p) or (p,)
        Index weights; a 1-d vector is broadcast over time.
    etf : array of shape (n_points,)
    asset_ids : list of str, optional
    etf_id : str
    """

    log_prices: np.ndarray
    weights: np.ndarray
    etf: np.ndarray
    asset_ids: list[str] = field(default_factory=list)
    etf_id: str = "ETF"

    def __post_init__(self):
        self.log_prices = np.asarray(self.log_prices, dtype=float)
        if self.log_prices.ndim == 1:
            self.log_prices = self.log_prices[:, None]
        if self.log_prices.ndim != 2:
            raise SchemaError("log_prices must be a (time, asset) matrix")
        n, p = self.log_prices.shape
        w = np.asarray(self.weights, dtype=float)
        if w.ndim == 1:
            if w.shape != (p,):
                raise SchemaError(f"expected {p} weights, got {w.shape[0]}")
            w = np.broadcast_to(w, (n, p)).copy()
        if w.shape != (n, p):
            raise SchemaError(f"weights shape {w.shape} does not match prices {(n, p)}")
        if np.any(w < 0):
            raise SchemaError("index weights must be non-negative")
        self.weights = w
        self.etf = np.asarray(self.etf, dtype=float).ravel()
        if self.etf.shape != (n,):
            raise SchemaError("ETF series must have one price per grid point")
        if not self.asset_ids:
            self.asset_ids = [f"S{k + 1}" for k in range(p)]
        if len(self.asset_ids) != p:
            raise SchemaError("one asset id per price column required")

    @classmethod
    def from_returns(cls, stock_returns, etf_returns, weights, **kwargs) -> "PricePanel":
        """Panel whose log prices start at zero and cumulate the given returns."""
        stock_returns = np.asarray(stock_returns, dtype=float)
        if stock_returns.ndim == 1:
            stock_returns = stock_returns[:, None]
        prices = np.vstack([np.zeros(stock_returns.shape[1]), np.cumsum(stock_returns, axis=0)])
        etf = np.concatenate([[0.0], np.cumsum(np.asarray(etf_returns, dtype=float))])
        return cls(prices, weights, etf, **kwargs)

    @property
    def n_points(self) -> int:
        return self.log_prices.shape[0]

    @property
    def n_assets(self) -> int:
        return self.log_prices.shape[1]

    @property
    def stock_returns(self) -> np.ndarray:
        return np.diff(self.log_prices, axis=0)

    @property
    def etf_returns(self) -> np.ndarray:
        return np.diff(self.etf)

    @property
    def return_weights(self) -> np.ndarray:
        """Weights applied to return ``i`` (those at its closing grid point)."""
        return self.weights[1:]


@dataclass
class SpreadSeries:
    price_spread: np.ndarray
    return_spread: np.ndarray


def synthetic_index(panel: PricePanel) -> np.ndarray:
    """Log price of the synthetic index, ``S_i = sum_k w_{k,i} Y_{k,i}``."""
    return np.einsum("ik,ik->i", panel.weights, panel.log_prices)


def return_spread(panel: PricePanel) -> SpreadSeries:
    """Price spread ``S - Z`` and return spread ``sum_k w_k dY_k - dZ``.

    The two are consistent (``return_spread[i] = price_spread[i+1] -
    price_spread[i]``) whenever the weights are constant over the return
    interval.
    """
    price_spread = synthetic_index(panel) - panel.etf
    synth_returns = np.einsum("ik,ik->i", panel.return_weights, panel.stock_returns)
    return SpreadSeries(price_spread, synth_returns - panel.etf_returns)


def row_sums(matrix) -> np.ndarray:
    """Row-sums of a jump-event matrix or of a dense ``h x q`` array."""
    if isinstance(matrix, JumpEventMatrix):
        return matrix.row_sums()
    return np.asarray(matrix, dtype=float).sum(axis=1)


@dataclass(frozen=True)
class EventWindow:
    """Inclusive window ``[start, stop]`` of return indices around ETF jumps."""

    start: int
    stop: int
    etf_jumps: tuple[int, ...]
    clipped: bool = False

    @property
    def h(self) -> int:
        return self.stop - self.start + 1


def event_windows(etf_jump_indices, n_returns: int, pre: int = 5, post: int = 5,
                  day_length: int | None = None) -> list[EventWindow]:
    """Group ETF jumps into event windows.

    A window spans ``pre`` returns before the first ETF jump to ``post``
    returns after the last; jumps whose windows overlap are merged into one
    event. Windows are clipped to the sample and, with ``day_length``, to the
    trading day of the first jump; clipped windows carry ``clipped=True``.
    """
    idx = sorted(int(i) for i in np.atleast_1d(etf_jump_indices))
    events: list[list[int]] = []
    for i in idx:
        same_day = (day_length is None or not events
                    or events[-1][0] // day_length == i // day_length)
        if events and same_day and i - pre <= events[-1][-1] + post:
            events[-1].append(i)
        else:
            events.append([i])
    out = []
    for jumps in events:
        lo, hi = jumps[0] - pre, jumps[-1] + post
        lo_bound, hi_bound = 0, n_returns - 1
        if day_length is not None:
            day = jumps[0] // day_length
            lo_bound, hi_bound = day * day_length, min(hi_bound, (day + 1) * day_length - 1)
        start, stop = max(lo, lo_bound), min(hi, hi_bound)
        out.append(EventWindow(start, stop, tuple(jumps), clipped=(start != lo or stop != hi)))
    return out


@dataclass
class JumpEventMatrix:
    """``h x q`` jump-event matrix stored sparsely.

    Jump column ``l`` holds ``jump_values[l]`` at window row ``jump_rows[l]``
    and zeros elsewhere; the last column is the fixed ``target``.
    """

    target: np.ndarray
    jump_rows: np.ndarray
    jump_values: np.ndarray
    jump_assets: list = field(default_factory=list)
    etf_rows: tuple[int, ...] = ()
    start: int = 0
    clipped: bool = False

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=float).ravel()
        self.jump_rows = np.asarray(self.jump_rows, dtype=np.int64).ravel()
        self.jump_values = np.asarray(self.jump_values, dtype=float).ravel()
        if self.jump_rows.shape != self.jump_values.shape:
            raise ValueError("jump_rows and jump_values must have equal length")
        if len(self.jump_rows) and (self.jump_rows.min() < 0 or self.jump_rows.max() >= self.h):
            raise ValueError("jump row outside the window")
        if not self.jump_assets:
            self.jump_assets = [None] * len(self.jump_rows)
        if len(self.jump_assets) != len(self.jump_rows):
            raise ValueError("one asset label per jump column required")
        self.etf_rows = tuple(int(r) for r in self.etf_rows)

    @property
    def h(self) -> int:
        return len(self.target)

    @property
    def q(self) -> int:
        return len(self.jump_rows) + 1

    @property
    def n_jumps(self) -> int:
        return len(self.jump_rows)

    @property
    def stop(self) -> int:
        return self.start + self.h - 1

    def dense(self) -> np.ndarray:
        out = np.zeros((self.h, self.q))
        out[self.jump_rows, np.arange(self.n_jumps)] = self.jump_values
        out[:, -1] = self.target
        return out

    def row_sums(self, rows=None) -> np.ndarray:
        """Row-sums, optionally with the jumps relocated to ``rows``."""
        rows = self.jump_rows if rows is None else np.asarray(rows, dtype=np.int64)
        out = self.target.copy()
        np.add.at(out, rows, self.jump_values)
        return out

    @classmethod
    def from_dense(cls, matrix, etf_rows=(), **kwargs) -> "JumpEventMatrix":
        """Build from a dense array whose last column is the target."""
        matrix = np.asarray(matrix, dtype=float)
        rows, values = [], []
        for col in matrix[:, :-1].T:
            nz = np.flatnonzero(col)
            if len(nz) != 1:
                raise ValueError("each jump column must contain exactly one non-zero entry")
            rows.append(nz[0])
            values.append(col[nz[0]])
        return cls(matrix[:, -1], rows, values, etf_rows=etf_rows, **kwargs)

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "q": self.q,
            "start": self.start,
            "clipped": self.clipped,
            "etf_rows": list(self.etf_rows),
            "columns": [[int(r), float(v), a] for r, v, a in
                        zip(self.jump_rows, self.jump_values, self.jump_assets)],
            "target": [float(t) for t in self.target],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "JumpEventMatrix":
        cols = data.get("columns", [])
        target = data["target"]
        if "h" in data and data["h"] != len(target):
            raise ValueError("h does not match the target length")
        return cls(
            target,
            [c[0] for c in cols],
            [c[1] for c in cols],
            [c[2] if len(c) > 2 else None for c in cols],
            etf_rows=tuple(data.get("etf_rows", ())),
            start=int(data.get("start", 0)),
            clipped=bool(data.get("clipped", False)),
        )

    @classmethod
    def from_json(cls, text: str) -> "JumpEventMatrix":
        return cls.from_dict(json.loads(text))


def build_jump_event_matrix(panel: PricePanel, stock_jumps, etf_jump_index,
                            window_pre: int = 5, window_post: int = 5,
                            day_length: int | None = None) -> JumpEventMatrix:
    """Jump-event matrix of the window around one or more ETF jumps.

    Parameters
    ----------
    panel : PricePanel
    stock_jumps : bool array of shape (n_returns, p)
        Jump flags of the stock returns (from :func:`detect_jumps` or given).
    etf_jump_index : int or sequence of int
        Return index (indices) of the ETF jump(s) defining the event.
    window_pre, window_post : int
        Window length before the first and after the last ETF jump.
    day_length : int, optional
        Returns per trading day; windows are clipped at the day boundary.

    Returns
    -------
    JumpEventMatrix
        One column per flagged stock return in the window, ordered by asset
        and then by time. ``clipped`` is set when the window had to be
        truncated.
    """
    returns = panel.stock_returns
    mask = np.asarray(stock_jumps, dtype=bool)
    if mask.shape != returns.shape:
        raise SchemaError(f"jump mask shape {mask.shape} does not match returns {returns.shape}")
    etf_idx = sorted(int(i) for i in np.atleast_1d(etf_jump_index))
    if not etf_idx:
        raise ValueError("at least one ETF jump index is required")
    n = returns.shape[0]
    lo, hi = etf_idx[0] - window_pre, etf_idx[-1] + window_post
    lo_bound, hi_bound = 0, n - 1
    if day_length is not None:
        day = etf_idx[0] // day_length
        lo_bound, hi_bound = day * day_length, min(n - 1, (day + 1) * day_length - 1)
    start, stop = max(lo, lo_bound), min(hi, hi_bound)
    clipped = start != lo or stop != hi

    rows = slice(start, stop + 1)
    w = panel.return_weights[rows]
    r = returns[rows]
    m = mask[rows]
    weighted = w * r
    target = np.where(m, 0.0, weighted).sum(axis=1) - panel.etf_returns[rows]

    jump_rows, jump_values, jump_assets = [], [], []
    for k in range(panel.n_assets):
        for i in np.flatnonzero(m[:, k] & (weighted[:, k] != 0)):
            jump_rows.append(i)
            jump_values.append(weighted[i, k])
            jump_assets.append(panel.asset_ids[k])
    etf_rows = tuple(i - start for i in etf_idx if start <= i <= stop)
    return JumpEventMatrix(target, jump_rows, jump_values, jump_assets,
                           etf_rows=etf_rows, start=start, clipped=clipped)
