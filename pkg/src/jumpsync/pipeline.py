"""
End-to-end synchronization of a price panel.

Detect jumps in every stock and in the ETF, build one jump-event matrix per
(merged) ETF jump window, pick the best rearrangement over the budget trace
and move the jump returns accordingly. Only timestamps of jump returns
change: per-asset return totals over every window are preserved.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .eventmatrix import EventWindow, JumpEventMatrix, PricePanel, build_jump_event_matrix, event_windows
from .jumpdetect import detect_jumps, estimate_periodicity
from .rearrange import RearrangementSolution, RlpConstraints, TraceResult, trace

__all__ = ["PipelineConfig", "EventReport", "SyncResult", "detect_panel_jumps", "synchronize_panel"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    """Settings of the synchronization pipeline and of the backtest.

    Window lengths, the edge exclusion and the budget are counted in
    returns of the panel grid (minutes for one-minute data).
    """

    window_pre: int = 5
    window_post: int = 5
    alpha: float = 0.001
    budget: int = 10
    edge_exclusion: int = 10
    freeze_matched: bool = True
    no_earlier_than_etf: bool = True
    slots_per_day: int | None = None
    detection_window: int = 78
    periodicity_min_days: int = 5
    time_limit: float | None = None
    seed: int = 0
    # backtest
    lookback_days: int = 60
    target: str | float = "min_variance"
    n_boot: int = 1000
    block_len: int = 5

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("window_pre", "window_post", "budget", "edge_exclusion"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 0:
                raise ConfigError(f"{name} must be a non-negative integer")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        for name in ("freeze_matched", "no_earlier_than_etf"):
            if not isinstance(getattr(self, name), bool):
                raise ConfigError(f"{name} must be true or false")
        if self.slots_per_day is not None and self.slots_per_day < 1:
            raise ConfigError("slots_per_day must be positive")
        if self.detection_window < 10:
            raise ConfigError("detection_window must be at least 10")
        if self.lookback_days < 1 or self.n_boot < 1 or self.block_len < 1:
            raise ConfigError("lookback_days, n_boot and block_len must be positive")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ConfigError("time_limit must be positive")

    @property
    def constraints(self) -> RlpConstraints:
        return RlpConstraints(freeze_matched=self.freeze_matched,
                              no_earlier_than_etf=self.no_earlier_than_etf)

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown pipeline setting(s): {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class EventReport:
    """One event window with its matrix, budget trace and chosen solution."""

    event_id: int
    window: EventWindow
    matrix: JumpEventMatrix
    trace: TraceResult | None = None

    @property
    def solution(self) -> RearrangementSolution | None:
        return None if self.trace is None else self.trace.best.solution

    @property
    def is_cojump(self) -> bool:
        return self.matrix.n_jumps > 0

    @property
    def rearranged(self) -> bool:
        return self.solution is not None and self.solution.moved

    def to_dict(self) -> dict:
        out = {
            "event": self.event_id,
            "start": self.window.start,
            "stop": self.window.stop,
            "etf_jumps": list(self.window.etf_jumps),
            "clipped": self.window.clipped,
            "matrix": self.matrix.to_dict(),
            "rearranged": self.rearranged,
        }
        if self.trace is not None:
            out["best_budget"] = self.trace.best.budget
            out["solution"] = self.solution.to_dict()
            out["trace"] = self.trace.to_rows()
        return out


@dataclass
class SyncResult:
    panel: PricePanel
    rearranged_panel: PricePanel
    stock_jumps: np.ndarray
    etf_jumps: np.ndarray
    events: list[EventReport] = field(default_factory=list)
    excluded: list[int] = field(default_factory=list)
    slots_per_day: int = 0
    periodicity_fallback: bool = False

    @property
    def n_events(self) -> int:
        return len(self.events)

    @property
    def n_cojumps(self) -> int:
        return sum(e.is_cojump for e in self.events)

    @property
    def n_rearranged(self) -> int:
        return sum(e.rearranged for e in self.events)

    @property
    def rearrangement_days(self) -> list[int]:
        return sorted({e.window.start // self.slots_per_day for e in self.events if e.rearranged})

    def trace_rows(self) -> list[dict]:
        rows = []
        for e in self.events:
            if e.trace is not None:
                rows += [{"event": e.event_id, **r} for r in e.trace.to_rows()]
        return rows

    def summary(self) -> dict:
        return {
            "etf_jumps": int(self.etf_jumps.sum()),
            "excluded_edge": len(self.excluded),
            "events": self.n_events,
            "cojump_events": self.n_cojumps,
            "rearranged_events": self.n_rearranged,
        }


def _detect(series, slots, config: PipelineConfig):
    days = len(series) // slots
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        factors, fallback = estimate_periodicity(series.reshape(days, slots),
                                                 min_days=config.periodicity_min_days)
    window = min(config.detection_window, len(series))
    if window < 10:
        raise ConfigError(f"{len(series)} returns are too few for jump detection; "
                          "supply jump flags instead")
    result = detect_jumps(series, factors, alpha=config.alpha, window=window, slots_per_day=slots)
    return result.is_jump, fallback


def detect_panel_jumps(panel: PricePanel, config: PipelineConfig, slots_per_day: int):
    """Jump flags of every stock (``(n, p)``) and of the ETF (``(n,)``)."""
    returns = panel.stock_returns
    stock = np.zeros(returns.shape, dtype=bool)
    fallback = False
    for k in range(panel.n_assets):
        stock[:, k], fb = _detect(returns[:, k], slots_per_day, config)
        fallback |= fb
    etf, fb = _detect(panel.etf_returns, slots_per_day, config)
    return stock, etf, fallback | fb


def synchronize_panel(panel: PricePanel, config: PipelineConfig | None = None,
                      stock_jumps=None, etf_jumps=None) -> SyncResult:
    """Detect, build event matrices, rearrange and return the new panel.

    Parameters
    ----------
    panel : PricePanel
    config : PipelineConfig
    stock_jumps, etf_jumps : bool arrays, optional
        Known jump flags (shapes ``(n, p)`` and ``(n,)``); both must be
        given to skip detection.

    Returns
    -------
    SyncResult
        ``rearranged_panel`` has log prices ``Y_0 + cumsum`` of the
        rearranged returns written as price deltas, so that a panel without
        moved jumps is reproduced bit for bit.
    """
    config = config or PipelineConfig()
    n = panel.n_points - 1
    slots = config.slots_per_day or n
    if n % slots:
        raise ConfigError(f"{n} returns do not divide into days of {slots} returns")

    fallback = False
    if stock_jumps is None or etf_jumps is None:
        stock_jumps, etf_jumps, fallback = detect_panel_jumps(panel, config, slots)
    stock_jumps = np.asarray(stock_jumps, dtype=bool)
    etf_jumps = np.asarray(etf_jumps, dtype=bool).ravel()

    etf_idx = np.flatnonzero(etf_jumps)
    slot = etf_idx % slots
    edge = (slot < config.edge_exclusion) | (slot >= slots - config.edge_exclusion)
    excluded = etf_idx[edge].tolist()
    for i in excluded:
        log.info("ETF jump at return %d lies within %d returns of the day edge; excluded",
                 i, config.edge_exclusion)
    kept = etf_idx[~edge]

    windows = event_windows(kept, n, config.window_pre, config.window_post, day_length=slots)
    returns = panel.stock_returns
    delta = np.zeros_like(returns)
    col = {a: k for k, a in enumerate(panel.asset_ids)}
    events = []
    for event_id, win in enumerate(windows):
        matrix = build_jump_event_matrix(panel, stock_jumps, list(win.etf_jumps),
                                         config.window_pre, config.window_post, day_length=slots)
        report = EventReport(event_id, win, matrix)
        if matrix.n_jumps:
            budget = min(config.budget, matrix.h - 1)
            report.trace = trace(matrix, budget, config.constraints, config.time_limit)
            sol = report.solution
            for l in np.flatnonzero(sol.shifts):
                k = col[matrix.jump_assets[l]]
                old = matrix.start + int(matrix.jump_rows[l])
                new = old - int(sol.shifts[l])
                delta[old, k] -= returns[old, k]
                delta[new, k] += returns[old, k]
        events.append(report)

    # Price corrections stay inside each window; the window's deltas sum to
    # zero, so prices after it are left exactly as they were.
    shifted = np.zeros_like(panel.log_prices)
    for win in windows:
        shifted[win.start + 1: win.stop + 1] = np.cumsum(delta[win.start: win.stop], axis=0)
    rearranged = PricePanel(panel.log_prices + shifted, panel.weights, panel.etf,
                            list(panel.asset_ids), panel.etf_id)
    return SyncResult(panel, rearranged, stock_jumps, etf_jumps, events, excluded, slots, fallback)
