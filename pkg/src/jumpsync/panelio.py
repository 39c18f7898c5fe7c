"""
CSV input and output of price panels.

A panel file has one row per ``(time_index, asset_id)`` with columns
``time_index, asset_id, log_price, is_etf, weight``. Exactly one asset is
flagged as the ETF; its weight column is ignored. An optional ``jump``
column (0/1) carries externally supplied jump flags for the return that
ends at that grid point; when present the detection step is skipped.
Floats are written with ``repr`` so that a read-write cycle is lossless.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .eventmatrix import PricePanel

__all__ = ["PANEL_COLUMNS", "PanelFile", "read_panel", "write_panel", "panel_rows"]

PANEL_COLUMNS = ["time_index", "asset_id", "log_price", "is_etf", "weight"]


@dataclass
class PanelFile:
    """A panel together with the optional jump flags read from file.

    ``stock_jumps`` has shape ``(n_points - 1, p)`` and ``etf_jumps``
    shape ``(n_points - 1,)``; both are None when the file has no ``jump``
    column.
    """

    panel: PricePanel
    time_index: np.ndarray
    stock_jumps: np.ndarray | None = None
    etf_jumps: np.ndarray | None = None


def _parse_float(text, line, name):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise SchemaError(f"row {line}: {name} {text!r} is not a number") from None
    if not np.isfinite(value):
        raise SchemaError(f"row {line}: {name} must be finite")
    return value


def _parse_flag(text, line, name):
    if text not in ("0", "1"):
        raise SchemaError(f"row {line}: {name} must be 0 or 1, got {text!r}")
    return text == "1"


def read_panel(path) -> PanelFile:
    """Read and validate a panel CSV file.

    Raises
    ------
    FileNotFoundError
        If the file does not exist.
    SchemaError
        On missing columns, malformed values (with the offending row
        number), duplicate or missing ``(time_index, asset_id)`` pairs, or
        a number of ETF assets other than one.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in PANEL_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        has_jump = "jump" in header
        records = {}
        assets: dict[str, bool] = {}
        # header is row 1, so data rows start at 2
        for line, row in enumerate(reader, start=2):
            try:
                t = int(row["time_index"])
            except (TypeError, ValueError):
                raise SchemaError(f"row {line}: time_index {row['time_index']!r} "
                                  "is not an integer") from None
            asset = (row["asset_id"] or "").strip()
            if not asset:
                raise SchemaError(f"row {line}: empty asset_id")
            price = _parse_float(row["log_price"], line, "log_price")
            is_etf = _parse_flag(row["is_etf"], line, "is_etf")
            weight = 0.0 if is_etf and not row["weight"] else _parse_float(row["weight"], line, "weight")
            jump = _parse_flag(row["jump"], line, "jump") if has_jump else False
            if assets.setdefault(asset, is_etf) != is_etf:
                raise SchemaError(f"row {line}: asset {asset} changes its is_etf flag")
            if (t, asset) in records:
                raise SchemaError(f"row {line}: duplicate entry for ({t}, {asset})")
            records[(t, asset)] = (price, weight, jump, line)

    etfs = [a for a, flag in assets.items() if flag]
    if len(etfs) != 1:
        raise SchemaError(f"{path}: expected exactly one ETF asset, found {len(etfs)}")
    stocks = [a for a in assets if not assets[a]]
    if not stocks:
        raise SchemaError(f"{path}: no constituent assets")
    times = sorted({t for t, _ in records})
    n, p = len(times), len(stocks)
    if len(records) != n * (p + 1):
        for t in times:
            for a in stocks + etfs:
                if (t, a) not in records:
                    raise SchemaError(f"{path}: no row for time_index {t}, asset {a}")
    pos = {t: i for i, t in enumerate(times)}
    prices, weights = np.empty((n, p)), np.empty((n, p))
    jumps = np.zeros((n, p + 1), dtype=bool)
    etf = np.empty(n)
    col = {a: k for k, a in enumerate(stocks)}
    for (t, a), (price, weight, jump, line) in records.items():
        i = pos[t]
        if a == etfs[0]:
            etf[i] = price
            jumps[i, p] = jump
        else:
            if weight < 0:
                raise SchemaError(f"row {line}: negative weight")
            prices[i, col[a]] = price
            weights[i, col[a]] = weight
            jumps[i, col[a]] = jump
    panel = PricePanel(prices, weights, etf, asset_ids=stocks, etf_id=etfs[0])
    if has_jump:
        return PanelFile(panel, np.array(times), jumps[1:, :p], jumps[1:, p])
    return PanelFile(panel, np.array(times))


def panel_rows(panel: PricePanel, time_index=None, stock_jumps=None, etf_jumps=None):
    """Yield panel CSV rows (as lists of strings) in time, then asset order."""
    n, p = panel.log_prices.shape
    times = np.arange(n) if time_index is None else np.asarray(time_index)
    with_jumps = stock_jumps is not None
    for i in range(n):
        t = str(int(times[i]))
        for k in range(p):
            row = [t, panel.asset_ids[k], repr(float(panel.log_prices[i, k])), "0",
                   repr(float(panel.weights[i, k]))]
            if with_jumps:
                row.append("1" if i and stock_jumps[i - 1, k] else "0")
            yield row
        row = [t, panel.etf_id, repr(float(panel.etf[i])), "1", "0.0"]
        if with_jumps:
            row.append("1" if i and etf_jumps is not None and etf_jumps[i - 1] else "0")
        yield row


def write_panel(path, panel: PricePanel, time_index=None, stock_jumps=None, etf_jumps=None) -> int:
    """Write a panel CSV; returns the number of data rows written."""
    header = PANEL_COLUMNS + (["jump"] if stock_jumps is not None else [])
    count = 0
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in panel_rows(panel, time_index, stock_jumps, etf_jumps):
            writer.writerow(row)
            count += 1
    return count
