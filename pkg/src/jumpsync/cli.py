"""
Command-line interface: ``jumpsync simulate | rearrange | backtest``.

Exit codes: 0 success, 1 other failure (missing file, bad argument),
2 schema or configuration error, 3 infeasible constraints, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .covport import RebalanceRule, backtest
from .errors import ConfigError, InfeasibleConstraintError, NumericalError, SchemaError
from .eventmatrix import PricePanel
from .panelio import read_panel, write_panel
from .pipeline import PipelineConfig, synchronize_panel
from .simgen import SimConfig, sample_every, simulate

log = logging.getLogger("jumpsync")

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3, 4


def _pipeline_config(args) -> PipelineConfig:
    config = PipelineConfig.from_json(args.config) if args.config else PipelineConfig()
    changes = {}
    if getattr(args, "budget", None) is not None:
        changes["budget"] = args.budget
    if getattr(args, "alpha", None) is not None:
        changes["alpha"] = args.alpha
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    return config.replace(**changes) if changes else config


def cmd_simulate(args) -> int:
    config = SimConfig.from_json(args.config) if args.config else SimConfig()
    if args.seed is not None:
        config = config.replace(rng_seed=args.seed)
    result = simulate(config)
    observed = result.observed.combined
    etf = result.etf_prices
    every = args.every
    if every > 1:
        observed = sample_every(observed, every, config.grid_points_per_day)
        etf = sample_every(etf, every, config.grid_points_per_day)
    ids = [f"S{k + 1}" for k in range(config.n_assets)]
    panel = PricePanel(observed, config.asset_weights, etf, asset_ids=ids)
    out = Path(args.out)
    rows = write_panel(out, panel)

    jumps = result.efficient.jumps
    delays = [sf.total_delay for sf in result.observed.step_functions]
    print(f"wrote {rows} rows to {out}")
    print(f"jumps: {len(jumps)}")
    if delays:
        print(f"delay seconds: mean {np.mean(delays):.1f}, max {max(delays)}")
    return EXIT_OK


def _write_trace(path: Path, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["event", "c", "range", "matched"], lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({**row, "range": repr(float(row["range"]))})


def cmd_rearrange(args) -> int:
    config = _pipeline_config(args)
    panel_file = read_panel(args.panel)
    result = synchronize_panel(panel_file.panel, config, panel_file.stock_jumps,
                               panel_file.etf_jumps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "events.json").write_text(json.dumps([e.to_dict() for e in result.events], indent=1))
    _write_trace(out / "trace.csv", result.trace_rows())
    write_panel(out / "rearranged.csv", result.rearranged_panel, panel_file.time_index,
                panel_file.stock_jumps, panel_file.etf_jumps)
    (out / "summary.json").write_text(json.dumps({**result.summary(),
                                                  "rearrangement_days": result.rearrangement_days},
                                                 indent=1))
    for i in result.excluded:
        print(f"excluded ETF jump at return {i} (day edge)")
    print(f"events built: {result.n_events}, with stock jumps: {result.n_cojumps}, "
          f"rearranged: {result.n_rearranged}")
    for e in result.events:
        if e.solution is not None:
            s = e.solution
            print(f"event {e.event_id}: range {s.range_before:.6g} -> {s.range:.6g} "
                  f"(c={e.trace.best.budget}, matched {s.matched_count}/{e.matrix.n_jumps})")
    return EXIT_OK


def _by_day(panel: PricePanel, slots: int) -> np.ndarray:
    r = panel.stock_returns
    return r.reshape(len(r) // slots, slots, panel.n_assets)


def cmd_backtest(args) -> int:
    config = _pipeline_config(args)
    raw = read_panel(args.panel).panel
    rea = read_panel(args.rearranged).panel
    if raw.log_prices.shape != rea.log_prices.shape or raw.asset_ids != rea.asset_ids:
        raise SchemaError("raw and rearranged panels do not have the same layout")
    n = raw.n_points - 1
    slots = config.slots_per_day or n
    if n % slots:
        raise ConfigError(f"{n} returns do not divide into days of {slots} returns")
    raw_r, rea_r = _by_day(raw, slots), _by_day(rea, slots)
    days = np.flatnonzero(np.any(raw_r != rea_r, axis=(1, 2))).tolist()
    n_cj = n_ra = len(days)
    if args.events:
        events = json.loads(Path(args.events).read_text())
        n_cj = sum(1 for e in events if e["matrix"]["columns"])
        n_ra = sum(1 for e in events if e["rearranged"])
    rule = RebalanceRule(target=config.target, lookback_days=config.lookback_days,
                         n_boot=config.n_boot, block_len=config.block_len, rng_seed=config.seed)
    etf = np.diff(raw.etf).reshape(-1, slots)
    result = backtest(raw_r, rea_r, etf, days, rule, n_cojumps=n_cj, n_rearranged=n_ra)
    out = Path(args.out)
    text = result.to_json(indent=1) if out.suffix == ".json" else result.to_csv()
    out.write_text(text)
    print(text.strip())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jumpsync",
                                     description="Synchronize sluggish price jumps by rearrangement.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a panel and write it as CSV")
    p.add_argument("--config", help="JSON file with simulation settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--every", type=int, default=1,
                   help="keep every k-th grid point (e.g. 60 for minutes from seconds)")
    p.add_argument("--out", required=True, help="output panel CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rearrange", help="detect jumps and rearrange every event window")
    p.add_argument("panel", help="panel CSV")
    p.add_argument("--config", help="JSON file with pipeline settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=int, help="largest backward move (grid steps)")
    p.add_argument("--alpha", type=float, help="jump test significance level")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_rearrange)

    p = sub.add_parser("backtest", help="compare raw and rearranged minimum-variance portfolios")
    p.add_argument("panel", help="raw panel CSV")
    p.add_argument("rearranged", help="rearranged panel CSV")
    p.add_argument("--config", help="JSON file with pipeline settings")
    p.add_argument("--events", help="events.json written by rearrange (for event counts)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="performance table (.csv or .json)")
    p.set_defaults(func=cmd_backtest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SchemaError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except InfeasibleConstraintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
