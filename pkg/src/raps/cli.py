"""Command line entry point: ``raps-sim`` / ``python -m raps``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .harness import (
    ALL_MODES,
    CHANNEL_SELECT,
    aggregate,
    emit,
    load_config,
    run,
    tradeoff_curve,
    write_tradeoff_csv,
)
from .step2 import write_allocation_csv

log = logging.getLogger("raps")


def _list(conv):
    def parse(text):
        return [conv(x) for x in text.replace(";", ",").split(",") if x.strip()]

    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="raps-sim",
        description="Monte Carlo supply-power study of RAPS scheduling against benchmark schedulers.",
    )
    p.add_argument("--config", help="flat key = value parameter file")
    p.add_argument("--drops", type=int, help="number of channel drops")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--rates", type=_list(float), help="per-user target rates in Mbit/s, comma separated")
    p.add_argument("--modes", type=_list(str), help=f"comma separated subset of {','.join(ALL_MODES)}")
    p.add_argument("--channel-select", choices=CHANNEL_SELECT, help="representative channel for the block-fading step")
    p.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    p.add_argument("--out", default="results", help="output directory (default: %(default)s)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--allocations", action="store_true", help="also write RAPS per-unit powers, one CSV per rate")
    p.add_argument("--tradeoff", action="store_true", help="write the single-link time-share trade-off curves instead")
    p.add_argument("--tradeoff-target", type=float, default=1.8, help="spectral efficiency target, bit/s/Hz")
    p.add_argument("--tradeoff-gain", type=float, default=25.0, help="noise-normalised link gain, 1/W")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        overrides = {
            "drops": args.drops,
            "seed": args.seed,
            "rates_mbps": args.rates,
            "modes": args.modes,
            "channel_select": args.channel_select,
            "workers": args.workers,
        }
        if args.modes is not None and not args.modes:
            raise ValueError("mode list is empty")
        cfg = load_config(args.config, **overrides)
    except (OSError, ValueError, TypeError) as exc:
        print(f"raps-sim: error: {exc}", file=sys.stderr)
        return 2

    if args.tradeoff:
        curves = tradeoff_curve(args.tradeoff_target, cfg.params, args.tradeoff_gain)
        path = write_tradeoff_csv(curves, f"{args.out}/tradeoff.csv")
        log.info("joint optimum at phi=%.3f; wrote %s", curves.argmin("joint"), path)
        return 0

    t0 = time.perf_counter()
    sink = [] if args.allocations else None
    rows = run(cfg, sink)
    paths = emit(rows, args.out, args.format, aggregate(rows))
    if sink:
        for rate in cfg.rates_bps:
            path = Path(args.out) / f"allocations_{rate / 1e6:g}mbps.csv"
            write_allocation_csv([(d, a) for d, r, a in sink if r == rate], path)
            paths.append(path)
    log.info("%d rows in %.1f s -> %s", len(rows), time.perf_counter() - t0, ", ".join(map(str, paths)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
