"""Command-line front end: ``wsnsim run|sweep|compare|topology``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from wsnsim import report
from wsnsim.config import SimConfig, dump_config, parse_config
from wsnsim.engine import run_simulation, summarize, sweep, sweep_service_ratio
from wsnsim.errors import TopologyDisconnected, WSNError
from wsnsim.topology import build_topology

log = logging.getLogger("wsnsim")


def parse_seeds(text: str) -> list[int]:
    """``N`` or an inclusive range ``N..M``."""
    if ".." in text:
        lo, hi = (int(part) for part in text.split("..", 1))
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    return [int(text)]


def parse_sweep(text: str) -> tuple[str, list[str]]:
    key, sep, values = text.partition("=")
    points = [v.strip() for v in values.split(",") if v.strip()]
    if not sep or not key.strip() or not points:
        raise argparse.ArgumentTypeError(f"expected KEY=v1,v2,... got {text!r}")
    return key.strip(), points


def _prepare(out: str | Path, cfg: SimConfig) -> Path:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.txt").write_text(dump_config(cfg), newline="\n")
    return out_dir


def usable_seeds(cfg: SimConfig, seeds: Sequence[int]) -> list[int]:
    """Drop seeds whose deployment cannot reach the sink, with a warning each."""
    kept = []
    for seed in seeds:
        try:
            build_topology(cfg, seed)
        except TopologyDisconnected as exc:
            log.warning("seed %d skipped: %s", seed, exc)
        else:
            kept.append(seed)
    if not kept:
        raise WSNError("no connected deployment among the requested seeds")
    return kept


def cmd_run(cfg: SimConfig, seed: int, out: str | Path, plot: bool = False,
            trace: bool = False) -> Path:
    topo = build_topology(cfg, seed)
    out_dir = _prepare(out, cfg)
    rep = run_simulation(cfg, seed, topo, trace=trace)
    topo.save(out_dir / "topology.txt")
    report.write_metrics(out_dir / "metrics.csv", [rep])
    report.write_timeseries(out_dir / "timeseries.csv", rep)
    if trace:
        report.write_trace(out_dir / "trace.txt", rep)
    if plot:
        report.plot_run(out_dir, rep)
    return out_dir


def cmd_sweep(cfg: SimConfig, seeds: Sequence[int], key: str, values: Sequence[str],
              out: str | Path, plot: bool = False) -> Path:
    # coerce the point values through the config parser so types match the field
    points = [getattr(parse_config(overrides={key: v}), key) for v in values]
    seeds = usable_seeds(cfg, seeds)
    out_dir = _prepare(out, cfg)
    if key == "ratio_threshold" and len(points) > 1:
        rows = sweep_service_ratio(cfg, seeds, points)
    else:
        rows = sweep(cfg, seeds, key, points)
    report.write_sweep(out_dir / "sweep.csv", key, rows)
    if plot:
        report.plot_sweep(out_dir, rows)
    return out_dir


def cmd_compare(cfg: SimConfig, seeds: Sequence[int], out: str | Path,
                plot: bool = False) -> Path:
    seeds = usable_seeds(cfg, seeds)
    out_dir = _prepare(out, cfg)
    on_cfg = cfg.replace(rate_control_enabled=True)
    off_cfg = cfg.replace(rate_control_enabled=False)
    pairs = [(run_simulation(on_cfg, s), run_simulation(off_cfg, s)) for s in seeds]
    report.write_compare(out_dir / "compare.csv", pairs)
    report.write_metrics(out_dir / "metrics_on.csv", [on for on, _ in pairs])
    report.write_metrics(out_dir / "metrics_off.csv", [off for _, off in pairs])
    if plot:
        report.plot_compare(out_dir, pairs)
        report.plot_sweep(out_dir, [summarize("off", [p[1] for p in pairs]),
                                    summarize("on", [p[0] for p in pairs])])
    return out_dir


def cmd_topology(cfg: SimConfig, seed: int, out: str | Path) -> Path:
    topo = build_topology(cfg, seed)
    out_dir = _prepare(out, cfg)
    topo.save(out_dir / "topology.txt")
    return out_dir


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--out", metavar="DIR", default="out", help="output directory")
    common.add_argument("--no-rate-control", action="store_true",
                        help="disable the service-ratio controller")
    common.add_argument("--plot", action="store_true", help="also render PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="wsnsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="single simulation run")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", action="store_true", help="write the event trace")

    p = sub.add_parser("sweep", parents=[common], help="parameter sweep over seeds")
    p.add_argument("--seeds", type=parse_seeds, default=None, metavar="N..M")
    p.add_argument("--sweep", type=parse_sweep, required=True, metavar="KEY=v1,v2,...")

    p = sub.add_parser("compare", parents=[common], help="paired runs with control on/off")
    p.add_argument("--seeds", type=parse_seeds, default=None, metavar="N..M")

    p = sub.add_parser("topology", parents=[common], help="emit the deployment only")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _overrides(args) -> dict[str, str]:
    values = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise WSNError(f"--set expects KEY=VALUE, got {item!r}")
        values[key.strip()] = value.strip()
    if args.no_rate_control:
        values["rate_control_enabled"] = "false"
    return values


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(args.config, _overrides(args))
        if args.command == "run":
            out = cmd_run(cfg, args.seed, args.out, args.plot, args.trace)
        elif args.command == "topology":
            out = cmd_topology(cfg, args.seed, args.out)
        else:
            seeds = args.seeds if args.seeds is not None else list(range(cfg.executions))
            if args.command == "sweep":
                key, values = args.sweep
                out = cmd_sweep(cfg, seeds, key, values, args.out, args.plot)
            else:
                out = cmd_compare(cfg, seeds, args.out, args.plot)
    except (WSNError, ValueError) as exc:
        print(f"wsnsim: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"wsnsim: error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
