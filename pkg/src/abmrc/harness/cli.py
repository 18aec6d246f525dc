"""Command line entry point: ``abmrc {simulate,control,bench,report}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ConfigurationError
from .bench import run_bench, write_bench
from .config import STRATEGIES, ExperimentConfig
from .experiment import EXIT_CONFIG, EXIT_CONSENSUS, EXIT_MAX_STEPS, run_experiment
from .plotting import render_directory


class _Parser(argparse.ArgumentParser):
    # argument errors share the configuration exit code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="abmrc", description="Agent consensus simulation and reduced optimal control.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, strategy=True):
        p.add_argument("--config", type=Path, help="JSON experiment configuration")
        if strategy:
            p.add_argument("--strategy", choices=STRATEGIES)
        p.add_argument("--seed", type=int)
        p.add_argument("--out-dir", type=Path)
        p.add_argument("--name", help="output file stem")

    common(sub.add_parser("simulate", help="uncontrolled integration"), strategy=False)
    common(sub.add_parser("control", help="controlled run with the chosen strategy"))
    bench = sub.add_parser("bench", help="CPU-time sweep over the configured (d, N) grid")
    common(bench)
    bench.add_argument("--repeats", type=int)
    report = sub.add_parser("report", help="render figures for every CSV in a directory")
    report.add_argument("--out-dir", type=Path, default=Path("out"))
    return parser


def load_config(args):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None and args.seed < 0:
        raise ConfigurationError("seed must be nonnegative")
    return cfg.override(
        seed=args.seed,
        name=args.name,
        out_dir=str(args.out_dir) if args.out_dir else None,
        strategy=getattr(args, "strategy", None),
    )


def _simulate(args):
    cfg = load_config(args).override(strategy="uncontrolled")
    return _run(cfg)


def _control(args):
    cfg = load_config(args)
    if cfg.strategy == "uncontrolled":
        raise ConfigurationError("control needs a controlled strategy; use simulate for uncontrolled runs")
    return _run(cfg)


def _run(cfg):
    result = run_experiment(cfg)
    if result.report is None:
        print(f"{cfg.name}: failed ({result.error})", file=sys.stderr)
    else:
        s = result.report.summary()
        status = "consensus" if s["consensus_reached"] else "max steps"
        print(f"{cfg.name}: {status} at t={s['final_time']:.4g}, X={s['final_X']:.3e}, "
              f"cost={s['total_cost']:.6g}, wall={s['wall_ms']:.1f} ms")
    print(f"wrote {result.summary_path}")
    return result.exit_code


def _bench(args):
    cfg = load_config(args)
    grid = dict(cfg.bench)
    repeats = args.repeats if args.repeats is not None else grid.get("repeats", 3)
    if repeats < 1:
        raise ConfigurationError("repeats must be positive")
    strategies = [args.strategy] if args.strategy else grid.get("strategies", ["full"])
    if args.strategy and args.strategy != "full":
        strategies = ["full", args.strategy]
    cells = run_bench(cfg, grid.get("d", [cfg.d]), grid.get("N", [cfg.N]), strategies, repeats)
    for path in write_bench(cells, cfg.out_dir):
        print(f"wrote {path}")
    for c in cells:
        print(f"d={c.d} N={c.N} {c.strategy}: {c.wall_ms:.1f} ms"
              f" normalized={c.normalized_time} speedup={c.speedup}")
    return EXIT_CONSENSUS if all(c.consensus_reached for c in cells) else EXIT_MAX_STEPS


def _report(args):
    if not args.out_dir.is_dir():
        raise ConfigurationError(f"no such directory: {args.out_dir}")
    made = render_directory(args.out_dir)
    for path in made:
        print(f"wrote {path}")
    return EXIT_CONSENSUS


COMMANDS = {"simulate": _simulate, "control": _control, "bench": _bench, "report": _report}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"abmrc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
