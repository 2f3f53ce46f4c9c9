"""Command-line interface: ``hlgrowth grow | render-cluster | render-flow | analyze | replay``.

Exit codes: 0 success, 1 failed checks or replay mismatch, 2 usage error,
3 numerical failure during growth.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .errors import DomainError, NumericalFailure, SingularityError
from .growth import GrowthParams, grow
from .harness import ConfigError, ExperimentConfig, UnknownExperiment, run_experiment
from .records import RecordError, read_record, record_to_state, replay, save_state
from .render import RenderStyle, render_cluster, render_flow, write_svg

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _positive_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hlgrowth", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("grow", help="grow a cluster and write a run record")
    g.add_argument("--c", type=float, required=True, help="base capacity")
    g.add_argument("--alpha", type=float, required=True)
    reg = g.add_mutually_exclusive_group(required=True)
    reg.add_argument("--sigma", type=float, help="regularization radius (sigma mode)")
    reg.add_argument("--sigma-mode", choices=["infinity", "starred"],
                     help="capacity rule without a finite sigma")
    hor = g.add_mutually_exclusive_group(required=True)
    hor.add_argument("--particles", type=_positive_int)
    hor.add_argument("--time", type=float, help="capacity time T (N = floor(T/c))")
    g.add_argument("--seed", type=_positive_int, required=True)
    g.add_argument("--out", required=True, help="run directory")

    rc = sub.add_parser("render-cluster", help="draw a cluster as SVG")
    rc.add_argument("record")
    rc.add_argument("--out", required=True)
    rc.add_argument("--size", type=int, default=800)
    rc.add_argument("--epoch-size", type=int, default=1000)
    rc.add_argument("--samples", type=int, default=8, help="samples per slit")
    rc.add_argument("--stroke-width", type=float, default=0.8)
    rc.add_argument("--budget", type=int, default=25000, help="max particles drawn")
    rc.add_argument("--subsample-seed", type=_positive_int, default=0)

    rf = sub.add_parser("render-flow", help="draw harmonic-measure flow lines as SVG")
    rf.add_argument("record")
    rf.add_argument("--out", required=True)
    rf.add_argument("--tracers", type=_positive_int, default=64)
    rf.add_argument("--stride", type=int, default=100)
    rf.add_argument("--tol", type=float, default=None, help="coalescence tolerance")
    rf.add_argument("--size", type=int, default=800)

    an = sub.add_parser("analyze", help="run an experiment from a JSON config")
    an.add_argument("config")
    an.add_argument("--out", help="report path (overrides the config)")
    an.add_argument("--record-dir", help="write run records of first seeds here")

    rp = sub.add_parser("replay", help="regrow a record and compare bit-for-bit")
    rp.add_argument("record")
    return p


def _cmd_grow(args) -> int:
    mode = args.sigma_mode or "sigma"
    params = GrowthParams(args.c, args.alpha, mode, args.sigma,
                          particles=args.particles, time=args.time)
    t0 = time.perf_counter()
    try:
        state = grow(params, args.seed, progress=True)
    except (NumericalFailure, SingularityError) as exc:
        step = getattr(exc, "step", None) or getattr(exc, "index", None)
        print(f"numerical failure at step {step}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    wall = time.perf_counter() - t0
    save_state(state, args.out, wall_clock_s=round(wall, 3))
    total = float(state.cumulative[-1]) if len(state) else 0.0
    print(f"N={len(state)} C_N={total:.12g} wall_clock={wall:.3f}s "
          f"map_evaluations={state.map_evaluations} -> {args.out}")
    return EXIT_OK


def _cmd_render_cluster(args) -> int:
    state = record_to_state(read_record(args.record))
    style = RenderStyle(size=args.size, epoch_size=args.epoch_size,
                        samples_per_slit=args.samples, stroke_width=args.stroke_width,
                        particle_budget=args.budget)
    svg, meta = render_cluster(state, style, args.subsample_seed)
    write_svg(svg, args.out)
    print(f"drew {meta['drawn_particles']}/{meta['n_particles']} particles, "
          f"skipped {meta['skipped_samples']} samples, outer radius {meta['outer_radius']:.4f}")
    return EXIT_OK


def _cmd_render_flow(args) -> int:
    state = record_to_state(read_record(args.record))
    svg, meta = render_flow(state, args.tracers, args.stride, RenderStyle(size=args.size),
                            coalescence_tol=args.tol)
    write_svg(svg, args.out)
    print(f"drew {args.tracers} tracers over {meta['n_particles']} particles")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.out:
        cfg.output = args.out
    if args.record_dir:
        cfg.record_dir = args.record_dir
    report = run_experiment(cfg)
    summary = report.summary()
    print(summary)
    if cfg.output:
        Path(cfg.output).with_suffix(".txt").write_text(summary + "\n")
    return EXIT_OK if report.passed else EXIT_FAIL


def _cmd_replay(args) -> int:
    res = replay(args.record)
    if res.match:
        print(f"match: {res.detail}")
        return EXIT_OK
    print(f"mismatch: {res.detail}", file=sys.stderr)
    return EXIT_FAIL


COMMANDS = {
    "grow": _cmd_grow,
    "render-cluster": _cmd_render_cluster,
    "render-flow": _cmd_render_flow,
    "analyze": _cmd_analyze,
    "replay": _cmd_replay,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UnknownExperiment as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DomainError, RecordError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
