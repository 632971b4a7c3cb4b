"""Command line entry point: ``run``, ``gen-code`` and ``selftest``."""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .harness import ALGORITHMS, ConfigError, ExperimentConfig, load_config, run_experiment
from .ldpc import write_alist
from .peg import girth, peg_code


def _parse_snr(text):
    try:
        return tuple(float(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tikmix", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress per SNR point")
    # accepted after the subcommand too; SUPPRESS keeps the top-level value when absent
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="log progress per SNR point")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="simulate a PER curve and write CSV reports")
    run.add_argument("config", type=Path, help="key = value configuration file")
    run.add_argument("--seed", type=int)
    run.add_argument("--algo", choices=ALGORITHMS)
    run.add_argument("--snr", type=_parse_snr, help="comma separated Es/N0 grid in dB")
    run.add_argument("--out-dir", type=Path, default=Path("results"))
    run.add_argument("--threads", type=int)
    run.add_argument("--max-frames", type=int)

    gen = sub.add_parser("gen-code", parents=[common], help="build a PEG code and write it as alist")
    gen.add_argument("-n", type=int, required=True, help="code length")
    gen.add_argument("--rate", type=float, default=0.75)
    gen.add_argument("--dv", type=int, default=3, help="variable-node degree")
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("-o", "--output", type=Path, help="alist path (stdout if omitted)")

    st = sub.add_parser("selftest", parents=[common], help="check closed forms against numerical references")
    st.add_argument("--seed", type=int, default=0)
    return p


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    over = {}
    for name, key in (("seed", "seed"), ("algo", "algorithm"), ("snr", "snr_grid_db"),
                      ("threads", "threads"), ("max_frames", "max_frames")):
        value = getattr(args, name)
        if value is not None:
            over[key] = value
    return replace(cfg, **over) if over else cfg


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    stats = run_experiment(cfg, out_dir=args.out_dir)
    for p in stats.points:
        print(f"Es/N0 {p.snr_db:6.2f} dB  frames {p.frames:6d}  errors {p.frame_errors:5d}  PER {p.per:.3e}")
    print(f"reports written to {args.out_dir}")
    return 0


def cmd_gen_code(args) -> int:
    code = peg_code(args.n, args.rate, args.dv, args.seed)
    text = write_alist(code)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text, encoding="utf-8")
        print(f"n={code.n} m={code.m} k={code.k} girth={girth(code)} -> {args.output}")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    results = run_selftest(args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<16} {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "gen-code": cmd_gen_code, "selftest": cmd_selftest}[args.command]
    try:
        return handler(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
