"""Command-line entry point: steady, evolve, sweep, verify, schema."""

from __future__ import annotations

import argparse
import contextlib
import json
import sys

from .config import ConfigError, config_schema, dump_config, load_config, parse_config
from .dynamics import IntegrationError
from .model import SpecError
from .runner import run_evolve, steady_columns, sweep, trajectory_columns, write_records
from .verify import CHECKS, MUTATIONS, RUN_ORDER, run_checks


@contextlib.contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _load(args):
    data = load_config(args.config).model_dump(mode="json")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.format is not None:
        data["output"]["format"] = args.format
    if args.out is not None:
        data["output"]["path"] = args.out
    return parse_config(data)


def cmd_steady(args, *, grid: bool) -> int:
    cfg = _load(args)
    if not grid:
        cfg = cfg.model_copy(update={"sweep": type(cfg.sweep)()})
    if args.echo_config:
        print(dump_config(cfg), file=sys.stderr)
    with _output(cfg.output.path) as out:
        write_records(sweep(cfg, workers=args.workers), steady_columns(cfg), out, cfg.output.format)
    return 0


def cmd_evolve(args) -> int:
    cfg = _load(args)
    if args.echo_config:
        print(dump_config(cfg), file=sys.stderr)
    records = run_evolve(cfg)
    with _output(cfg.output.path) as out:
        write_records(records, trajectory_columns(cfg), out, cfg.output.format)
    return 0


def cmd_verify(args) -> int:
    if args.list:
        for name in RUN_ORDER:
            print(name)
        return 0
    names = args.check or None
    if names:
        unknown = set(names) - set(CHECKS)
        if unknown:
            print(f"unknown checks: {', '.join(sorted(unknown))}", file=sys.stderr)
            return 2
    results = run_checks(names, seed=args.seed or 0, mutation=args.mutate)
    failed = 0
    for r in results:
        print(r.line())
        failed += not r.passed
    print(f"{len(results) - failed}/{len(results)} checks passed"
          + (f" (mutation: {args.mutate})" if args.mutate else ""))
    return 1 if failed else 0


def cmd_schema(args) -> int:
    with _output(args.out) as out:
        out.write(json.dumps(config_schema(), indent=2, sort_keys=True) + "\n")
    return 0


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], help="output format (overrides config)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes for grids")
    p.add_argument("--seed", type=int, help="random seed (overrides config)")
    p.add_argument("--echo-config", action="store_true",
                   help="print the effective configuration to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neqcoh",
        description="Steady coherence of three-level systems between two thermal baths.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady", help="steady state at the configured point")
    _common(p)
    p.set_defaults(func=lambda a: cmd_steady(a, grid=False))

    p = sub.add_parser("sweep", help="steady states over the configured sweep grid")
    _common(p)
    p.set_defaults(func=lambda a: cmd_steady(a, grid=True))

    p = sub.add_parser("evolve", help="time evolution from the configured initial state")
    _common(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--list", action="store_true", help="list checks without running them")
    p.add_argument("--check", action="append", help="run only this check (repeatable)")
    p.add_argument("--mutate", choices=sorted(MUTATIONS), help="run against a deliberately broken generator")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("schema", help="print the configuration JSON schema")
    p.add_argument("--out")
    p.set_defaults(func=cmd_schema)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, SpecError) as err:
        print(f"config error:\n{err}", file=sys.stderr)
        return 2
    except IntegrationError as err:
        print(f"integration error: {err}", file=sys.stderr)
        return 3
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
