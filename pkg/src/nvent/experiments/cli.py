"""Command-line entry point.

    nvent run CONFIG [--out DIR]
    nvent fig2|fig3a|fig3b|fig4 [--out DIR] [--override key=value]...
    nvent rwa-check CONFIG [--out DIR]
    nvent validate CONFIG

Exit codes: 0 success, 2 configuration error, 3 numeric failure or
invariant violation.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..averaging import QuadratureError
from ..core import InvariantError
from ..dynamics import IntegrationError
from .config import ConfigError, Scenario, parse_file, parse_overrides
from .figures import FIGURES, run_figure
from .rwa import rwa_report
from .sweep import NumericFailure, default_threads, run_scenario, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nvent", description="Measurement-mediated entanglement simulator")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for sweeps (default: $SIM_THREADS, else CPU count)")
    # also accepted after the verb
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run a scenario config and emit CSV", parents=[common])
    run.add_argument("config")
    run.add_argument("--out", help="output directory (CSV to stdout if omitted)")

    for name in FIGURES:
        fig = sub.add_parser(name, help=f"reproduce {name}", parents=[common])
        fig.add_argument("--out", default=".", help="output directory")
        fig.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")

    rwa = sub.add_parser("rwa-check", help="compare lab-frame and secular dynamics", parents=[common])
    rwa.add_argument("config")
    rwa.add_argument("--out", help="also write the deficits CSV here")

    val = sub.add_parser("validate", help="parse and validate a config without running it", parents=[common])
    val.add_argument("config")
    return p


def _threads(args) -> int:
    return max(1, args.threads) if args.threads is not None else default_threads()


def _run(args) -> int:
    config = parse_file(args.config)
    result = run_scenario(config, _threads(args))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / (Path(args.config).stem + ".csv")
        write_csv(path, result)
        print(f"wrote {path} ({len(result.rows)} rows)")
    else:
        sys.stdout.write(result.to_csv())
    return EXIT_OK


def _figure(args) -> int:
    output = run_figure(args.verb, parse_overrides(args.override), args.out, _threads(args))
    print(f"wrote {output.csv_path} and {output.plot_path} ({len(output.result.rows)} rows)")
    return EXIT_OK


def _rwa(args) -> int:
    config = parse_file(args.config)
    if config.scenario is not Scenario.RWA_CHECK:
        raise ConfigError("scenario", "rwa-check needs scenario = rwa_check")
    result = run_scenario(config, _threads(args))
    report = rwa_report(result.column("ratio"), result.column("fidelity_deficit"))
    print("\n".join(report.lines()))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / (Path(args.config).stem + ".csv"), result)
    return EXIT_OK


def _validate(args) -> int:
    config = parse_file(args.config)
    n = sum(1 for _ in config.points())
    print(f"ok: {config.scenario.value} scenario, {n} sweep point(s)")
    return EXIT_OK


VERBS = {"run": _run, "rwa-check": _rwa, "validate": _validate, **{name: _figure for name in FIGURES}}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return VERBS[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, InvariantError, IntegrationError, QuadratureError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
