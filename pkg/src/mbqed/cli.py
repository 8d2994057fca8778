"""
Command-line entry point.

    mbqed run CONFIG [--out PATH] [--format json|csv] [--seed N] [--shots N] [--bloch-out PATH]
    mbqed catalog
    mbqed tables [--resource SPEC] [--shots N] [--seed N] [--tomography] [--no-reference] [--out PATH]

Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import secrets
import sys
from pathlib import Path

from . import __version__
from .scenario import (
    ConfigError,
    ResourceSpec,
    catalog_table,
    emit_bloch_data,
    emit_table_reproduction,
    grid_configs,
    parse_config,
    run_scenario,
    with_overrides,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("mbqed")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mbqed", description="Measurement-driven phase-error detection on a box cluster.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one scenario from a YAML config")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, help="output file (default: config 'output' key, else stdout)")
    run.add_argument("--format", choices=["json", "csv"])
    run.add_argument("--seed", type=int)
    run.add_argument("--shots", type=int)
    run.add_argument("--bloch-out", type=Path, help="also write Bloch-vector records as CSV")

    sub.add_parser("catalog", help="list the named input states")

    tab = sub.add_parser("tables", help="reproduce the fidelity tables over the state catalog")
    tab.add_argument("--resource", default="ideal", help="ideal, lab, graph:<edges>, white_noise(p) or white_noise_fidelity(F)")
    tab.add_argument("--shots", type=int, default=10_000)
    tab.add_argument("--seed", type=int)
    tab.add_argument("--tomography", action="store_true")
    tab.add_argument("--shots-per-setting", type=int, default=10_000)
    tab.add_argument("--mc-cycles", type=int, default=100)
    tab.add_argument("--no-reference", action="store_true", help="omit the experimental reference columns")
    tab.add_argument("--out", type=Path)
    return p


def _write(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)
        log.info("wrote %s", path)


def _cmd_run(args) -> int:
    try:
        text = args.config.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    config = with_overrides(parse_config(text), seed=args.seed, shots=args.shots, format=args.format)
    if config.seed_generated:
        print(f"seed: {config.seed}", file=sys.stderr)
    report = run_scenario(config)
    out = args.out or (Path(config.output) if config.output else None)
    _write(report.render(), out)
    if args.bloch_out:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["label", "x", "y", "z"], lineterminator="\n")
        w.writeheader()
        w.writerows(emit_bloch_data(report))
        _write(buf.getvalue(), args.bloch_out)
    return EXIT_OK


def _cmd_tables(args) -> int:
    try:
        resource = ResourceSpec.parse(args.resource)
    except ValueError as exc:
        raise ConfigError(f"--resource: {exc}") from exc
    if args.shots < 1 or args.shots_per_setting < 1 or args.mc_cycles < 2:
        raise ConfigError("--shots and --shots-per-setting must be positive, --mc-cycles at least 2")
    seed = args.seed
    if seed is None:
        seed = secrets.randbits(64)
        print(f"seed: {seed}", file=sys.stderr)
    configs = grid_configs(resource, args.shots, seed, args.tomography, args.shots_per_setting, args.mc_cycles)
    reports = []
    for k, cfg in enumerate(configs, 1):
        log.info("scenario %d/%d: %s %s", k, len(configs), cfg.input.label, cfg.error.value)
        reports.append(run_scenario(cfg))
    _write(emit_table_reproduction(reports, reference=not args.no_reference), args.out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "tables":
            return _cmd_tables(args)
        sys.stdout.write(catalog_table())
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
