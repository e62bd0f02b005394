"""Command line: ``hdbouss run | check | budget``.

Exit codes: 0 pass, 1 invariant failure, 2 config error, 3 runtime blow-up.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from .checks import SUITES, check_suite
from .experiments import (
    EXIT_CONFIG,
    EXIT_INVARIANT,
    EXIT_OK,
    OUTPUT_ENV,
    PRESETS,
    ConfigError,
    budget_table,
    load_config,
    load_snapshots,
    parse_config,
    run_experiment,
    write_budget_csv,
)

log = logging.getLogger("hdbouss")


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.set:
            cfg = _apply_overrides(cfg, args.set)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        res = run_experiment(cfg, output_dir=args.output)
    except OSError as exc:
        print(f"config error: output directory not writable: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    s = res.summary
    print(f"{cfg.name}: t={s['t_final']:g} E_sup/E0={s['E_sup_over_E0']} "
          f"c={s['decay_rate']} r2={s['decay_r2']} flags={s['flags']} "
          f"warnings={s['warnings']} -> {res.output_dir}")
    return res.exit_code


def _apply_overrides(cfg, pairs):
    base = {k: v for k, v in cfg.to_dict().items() if v is not None}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        base[k.strip()] = yaml.safe_load(v)
    return parse_config(yaml.safe_dump(base), source="overrides")


def _cmd_check(args) -> int:
    try:
        report = check_suite(args.suite, args.seeds)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = json.dumps(report, indent=2)
    if args.report:
        Path(args.report).write_text(text + "\n")
    print(text)
    return EXIT_OK if report["passed"] else EXIT_INVARIANT


def _cmd_budget(args) -> int:
    try:
        states, params = load_snapshots(args.snapshot_dir)
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    columns, rows = budget_table(states, params)
    out = Path(args.output) if args.output else Path(args.snapshot_dir) / "budget.csv"
    write_budget_csv(out, columns, rows)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hdbouss",
        description="Pseudo-spectral Boussinesq runs with horizontal dissipation, "
                    "invariant checks and energy budgets.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a config file or a shipped preset")
    r.add_argument("config", help=f"config path or preset name ({', '.join(PRESETS)})")
    r.add_argument("-o", "--output", help=f"output directory (default: ${OUTPUT_ENV}/<name> "
                                          "or the config's output_dir, else runs/<name>)")
    r.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key; may be repeated")
    r.set_defaults(func=_cmd_run)

    c = sub.add_parser("check", help="run invariant batteries with seeded ensembles")
    c.add_argument("suite", choices=SUITES + ("all",))
    c.add_argument("--seeds", type=int, default=None, help="ensemble size per battery")
    c.add_argument("--report", help="also write the JSON report to this file")
    c.set_defaults(func=_cmd_check)

    b = sub.add_parser("budget", help="H1/H2 budget table from a snapshot directory")
    b.add_argument("snapshot_dir")
    b.add_argument("-o", "--output", help="CSV path (default: <snapshot_dir>/budget.csv)")
    b.set_defaults(func=_cmd_budget)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which matches the config-error code
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
