"""Command-line entry point: ``thinheat run`` and ``thinheat validate``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import KINDS, ExperimentConfig, from_dict, load, validate
from .errors import BudgetExceeded, ConfigError, ThinHeatError
from .harness import ConvergenceReport, Criterion, ExperimentResult, provenance, run_experiment

EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thinheat", description="Thin moving-domain heat experiments.")
    p.add_argument("--version", action="version", version=f"thinheat {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run experiments from a config file")
    run.add_argument("--config", help="TOML experiment configuration")
    run.add_argument("--exp", default=None,
                     help="experiment kind(s), comma separated; 'list' prints the kinds "
                          "(default: the kind named in the config)")
    run.add_argument("--out", default="out", help="output directory (default: out)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    run.add_argument("--budget-seconds", type=float, default=None,
                     help="wall-clock budget per experiment")
    run.add_argument("--overwrite", action="store_true", help="replace existing reports")

    val = sub.add_parser("validate", help="check a config file without solving")
    val.add_argument("config")
    return p


def _with_kind(cfg: ExperimentConfig, kind: str) -> ExperimentConfig:
    data = json.loads(json.dumps(cfg.data))
    data["experiment"]["kind"] = kind
    return from_dict(data, cfg.source)


def _prepare(args) -> list[ExperimentConfig]:
    """Parse and validate everything before touching the output directory."""
    if not args.config:
        raise ConfigError("--config is required")
    base = load(args.config)
    kinds = [base.kind] if args.exp is None else [k.strip() for k in args.exp.split(",") if k.strip()]
    for k in kinds:
        if k not in KINDS:
            raise ConfigError(f"--exp: unknown experiment {k!r} (expected one of {KINDS})")
    cfgs = [base if k == base.kind else _with_kind(base, k) for k in kinds]
    for c in cfgs:
        diags = validate(c)
        if diags:
            raise ConfigError(f"{c.source} [{c.kind}]: " + "; ".join(diags))
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    if args.budget_seconds is not None and not args.budget_seconds > 0:
        raise ConfigError("--budget-seconds must be positive")
    out = Path(args.out)
    for c in cfgs:
        target = out / c.kind
        if (target / "report.json").exists() and not args.overwrite:
            raise ConfigError(f"--out: {target} already holds a report (use --overwrite)")
    return cfgs


def write_outputs(result: ExperimentResult, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "report.json").write_text(result.to_json())
    (directory / "rows.csv").write_text(result.rows_csv())
    (directory / "plot.txt").write_text(result.plot_script())
    (directory / "timings.json").write_text(json.dumps(result.timings, sort_keys=True, indent=2) + "\n")


def _partial(cfg: ExperimentConfig, exc: BudgetExceeded) -> ExperimentResult:
    rows = [r for r in exc.partial if isinstance(r, dict)]
    parameter = next(iter(rows[0]), "epsilon") if rows else "epsilon"
    rep = ConvergenceReport("partial", parameter, rows, note="budget exhausted before the sweep finished")
    crit = Criterion("completed within the wall-clock budget", False, str(exc))
    return ExperimentResult(cfg.kind, cfg.name, [rep], [crit], provenance(cfg), complete=False)


def cmd_run(args) -> int:
    if args.exp == "list":
        for k in KINDS:
            print(k)
        return 0
    try:
        cfgs = _prepare(args)
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status = 0
    for cfg in cfgs:
        target = Path(args.out) / cfg.kind
        try:
            result = run_experiment(cfg, jobs=args.jobs, budget=args.budget_seconds)
        except BudgetExceeded as exc:
            write_outputs(_partial(cfg, exc), target)
            print(f"FAIL {cfg.name}: budget exceeded ({exc}); partial report in {target}")
            status = EXIT_BUDGET
            continue
        except ThinHeatError as exc:
            print(f"FAIL {cfg.name}: {type(exc).__name__}: {exc}")
            status = status or EXIT_FAIL
            continue
        write_outputs(result, target)
        for line in result.summary_lines():
            print(line)
        if not result.passed:
            status = status or EXIT_FAIL
    return status


def cmd_validate(args) -> int:
    try:
        cfg = load(args.config)
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    diags = validate(cfg)
    for d in diags:
        print(d)
    if not diags:
        print(f"{args.config}: ok ({cfg.kind})")
    return 0 if not diags else EXIT_CONFIG


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_validate(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
