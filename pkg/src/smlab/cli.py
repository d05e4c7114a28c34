"""
CLI entrypoint for smlab.

Runs the registered experiments from YAML configs and lists the registry.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from . import __version__
from .config import COMMANDS, ExperimentConfig, env_defaults, load_experiment_config
from .errors import ConfigError, NumericError, SmlabError
from .experiments import EXPERIMENTS, list_experiments, run
from .reports import ExperimentReport

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger("smlab")


def setup_logging(level: Optional[str] = None) -> None:
    """Configure root logging from SMLAB_LOG_LEVEL (default WARNING)."""
    level = (level or env_defaults()["log_level"]).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _format_estimate(name: str, entry: Dict[str, Any]) -> str:
    text = f"  {name}: {entry['value']:.6g}"
    if "stderr" in entry:
        text += f" ± {entry['stderr']:.3g}"
    if "target" in entry:
        text += f" (target {entry['target']:.6g})"
    return text


def print_summary(report: ExperimentReport, out_dir: str) -> None:
    """Print the run summary to console."""
    print("\n" + "=" * 60)
    print(f"{report.command.upper()} SUMMARY")
    print("=" * 60)

    print(f"\nConfig hash: {report.config_hash}")
    print(f"Seed: {report.seed}  Threads: {report.threads}  Version: {report.tool_version}")
    print(f"Wall time: {report.wall_time:.1f}s")

    if report.estimates:
        print("\n" + "-" * 60)
        print("ESTIMATES:")
        print("-" * 60)
        for name, entry in report.estimates.items():
            print(_format_estimate(name, entry))

    print("\n" + "-" * 60)
    print("VERDICTS:")
    print("-" * 60)
    for name, passed in report.verdicts.items():
        print(f"{'[OK]' if passed else '[FAIL]'} {name}")

    for note in report.notes:
        print(f"[WARN] {note}")

    print()
    for artifact in report.artifacts:
        print(f"[EXPORT] {out_dir}/{artifact}")
    print(f"[REPORT] {out_dir}/report.json")

    passed = sum(1 for v in report.verdicts.values() if v)
    print(f"\nVerdicts passed: {passed}/{len(report.verdicts)}")
    print("=" * 60)


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Config file (or built-in defaults) with command-line overrides applied.

    Raises:
        ConfigError: If the file is missing or invalid
    """
    if args.config:
        config = load_experiment_config(args.config, command=args.command)
    else:
        config = ExperimentConfig.from_dict({"command": args.command})
    return config.with_overrides(seed=args.seed, threads=args.threads, out_dir=args.out)


def run_command(args: argparse.Namespace) -> int:
    """
    Run one experiment.

    Returns:
        0 if every verdict passed, 1 on a failed verdict, 2 on a config
        error, 3 on a numerical failure
    """
    try:
        config = build_config(args)
        if not args.json:
            print(f"[INFO] Running {config.command} (seed {config.seed}, threads {config.threads})")
            print(f"[INFO] Output directory: {config.out_dir}")
        report = run(config)

        if args.json:
            print(json.dumps(report.to_dict(), indent=2, ensure_ascii=False))
        else:
            print_summary(report, config.out_dir)
        return report.exit_code

    except KeyboardInterrupt:
        print("\n\n[INTERRUPTED] Run cancelled by user")
        return 130

    except ConfigError as e:
        print(f"[ERROR] Configuration error in {args.command}: {e}", file=sys.stderr)
        return e.exit_code

    except NumericError as e:
        print(f"[ERROR] Numerical failure in {args.command} ({type(e).__name__}): {e}", file=sys.stderr)
        return e.exit_code

    except SmlabError as e:
        print(f"[ERROR] {args.command} failed: {e}", file=sys.stderr)
        return e.exit_code


def list_command(args: argparse.Namespace) -> int:
    """Print the experiment registry."""
    entries = list_experiments()
    if args.json:
        print(json.dumps({"version": __version__, "experiments": entries}, indent=2, ensure_ascii=False))
        return 0

    print("\n" + "=" * 60)
    print("REGISTERED EXPERIMENTS")
    print("=" * 60)
    for entry in entries:
        print(f"\n{entry['name']}: {entry['description']}")
        for table, columns in entry["tables"].items():
            print(f"  {table}: {columns}")
    print(f"\nTotal: {len(entries)}")
    return 0


def _columns_epilog(name: str) -> str:
    tables = EXPERIMENTS[name].tables
    lines = ["CSV columns:"]
    lines += [f"  {table}: {columns}" for table, columns in tables.items()]
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smlab",
        description="smlab - Stein/Malliavin numerical laboratory",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # List the registered experiments
  smlab list

  # Reference-law consistency with built-in defaults
  smlab catalog --out data/runs/catalog

  # fBm moment ladder from a config, four threads, JSON to stdout
  smlab fbm --config config/fbm.yaml --out data/runs/fbm --threads 4 --json

Exit codes:
  0  all verdicts passed
  1  a verdict failed
  2  configuration error
  3  numerical failure

Environment Variables:
  SMLAB_LOG_LEVEL    Logging level (default: WARNING)
  SMLAB_OUT_DIR      Output directory when neither --out nor out_dir is given (default: data/runs)
  SMLAB_THREADS      Worker threads when neither --threads nor threads is given (default: 1)
        """,
    )
    parser.add_argument("--version", action="version", version=f"smlab {__version__}")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    list_parser = subparsers.add_parser("list", help="List the registered experiments")
    list_parser.add_argument("--json", action="store_true", help="Machine-readable registry")

    for name in COMMANDS:
        sub = subparsers.add_parser(
            name,
            help=EXPERIMENTS[name].description,
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog=_columns_epilog(name),
        )
        sub.add_argument(
            "--config",
            type=str,
            help=f"Path to the experiment YAML (default: built-in {name} defaults)",
        )
        sub.add_argument(
            "--out",
            type=str,
            help="Output directory (default: out_dir from config, then SMLAB_OUT_DIR)",
        )
        sub.add_argument("--seed", type=int, help="Override the config seed")
        sub.add_argument("--threads", type=int, help="Override the worker thread count")
        sub.add_argument("--json", action="store_true", help="Print report.json to stdout instead of the summary")

    return parser


def main(argv: Optional[list] = None) -> int:
    """Main CLI entrypoint."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 1

    setup_logging()

    if args.command == "list":
        return list_command(args)
    elif args.command in COMMANDS:
        return run_command(args)
    else:
        print(f"[ERROR] Unknown command: {args.command}")
        parser.print_help()
        return 1


if __name__ == "__main__":
    sys.exit(main())
