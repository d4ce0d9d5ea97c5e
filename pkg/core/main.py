import argparse
import logging
import os
import sys

from rich.console import Console
from rich.table import Table

from core.manifest import load_manifest
from core.problem_generator import GENERATOR_KINDS, GeneratorSpec, write_sequence
from core.report_generator import emit_report, summary_table
from core.sequence_runner import SequenceRunner
from core.verification import verify_manifest
from utilities.config_loader import DEBUG_CHECKS_ENV, ConfigLoader
from utilities.error_handler import ErrorHandler, RecyklosError
from utilities.file_manager import FileManager
from utilities.logger import setup_logging

logger = logging.getLogger("recyklos")

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_ERROR = 2


def build_parser():
    parser = argparse.ArgumentParser(prog="recyklos", description="Recycled Krylov solvers for sequences of systems")
    parser.add_argument("--config", default="config/config.json", help="library defaults (JSON)")
    parser.add_argument("--log-level", default=None, help="overrides logging.level from the config")
    parser.add_argument("--quiet", action="store_true", help="no console logging or progress bar")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve every system of a manifest")
    solve.add_argument("--manifest", required=True)
    solve.add_argument("--out", required=True, help="JSON report path")
    solve.add_argument("--csv", default=None, help="optional CSV report path")
    solve.add_argument("--no-timing", action="store_true", help="write wall_ms = 0 for reproducible reports")
    solve.add_argument("--debug-checks", action="store_true", help=f"same as {DEBUG_CHECKS_ENV}=1")

    gen = sub.add_parser("gen", help="generate a sequence of nearby systems")
    gen.add_argument("--kind", choices=GENERATOR_KINDS, default="laplacian2d")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--perturb", type=float, default=0.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--solver", default="rcg", help="solver written into the generated manifest")
    gen.add_argument("--k", type=int, default=10, help="Ritz recycle dimension written into the manifest")

    verify = sub.add_parser("verify", help="run the invariant suite on a manifest")
    verify.add_argument("--manifest", required=True)
    verify.add_argument("--steps", type=int, default=20)
    verify.add_argument("--k", type=int, default=4)
    verify.add_argument("--out", default=None, help="optional JSON file for the check results")
    return parser


def run_solve(args, config, console):
    manifest = load_manifest(args.manifest, config=config)
    runner = SequenceRunner(manifest, config=config, timing=not args.no_timing, progress=not args.quiet,
                            error_handler=ErrorHandler(config["logging"]["log_dir"]))
    records = runner.run()
    emit_report(records, "json", args.out)
    if args.csv:
        emit_report(records, "csv", args.csv)
    console.print(summary_table(records, title=f"{manifest.solver.name} on {args.manifest}"))
    total = sum(rec.matvecs for rec in records)
    console.print(f"Total matvecs: {total}")
    return EXIT_OK if records and all(rec.converged for rec in records) else EXIT_NOT_CONVERGED


def run_gen(args, console):
    spec = GeneratorSpec(kind=args.kind, n=args.n, count=args.count, perturbation=args.perturb, seed=args.seed)
    path = write_sequence(spec, args.out, solver=args.solver, selector={"kind": "Ritz", "k": args.k})
    console.print(f"✅ Wrote {spec.count} systems and {path}")
    return EXIT_OK


def run_verify(args, config, console):
    manifest = load_manifest(args.manifest, config=config)
    results = verify_manifest(manifest, steps=args.steps, k=args.k, config=config)
    table = Table(title=f"verify {args.manifest}")
    for column in ("system", "check", "value", "threshold", "result"):
        table.add_column(column)
    for r in results:
        table.add_row(str(r.system), r.name, f"{r.value:.2e}", f"{r.threshold:.0e}",
                      "[green]pass[/green]" if r.passed else "[red]FAIL[/red]")
    console.print(table)
    if args.out:
        FileManager.save_json(args.out, [r.to_dict() for r in results])
    return EXIT_OK if results and all(r.passed for r in results) else EXIT_NOT_CONVERGED


def main(argv=None):
    """ Entry point of the recyklos command line. :return: process exit code. """
    args = build_parser().parse_args(argv)
    loader = ConfigLoader(args.config)
    config = loader.load_config()
    level = args.log_level or config["logging"]["level"]
    setup_logging(config["logging"]["log_dir"], level, console=not args.quiet)
    console = Console(quiet=args.quiet)
    if getattr(args, "debug_checks", False):
        os.environ[DEBUG_CHECKS_ENV] = "1"

    try:
        if args.command == "solve":
            return run_solve(args, config, console)
        if args.command == "gen":
            return run_gen(args, console)
        return run_verify(args, config, console)
    except RecyklosError as e:
        logger.error("❌ %s: %s", type(e).__name__, e)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
