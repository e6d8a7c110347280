from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from reapsnap import __version__
from reapsnap.analysis.export import RESULT_COLUMNS, format_csv, result_row
from reapsnap.bench.analyze import ANALYZE_COLUMNS, cmd_analyze
from reapsnap.bench.coldstart import cmd_coldstart
from reapsnap.bench.experiments import build_experiments
from reapsnap.bench.opt_steps import OPT_STEP_COLUMNS, cmd_opt_steps
from reapsnap.bench.results import ResultsWriter
from reapsnap.bench.sweep import SWEEP_COLUMNS, cmd_sweep_concurrency
from reapsnap.bench.workspace import BenchWorkspace
from reapsnap.core.config import Config, load_config, validate_config
from reapsnap.core.errors import ConfigError, ReapError
from reapsnap.core.logging_setup import ContextFilter, setup_logging
from reapsnap.core.runtime import BenchRuntime
from reapsnap.engine.report import RestoreMode
from reapsnap.storage.calibration import DEFAULT_CALIBRATION, load_calibration, write_calibration
from reapsnap.storage.measure import DiskPattern, calibration_from_measurements, measure_real

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the validation status instead of argparse's 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="Path to settings.jsonc")
    parser.add_argument("--out", type=Path, default=None, help="Results directory")
    parser.add_argument("--calibration", type=Path, default=None, help="Storage calibration file")
    parser.add_argument("--format", choices=("csv", "json"), default=None, help="Table output format")
    parser.add_argument("--seed", type=int, default=None, help="Input seed for cold invocations")
    parser.add_argument("--log-level", default=None, help="Console and file log level")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reapsnap", description="REAP snapshot restore simulator and benchmarks")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    snapshot = sub.add_parser("snapshot", help="Snapshot image management")
    snap_sub = snapshot.add_subparsers(dest="snapshot_command", required=True, parser_class=_Parser)
    create = snap_sub.add_parser("create", help="Write the synthetic snapshot image")
    _common(create)
    create.add_argument("--force", action="store_true", help="Rewrite an existing image")

    record = sub.add_parser("record", help="Run the record phase and persist trace + WS file")
    _common(record)
    record.add_argument("--profile", required=True, help="Function preset name")
    record.add_argument("--force", action="store_true", help="Re-record even if artifacts exist")

    coldstart = sub.add_parser("coldstart", help="Repeated cold invocations of one function")
    _common(coldstart)
    coldstart.add_argument("--profile", required=True, help="Function preset name")
    coldstart.add_argument(
        "--mode", choices=[m.value for m in RestoreMode], default=RestoreMode.PREFETCH.value
    )
    coldstart.add_argument("--repeats", type=int, default=None)

    opt = sub.add_parser("opt-steps", help="Four-step optimization ablation")
    _common(opt)
    opt.add_argument("--profile", required=True, help="Function preset name")

    sweep = sub.add_parser("sweep", help="Concurrent cold-start sweep")
    _common(sweep)
    sweep.add_argument("--profile", required=True, help="Function preset name")
    sweep.add_argument("--counts", type=int, nargs="+", default=None, help="Instance counts")
    sweep.add_argument(
        "--mode",
        choices=(RestoreMode.LAZY.value, RestoreMode.PREFETCH.value),
        action="append",
        default=None,
        help="Restrict the sweep to one mode (repeatable)",
    )

    analyze = sub.add_parser("analyze", help="Contiguity, reuse and footprint of traces")
    _common(analyze)
    analyze.add_argument("paths", nargs="*", type=Path, help="Trace or access-sequence files")
    analyze.add_argument("--page-size", type=int, default=None)

    measure = sub.add_parser("measure-disk", help="Time real reads against a file or device")
    _common(measure)
    measure.add_argument("target", type=Path, help="File or block device to read")
    measure.add_argument(
        "--pattern",
        choices=[p.value for p in DiskPattern],
        action="append",
        default=None,
        help="Access pattern (repeatable; default all)",
    )
    measure.add_argument("--parallelism", type=int, default=16)
    measure.add_argument("--emit-calibration", type=Path, default=None)

    suite = sub.add_parser("suite", help="Full evaluation: coldstart over presets, opt-steps, sweep")
    _common(suite)
    return parser


def _apply_overrides(config: Config, args: argparse.Namespace) -> None:
    if args.out is not None:
        config.experiments.out_dir = args.out
    if args.calibration is not None:
        config.storage.calibration_file = args.calibration
    if args.format is not None:
        config.experiments.format = args.format
    if args.seed is not None:
        config.experiments.input_seed = args.seed
    if getattr(args, "repeats", None) is not None:
        config.experiments.repeats = args.repeats
    if args.log_level:
        logging_cfg = dict(config.settings.get("logging") or {})
        logging_cfg["level"] = args.log_level
        config.settings["logging"] = logging_cfg


def _emit(rows: list[dict[str, Any]], columns: Sequence[str], fmt: str) -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(rows, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(format_csv(rows, columns))


def _run_command(args: argparse.Namespace, config: Config, log_context: ContextFilter) -> None:
    fmt = config.experiments.format
    command = args.command

    if command == "analyze":
        page_size = args.page_size or config.image.page_size
        results = cmd_analyze(args.paths, page_size)
        rows = [r.row() for r in results]
        writer = ResultsWriter(config.experiments.out_dir)
        writer.write_table("analyze", rows, ANALYZE_COLUMNS, fmt)
        _emit(rows, ANALYZE_COLUMNS, fmt)
        return

    if command == "measure-disk":
        patterns = args.pattern or [p.value for p in DiskPattern]
        measurements = [
            measure_real(args.target, pattern, parallelism=args.parallelism) for pattern in patterns
        ]
        rows = [
            {
                "pattern": m.pattern.value,
                "request_size": m.request_size,
                "concurrency": m.concurrency,
                "bytes_read": m.bytes_read,
                "mbps": m.mbps,
            }
            for m in measurements
        ]
        _emit(rows, ("pattern", "request_size", "concurrency", "bytes_read", "mbps"), fmt)
        if args.emit_calibration is not None:
            base_file = config.storage.calibration_file
            base = load_calibration(base_file) if base_file else DEFAULT_CALIBRATION
            path = write_calibration(calibration_from_measurements(measurements, base=base), args.emit_calibration)
            logger.info("Wrote calibration %s", path)
        return

    if command == "suite":
        runtime = BenchRuntime(config, build_experiments(config), log_context=log_context)
        statuses = runtime.run()
        failed = [name for name, status in statuses.items() if status.get("last_error")]
        if failed:
            logger.warning("Suite finished with disabled experiments: %s", ", ".join(failed))
        return

    workspace = BenchWorkspace(config)
    writer = ResultsWriter(workspace.out_dir)

    if command == "snapshot":
        image = workspace.create_image(force=args.force)
        sys.stdout.write(f"{image.image_id} {image.directory}\n")
        return

    function = args.profile
    log_context.update(profile=function)

    if command == "record":
        recorded = workspace.record(function, force=args.force)
        writer.write_run(RestoreMode.RECORD.value, function, {"record": recorded.report.to_dict()})
        writer.add(recorded.report)
        writer.flush()
        _emit([result_row(recorded.report)], RESULT_COLUMNS, fmt)
    elif command == "coldstart":
        mode = RestoreMode(args.mode)
        log_context.update(mode=mode.value)
        result = cmd_coldstart(workspace, function, mode, config.experiments.repeats)
        writer.write_run(mode.value, function, result.to_dict())
        for report in result.reports:
            writer.add(report)
        writer.flush()
        _emit([result_row(r) for r in result.reports], RESULT_COLUMNS, fmt)
    elif command == "opt-steps":
        rows = [row.to_dict() for row in cmd_opt_steps(workspace, function)]
        writer.write_table(f"opt_steps_{function}", rows, OPT_STEP_COLUMNS, fmt)
        _emit(rows, OPT_STEP_COLUMNS, fmt)
    elif command == "sweep":
        counts = args.counts or config.experiments.concurrency
        modes = args.mode or (RestoreMode.LAZY.value, RestoreMode.PREFETCH.value)
        curves = cmd_sweep_concurrency(workspace, function, counts, modes)
        rows = [point.to_dict() for points in curves.values() for point in points]
        writer.write_table(f"sweep_{function}", rows, SWEEP_COLUMNS, fmt)
        _emit(rows, SWEEP_COLUMNS, fmt)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"reapsnap: cannot load config: {exc}\n")
        return EXIT_VALIDATION
    _apply_overrides(config, args)

    log_context = setup_logging((config.settings or {}).get("logging", {}))
    log_context.update(command=args.command)

    problems = validate_config(config)
    if problems:
        for problem in problems:
            logger.error("Invalid configuration: %s", problem)
            sys.stderr.write(f"reapsnap: {problem}\n")
        return EXIT_VALIDATION

    try:
        _run_command(args, config, log_context)
    except ConfigError as exc:
        logger.error("%s", exc)
        sys.stderr.write(f"reapsnap: {exc}\n")
        return EXIT_VALIDATION
    except (ReapError, OSError) as exc:
        logger.exception("Command %s failed", args.command)
        sys.stderr.write(f"reapsnap: {exc}\n")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
