"""Command-line driver: ``lhapriori {stats,mine,cohorts,sweep,synth}``.

Every command writes its outputs into ``--out-dir`` atomically and finishes
with a ``manifest.json`` listing each artifact with its SHA-256.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from ._numeric import as_fraction
from .cohorts import EmptyCohortError, compare_cohorts, mine_cohort, outcome_csv
from .rules import MiningConfig, rules_csv
from .sensitivity import DEFAULT_TRACKED, ThresholdGrid, TrackedRule, parse_levels, sweep_grid
from .synthgen import GeneratorSpec, generate_csv
from .transactions import (
    COHORTS_BY_NAME,
    OVERALL,
    STANDARD_COHORTS,
    SchemaError,
    SessionRecord,
    cohort_rates,
    descriptive_stats,
    filter_cohort,
    parse_records,
    stats_csv,
)

log = logging.getLogger("lhapriori")


class CommandError(RuntimeError):
    """Input or runtime failure reported to the user with a non-zero exit."""


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


@dataclass
class RunManifest:
    command: str
    out_dir: Path
    inputs: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    cohorts: list[str] = field(default_factory=list)
    grid: dict | None = None
    seed: int | None = None
    artifacts: dict[str, str] = field(default_factory=dict)

    def emit(self, name: str, text: str) -> None:
        write_atomic(self.out_dir / name, text)
        self.artifacts[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()
        log.info("wrote %s", self.out_dir / name)

    def finish(self) -> None:
        payload = {
            "tool": "lhapriori",
            "version": __version__,
            "command": self.command,
            "inputs": self.inputs,
            "config": self.config,
            "cohorts": self.cohorts,
            "grid": self.grid,
            "seed": self.seed,
            "artifacts": dict(sorted(self.artifacts.items())),
        }
        write_atomic(self.out_dir / "manifest.json", json.dumps(payload, indent=2) + "\n")


def _fraction_arg(low_open: bool = True):
    def convert(text: str):
        try:
            value = as_fraction(text)
        except (ValueError, ZeroDivisionError):
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not (0 < value <= 1 if low_open else value >= 0):
            raise argparse.ArgumentTypeError(
                f"{text} out of range; expected {'(0, 1]' if low_open else '>= 0'}"
            )
        return float(text)
    return convert


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _levels_arg(text: str):
    try:
        levels = parse_levels(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not levels:
        raise argparse.ArgumentTypeError("at least one level required")
    return levels


def _tracked_arg(text: str) -> TrackedRule:
    try:
        return TrackedRule.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def load_records(path: Path) -> list[SessionRecord]:
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise CommandError(f"cannot read input {str(path)!r}: {exc.strerror}") from None
    try:
        result = parse_records(data)
    except (SchemaError, UnicodeDecodeError) as exc:
        raise CommandError(f"{path}: {exc}") from None
    for diag in result.rejects:
        log.warning("%s: %s", path, diag)
    if result.rejects:
        log.warning("%s: rejected %d of %d rows", path, len(result.rejects),
                    len(result.rejects) + len(result.records))
    return result.records


def _config(args) -> MiningConfig:
    return MiningConfig(args.min_support, args.min_confidence, args.min_lift, args.top_k)


def _config_dict(config: MiningConfig) -> dict:
    return {
        "min_support": str(as_fraction(config.min_support)),
        "min_confidence": str(as_fraction(config.min_confidence)),
        "min_lift": str(as_fraction(config.min_lift)),
        "top_k": config.top_k,
    }


def cmd_stats(args) -> None:
    records = load_records(args.input)
    if not records:
        raise CommandError(f"{args.input}: no valid records")
    run = RunManifest("stats", args.out_dir, [str(args.input)], cohorts=[args.cohort])
    if args.cohort == OVERALL.name:
        rows = descriptive_stats(records)
    else:
        spec = COHORTS_BY_NAME[args.cohort]
        rows = [cohort_rates(filter_cohort(records, spec), spec.name)]
    text = stats_csv(rows)
    run.emit("stats.csv", text)
    run.finish()
    sys.stdout.write(text)


def cmd_mine(args) -> None:
    records = load_records(args.input)
    config = _config(args)
    spec = COHORTS_BY_NAME[args.cohort]
    run = RunManifest("mine", args.out_dir, [str(args.input)], _config_dict(config), [spec.name])
    try:
        result = mine_cohort(records, spec, config, workers=args.threads)
    except EmptyCohortError as exc:
        raise CommandError(str(exc)) from None
    run.emit("itemsets.csv", result.itemsets.to_csv())
    run.emit("rules.csv", rules_csv(result.rules))
    run.finish()
    log.info("%s: %d sessions, %d frequent itemsets, %d rules", spec.name,
             result.record_count, len(result.itemsets), len(result.rules))


def cmd_cohorts(args) -> None:
    records = load_records(args.input)
    config = _config(args)
    run = RunManifest("cohorts", args.out_dir, [str(args.input)], _config_dict(config))
    results = {}
    for spec in (OVERALL, *STANDARD_COHORTS):
        try:
            result = mine_cohort(records, spec, config, workers=args.threads)
        except EmptyCohortError as exc:
            log.warning("skipping cohort: %s", exc)
            continue
        results[spec.name] = result
        run.cohorts.append(spec.name)
        run.emit(f"rules_{spec.name}.csv", rules_csv(result.rules))
        run.emit(f"outcomes_{spec.name}.csv", outcome_csv(result))
    if not results:
        raise CommandError(f"{args.input}: no cohort has any records")
    run.emit("stats.csv", stats_csv(descriptive_stats(records)))
    for a, b in (("low", "high"), ("with", "without")):
        if a in results and b in results:
            run.emit(f"compare_{a}_vs_{b}.csv", compare_cohorts(results[a], results[b]).to_csv())
        else:
            log.warning("skipping comparison %s vs %s: a cohort is empty", a, b)
    run.finish()


def cmd_sweep(args) -> None:
    records = load_records(args.input)
    try:
        grid = ThresholdGrid(args.support_levels, args.confidence_levels, args.min_lift)
    except ValueError as exc:
        raise CommandError(f"invalid grid: {exc}") from None
    tracked = args.track or list(DEFAULT_TRACKED)
    names = [args.cohort] if args.cohort != OVERALL.name else [OVERALL.name] + [c.name for c in STANDARD_COHORTS]
    cohorts = []
    for name in names:
        spec = COHORTS_BY_NAME[name]
        if filter_cohort(records, spec):
            cohorts.append(spec)
        else:
            log.warning("skipping cohort %r: no records", name)
    if not cohorts:
        raise CommandError(f"{args.input}: no cohort has any records")
    table = sweep_grid(records, cohorts, grid, tracked, top_k=args.top_k, workers=args.threads)
    run = RunManifest(
        "sweep", args.out_dir, [str(args.input)], cohorts=[c.name for c in cohorts],
        grid={
            "support_levels": [str(s) for s in grid.support_levels],
            "confidence_levels": [str(c) for c in grid.confidence_levels],
            "min_lift": str(grid.min_lift),
            "top_k": args.top_k,
            "tracked": [t.label for t in tracked],
        },
    )
    run.emit("stability.csv", table.to_csv())
    text = table.render_text()
    run.emit("stability.txt", text)
    run.finish()
    sys.stdout.write(text)


def cmd_synth(args) -> None:
    spec = GeneratorSpec(args.seed, args.students_per_cell, args.sessions_per_student)
    csv_text, manifest_text = generate_csv(spec)
    run = RunManifest("synth", args.out_dir, seed=args.seed)
    run.emit(args.name, csv_text)
    run.emit(Path(args.name).stem + ".manifest.json", manifest_text)
    run.finish()
    log.info("generated %d sessions for %d students", spec.session_count,
             4 * spec.students_per_cell)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lhapriori", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="only print warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", type=Path, default=Path("out"))

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", type=Path, required=True, help="session-log CSV")
    data.add_argument("--cohort", choices=sorted(COHORTS_BY_NAME), default="all")
    data.add_argument("--threads", type=_positive_int, default=1,
                      help="worker threads for support counting (output is identical)")

    thresholds = argparse.ArgumentParser(add_help=False)
    thresholds.add_argument("--min-support", type=_fraction_arg(), default=0.20)
    thresholds.add_argument("--min-confidence", type=_fraction_arg(), default=0.60)
    thresholds.add_argument("--min-lift", type=_fraction_arg(low_open=False), default=1.0,
                            help="rules need lift strictly greater than this")
    thresholds.add_argument("--top-k", type=_positive_int, default=30)

    p = sub.add_parser("stats", parents=[common, data], help="indicator rates per cohort")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("mine", parents=[common, data, thresholds], help="itemsets.csv and rules.csv")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("cohorts", parents=[common, data, thresholds],
                       help="mine every standard cohort, compare and split by outcome")
    p.set_defaults(func=cmd_cohorts)

    p = sub.add_parser("sweep", parents=[common, data], help="tracked-rule stability over a threshold grid")
    p.add_argument("--support-levels", type=_levels_arg, default=ThresholdGrid().support_levels)
    p.add_argument("--confidence-levels", type=_levels_arg, default=ThresholdGrid().confidence_levels)
    p.add_argument("--min-lift", type=_fraction_arg(low_open=False), default=1.0)
    p.add_argument("--top-k", type=_positive_int, default=30)
    p.add_argument("--track", type=_tracked_arg, action="append",
                   help="rule to track, e.g. 'Skipped=YES;HintUsed=NO->Status=UNSOLVED' (repeatable)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", parents=[common], help="seeded synthetic session log")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--students-per-cell", type=_positive_int, default=62)
    p.add_argument("--sessions-per-student", type=_positive_int, default=15)
    p.add_argument("--name", default="sessions.csv", help="output CSV file name")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except CommandError as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
