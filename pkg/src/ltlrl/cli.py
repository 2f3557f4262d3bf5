"""Command-line harness.

Subcommands:
  run        train one configuration across its seeds and write CSVs
  sweep      run a method/alpha/scale grid, one subdirectory per combo
  aggregate  rebuild an aggregate CSV from per-seed run CSVs on disk
  validate   cross-check every bundled automaton against its formula
  reproduce  execute the built-in result checklist

All output is written under --out (default: $LTLRL_OUTPUT_DIR or ./results).
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from .automata import cross_validate
from .config import ConfigError, ExperimentConfig, load_config
from .environments import LayoutError, UnknownTask, catalog, make_task
from .harness import (
    aggregate_csv_path,
    aggregate_rows_from_runs,
    config_stem,
    default_output_dir,
    final_mean_and_ci,
    persist_experiment,
    read_run_csv,
    run_experiment,
    write_aggregate_csv,
)
from .rng import named_stream


def _add_common_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--task", help="task family name, e.g. reach-avoid")
    parser.add_argument("--difficulty", help="easy, medium, or hard")
    parser.add_argument("--steps", type=int, help="total environment steps")
    parser.add_argument("--out", type=Path, default=None, help="output directory")


def _build_run_parser(sub) -> None:
    parser = sub.add_parser("run", help="train one configuration")
    parser.add_argument("--config", type=Path, help="JSON config file")
    _add_common_run_flags(parser)
    parser.add_argument("--method", help="exploration method")
    parser.add_argument("--learner", help="qlearning or sarsa")
    parser.add_argument(
        "--seed",
        type=int,
        action="append",
        help="repeatable; replaces the seed list from the config",
    )
    parser.add_argument("--alpha", type=float, help="prior concentration")
    parser.add_argument("--scale", type=float, help="intrinsic reward scale")
    parser.set_defaults(handler=_cmd_run)


def _build_sweep_parser(sub) -> None:
    parser = sub.add_parser("sweep", help="run a method/alpha/scale grid")
    parser.add_argument("--config", type=Path, help="base JSON config for every combo")
    _add_common_run_flags(parser)
    parser.add_argument("--methods", default="drl2,lcer,count,none")
    parser.add_argument("--alphas", default="1000")
    parser.add_argument("--scales", default="0.1")
    parser.set_defaults(handler=_cmd_sweep)


def _build_aggregate_parser(sub) -> None:
    parser = sub.add_parser(
        "aggregate", help="rebuild an aggregate CSV from per-seed run CSVs"
    )
    parser.add_argument("--task", required=True)
    parser.add_argument("--difficulty", required=True)
    parser.add_argument("--method", required=True)
    parser.add_argument("--learner", default="qlearning")
    parser.add_argument("--out", type=Path, default=None, help="directory holding the CSVs")
    parser.set_defaults(handler=_cmd_aggregate)


def _build_validate_parser(sub) -> None:
    parser = sub.add_parser(
        "validate", help="cross-check bundled automata against their formulas"
    )
    parser.add_argument("--samples", type=int, default=500, help="words per pair")
    parser.set_defaults(handler=_cmd_validate)


def _build_reproduce_parser(sub) -> None:
    parser = sub.add_parser("reproduce", help="run the built-in result checklist")
    parser.set_defaults(handler=_cmd_reproduce)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltlrl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _build_run_parser(sub)
    _build_sweep_parser(sub)
    _build_aggregate_parser(sub)
    _build_validate_parser(sub)
    _build_reproduce_parser(sub)
    return parser


def _outdir(args) -> Path:
    return args.out if args.out is not None else default_output_dir()


def _merge_run_config(args) -> ExperimentConfig:
    doc = load_config(args.config).to_dict() if args.config else {}
    for field, value in (
        ("task", args.task),
        ("difficulty", args.difficulty),
        ("method", args.method),
        ("learner", args.learner),
        ("total_steps", args.steps),
        ("alpha", args.alpha),
        ("intrinsic_scale", args.scale),
    ):
        if value is not None:
            doc[field] = value
    if args.seed:
        doc["seeds"] = tuple(args.seed)
    if "task" not in doc or "difficulty" not in doc:
        raise ConfigError("a task and difficulty are required (flags or --config)")
    return ExperimentConfig.from_dict(doc)


def _run_and_persist(config: ExperimentConfig, outdir: Path, out) -> None:
    results = run_experiment(config)
    written = persist_experiment(outdir, config, results)
    for path in written:
        out(str(path))
    if len(results) >= 2:
        mean, low, high = final_mean_and_ci(results)
        out(
            f"{config_stem(config)}: final return {mean:.3f} "
            f"[{low:.3f}, {high:.3f}] over {len(results)} seeds"
        )


def _cmd_run(args, out) -> int:
    config = _merge_run_config(args)
    _run_and_persist(config, _outdir(args), out)
    return 0


def _split_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"{flag}: {exc}") from exc


def _cmd_sweep(args, out) -> int:
    base_doc = load_config(args.config).to_dict() if args.config else {}
    if args.task:
        base_doc["task"] = args.task
    if args.difficulty:
        base_doc["difficulty"] = args.difficulty
    if args.steps is not None:
        base_doc["total_steps"] = args.steps
    if "task" not in base_doc or "difficulty" not in base_doc:
        raise ConfigError("sweep requires --task and --difficulty (flags or --config)")
    methods = [part.strip() for part in args.methods.split(",") if part.strip()]
    alphas = _split_floats(args.alphas, "--alphas")
    scales = _split_floats(args.scales, "--scales")
    base = _outdir(args)
    for method in methods:
        for alpha in alphas:
            for scale in scales:
                doc = dict(base_doc)
                doc["method"] = method
                doc["alpha"] = alpha
                doc["intrinsic_scale"] = scale
                config = ExperimentConfig.from_dict(doc)
                outdir = base / f"alpha{alpha:g}_scale{scale:g}"
                _run_and_persist(config, outdir, out)
    return 0


def _seed_of(path: Path, stem: str) -> int:
    match = re.fullmatch(re.escape(stem) + r"_seed(\d+)", path.stem)
    return int(match.group(1)) if match else -1


def _cmd_aggregate(args, out) -> int:
    config = ExperimentConfig(
        task=args.task,
        difficulty=args.difficulty,
        method=args.method,
        learner=args.learner,
    ).validate()
    outdir = _outdir(args)
    stem = config_stem(config)
    paths = sorted(
        (p for p in outdir.glob(f"{stem}_seed*.csv") if _seed_of(p, stem) >= 0),
        key=lambda p: _seed_of(p, stem),
    )
    if len(paths) < 2:
        raise ConfigError(
            f"need at least two run CSVs matching {stem}_seed*.csv in {outdir}"
        )
    rows = aggregate_rows_from_runs([read_run_csv(p) for p in paths])
    written = write_aggregate_csv(aggregate_csv_path(outdir, config), rows, config)
    out(f"{written} ({len(paths)} seeds)")
    return 0


def _cmd_validate(args, out) -> int:
    failures = 0
    for name, difficulty in catalog():
        task = make_task(name, difficulty)
        report = cross_validate(
            task.automaton,
            task.formula,
            args.samples,
            named_stream(0, f"validate-{name}-{difficulty}"),
        )
        status = "ok" if report.ok else f"{report.disagreements} disagreements"
        out(f"{name}/{difficulty}: {task.automaton_file} vs {task.formula_text}: {status}")
        failures += 0 if report.ok else 1
    return 1 if failures else 0


def _cmd_reproduce(args, out) -> int:
    from . import acceptance

    results = acceptance.run_all(report=out)
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args, print)
    except (ConfigError, UnknownTask, LayoutError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
