"""Command-line front end: ``boxroute solve`` and ``boxroute validate``.

Exit codes of ``solve``: 0 proven optimal, 1 time limit with an
incumbent, 2 parse/validation error, 3 LP-oracle failure, 4 no
incumbent (time limit before any solution, or proven infeasible).
``validate`` exits 0 on a clean solution, 1 with violations, 2 on
parse errors.

Every config flag can also be set through an environment variable with
the ``BOXROUTE_`` prefix (e.g. ``BOXROUTE_TIME_LIMIT=60``); explicit
flags win.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .engine import BnCConfig, LpOracleError, solve
from .instance import Instance, ParseError, ValidationError, parse_benchmark, parse_canonical
from .report import (
    VARIANT_LABELS,
    read_solution,
    validate_solution,
    variant_from_label,
    write_solution,
)

_ENV_PREFIX = "BOXROUTE_"


def _env_default(name: str, fallback):
    raw = os.environ.get(_ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return fallback
    kind = type(fallback) if fallback is not None else str
    if kind is bool:
        return raw.lower() in ("1", "true", "on", "yes")
    return kind(raw)


def load_instance(path: str) -> Instance:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return parse_canonical(text)
    return parse_benchmark(text)


def _apply_overrides(config: BnCConfig, pairs) -> BnCConfig:
    pipeline = config.pipeline
    heuristic = pipeline.heuristic
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        key = key.strip().replace("-", "_")
        if hasattr(heuristic, key):
            heuristic = replace(heuristic, **{key: int(value)})
        elif hasattr(pipeline, key):
            field_type = type(getattr(pipeline, key))
            pipeline = replace(pipeline, **{key: field_type(value)})
        elif hasattr(config, key):
            field_type = type(getattr(config, key))
            config = replace(config, **{key: field_type(value)})
        else:
            raise ValueError(f"unknown config key {key!r}")
    pipeline = replace(pipeline, heuristic=heuristic)
    return replace(config, pipeline=pipeline)


def cmd_solve(args) -> int:
    try:
        instance = load_instance(args.instance)
        variant = variant_from_label(args.variant, args.support_ratio)
    except (OSError, ParseError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    config = BnCConfig(
        mode=args.mode,
        time_limit=args.time_limit,
        threads=args.threads,
        seed=args.seed,
        memo=args.memo == "on",
    )
    try:
        config = _apply_overrides(config, args.set or [])
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        report = solve(instance, variant, config, variant_label=args.variant)
    except LpOracleError as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return 3

    out_path = args.output or f"{Path(args.instance).stem}.{args.variant}.solution.json"
    Path(out_path).write_text(write_solution(report, instance))

    s = report.stats
    obj = "-" if report.objective is None else f"{report.objective:.3f}"
    gap = "-" if report.gap is None else f"{100 * report.gap:.3f}%"
    print(
        f"{instance.name} variant={args.variant} status={report.status} "
        f"obj={obj} LB={report.lower_bound:.3f} gap={gap} "
        f"t={s.get('t_total', 0.0):.1f}s N={s.get('nodes', 0)} "
        f"t_int={s.get('t_int', 0.0):.1f}s t_frac={s.get('t_frac', 0.0):.1f}s "
        f"t_sp={s.get('t_sp', 0.0):.1f}s"
    )
    if report.status == "optimal":
        return 0
    if report.objective is not None:
        return 1
    return 4


def cmd_validate(args) -> int:
    try:
        instance = load_instance(args.instance)
        doc = read_solution(Path(args.solution).read_text())
    except (OSError, ParseError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    problems = validate_solution(instance, doc, support_ratio=args.support_ratio)
    if problems:
        for p in problems:
            print(f"violation: {p}")
        return 1
    print(f"{instance.name}: solution is valid ({len(doc.get('routes', []))} routes)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boxroute",
        description="Branch-and-cut for vehicle routing with 3D loading constraints",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve an instance")
    ps.add_argument("--instance", required=True, help="benchmark text or canonical JSON file")
    ps.add_argument(
        "--variant",
        default=_env_default("variant", "all"),
        choices=VARIANT_LABELS,
    )
    ps.add_argument("--mode", default=_env_default("mode", "complete"), choices=["complete", "basic"])
    ps.add_argument("--time-limit", type=float, default=_env_default("time_limit", 28800.0))
    ps.add_argument("--seed", type=int, default=_env_default("seed", 0))
    ps.add_argument("--threads", type=int, default=_env_default("threads", 8))
    ps.add_argument("--support-ratio", type=float, default=_env_default("support_ratio", 0.75))
    ps.add_argument("--memo", default=_env_default("memo", "on"), choices=["on", "off"])
    ps.add_argument("--output", default=_env_default("output", None))
    ps.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override (repeatable)")
    ps.set_defaults(func=cmd_solve)

    pv = sub.add_parser("validate", help="validate a solution file against its instance")
    pv.add_argument("--instance", required=True)
    pv.add_argument("--solution", required=True)
    pv.add_argument(
        "--support-ratio",
        type=float,
        default=None,
        help="override the ratio recorded in the solution file",
    )
    pv.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
