"""
Command-line surface.

Subcommands:
- gen-synthetic: item features, theta and a constraint summary for a seeded instance
- run: execute an experiment from a config file plus flag overrides
- report: aggregate replicate CSVs into mean/std tables
- plot: render cumulative-mean curves to SVG
- validate-config: check a config file without running
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from config.settings import ExperimentSettings, load_settings
from core.diversity import build_constraints, tau_for_count
from core.errors import CmabError
from core.types import FeatureMatrix
from environments.synthetic import FeedbackForm, generate_synthetic_spec
from harness.export import read_series_csv, render_plot
from harness.report import summarize_runs
from harness.runner import SERIES_FILE, run_experiment

logger = logging.getLogger(__name__)


def generated_seed() -> int:
    return int(np.random.SeedSequence().generate_state(1)[0] >> 1)


def _resolve_seed(args: argparse.Namespace, config_seed: int | None = None) -> int:
    if args.seed is not None:
        return args.seed
    if config_seed is not None:
        return config_seed
    seed = generated_seed()
    print(f"seed: {seed}")
    return seed


# ============================================================================
# COMMANDS
# ============================================================================


def cmd_gen_synthetic(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    rng = np.random.default_rng(seed)
    features = FeatureMatrix(rng.uniform(0.0, 1.0, size=(args.L, args.d)))
    spec = generate_synthetic_spec(args.L, args.form, rng)
    tau = tau_for_count(features, args.target_constraints) if args.target_constraints is not None else args.tau
    constraints = build_constraints(features, tau)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(features.rows).to_csv(out / "features.csv", header=False, index=False, float_format="%.10g")
    pd.DataFrame(spec.theta).to_csv(out / "theta.csv", header=False, index=False, float_format="%.10g")
    summary = {
        "L": args.L,
        "d": args.d,
        "K": args.K,
        "form": spec.form.value,
        "tau": f"{tau:.10g}",
        "constraints": constraints.M,
        "pairs": args.L * (args.L - 1) // 2,
        "seed": seed,
    }
    (out / "constraints_summary.txt").write_text("".join(f"{k} = {v}\n" for k, v in summary.items()), encoding="utf-8")
    print(f"constraints: {constraints.M} of {summary['pairs']} pairs (tau={tau:.6g}) -> {out}")
    return 0


def _run_overrides(args: argparse.Namespace) -> dict:
    return {
        "seed": args.seed,
        "out_dir": args.out,
        "replicates": args.replicates,
        "jobs": args.jobs,
        "mode": args.mode,
        "master": args.master,
        "T": args.T,
    }


def cmd_run(args: argparse.Namespace) -> int:
    settings = load_settings(args.config, _run_overrides(args))
    if args.seed is None and "seed" not in settings.model_fields_set:
        settings = load_settings(args.config, {**_run_overrides(args), "seed": _resolve_seed(args)})
    logger.info(f"🚀 Running {settings.replicates} replicate(s): {settings.summary()}")
    results = run_experiment(settings)
    for r in results:
        note = " (stopped at end of log)" if r.stopped_early else ""
        optimum = f", ground truth {r.ground_truth:.4f}" if r.ground_truth is not None else ""
        print(
            f"replicate {r.index}: {len(r.series)} rounds, mean reward {np.mean(r.series.rewards):.4f}, "
            f"mean violation {np.mean(r.series.violations):.4f}{optimum}{note} -> {r.series_path}"
        )
    return 0


def _series_paths(paths: Sequence[str]) -> list[Path]:
    found = []
    for p in map(Path, paths):
        if p.is_dir():
            found.extend(sorted(p.glob(f"**/{SERIES_FILE}")))
        else:
            found.append(p)
    if not found:
        raise CmabError(f"No series CSV found under {', '.join(paths)}")
    return found


def cmd_report(args: argparse.Namespace) -> int:
    table = summarize_runs(_series_paths(args.paths), last_window=args.last_window)
    if args.out:
        table.to_csv(args.out, index=False, float_format="%.6g")
    print(table.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    paths = _series_paths(args.paths)
    labels = args.labels.split(",") if args.labels else [str(p.parent.name or p.stem) for p in paths]
    if len(labels) != len(paths):
        raise CmabError(f"{len(labels)} labels given for {len(paths)} series")
    render_plot([read_series_csv(p) for p in paths], labels, args.out)
    print(f"plot -> {args.out}")
    return 0


def cmd_validate_config(args: argparse.Namespace) -> int:
    settings: ExperimentSettings = load_settings(args.config)
    changed = settings.summary()
    print(f"ok: {args.config} ({len(changed)} non-default keys)")
    return 0


# ============================================================================
# PARSER
# ============================================================================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmab", description="Master-slave top-K combinatorial bandits")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-synthetic", help="generate a synthetic instance")
    gen.add_argument("--L", type=int, default=300)
    gen.add_argument("--d", type=int, default=10)
    gen.add_argument("--K", type=int, default=20)
    gen.add_argument("--tau", type=float, default=0.5)
    gen.add_argument("--target-constraints", type=int, default=None)
    gen.add_argument("--form", choices=[f.value for f in FeedbackForm], default="linear")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", default="synthetic")
    gen.set_defaults(handler=cmd_gen_synthetic)

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--config", default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None)
    run.add_argument("--replicates", type=int, default=None)
    run.add_argument("--jobs", type=int, default=None)
    run.add_argument("--mode", default=None, help="master-slave | standalone:<sampler>")
    run.add_argument("--master", choices=["stationary", "discounted"], default=None)
    run.add_argument("--T", type=int, default=None)
    run.set_defaults(handler=cmd_run)

    report = sub.add_parser("report", help="aggregate replicate CSVs")
    report.add_argument("paths", nargs="+")
    report.add_argument("--last-window", type=int, default=200)
    report.add_argument("--out", default=None)
    report.set_defaults(handler=cmd_report)

    plot = sub.add_parser("plot", help="render curves to SVG")
    plot.add_argument("paths", nargs="+")
    plot.add_argument("--out", required=True)
    plot.add_argument("--labels", default=None)
    plot.set_defaults(handler=cmd_plot)

    validate = sub.add_parser("validate-config", help="check a config file")
    validate.add_argument("--config", required=True)
    validate.set_defaults(handler=cmd_validate_config)
    return parser


def dispatch(argv: Sequence[str]) -> int:
    """Parse and run one subcommand; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return int(e.code or 0)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        return args.handler(args)
    except (CmabError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
