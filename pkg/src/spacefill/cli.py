"""Command-line interface.

Subcommands::

    spacefill design    --config CFG [--variant I] [--run I] [--seed S] [--out DIR]
    spacefill mc        --config CFG [--runs N] [--seed S] [--out DIR] [--jobs J]
    spacefill eval      --config CFG --data FILE
    spacefill gradcheck --config CFG [--samples N] [--seed S]
    spacefill baseline  --config CFG [--amplitude A]

``--config`` takes a YAML path or the name of a bundled preset
(``lti_fig1``, ``msd_table1``).  Exit codes: 0 on success, 1 on
configuration or dataset errors, 2 when every requested run diverged.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DatasetParseError, EmptyDatasetError
from .experiments import (
    ExperimentConfig,
    _execute_run,
    evaluate_dataset,
    report_to_mapping,
    run_experiment,
    schroeder_baseline,
)
from .optimize import gradient_check

__all__ = ["main"]


def _preset_names() -> list[str]:
    root = resources.files("spacefill") / "presets"
    return sorted(p.name[: -len(".yaml")] for p in root.iterdir() if p.name.endswith(".yaml"))


def _load_config(args) -> ExperimentConfig:
    ref = args.config
    path = Path(ref)
    if not path.exists():
        candidate = resources.files("spacefill") / "presets" / f"{ref}.yaml"
        if candidate.is_file():
            path = candidate
        else:
            raise FileNotFoundError(
                f"no config file {ref!r} and no preset of that name "
                f"(presets: {', '.join(_preset_names())})"
            )
    cfg = ExperimentConfig.from_yaml(path)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "runs", None) is not None:
        overrides["runs"] = args.runs
    if getattr(args, "out", None) is not None:
        overrides["output_dir"] = args.out
    return cfg.with_overrides(**overrides) if overrides else cfg


def _cmd_design(args) -> int:
    cfg = _load_config(args)
    if not 0 <= args.variant < len(cfg.anchor_variants()):
        raise ValueError(f"variant index {args.variant} out of range")
    record = _execute_run(cfg.to_mapping(), args.variant, args.run)
    payload = {
        "status": record.status,
        "seed": record.seed,
        "iterations": record.iterations,
        "initial_cost": record.initial_cost,
        "final_cost": record.final_cost,
        "initial_rho": record.initial_rho,
        "final_rho": record.final_rho,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 2 if record.status == "diverged" else 0


def _cmd_mc(args) -> int:
    cfg = _load_config(args)
    report = run_experiment(cfg, jobs=args.jobs)
    for variant in report.variants:
        agg = variant.aggregates
        line = "M=%d epsilon=%.4g runs=%d diverged=%d" % (
            variant.n_anchors, variant.epsilon, agg["n_runs"], agg["n_diverged"]
        )
        if "median_final_rho" in agg:
            line += " median_rho=%.6g mean_rho=%.6g" % (
                agg["median_final_rho"], agg["mean_final_rho"]
            )
        if variant.advisory:
            line += f"  [{variant.advisory}]"
        print(line)
    if cfg.output_dir:
        print(f"report written to {Path(cfg.output_dir) / 'report.json'}")
    if report.all_diverged:
        print("every run diverged", file=sys.stderr)
        return 2
    return 0


def _cmd_eval(args) -> int:
    cfg = _load_config(args)
    result = evaluate_dataset(
        args.data, cfg.region(), cfg.metric(), cfg.eval_points_per_dim
    )
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def _cmd_gradcheck(args) -> int:
    cfg = _load_config(args)
    anchors = cfg.build_anchors(cfg.anchor_variants()[0])
    problem = cfg.build_problem(anchors)
    rng = np.random.default_rng(cfg.seed if args.seed is None else args.seed)
    worst = 0.0
    for i in range(args.samples):
        theta = problem.signal.sample_initial_theta(rng)
        err = gradient_check(theta, problem)
        worst = max(worst, err)
        print(f"sample {i}: relative error {err:.3e}")
    print(f"max relative error over {args.samples} samples: {worst:.3e}")
    return 0


def _cmd_baseline(args) -> int:
    cfg = _load_config(args)
    result = schroeder_baseline(cfg, amplitude=args.amplitude)
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spacefill",
        description="Space-filling input design for dynamical systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, out=True):
        p.add_argument("--config", required=True, help="YAML config path or preset name")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="override the master seed")
        if out:
            p.add_argument("--out", default=None, help="override the output directory")

    p = sub.add_parser("design", help="run a single design optimization")
    common(p)
    p.add_argument("--variant", type=int, default=0, help="anchor-grid variant index")
    p.add_argument("--run", type=int, default=0, help="run index (selects the seed)")
    p.set_defaults(handler=_cmd_design)

    p = sub.add_parser("mc", help="run the Monte-Carlo experiment batch")
    common(p)
    p.add_argument("--runs", type=int, default=None, help="override the run count")
    p.add_argument("--jobs", type=int, default=1, help="concurrent worker processes")
    p.set_defaults(handler=_cmd_mc)

    p = sub.add_parser("eval", help="filling distance of a CSV dataset")
    common(p, seed=False, out=False)
    p.add_argument("--data", required=True, help="CSV file of joint points")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("gradcheck", help="compare analytic and numeric gradients")
    common(p, out=False)
    p.add_argument("--samples", type=int, default=20, help="number of random parameter draws")
    p.set_defaults(handler=_cmd_gradcheck)

    p = sub.add_parser("baseline", help="Schroeder-phase multisine reference")
    common(p, seed=False, out=False)
    p.add_argument("--amplitude", type=float, default=None, help="shared amplitude override")
    p.set_defaults(handler=_cmd_baseline)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (
        ConfigurationError,
        DatasetParseError,
        EmptyDatasetError,
        FileNotFoundError,
        NotADirectoryError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
