"""Configuration-driven experiment harness.

An experiment is described by a YAML mapping (system, signal family, region,
metric, anchors, kernel, optimizer, horizon, run count, seed).  The harness
repeats the design optimization over Monte-Carlo draws of the initial signal
parameters for each anchor-grid variant, evaluates the filling distance
before and after, and emits a JSON report plus CSV artifacts for plotting.

Reproducibility contract: every run derives its generator from the master
seed and its (variant, run) position, so runs are independent of each other
and of the run count, and a rerun with the same config produces a
byte-identical ``report.json``.  Wall-clock times are therefore kept out of
the report and written to a separate ``timings.csv``.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .design import DesignProblem, design_cost
from .dynamics import (
    MsdParams,
    lti_from_continuous,
    msd_system,
    reachability_advisory,
    rollout,
    trajectory_to_csv,
)
from .errors import ConfigurationError, TrajectoryDivergedError
from .gp import AnchorSet, KernelConfig, default_jitter
from .optimize import OptimizerConfig, optimize, trace_to_csv
from .regions import (
    MetricWeight,
    RegionOfInterest,
    filling_distance,
    largest_empty_ball,
    points_from_csv,
    points_to_csv,
    uniform_anchor_grid,
)
from .signals import (
    FreeFormSignal,
    MultisineSignal,
    PiecewiseConstantSignal,
    schroeder_multisine,
)

__all__ = [
    "ExperimentConfig",
    "RunRecord",
    "VariantResult",
    "ExperimentReport",
    "run_experiment",
    "report_to_mapping",
    "report_to_json",
    "evaluate_dataset",
    "schroeder_baseline",
]

_TOP_KEYS = {
    "name",
    "seed",
    "runs",
    "horizon",
    "output_dir",
    "coverage_horizon",
    "system",
    "signal",
    "initial_state",
    "initial_input",
    "joint_coordinates",
    "region",
    "metric",
    "anchors",
    "evaluation",
    "kernel",
    "optimizer",
}

_OPTIMIZER_KEYS = (
    "step_policy",
    "alpha",
    "alpha0",
    "shrink",
    "armijo_c",
    "stop_threshold",
    "max_iterations",
    "gradient_method",
    "seed",
    "max_backtracks",
    "growth",
    "plateau_iterations",
    "plateau_rtol",
)


def _num(value, name, problems, kind=float, minimum=None, positive=False, allow_none=False):
    if value is None:
        if allow_none:
            return None
        problems.append(f"{name} is required")
        return None
    try:
        out = kind(value)
    except (TypeError, ValueError):
        problems.append(f"{name} must be a {kind.__name__}, got {value!r}")
        return None
    if positive and not out > 0:
        problems.append(f"{name} must be positive, got {out}")
        return None
    if minimum is not None and out < minimum:
        problems.append(f"{name} must be at least {minimum}, got {out}")
        return None
    return out


def _vector(value, name, problems, length=None):
    try:
        arr = [float(v) for v in value]
    except (TypeError, ValueError):
        problems.append(f"{name} must be a list of numbers, got {value!r}")
        return None
    if length is not None and len(arr) != length:
        problems.append(f"{name} must have length {length}, got {len(arr)}")
        return None
    return arr


def _matrix(value, name, problems):
    try:
        rows = [[float(v) for v in row] for row in value]
    except (TypeError, ValueError):
        problems.append(f"{name} must be a matrix (list of numeric rows), got {value!r}")
        return None
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        problems.append(f"{name} must have equal-length rows")
        return None
    return rows


def _bounds_pair(value, name, problems):
    """A [lower, upper] pair where null means unbounded on that side."""
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        problems.append(f"{name} must be a [lower, upper] pair, got {value!r}")
        return None
    out = []
    for side in value:
        if side is None:
            out.append(None)
        else:
            try:
                out.append(float(side))
            except (TypeError, ValueError):
                problems.append(f"{name} entries must be numbers or null, got {side!r}")
                return None
    if out[0] is not None and out[1] is not None and out[0] > out[1]:
        problems.append(f"{name} lower bound exceeds upper bound")
        return None
    return out


def _bounds_arrays(pair) -> tuple[float, float]:
    lo = -np.inf if pair is None or pair[0] is None else pair[0]
    hi = np.inf if pair is None or pair[1] is None else pair[1]
    return lo, hi


class ExperimentConfig:
    """Validated, fully resolved experiment description.

    Construction through :meth:`from_mapping` or :meth:`from_yaml` validates
    the whole document at once and raises :class:`ConfigurationError`
    listing every violation found.  The resolved mapping (all defaults
    filled in) is what :meth:`to_mapping` echoes into reports, so no numeric
    that influenced a result is hidden.
    """

    def __init__(self, data: dict):
        self._data = data

    # -- construction ---------------------------------------------------

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            mapping = yaml.safe_load(fh)
        if not isinstance(mapping, dict):
            raise ConfigurationError([f"config file {path} must contain a mapping"])
        return cls.from_mapping(mapping)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        if not isinstance(mapping, dict):
            raise ConfigurationError(["config must be a mapping"])
        problems: list[str] = []
        for key in sorted(set(mapping) - _TOP_KEYS):
            problems.append(f"unknown config key {key!r}")

        data: dict = {}
        data["name"] = str(mapping.get("name", "experiment"))
        data["seed"] = _num(mapping.get("seed", 0), "seed", problems, kind=int)
        data["runs"] = _num(mapping.get("runs", 1), "runs", problems, kind=int, minimum=0)
        data["horizon"] = _num(mapping.get("horizon"), "horizon", problems, kind=int, minimum=1)
        out_dir = mapping.get("output_dir")
        data["output_dir"] = None if out_dir is None else str(out_dir)
        data["coverage_horizon"] = _num(
            mapping.get("coverage_horizon"), "coverage_horizon", problems,
            kind=int, minimum=1, allow_none=True,
        )

        data["system"] = cls._norm_system(mapping.get("system"), problems)
        data["signal"] = cls._norm_signal(mapping.get("signal"), data.get("horizon"), problems)

        data["initial_state"] = _vector(
            mapping.get("initial_state", []), "initial_state", problems
        )
        data["initial_input"] = _vector(
            mapping.get("initial_input", [0.0]), "initial_input", problems
        )

        coords = mapping.get("joint_coordinates")
        if coords is None:
            data["joint_coordinates"] = None
        else:
            try:
                data["joint_coordinates"] = [int(c) for c in coords]
            except (TypeError, ValueError):
                problems.append(f"joint_coordinates must be a list of indices, got {coords!r}")
                data["joint_coordinates"] = None

        region = mapping.get("region") or {}
        data["region"] = {
            "lower": _vector(region.get("lower"), "region.lower", problems),
            "upper": _vector(region.get("upper"), "region.upper", problems),
        }
        metric = mapping.get("metric") or {}
        data["metric"] = {
            "q_diagonal": _vector(metric.get("q_diagonal"), "metric.q_diagonal", problems)
        }

        anchors = mapping.get("anchors") or {}
        variants = anchors.get("variants")
        norm_variants = []
        if not isinstance(variants, (list, tuple)) or not variants:
            problems.append("anchors.variants must be a non-empty list of per-dimension counts")
        else:
            for i, counts in enumerate(variants):
                try:
                    norm_variants.append([int(c) for c in counts])
                except (TypeError, ValueError):
                    problems.append(f"anchors.variants[{i}] must be a list of counts, got {counts!r}")
        data["anchors"] = {"variants": norm_variants}

        evaluation = mapping.get("evaluation") or {}
        data["evaluation"] = {
            "points_per_dim": _num(
                evaluation.get("points_per_dim", 100),
                "evaluation.points_per_dim", problems, kind=int, minimum=2,
            )
        }

        kernel = mapping.get("kernel") or {}
        sv = _num(kernel.get("signal_variance"), "kernel.signal_variance", problems, positive=True)
        jitter = kernel.get("jitter")
        if jitter is None:
            jitter = default_jitter(sv) if sv else None
        else:
            jitter = _num(jitter, "kernel.jitter", problems, minimum=0.0)
        data["kernel"] = {
            "signal_variance": sv,
            "lengthscales": _vector(kernel.get("lengthscales"), "kernel.lengthscales", problems),
            "jitter": jitter,
        }

        opt = dict(mapping.get("optimizer") or {})
        for key in sorted(set(opt) - set(_OPTIMIZER_KEYS)):
            problems.append(f"unknown optimizer key {key!r}")
            opt.pop(key)
        defaults = OptimizerConfig()
        data["optimizer"] = {
            key: opt.get(key, getattr(defaults, key)) for key in _OPTIMIZER_KEYS
        }

        cfg = cls(data)
        cfg._validate_components(problems)
        if problems:
            raise ConfigurationError(problems)
        return cfg

    @staticmethod
    def _norm_system(section, problems) -> dict:
        if not isinstance(section, dict):
            problems.append("system section is required")
            return {"type": None}
        kind = section.get("type")
        if kind == "lti":
            return {
                "type": "lti",
                "a": _matrix(section.get("a"), "system.a", problems),
                "b": _matrix(section.get("b"), "system.b", problems),
                "sample_time": _num(
                    section.get("sample_time", 1.0), "system.sample_time", problems, positive=True
                ),
            }
        if kind == "msd":
            params = section.get("params") or {}
            defaults = MsdParams()
            norm = {}
            for name in ("rest_length", "anchor_offset", "mass", "stiffness", "damping"):
                norm[name] = _num(
                    params.get(name, getattr(defaults, name)),
                    f"system.params.{name}", problems, positive=True,
                )
            return {
                "type": "msd",
                "params": norm,
                "dt": _num(section.get("dt", 0.01), "system.dt", problems, positive=True),
            }
        problems.append(f"system.type must be 'lti' or 'msd', got {kind!r}")
        return {"type": kind}

    @staticmethod
    def _norm_signal(section, horizon, problems) -> dict:
        if not isinstance(section, dict):
            problems.append("signal section is required")
            return {"family": None}
        family = section.get("family")
        if family == "free_form":
            return {
                "family": "free_form",
                "bounds": _bounds_pair(section.get("bounds"), "signal.bounds", problems),
            }
        if family == "multisine":
            bins = section.get("bins")
            if isinstance(bins, dict):
                first = _num(bins.get("first"), "signal.bins.first", problems, kind=int, minimum=1)
                last = _num(bins.get("last"), "signal.bins.last", problems, kind=int, minimum=1)
                if first is not None and last is not None:
                    if last < first:
                        problems.append("signal.bins.last must be >= signal.bins.first")
                        bins = None
                    else:
                        bins = list(range(first, last + 1))
                else:
                    bins = None
            elif bins is not None:
                try:
                    bins = [int(b) for b in bins]
                except (TypeError, ValueError):
                    problems.append(f"signal.bins must be a list of integers, got {bins!r}")
                    bins = None
            else:
                problems.append("signal.bins is required for the multisine family")
            sample_freq = _num(
                section.get("sample_freq"), "signal.sample_freq", problems, positive=True
            )
            base_freq = section.get("base_freq")
            if base_freq is None:
                # one full period over the horizon
                if sample_freq and horizon:
                    base_freq = sample_freq / horizon
            else:
                base_freq = _num(base_freq, "signal.base_freq", problems, positive=True)
            return {
                "family": "multisine",
                "bins": bins,
                "base_freq": base_freq,
                "sample_freq": sample_freq,
                "amplitude_bounds": _bounds_pair(
                    section.get("amplitude_bounds"), "signal.amplitude_bounds", problems
                ),
                "shared_amplitude": bool(section.get("shared_amplitude", False)),
                "init_amplitude": _num(
                    section.get("init_amplitude", 1.0), "signal.init_amplitude", problems
                ),
            }
        if family == "piecewise_constant":
            switch_times = section.get("switch_times")
            try:
                switch_times = [int(p) for p in switch_times]
            except (TypeError, ValueError):
                problems.append(
                    f"signal.switch_times must be a list of integers, got {switch_times!r}"
                )
                switch_times = None
            return {
                "family": "piecewise_constant",
                "switch_times": switch_times,
                "amplitude_bounds": _bounds_pair(
                    section.get("amplitude_bounds"), "signal.amplitude_bounds", problems
                ),
            }
        problems.append(
            f"signal.family must be one of free_form, multisine, piecewise_constant, got {family!r}"
        )
        return {"family": family}

    def _validate_components(self, problems: list[str]) -> None:
        """Build every component once, folding constructor errors into the list."""
        system = None
        try:
            system = self.build_system()
        except (ValueError, TypeError) as exc:
            problems.append(f"system: {exc}")
        try:
            signal = self.build_signal()
            if signal.horizon < (self._data.get("horizon") or 0):
                problems.append(
                    f"signal horizon {signal.horizon} is shorter than the experiment horizon"
                )
        except (ValueError, TypeError) as exc:
            problems.append(f"signal: {exc}")
        region = None
        try:
            region = self.region()
        except (ValueError, TypeError) as exc:
            problems.append(f"region: {exc}")
        try:
            metric = self.metric()
            if region is not None and metric.n_dim != region.n_dim:
                problems.append(
                    f"metric.q_diagonal has {metric.n_dim} entries for a {region.n_dim}-d region"
                )
        except (ValueError, TypeError) as exc:
            problems.append(f"metric: {exc}")
        try:
            kernel = self.kernel()
            if region is not None and kernel.n_dim != region.n_dim:
                problems.append(
                    f"kernel.lengthscales has {kernel.n_dim} entries for a {region.n_dim}-d region"
                )
        except (ValueError, TypeError) as exc:
            problems.append(f"kernel: {exc}")
        try:
            self.optimizer_config()
        except (ValueError, TypeError) as exc:
            problems.append(f"optimizer: {exc}")
        if system is not None:
            n_z = system.n_x + system.n_u
            if self._data["initial_state"] is not None and len(
                self._data["initial_state"]
            ) != system.n_x:
                problems.append(
                    f"initial_state must have length {system.n_x}, "
                    f"got {len(self._data['initial_state'])}"
                )
            if self._data["initial_input"] is not None and len(
                self._data["initial_input"]
            ) != system.n_u:
                problems.append(
                    f"initial_input must have length {system.n_u}, "
                    f"got {len(self._data['initial_input'])}"
                )
            coords = self._data["joint_coordinates"]
            if coords is not None and (
                len(set(coords)) != len(coords) or any(not 0 <= c < n_z for c in coords)
            ):
                problems.append(
                    f"joint_coordinates must be distinct indices below {n_z}, got {coords}"
                )
            n_dim = len(coords) if coords is not None else n_z
            if region is not None and region.n_dim != n_dim:
                problems.append(
                    f"region is {region.n_dim}-d but the design space has {n_dim} coordinates"
                )
            for i, counts in enumerate(self._data["anchors"]["variants"]):
                if len(counts) != n_dim:
                    problems.append(
                        f"anchors.variants[{i}] has {len(counts)} counts for a {n_dim}-d design space"
                    )
                elif any(c < 2 for c in counts):
                    problems.append(f"anchors.variants[{i}] counts must all be at least 2")

    # -- accessors -------------------------------------------------------

    @property
    def name(self) -> str:
        return self._data["name"]

    @property
    def seed(self) -> int:
        return self._data["seed"]

    @property
    def runs(self) -> int:
        return self._data["runs"]

    @property
    def horizon(self) -> int:
        return self._data["horizon"]

    @property
    def output_dir(self) -> str | None:
        return self._data["output_dir"]

    @property
    def coverage_horizon(self) -> int | None:
        return self._data["coverage_horizon"]

    @property
    def eval_points_per_dim(self) -> int:
        return self._data["evaluation"]["points_per_dim"]

    def joint_coordinates(self) -> tuple | None:
        coords = self._data["joint_coordinates"]
        return None if coords is None else tuple(coords)

    def to_mapping(self) -> dict:
        return json.loads(json.dumps(self._data))

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """New config with top-level fields replaced (seed, runs, output_dir, ...)."""
        data = self.to_mapping()
        for key, value in overrides.items():
            if value is not None:
                data[key] = value
        return ExperimentConfig.from_mapping(data)

    # -- builders ---------------------------------------------------------

    def build_system(self):
        section = self._data["system"]
        if section["type"] == "lti":
            return lti_from_continuous(
                np.asarray(section["a"], dtype=float),
                np.asarray(section["b"], dtype=float),
                section["sample_time"],
            )
        if section["type"] == "msd":
            return msd_system(MsdParams(**section["params"]), dt=section["dt"])
        raise ValueError(f"cannot build system of type {section['type']!r}")

    def build_signal(self):
        section = self._data["signal"]
        horizon = self._data["horizon"]
        if section["family"] == "free_form":
            bounds = section["bounds"]
            return FreeFormSignal(
                np.zeros(horizon), bounds=None if bounds is None else _bounds_arrays(bounds)
            )
        if section["family"] == "multisine":
            return MultisineSignal(
                section["bins"],
                section["base_freq"],
                section["sample_freq"],
                horizon,
                amplitude_bounds=_bounds_arrays(section["amplitude_bounds"]),
                shared_amplitude=section["shared_amplitude"],
                init_amplitude=section["init_amplitude"],
            )
        if section["family"] == "piecewise_constant":
            return PiecewiseConstantSignal(
                section["switch_times"],
                amplitude_bounds=_bounds_arrays(section["amplitude_bounds"]),
                horizon=horizon,
            )
        raise ValueError(f"cannot build signal family {section['family']!r}")

    def region(self) -> RegionOfInterest:
        return RegionOfInterest(self._data["region"]["lower"], self._data["region"]["upper"])

    def metric(self) -> MetricWeight:
        return MetricWeight(self._data["metric"]["q_diagonal"])

    def kernel(self) -> KernelConfig:
        section = self._data["kernel"]
        return KernelConfig(
            section["signal_variance"], section["lengthscales"], section["jitter"]
        )

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(**self._data["optimizer"])

    def anchor_variants(self) -> list[tuple[int, ...]]:
        return [tuple(counts) for counts in self._data["anchors"]["variants"]]

    def build_anchors(self, counts, compute_epsilon: bool = True) -> AnchorSet:
        return uniform_anchor_grid(
            self.region(),
            list(counts),
            metric=self.metric(),
            eval_points_per_dim=self.eval_points_per_dim,
            compute_epsilon=compute_epsilon,
        )

    def build_problem(self, anchors: AnchorSet) -> DesignProblem:
        return DesignProblem(
            system=self.build_system(),
            signal=self.build_signal(),
            anchors=anchors,
            kernel=self.kernel(),
            x0=np.asarray(self._data["initial_state"], dtype=float),
            u0=np.asarray(self._data["initial_input"], dtype=float),
            n_samples=self.horizon,
            joint_coordinates=self.joint_coordinates(),
        )


# -- Monte-Carlo harness ---------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one Monte-Carlo run.

    ``wall_time_s`` is kept out of the JSON report (it would break rerun
    byte-identity) and lands in ``timings.csv`` instead.
    """

    index: int
    seed: int
    status: str
    iterations: int
    initial_cost: float | None
    final_cost: float | None
    initial_rho: float | None
    final_rho: float | None
    wall_time_s: float


@dataclass
class VariantResult:
    anchor_counts: tuple
    n_anchors: int
    epsilon: float
    advisory: str | None
    runs: list[RunRecord] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    config: dict
    variants: list[VariantResult] = field(default_factory=list)

    @property
    def all_diverged(self) -> bool:
        records = [r for v in self.variants for r in v.runs]
        return bool(records) and all(r.status == "diverged" for r in records)


def _run_seed(master_seed: int, variant_index: int, run_index: int) -> int:
    """Independent 64-bit seed for one (variant, run) cell."""
    state = np.random.SeedSequence(
        master_seed, spawn_key=(variant_index, run_index)
    ).generate_state(2)
    return (int(state[0]) << 32) | int(state[1])


def _variant_dir(base: str, counts, n_anchors: int) -> Path:
    return Path(base) / ("M%d_%s" % (n_anchors, "x".join(str(c) for c in counts)))


def aggregate_records(records: list[RunRecord]) -> dict:
    """Summary statistics over the successful runs of one variant.

    Recomputable from the per-run records alone; the report round-trip test
    relies on that.
    """
    ok = [r for r in records if r.status != "diverged" and r.final_rho is not None]
    out = {"n_runs": len(records), "n_diverged": len(records) - len(ok)}
    if ok:
        finals = np.array([r.final_rho for r in ok])
        initials = np.array([r.initial_rho for r in ok])
        q1, median, q3 = np.percentile(finals, [25.0, 50.0, 75.0])
        out.update(
            mean_initial_rho=float(initials.mean()),
            mean_final_rho=float(finals.mean()),
            min_final_rho=float(finals.min()),
            q1_final_rho=float(q1),
            median_final_rho=float(median),
            q3_final_rho=float(q3),
            max_final_rho=float(finals.max()),
            mean_final_cost=float(np.mean([r.final_cost for r in ok])),
        )
    return out


def _execute_run(data: dict, variant_index: int, run_index: int) -> RunRecord:
    """One Monte-Carlo run; module-level so process pools can dispatch it."""
    cfg = ExperimentConfig(data)
    counts = cfg.anchor_variants()[variant_index]
    anchors = cfg.build_anchors(counts, compute_epsilon=False)
    problem = cfg.build_problem(anchors)
    region, metric, res = cfg.region(), cfg.metric(), cfg.eval_points_per_dim
    seed = _run_seed(cfg.seed, variant_index, run_index)
    rng = np.random.default_rng(seed)
    theta0 = problem.signal.sample_initial_theta(rng)

    started = time.perf_counter()
    try:
        initial_cost, initial_ds = design_cost(theta0, problem)
        initial_rho = filling_distance(
            problem.select_points(initial_ds.points), region, metric, res
        )
        theta_hat, trace = optimize(theta0, problem, cfg.optimizer_config())
        final_cost, final_ds = design_cost(theta_hat, problem)
        final_rho = filling_distance(
            problem.select_points(final_ds.points), region, metric, res
        )
    except TrajectoryDivergedError:
        return RunRecord(
            index=run_index, seed=seed, status="diverged", iterations=0,
            initial_cost=None, final_cost=None, initial_rho=None, final_rho=None,
            wall_time_s=time.perf_counter() - started,
        )
    wall = time.perf_counter() - started

    if cfg.output_dir:
        out = _variant_dir(cfg.output_dir, counts, len(anchors))
        out.mkdir(parents=True, exist_ok=True)
        trajectory, ds = rollout(
            problem.system, problem.signal.with_theta(theta_hat),
            problem.x0, problem.n_samples, u0=problem.u0,
        )
        trajectory_to_csv(
            trajectory, out / f"run_{run_index}_trajectory.csv",
            final_input=ds.points[-1, problem.system.n_x:],
        )
        trace_to_csv(trace, out / f"run_{run_index}_trace.csv")
        points_to_csv(np.asarray(theta_hat).reshape(-1, 1), out / f"theta_hat_{run_index}.csv")

    return RunRecord(
        index=run_index, seed=seed, status=trace.status, iterations=trace.iterations,
        initial_cost=float(initial_cost), final_cost=float(final_cost),
        initial_rho=float(initial_rho), final_rho=float(final_rho),
        wall_time_s=wall,
    )


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """Run the full Monte-Carlo batch described by the config.

    Executes ``cfg.runs`` optimizations per anchor variant (concurrently
    when ``jobs > 1``), aggregates filling-distance statistics, and, when an
    output directory is configured, writes ``report.json``, ``boxplot.csv``,
    ``timings.csv``, and per-run artifacts.  Individual diverging runs are
    recorded, never fatal.
    """
    data = cfg.to_mapping()
    variants = []
    for counts in cfg.anchor_variants():
        anchors = cfg.build_anchors(counts, compute_epsilon=True)
        advisory = None
        if cfg.coverage_horizon is not None:
            advisory = reachability_advisory(cfg.horizon, len(anchors), cfg.coverage_horizon)
        variants.append(
            VariantResult(
                anchor_counts=tuple(counts),
                n_anchors=len(anchors),
                epsilon=float(anchors.epsilon),
                advisory=advisory,
            )
        )

    tasks = [(vi, ri) for vi in range(len(variants)) for ri in range(cfg.runs)]
    results: dict[tuple, RunRecord] = {}
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(_execute_run, data, vi, ri): (vi, ri) for vi, ri in tasks
            }
            for future, key in futures.items():
                results[key] = future.result()
    else:
        for vi, ri in tasks:
            results[(vi, ri)] = _execute_run(data, vi, ri)

    for vi, variant in enumerate(variants):
        variant.runs = [results[(vi, ri)] for ri in range(cfg.runs)]
        variant.aggregates = aggregate_records(variant.runs)

    report = ExperimentReport(config=data, variants=variants)
    if cfg.output_dir:
        _write_report_files(report, cfg.output_dir)
    return report


def report_to_mapping(report: ExperimentReport) -> dict:
    """JSON-ready view of a report; excludes wall-clock times by design."""
    return {
        "config": report.config,
        "variants": [
            {
                "anchor_counts": list(v.anchor_counts),
                "n_anchors": v.n_anchors,
                "epsilon": v.epsilon,
                "advisory": v.advisory,
                "aggregates": v.aggregates,
                "runs": [
                    {
                        "index": r.index,
                        "seed": r.seed,
                        "status": r.status,
                        "iterations": r.iterations,
                        "initial_cost": r.initial_cost,
                        "final_cost": r.final_cost,
                        "initial_rho": r.initial_rho,
                        "final_rho": r.final_rho,
                    }
                    for r in v.runs
                ],
            }
            for v in report.variants
        ],
    }


def report_to_json(report: ExperimentReport) -> str:
    return json.dumps(report_to_mapping(report), sort_keys=True, indent=2) + "\n"


def _write_report_files(report: ExperimentReport, output_dir: str) -> None:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_to_json(report))

    with open(out / "boxplot.csv", "w", newline="") as fh:
        fh.write("m,anchor_counts,min,q1,median,q3,max\n")
        for v in report.variants:
            agg = v.aggregates
            if "min_final_rho" not in agg:
                continue
            fh.write(
                "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                % (
                    v.n_anchors,
                    "x".join(str(c) for c in v.anchor_counts),
                    agg["min_final_rho"],
                    agg["q1_final_rho"],
                    agg["median_final_rho"],
                    agg["q3_final_rho"],
                    agg["max_final_rho"],
                )
            )

    with open(out / "timings.csv", "w", newline="") as fh:
        fh.write("m,run_index,wall_time_s\n")
        for v in report.variants:
            for r in v.runs:
                fh.write("%d,%d,%.6f\n" % (v.n_anchors, r.index, r.wall_time_s))


def evaluate_dataset(
    path, region: RegionOfInterest, metric: MetricWeight | None = None, eval_points_per_dim=100
) -> dict:
    """Filling-distance report for a CSV dataset (one joint point per row)."""
    points = points_from_csv(path)
    if points.shape[1] != region.n_dim:
        raise ValueError(
            f"dataset has {points.shape[1]} columns but the region is {region.n_dim}-d"
        )
    center, radius = largest_empty_ball(points, region, metric, eval_points_per_dim)
    return {
        "n_points": int(points.shape[0]),
        "rho": radius,
        "ball_center": center.tolist(),
        "ball_radius": radius,
    }


def schroeder_baseline(cfg: ExperimentConfig, amplitude: float | None = None) -> dict:
    """Filling distance of the unoptimized Schroeder-phase multisine.

    Uses the config's multisine frequency grid and horizon; the shared
    amplitude defaults to the config's initial amplitude.  No optimization
    is performed, so this is the reference a designed signal must beat.
    """
    section = cfg.to_mapping()["signal"]
    if section["family"] != "multisine":
        raise ValueError("the Schroeder baseline requires a multisine signal config")
    amp = section["init_amplitude"] if amplitude is None else float(amplitude)
    sig = schroeder_multisine(
        len(section["bins"]),
        amp,
        excited_bins=section["bins"],
        base_freq=section["base_freq"],
        sample_freq=section["sample_freq"],
        horizon=cfg.horizon,
    )
    system = cfg.build_system()
    _, dataset = rollout(
        system, sig,
        np.asarray(cfg.to_mapping()["initial_state"], dtype=float),
        cfg.horizon,
        u0=np.asarray(cfg.to_mapping()["initial_input"], dtype=float),
    )
    coords = cfg.joint_coordinates()
    points = dataset.points if coords is None else dataset.points[:, list(coords)]
    rho = filling_distance(points, cfg.region(), cfg.metric(), cfg.eval_points_per_dim)
    return {"amplitude": amp, "rho": float(rho), "n_points": len(dataset)}
