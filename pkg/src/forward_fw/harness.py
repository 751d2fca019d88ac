"""Monte Carlo experiment runner: config parsing, batched runs, CSV aggregation.

A config is a flat TOML document::

    problem = "quadratic"          # quadratic | least_squares | logistic | mnist
    n = 50
    algorithm = ["fgfw", "afgfw"]
    K = 10000
    alpha.a = 1                    # alpha_k = a / (k + b)^p
    gamma.p = 0.5
    runs = 50
    base_seed = 0

Run ``r`` of every algorithm uses seed ``base_seed + r``.
"""

from __future__ import annotations

import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algorithms import ALGORITHMS, ConfigError, RunConfig, check_ratio_condition, run
from .core import DIRECTIONS, DEFAULT_ALPHA, DEFAULT_GAMMA, NonFiniteStateError, Schedule
from .lmo import L1Ball, l1_ball_product
from .problems import (MultinomialLogistic, cached_reference_optimum, generate_synthetic,
                       load_mnist, make_least_squares, make_quadratic)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PROBLEMS = ("quadratic", "least_squares", "logistic", "mnist")

CSV_COLUMNS = ("k", "algorithm", "mean_suboptimality", "std_suboptimality",
               "mean_log10_suboptimality", "mean_fw_gap", "mean_estimator_err",
               "mean_wall_time_us")

_SCALAR_KEYS = {
    "problem": str,
    "n": int,
    "m": int,
    "d": int,
    "classes": int,
    "problem_seed": int,
    "radius": float,
    "dataset_path": str,
    "K": int,
    "runs": int,
    "base_seed": int,
    "instrumented": bool,
    "timing": bool,
    "distribution": str,
    "reference_iterations": int,
}
_SCHEDULE_KEYS = ("alpha", "gamma")


@dataclass(frozen=True)
class ExperimentSpec:
    problem: str
    n: int = 50
    m: int = 2000
    d: int = 20
    classes: int = 10
    problem_seed: int = 0
    radius: float = 1.0
    dataset_path: Optional[str] = None
    algorithms: Tuple[str, ...] = ("fgfw", "afgfw")
    K: int = 10_000
    alpha: Schedule = DEFAULT_ALPHA
    gamma: Schedule = DEFAULT_GAMMA
    runs: int = 50
    base_seed: int = 0
    x0: Optional[Tuple[float, ...]] = None
    instrumented: bool = False
    timing: bool = False
    distribution: str = "gaussian"
    reference_iterations: Optional[int] = None

    def seeds(self) -> List[int]:
        return [self.base_seed + r for r in range(self.runs)]

    def describe(self) -> str:
        lines = [f"problem={self.problem}"]
        if self.problem in ("quadratic", "least_squares"):
            lines.append(f"n={self.n}")
        if self.problem in ("logistic", "least_squares"):
            lines.append(f"m={self.m}")
        if self.problem == "logistic":
            lines += [f"d={self.d}", f"classes={self.classes}"]
        if self.problem == "mnist":
            lines.append(f"dataset_path={self.dataset_path}")
        if self.problem != "mnist":
            lines.append(f"problem_seed={self.problem_seed}")
        lines += [
            f"radius={_num(self.radius)}",
            f"algorithm={','.join(self.algorithms)}",
            f"K={self.K}",
            f"alpha={self.alpha}",
        ]
        if "afgfw" in self.algorithms:
            lines.append(f"gamma={self.gamma}")
        lines += [
            f"runs={self.runs}",
            f"base_seed={self.base_seed}",
            f"x0={'zero' if self.x0 is None else list(self.x0)}",
            f"distribution={self.distribution}",
            f"instrumented={str(self.instrumented).lower()}",
            f"timing={str(self.timing).lower()}",
        ]
        return "\n".join(lines)


def parse_config(text: str) -> ExperimentSpec:
    """Validate a TOML config and fill in defaults; errors name the offending key."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values: Dict[str, object] = {}
    for key, val in raw.items():
        if key in _SCALAR_KEYS:
            values[key] = _typed(key, val, _SCALAR_KEYS[key])
        elif key in _SCHEDULE_KEYS:
            values[key] = _schedule(key, val)
        elif key == "algorithm":
            algs = [val] if isinstance(val, str) else val
            if not isinstance(algs, list) or not algs or not all(isinstance(a, str) for a in algs):
                raise ConfigError("algorithm: expected a name or a non-empty list of names")
            for a in algs:
                if a not in ALGORITHMS:
                    raise ConfigError(f"algorithm: unknown algorithm {a!r}; expected one of {ALGORITHMS}")
            if len(set(algs)) != len(algs):
                raise ConfigError("algorithm: duplicate entries")
            values["algorithms"] = tuple(algs)
        elif key == "x0":
            if val == "zero":
                values["x0"] = None
            elif isinstance(val, list) and all(_is_number(v) for v in val):
                values["x0"] = tuple(float(v) for v in val)
            else:
                raise ConfigError("x0: expected \"zero\" or a list of numbers")
        else:
            raise ConfigError(f"{key}: unknown key")

    if "problem" not in values:
        raise ConfigError("problem: required key missing")
    if values["problem"] not in PROBLEMS:
        raise ConfigError(f"problem: unknown problem {values['problem']!r}; expected one of {PROBLEMS}")
    if values["problem"] == "mnist" and not values.get("dataset_path"):
        raise ConfigError("dataset_path: required for problem \"mnist\"")
    for key in ("n", "m", "d", "runs"):
        if key in values and values[key] < 1:
            raise ConfigError(f"{key}: must be at least 1")
    if "classes" in values and values["classes"] < 2:
        raise ConfigError("classes: must be at least 2")
    for key in ("K", "base_seed"):
        if key in values and values[key] < 0:
            raise ConfigError(f"{key}: must be non-negative")
    if "reference_iterations" in values and values["reference_iterations"] < 1:
        raise ConfigError("reference_iterations: must be at least 1")
    if "radius" in values and not values["radius"] > 0:
        raise ConfigError("radius: must be positive")
    if values.get("distribution", "gaussian") not in DIRECTIONS:
        raise ConfigError(f"distribution: expected one of {DIRECTIONS}")

    spec = ExperimentSpec(**values)
    if "afgfw" in spec.algorithms:
        try:
            check_ratio_condition(spec.alpha, spec.gamma)
        except ConfigError as exc:
            raise ConfigError(f"alpha/gamma: {exc}") from None
    return spec


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _typed(key, val, kind):
    if kind is bool:
        ok = isinstance(val, bool)
    elif kind is int:
        ok = isinstance(val, int) and not isinstance(val, bool)
    elif kind is float:
        ok = _is_number(val)
        val = float(val) if ok else val
    else:
        ok = isinstance(val, str)
    if not ok:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {val!r}")
    if kind is float and not math.isfinite(val):
        raise ConfigError(f"{key}: must be finite")
    return val


def _schedule(key, val) -> Schedule:
    if not isinstance(val, dict):
        raise ConfigError(f"{key}: expected a table with keys a, b, p")
    params = {}
    for sub, v in val.items():
        if sub not in ("a", "b", "p"):
            raise ConfigError(f"{key}.{sub}: unknown key")
        if not _is_number(v):
            raise ConfigError(f"{key}.{sub}: expected a number, got {v!r}")
        params[sub] = float(v)
    base = DEFAULT_ALPHA if key == "alpha" else DEFAULT_GAMMA
    merged = {"a": base.a, "b": base.b, "p": base.p, **params}
    try:
        return Schedule(**merged)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


# --- problem construction --------------------------------------------------

_REFERENCE_ITERATIONS = {"quadratic": 1_000_000, "least_squares": 1_000_000,
                         "logistic": 100_000, "mnist": 100_000}


def build_problem(spec: ExperimentSpec, cache_dir: Optional[str] = None):
    """Objective (with ``f_star`` filled in) and feasible set for ``spec``."""
    if spec.problem == "quadratic":
        obj = make_quadratic(spec.n, spec.problem_seed)
        feasible = L1Ball(spec.n, spec.radius)
    elif spec.problem == "least_squares":
        obj = make_least_squares(spec.m, spec.n, spec.problem_seed)
        feasible = L1Ball(spec.n, spec.radius)
    else:
        if spec.problem == "logistic":
            data = generate_synthetic(spec.m, spec.d, spec.classes, spec.problem_seed)
        else:
            data = load_mnist(spec.dataset_path, "train")
        obj = MultinomialLogistic(data.X, data.y, data.classes)
        feasible = l1_ball_product(obj.classes, obj.d, spec.radius)
    iters = spec.reference_iterations or _REFERENCE_ITERATIONS[spec.problem]
    obj.f_star, _ = cached_reference_optimum(obj, feasible, iters, cache_dir)
    return obj, feasible


# --- running and aggregation -----------------------------------------------

@dataclass
class ExperimentResult:
    csv: str
    final: Dict[str, Dict[str, Optional[float]]] = field(default_factory=dict)
    f_star: Optional[float] = None

    def summary(self) -> str:
        if not self.final:
            return "empty trace: K = 0, no iterations were run"
        head = f"{'algorithm':<10} {'final mean subopt':>20} {'std':>12} {'log10(mean)':>12}"
        rows = [head]
        for alg, vals in self.final.items():
            rows.append(f"{alg:<10} {_fmt(vals['mean'], '20.6e')} {_fmt(vals['std'], '12.3e')} "
                        f"{_fmt(vals['log10'], '12.4f')}")
        return "\n".join(rows)


def _fmt(v, spec):
    width = int(spec.split(".")[0])
    return "-".rjust(width) if v is None else format(v, spec)


def _one_run(args):
    obj, feasible, cfg = args
    try:
        trace = run(obj, feasible, cfg)
    except NonFiniteStateError as exc:
        if exc.seed is None:
            raise NonFiniteStateError(str(exc), iteration=exc.iteration, seed=cfg.seed) from None
        raise
    return cfg.algorithm, cfg.seed, trace


def run_experiment(spec: ExperimentSpec, out=None, jobs: int = 1,
                   cache_dir: Optional[str] = None, problem=None) -> ExperimentResult:
    """Execute ``spec.runs`` seeded runs per algorithm and aggregate to CSV.

    ``out`` may be a path or a text stream; the CSV text is also returned.
    Results are reduced in (algorithm, run index) order whatever order the
    workers finish in, so output bytes depend on the config alone (timing
    columns excepted, which are off unless ``spec.timing``).
    """
    obj, feasible = problem if problem is not None else build_problem(spec, cache_dir)
    x0 = None
    if spec.x0 is not None:
        x0 = np.array(spec.x0)
        if x0.shape != (feasible.dim,):
            raise ConfigError(f"x0: expected {feasible.dim} entries, got {len(x0)}")
        if not feasible.contains(x0):
            raise ConfigError("x0: not in the feasible set")
    tasks = [
        (obj, feasible, RunConfig(algorithm=alg, iterations=spec.K, alpha=spec.alpha,
                                  gamma=spec.gamma if alg == "afgfw" else None, x0=x0,
                                  seed=seed, instrumented=spec.instrumented,
                                  distribution=spec.distribution, problem=spec.problem))
        for alg in spec.algorithms for seed in spec.seeds()
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one_run, tasks))
    else:
        results = [_one_run(t) for t in tasks]
    return aggregate(spec, results, obj.f_star, out)


def aggregate(spec: ExperimentSpec, results: Sequence, f_star: Optional[float],
              out=None) -> ExperimentResult:
    """Reduce ``(algorithm, seed, trace)`` triples to the CSV document."""
    by_key = {(alg, seed): trace for alg, seed, trace in results}
    buf = io.StringIO(newline="")
    for line in _metadata_lines(spec, f_star):
        buf.write(f"# {line}\n")
    buf.write(",".join(CSV_COLUMNS) + "\n")
    final = {}
    for alg in spec.algorithms:
        traces = [by_key[(alg, seed)] for seed in spec.seeds()]
        if spec.K == 0:
            continue
        sub = _stack(traces, "suboptimality")
        gap = _stack(traces, "fw_gap")
        err = _stack(traces, "estimator_error")
        wall = _stack(traces, "wall_time") if spec.timing else None
        mean_sub = sub.mean(axis=0) if sub is not None else None
        std_sub = sub.std(axis=0) if sub is not None else None
        log_sub = None
        if mean_sub is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                log_sub = np.where(mean_sub > 0, np.log10(np.where(mean_sub > 0, mean_sub, 1.0)), np.nan)
        mean_gap = gap.mean(axis=0) if gap is not None else None
        mean_err = err.mean(axis=0) if err is not None else None
        mean_wall = wall.mean(axis=0) * 1e6 if wall is not None else None
        for i in range(spec.K):
            buf.write(",".join((
                str(i + 1), alg,
                _cell(mean_sub, i), _cell(std_sub, i), _cell(log_sub, i),
                _cell(mean_gap, i), _cell(mean_err, i), _cell(mean_wall, i),
            )) + "\n")
        final[alg] = {
            "mean": None if mean_sub is None else float(mean_sub[-1]),
            "std": None if std_sub is None else float(std_sub[-1]),
            "log10": None if log_sub is None or np.isnan(log_sub[-1]) else float(log_sub[-1]),
        }
    text = buf.getvalue()
    if out is not None:
        if hasattr(out, "write"):
            out.write(text)
        else:
            with open(out, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
    return ExperimentResult(text, final, f_star)


def _stack(traces, name):
    cols = [getattr(t, name) for t in traces]
    if any(c is None for c in cols):
        return None
    return np.vstack(cols)


def _cell(arr, i) -> str:
    if arr is None:
        return ""
    v = float(arr[i])
    return "" if math.isnan(v) else repr(v)


def _metadata_lines(spec: ExperimentSpec, f_star) -> List[str]:
    lines = ["forward_fw experiment"]
    lines += spec.describe().splitlines()
    lines.append(f"f_star={'unknown' if f_star is None else repr(float(f_star))}")
    lines.append(f"seeds=base_seed+r for r in 0..{spec.runs - 1}")
    lines.append("std_suboptimality is the population std over runs; "
                 "mean_log10_suboptimality = log10(mean_suboptimality)")
    return lines


def load_spec(path) -> ExperimentSpec:
    with open(path, encoding="utf-8") as f:
        return parse_config(f.read())
