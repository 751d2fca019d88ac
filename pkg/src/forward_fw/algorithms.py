"""Frank-Wolfe with exact gradients, with projected forward gradients (FGFW),
and with a running average of projected forward gradients (AFGFW).

All three take the step ``x_k = (1 - alpha_k) x_{k-1} + alpha_k s_k`` for
``k = 1..K`` and return a :class:`~forward_fw.core.Trace` whose row
``k - 1`` describes ``x_k``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (FW_DEFAULT_ALPHA, DEFAULT_ALPHA, DEFAULT_GAMMA, NonFiniteStateError,
                   RandomSource, Schedule, Trace, Vector, as_vector, convex_step)
from .estimators import EstimatorState, sample_forward_gradient, update_average

ALGORITHMS = ("fw", "fgfw", "afgfw")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Settings for one run.

    ``alpha``/``gamma`` left as ``None`` pick the defaults: ``2/(k+2)`` for
    exact FW, ``1/k`` and ``1/sqrt(k)`` for the forward-gradient variants.
    ``x0 = None`` means the origin.
    """

    algorithm: str
    iterations: int
    alpha: Optional[Schedule] = None
    gamma: Optional[Schedule] = None
    x0: Optional[Vector] = None
    seed: int = 0
    instrumented: bool = False
    distribution: str = "gaussian"
    problem: str = ""

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ConfigError(f"iterations must be a non-negative integer, got {self.iterations}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", FW_DEFAULT_ALPHA if self.algorithm == "fw" else DEFAULT_ALPHA)
        if self.algorithm == "afgfw":
            if self.gamma is None:
                object.__setattr__(self, "gamma", DEFAULT_GAMMA)
            check_ratio_condition(self.alpha, self.gamma)

    def resolve_x0(self, feasible) -> Vector:
        x0 = np.zeros(feasible.dim) if self.x0 is None else as_vector(self.x0, feasible.dim, "x0")
        if not feasible.contains(x0):
            raise ConfigError("x0 is not in the feasible set")
        return x0


def check_ratio_condition(alpha: Schedule, gamma: Schedule) -> None:
    """Averaging needs ``alpha_k / gamma_k -> 0``, i.e. a faster-decaying alpha."""
    if not alpha.p > gamma.p:
        raise ConfigError(
            f"ratio condition violated: alpha exponent {alpha.p} must exceed gamma exponent "
            f"{gamma.p} so that alpha_k/gamma_k -> 0")


def run(obj, feasible, cfg: RunConfig, callback: Optional[Callable[[int, Vector], None]] = None) -> Trace:
    runner = {"fw": run_fw, "fgfw": run_fgfw, "afgfw": run_afgfw}[cfg.algorithm]
    return runner(obj, feasible, cfg, callback=callback)


def run_fw(obj, feasible, cfg: RunConfig, callback=None) -> Trace:
    """Exact-gradient Frank-Wolfe."""
    _expect(cfg, "fw")
    K = int(cfg.iterations)
    x = cfg.resolve_x0(feasible)
    rec = _Recorder(K, obj, instrumented=cfg.instrumented, estimator=False)
    for k in range(1, K + 1):
        t0 = time.perf_counter()
        f, g = obj.value_and_gradient(x)
        s = feasible.lmo(g)
        x_new = convex_step(x, s, cfg.alpha(k))
        rec.wall[k - 1] = time.perf_counter() - t0
        _finite(x_new, g, k, cfg.seed)
        if k > 1:
            # the evaluation at x_{k-1} completes row k-1
            rec.f[k - 2] = f
            if rec.gap is not None:
                rec.gap[k - 2] = float(g @ (x - s))
        x = x_new
        if callback is not None:
            callback(k, x)
    if K:
        rec.f[K - 1] = obj.value(x)
        if rec.gap is not None:
            g = obj.gradient(x)
            rec.gap[K - 1] = float(g @ (x - feasible.lmo(g)))
    return rec.finish(x, cfg, obj)


def run_fgfw(obj, feasible, cfg: RunConfig, callback=None) -> Trace:
    """Frank-Wolfe driven by one projected forward gradient per step."""
    _expect(cfg, "fgfw")
    return _forward_loop(obj, feasible, cfg, None, callback)


def run_afgfw(obj, feasible, cfg: RunConfig, callback=None) -> Trace:
    """Frank-Wolfe driven by the running average of projected forward gradients."""
    _expect(cfg, "afgfw")
    return _forward_loop(obj, feasible, cfg, cfg.gamma, callback)


def _forward_loop(obj, feasible, cfg, gamma, callback) -> Trace:
    K = int(cfg.iterations)
    x = cfg.resolve_x0(feasible)
    rng = RandomSource(cfg.seed, cfg.distribution)
    state = EstimatorState.initial(obj.dim, gamma) if gamma is not None else None
    rec = _Recorder(K, obj, instrumented=cfg.instrumented, estimator=True)
    # instrumented mode only: exact gradient at the current iterate
    g_cur = obj.gradient(x) if cfg.instrumented and K else None
    for k in range(1, K + 1):
        t0 = time.perf_counter()
        sample = sample_forward_gradient(obj, x, rng)
        if state is not None:
            try:
                state = update_average(state, sample.estimate, k)
            except NonFiniteStateError:
                raise NonFiniteStateError("non-finite averaged forward gradient",
                                          iteration=k, seed=cfg.seed) from None
            direction = state.v
        else:
            direction = sample.estimate
        s = feasible.lmo(direction)
        x_new = convex_step(x, s, cfg.alpha(k))
        rec.wall[k - 1] = time.perf_counter() - t0
        _finite(x_new, direction, k, cfg.seed)
        if k > 1:
            rec.f[k - 2] = sample.f_value
        if g_cur is not None:
            diff = direction - g_cur
            rec.err[k - 1] = float(diff @ diff)
            g_cur = obj.gradient(x_new)
            rec.gap[k - 1] = float(g_cur @ (x_new - feasible.lmo(g_cur)))
        x = x_new
        if callback is not None:
            callback(k, x)
    if K:
        rec.f[K - 1] = obj.value(x)
    return rec.finish(x, cfg, obj)


class _Recorder:
    def __init__(self, K, obj, instrumented, estimator):
        self.k = np.arange(1, K + 1, dtype=np.int64)
        self.f = np.empty(K)
        self.wall = np.empty(K)
        self.gap = np.empty(K) if instrumented else None
        self.err = np.empty(K) if instrumented and estimator else None

    def finish(self, x, cfg, obj) -> Trace:
        if not np.all(np.isfinite(self.f)):
            bad = int(np.argmax(~np.isfinite(self.f))) + 1
            raise NonFiniteStateError("non-finite objective value", iteration=bad, seed=cfg.seed)
        f_star = getattr(obj, "f_star", None)
        meta = {
            "algorithm": cfg.algorithm,
            "seed": cfg.seed,
            "alpha": str(cfg.alpha),
            "gamma": str(cfg.gamma) if cfg.algorithm == "afgfw" else None,
            "problem": cfg.problem,
            "distribution": cfg.distribution if cfg.algorithm != "fw" else None,
        }
        return Trace(
            k=self.k,
            f_value=self.f,
            suboptimality=None if f_star is None else self.f - f_star,
            fw_gap=self.gap,
            estimator_error=self.err,
            wall_time=self.wall,
            x_final=x,
            metadata=meta,
        )


def _expect(cfg, name):
    if cfg.algorithm != name:
        raise ConfigError(f"config is for {cfg.algorithm!r}, not {name!r}")


def _finite(x, direction, k, seed):
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(direction))):
        raise NonFiniteStateError("non-finite algorithm state", iteration=k, seed=seed)
