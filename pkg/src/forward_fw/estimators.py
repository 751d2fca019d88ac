"""Projected forward gradient ``phi(x) = <grad f(x), u> u`` and its running average."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import RandomSource, Schedule, Vector, check_finite


@dataclass(frozen=True)
class ForwardGradientSample:
    direction: Vector
    scalar_derivative: float
    estimate: Vector
    f_value: Optional[float] = None


def sample_forward_gradient(obj, x: Vector, rng: Optional[RandomSource] = None,
                            direction: Optional[Vector] = None) -> ForwardGradientSample:
    """Draw ``u`` from ``rng`` (or use ``direction``) and form ``<grad f(x), u> u``.

    The scalar comes from one forward-mode pass of the objective; the
    exact gradient is never formed. The objective value at ``x`` falls
    out of the same pass and is returned alongside.
    """
    if direction is None:
        if rng is None:
            raise ValueError("need a RandomSource or an explicit direction")
        u = rng.direction(obj.dim)
    else:
        u = np.asarray(direction, dtype=np.float64)
    f, d = obj.value_and_directional_derivative(x, u)
    return ForwardGradientSample(u, d, d * u, f)


@dataclass(frozen=True)
class EstimatorState:
    """Averaged forward gradient ``v`` after ``k`` updates; starts at zero."""

    v: Vector
    k: int
    gamma_schedule: Schedule

    @classmethod
    def initial(cls, dim: int, gamma_schedule: Schedule) -> "EstimatorState":
        return cls(np.zeros(dim), 0, gamma_schedule)


def update_average(state: EstimatorState, phi: Vector, k: int) -> EstimatorState:
    """``v_k = (1 - gamma_k) v_{k-1} + gamma_k phi``; ``k`` must be ``state.k + 1``."""
    if k != state.k + 1:
        raise ValueError(f"out-of-order update: state is at k={state.k}, got k={k}")
    if np.shape(phi) != state.v.shape:
        raise ValueError(f"dimension mismatch: {np.shape(phi)} vs {state.v.shape}")
    gamma = state.gamma_schedule(k)
    v = (1.0 - gamma) * state.v + gamma * phi
    check_finite(v, "averaged forward gradient", iteration=k)
    return replace(state, v=v, k=k)


@dataclass(frozen=True)
class ForwardGradientStats:
    """Monte Carlo summary of ``phi`` at a fixed point."""

    samples: int
    gradient: Vector
    mean: Vector
    std: Vector
    second_moment: float

    @property
    def standard_error(self) -> Vector:
        return self.std / np.sqrt(self.samples)

    @property
    def second_moment_ratio(self) -> float:
        return self.second_moment / float(self.gradient @ self.gradient)


def forward_gradient_stats(obj, x: Vector, rng: RandomSource, samples: int,
                           chunk: int = 8192) -> ForwardGradientStats:
    """Empirical mean, std and ``E||phi||^2`` over ``samples`` fresh directions.

    Every directional derivative goes through the forward-mode pass; the
    exact gradient is evaluated once, only as the reference.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    x = np.asarray(x, dtype=np.float64)
    n = obj.dim
    total = np.zeros(n)
    total_sq = np.zeros(n)
    norm_sq = 0.0
    done = 0
    while done < samples:
        b = min(chunk, samples - done)
        U = rng.directions(b, n)
        d = np.fromiter((obj.directional_derivative(x, u) for u in U), dtype=np.float64, count=b)
        phi = d[:, None] * U
        total += phi.sum(axis=0)
        total_sq += (phi * phi).sum(axis=0)
        norm_sq += float(np.sum(phi * phi))
        done += b
    mean = total / samples
    var = (total_sq - samples * mean * mean) / (samples - 1)
    return ForwardGradientStats(samples, obj.gradient(x), mean,
                                np.sqrt(np.maximum(var, 0.0)), norm_sq / samples)


def second_moment_ratio(obj, x: Vector, rng: RandomSource, N: int) -> float:
    """Empirical ``E||phi||^2 / ||grad f(x)||^2``.

    Population value is ``n + 2`` for Gaussian directions and exactly ``n``
    for Rademacher ones, both within the ``n + 4`` bound.
    """
    if N < 10_000:
        raise ValueError(f"N must be at least 1e4, got {N}")
    g = obj.gradient(np.asarray(x, dtype=np.float64))
    if not np.any(g):
        raise ValueError("gradient vanishes at x; the ratio is undefined")
    return forward_gradient_stats(obj, x, rng, N).second_moment_ratio
