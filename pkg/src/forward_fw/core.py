"""Shared types: vectors, objectives, feasible sets, schedules, randomness, traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Protocol, runtime_checkable

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]

#: absolute membership tolerance shared by every feasible set
MEMBERSHIP_TOL = 1e-9

DIRECTIONS = ("gaussian", "rademacher")


class NonFiniteStateError(FloatingPointError):
    """Raised when NaN or Inf enters algorithm state."""

    def __init__(self, message: str, iteration: Optional[int] = None, seed: Optional[int] = None):
        self.iteration = iteration
        self.seed = seed
        where = []
        if seed is not None:
            where.append(f"seed={seed}")
        if iteration is not None:
            where.append(f"k={iteration}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


def as_vector(x, n: Optional[int] = None, name: str = "x") -> Vector:
    """Copy ``x`` into a finite float64 1-d array, optionally checking its length."""
    v = np.array(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteStateError(f"{name} contains non-finite entries")
    return v


def check_finite(x, what: str, iteration: Optional[int] = None) -> None:
    if not np.all(np.isfinite(x)):
        raise NonFiniteStateError(f"non-finite {what}", iteration=iteration)


@runtime_checkable
class Objective(Protocol):
    """A differentiable function of a length-``dim`` vector.

    ``smoothness`` is the Lipschitz constant of the gradient when known,
    ``f_star`` a reference minimum over the feasible set when known.
    """

    dim: int
    smoothness: Optional[float]
    f_star: Optional[float]

    def value(self, x: Vector) -> float: ...

    def gradient(self, x: Vector) -> Vector: ...

    def directional_derivative(self, x: Vector, u: Vector) -> float: ...


@runtime_checkable
class FeasibleSet(Protocol):
    dim: int

    @property
    def diameter(self) -> float: ...

    def lmo(self, g: Vector) -> Vector: ...

    def contains(self, x: Vector, tol: float = MEMBERSHIP_TOL) -> bool: ...


def convex_step(x: Vector, s: Vector, alpha: float) -> Vector:
    """Return ``(1 - alpha) * x + alpha * s``."""
    if x.shape != s.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {s.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"step size must lie in [0, 1], got {alpha}")
    return (1.0 - alpha) * x + alpha * s


def fw_gap(obj: Objective, feasible: FeasibleSet, x: Vector) -> float:
    """Frank-Wolfe duality gap ``<grad f(x), x - lmo(grad f(x))>``.

    Non-negative on the feasible set and zero exactly at constrained
    stationary points; for convex ``f`` it upper-bounds ``f(x) - f*``.
    """
    g = obj.gradient(x)
    s = feasible.lmo(g)
    return float(g @ (x - s))


@dataclass(frozen=True)
class Schedule:
    """Power step-size rule ``a / (k + b) ** p`` for ``k >= 1``.

    ``p = 0`` gives the constant schedule ``a / 1``. Steps must stay in
    (0, 1] so that convex combinations remain feasible; since the
    sequence is non-increasing this only needs checking at ``k = 1``.
    """

    a: float = 1.0
    b: float = 0.0
    p: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "p"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ValueError(f"schedule parameter {name} must be a finite number, got {v!r}")
        if self.a <= 0:
            raise ValueError(f"schedule coefficient a must be positive, got {self.a}")
        if self.b < 0:
            raise ValueError(f"schedule offset b must be non-negative, got {self.b}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"schedule exponent p must lie in [0, 1], got {self.p}")
        if self.a / (1.0 + self.b) ** self.p > 1.0:
            raise ValueError(f"schedule {self} exceeds 1 at k=1")

    def __call__(self, k: int) -> float:
        return schedule_eval(self, k)

    def __str__(self) -> str:
        a = _fmt(self.a)
        if self.p == 0:
            return a
        base = "k" if self.b == 0 else f"(k+{_fmt(self.b)})"
        if self.p == 1:
            return f"{a}/{base}"
        if self.p == 0.5:
            return f"{a}/sqrt({base})"
        return f"{a}/{base}^{_fmt(self.p)}"


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def schedule_eval(sched: Schedule, k: int) -> float:
    if k < 1:
        raise ValueError(f"iteration counter starts at 1, got k={k}")
    return sched.a / (k + sched.b) ** sched.p


#: classical exact Frank-Wolfe step 2/(k+2)
FW_DEFAULT_ALPHA = Schedule(2.0, 2.0, 1.0)
#: step sizes used for the forward-gradient variants: alpha_k = 1/k, gamma_k = 1/sqrt(k)
DEFAULT_ALPHA = Schedule(1.0, 0.0, 1.0)
DEFAULT_GAMMA = Schedule(1.0, 0.0, 0.5)


class RandomSource:
    """Seeded stream of random directions with i.i.d. zero-mean, unit-variance entries.

    Batched draws consume the generator exactly like the same number of
    single draws, so ``directions(N, n)`` rows equal ``N`` calls to
    ``direction(n)``.
    """

    def __init__(self, seed: int, distribution: str = "gaussian"):
        if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        if distribution not in DIRECTIONS:
            raise ValueError(f"unknown direction distribution {distribution!r}; expected one of {DIRECTIONS}")
        self.seed = int(seed)
        self.distribution = distribution
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def directions(self, count: int, n: int) -> NDArray[np.float64]:
        if self.distribution == "gaussian":
            return self._gen.standard_normal((count, n))
        return np.where(self._gen.random((count, n)) < 0.5, -1.0, 1.0)

    def direction(self, n: int) -> Vector:
        return self.directions(1, n)[0]


@dataclass
class Trace:
    """Per-iteration record of one run.

    Row ``k - 1`` describes the iterate ``x_k`` produced by the k-th step.
    Optional columns are ``None`` when the quantity was not measured
    (no reference optimum, or not instrumented).
    """

    k: NDArray[np.int64]
    f_value: NDArray[np.float64]
    suboptimality: Optional[NDArray[np.float64]]
    fw_gap: Optional[NDArray[np.float64]]
    estimator_error: Optional[NDArray[np.float64]]
    wall_time: NDArray[np.float64]
    x_final: Vector
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.k)
