"""Feasible sets with exact linear minimization oracles.

Every oracle returns an extreme point minimizing ``<s, g>``. Ties are
broken toward the lowest index; a zero ``g`` still yields a fixed vertex
because forward-gradient estimates can vanish exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .core import MEMBERSHIP_TOL, Vector


def lmo_l1(g: Vector, r: float = 1.0) -> Vector:
    """Vertex ``-r * sign(g_i) * e_i`` of the l1-ball at ``i = argmax |g_i|``.

    ``g_i == 0`` (only possible when ``g == 0``) maps to ``+r * e_i``.
    """
    g = np.asarray(g, dtype=np.float64)
    i = int(np.argmax(np.abs(g)))
    s = np.zeros_like(g)
    s[i] = -r if g[i] > 0 else r
    return s


def lmo_simplex(g: Vector) -> Vector:
    """Vertex ``e_i`` of the probability simplex at ``i = argmin g_i``."""
    g = np.asarray(g, dtype=np.float64)
    s = np.zeros_like(g)
    s[int(np.argmin(g))] = 1.0
    return s


def lmo_box(g: Vector, lower: Vector, upper: Vector) -> Vector:
    """Per coordinate: upper bound where ``g_i < 0``, lower bound otherwise."""
    g = np.asarray(g, dtype=np.float64)
    return np.where(g < 0, upper, lower).astype(np.float64)


def lmo_l2(g: Vector, r: float = 1.0) -> Vector:
    """``-r * g / ||g||``; ``g == 0`` maps to ``+r * e_1``."""
    g = np.asarray(g, dtype=np.float64)
    nrm = float(np.linalg.norm(g))
    if nrm == 0.0:
        s = np.zeros_like(g)
        s[0] = r
        return s
    return -r * g / nrm


class L1Ball:
    """``{x : ||x||_1 <= radius}`` in R^dim."""

    def __init__(self, dim: int, radius: float = 1.0):
        _check_dim(dim)
        if not radius > 0:
            raise ValueError(f"radius must be positive, got {radius}")
        self.dim = int(dim)
        self.radius = float(radius)

    def __repr__(self):
        return f"L1Ball(dim={self.dim}, radius={self.radius})"

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def lmo(self, g: Vector) -> Vector:
        return lmo_l1(g, self.radius)

    def contains(self, x: Vector, tol: float = MEMBERSHIP_TOL) -> bool:
        return _right_dim(x, self.dim) and float(np.sum(np.abs(x))) <= self.radius + tol

    def vertices(self) -> Iterator[Vector]:
        for i in range(self.dim):
            for sign in (1.0, -1.0):
                v = np.zeros(self.dim)
                v[i] = sign * self.radius
                yield v


class Simplex:
    """Probability simplex ``{x >= 0, sum x = 1}``."""

    def __init__(self, dim: int):
        _check_dim(dim)
        self.dim = int(dim)

    def __repr__(self):
        return f"Simplex(dim={self.dim})"

    @property
    def diameter(self) -> float:
        return math.sqrt(2.0) if self.dim > 1 else 0.0

    def lmo(self, g: Vector) -> Vector:
        return lmo_simplex(g)

    def contains(self, x: Vector, tol: float = MEMBERSHIP_TOL) -> bool:
        return (_right_dim(x, self.dim) and bool(np.all(x >= -tol))
                and abs(float(np.sum(x)) - 1.0) <= tol)

    def vertices(self) -> Iterator[Vector]:
        yield from np.eye(self.dim)


class Box:
    """``{lower <= x <= upper}`` coordinatewise."""

    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        self.lower = np.array(lower, dtype=np.float64)
        self.upper = np.array(upper, dtype=np.float64)
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise ValueError("lower and upper must be 1-d arrays of equal length")
        _check_dim(len(self.lower))
        if not np.all(self.lower <= self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("box bounds must be finite")
        self.dim = len(self.lower)

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def lmo(self, g: Vector) -> Vector:
        return lmo_box(g, self.lower, self.upper)

    def contains(self, x: Vector, tol: float = MEMBERSHIP_TOL) -> bool:
        return (_right_dim(x, self.dim) and bool(np.all(x >= self.lower - tol))
                and bool(np.all(x <= self.upper + tol)))

    def vertices(self) -> Iterator[Vector]:
        for pick in itertools.product((0, 1), repeat=self.dim):
            yield np.where(np.array(pick) == 1, self.upper, self.lower)


class L2Ball:
    """``{x : ||x||_2 <= radius}``; not a polytope, so no ``vertices``."""

    def __init__(self, dim: int, radius: float = 1.0):
        _check_dim(dim)
        if not radius > 0:
            raise ValueError(f"radius must be positive, got {radius}")
        self.dim = int(dim)
        self.radius = float(radius)

    def __repr__(self):
        return f"L2Ball(dim={self.dim}, radius={self.radius})"

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def lmo(self, g: Vector) -> Vector:
        return lmo_l2(g, self.radius)

    def contains(self, x: Vector, tol: float = MEMBERSHIP_TOL) -> bool:
        return _right_dim(x, self.dim) and float(np.linalg.norm(x)) <= self.radius + tol


class ProductSet:
    """Cartesian product of sets acting on consecutive blocks of the vector."""

    def __init__(self, components: Sequence):
        if not components:
            raise ValueError("a product set needs at least one component")
        self.components = list(components)
        self.dim = sum(c.dim for c in self.components)
        bounds = np.cumsum([0] + [c.dim for c in self.components])
        self._slices = [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]

    def __repr__(self):
        return f"ProductSet({self.components!r})"

    @property
    def diameter(self) -> float:
        return math.sqrt(sum(c.diameter ** 2 for c in self.components))

    def blocks(self, x: Vector):
        return [x[sl] for sl in self._slices]

    def lmo(self, g: Vector) -> Vector:
        g = np.asarray(g, dtype=np.float64)
        if g.shape != (self.dim,):
            raise ValueError(f"expected length {self.dim}, got shape {g.shape}")
        return np.concatenate([c.lmo(g[sl]) for c, sl in zip(self.components, self._slices)])

    def contains(self, x: Vector, tol: float = MEMBERSHIP_TOL) -> bool:
        return _right_dim(x, self.dim) and all(
            c.contains(x[sl], tol) for c, sl in zip(self.components, self._slices))

    def vertices(self) -> Iterator[Vector]:
        for parts in itertools.product(*(list(c.vertices()) for c in self.components)):
            yield np.concatenate(parts)


def l1_ball_product(blocks: int, block_dim: int, radius: float = 1.0) -> ProductSet:
    """One l1-ball of the given radius per parameter block."""
    return ProductSet([L1Ball(block_dim, radius) for _ in range(blocks)])


def _check_dim(dim):
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dimension must be a positive integer, got {dim}")


def _right_dim(x, dim) -> bool:
    return np.shape(x) == (dim,)


@dataclass(frozen=True)
class OracleCheck:
    set_type: str
    trials: int
    failures: int
    max_error: float

    @property
    def passed(self) -> bool:
        return self.failures == 0


def _random_set(kind: str, n: int, rng: np.random.Generator):
    if kind == "l1":
        return L1Ball(n, rng.uniform(0.5, 2.0))
    if kind == "simplex":
        return Simplex(n)
    if kind == "box":
        lo = rng.uniform(-2.0, 0.0, n)
        return Box(lo, lo + rng.uniform(0.1, 2.0, n))
    if kind == "l2":
        return L2Ball(n, rng.uniform(0.5, 2.0))
    if kind == "product":
        split = int(rng.integers(1, n)) if n > 1 else 1
        dims = [split, n - split] if n > 1 else [1]
        return ProductSet([L1Ball(k, rng.uniform(0.5, 2.0)) for k in dims])
    raise ValueError(f"unknown set type {kind!r}")


SET_TYPES = ("l1", "simplex", "box", "l2", "product")


def check_oracles(trials: int = 1000, max_dim: int = 8, seed: int = 0,
                  tol: float = 1e-12) -> list:
    """Compare every oracle against brute force on random linear objectives.

    Polytopes are checked against the minimum over their enumerated
    vertices, the l2-ball against the closed form ``-r ||g||``. Each trial
    also requires the oracle output to be a member of the set.
    """
    rng = np.random.default_rng(seed)
    report = []
    for kind in SET_TYPES:
        failures, worst = 0, 0.0
        for _ in range(trials):
            n = int(rng.integers(1, max_dim + 1))
            feasible = _random_set(kind, n, rng)
            g = rng.standard_normal(n)
            s = feasible.lmo(g)
            got = float(s @ g)
            if kind == "l2":
                best = -feasible.radius * float(np.linalg.norm(g))
            else:
                best = min(float(v @ g) for v in feasible.vertices())
            err = abs(got - best)
            worst = max(worst, err)
            if err > tol * max(1.0, abs(best)) or not feasible.contains(s):
                failures += 1
        report.append(OracleCheck(kind, trials, failures, worst))
    return report
