"""Objective zoo: quadratics, regularized least squares, multinomial logistic regression.

Each objective defines its value once as a ``program`` written against
:mod:`forward_fw.autodiff`, so the same code gives plain values and
forward-mode directional derivatives. Exact gradients are hand-derived
and exist for diagnostics and the exact Frank-Wolfe baseline.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import autodiff as ad
from .core import FW_DEFAULT_ALPHA, Vector, as_vector, convex_step


class DifferentiableObjective:
    """Base class: subclasses provide ``program`` and ``gradient``."""

    dim: int
    smoothness: Optional[float] = None
    f_star: Optional[float] = None

    def program(self, x):
        raise NotImplementedError

    def gradient(self, x: Vector) -> Vector:
        raise NotImplementedError

    def value(self, x: Vector) -> float:
        return float(self.program(np.asarray(x, dtype=np.float64)))

    def value_and_gradient(self, x: Vector) -> Tuple[float, Vector]:
        return self.value(x), self.gradient(x)

    def directional_derivative(self, x: Vector, u: Vector) -> float:
        return ad.jvp(self.program, x, u)

    def value_and_directional_derivative(self, x: Vector, u: Vector) -> Tuple[float, float]:
        return ad.value_and_jvp(self.program, x, u)

    def _defining_data(self):
        raise NotImplementedError

    def fingerprint(self) -> str:
        """SHA-256 over the arrays that define the objective."""
        h = hashlib.sha256(type(self).__name__.encode())
        for a in self._defining_data():
            a = np.ascontiguousarray(a)
            h.update(str(a.dtype).encode() + str(a.shape).encode())
            h.update(a.tobytes())
        return h.hexdigest()


class Quadratic(DifferentiableObjective):
    """``f(x) = 1/2 x'Qx - c'x`` with symmetric positive semidefinite ``Q``."""

    def __init__(self, Q, c, f_star: Optional[float] = None):
        Q = np.array(Q, dtype=np.float64)
        c = as_vector(c, name="c")
        if Q.shape != (len(c), len(c)):
            raise ValueError(f"Q has shape {Q.shape}, expected {(len(c), len(c))}")
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        eig = np.linalg.eigvalsh(Q)
        if eig[0] < -1e-10 * max(1.0, eig[-1]):
            raise ValueError("Q must be positive semidefinite")
        self.Q, self.c = Q, c
        self.dim = len(c)
        self.smoothness = float(eig[-1])
        self.f_star = f_star

    def program(self, x):
        return 0.5 * (x @ (self.Q @ x)) - self.c @ x

    def gradient(self, x):
        return self.Q @ x - self.c

    def _defining_data(self):
        return self.Q, self.c

    def value_and_gradient(self, x):
        Qx = self.Q @ x
        return float(0.5 * (x @ Qx) - self.c @ x), Qx - self.c


class LeastSquares(DifferentiableObjective):
    """``f(x) = ||Ax - b||^2 / (2m) + reg/2 ||x||^2``."""

    def __init__(self, A, b, reg: float = 0.0, f_star: Optional[float] = None):
        self.A = np.array(A, dtype=np.float64)
        self.b = as_vector(b, name="b")
        if self.A.ndim != 2 or self.A.shape[0] != len(self.b):
            raise ValueError("A must be an m x n matrix matching b")
        if reg < 0:
            raise ValueError("reg must be non-negative")
        self.reg = float(reg)
        self.m, self.dim = self.A.shape
        self.smoothness = float(np.linalg.norm(self.A, 2) ** 2 / self.m + self.reg)
        self.f_star = f_star

    def program(self, x):
        r = self.A @ x - self.b
        return (r @ r) / (2 * self.m) + 0.5 * self.reg * (x @ x)

    def gradient(self, x):
        return self.A.T @ (self.A @ x - self.b) / self.m + self.reg * x

    def _defining_data(self):
        return self.A, self.b, np.array([self.reg])


class MultinomialLogistic(DifferentiableObjective):
    """Average softmax cross-entropy, no intercept.

    Parameters are class-blocked: ``theta[j*d:(j+1)*d]`` scores class ``j``.
    Labels are integers in ``0 .. classes-1``.
    """

    def __init__(self, X, y, classes: Optional[int] = None, f_star: Optional[float] = None):
        X = np.array(X, dtype=np.float64)
        y = np.asarray(y)
        if X.ndim != 2 or len(X) == 0:
            raise ValueError("X must be a non-empty m x d matrix")
        if y.shape != (len(X),):
            raise ValueError(f"expected {len(X)} labels, got shape {y.shape}")
        if not np.issubdtype(y.dtype, np.integer):
            raise ValueError("labels must be integers")
        classes = int(y.max()) + 1 if classes is None else int(classes)
        if classes < 2:
            raise ValueError("need at least two classes")
        if y.min() < 0 or y.max() >= classes:
            raise ValueError(f"label out of range 0..{classes - 1}")
        self.X, self.y = X, y.astype(np.int64)
        # scores are laid out classes x instances so reductions run over contiguous rows
        self._Xt = np.ascontiguousarray(X.T)
        self.m, self.d = X.shape
        self.classes = classes
        self.dim = self.d * classes
        self._rows = np.arange(self.m)
        self._onehot_t = np.ascontiguousarray(np.eye(classes)[self.y].T)
        # softmax Jacobian diag(p) - pp' has spectral norm <= 1/2
        self.smoothness = float(0.5 * np.linalg.norm(X, 2) ** 2 / self.m)
        self.f_star = f_star

    def program(self, theta):
        scores = theta.reshape(self.classes, self.d) @ self._Xt
        return ad.mean(ad.logsumexp(scores, axis=0) - scores[self.y, self._rows])

    def probabilities(self, theta: Vector) -> np.ndarray:
        scores = self.X @ np.reshape(theta, (self.classes, self.d)).T
        scores = scores - scores.max(axis=1, keepdims=True)
        p = np.exp(scores)
        return p / p.sum(axis=1, keepdims=True)

    def gradient(self, theta):
        return self.value_and_gradient(theta)[1]

    def value_and_gradient(self, theta):
        scores = np.reshape(theta, (self.classes, self.d)) @ self._Xt
        scores = scores - scores.max(axis=0)
        e = np.exp(scores)
        z = e.sum(axis=0)
        loss = float(np.mean(np.log(z) - scores[self.y, self._rows]))
        grad = ((e / z - self._onehot_t) @ self.X) / self.m
        return loss, grad.ravel()

    def predict(self, theta: Vector, X=None) -> np.ndarray:
        X = self.X if X is None else np.asarray(X, dtype=np.float64)
        return np.argmax(X @ np.reshape(theta, (self.classes, self.d)).T, axis=1)

    def _defining_data(self):
        return self.X, self.y, np.array([self.classes])


def make_quadratic(n: int, seed: int = 0, *, smoothness: float = 1.0,
                   condition: float = 10.0, support: int = 5,
                   target_l1: float = 2.0) -> Quadratic:
    """Random quadratic with eigenvalues evenly spread over ``[M/condition, M]``.

    ``c`` is set so the unconstrained minimizer is sparse with l1 norm
    ``target_l1``; values above 1 put it outside the unit l1-ball.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = np.linspace(smoothness / condition, smoothness, n) if n > 1 else np.array([smoothness])
    Q = (basis * eig) @ basis.T
    Q = 0.5 * (Q + Q.T)
    x_free = np.zeros(n)
    idx = rng.choice(n, size=min(support, n), replace=False)
    x_free[idx] = rng.standard_normal(len(idx))
    x_free *= target_l1 / np.abs(x_free).sum()
    return Quadratic(Q, Q @ x_free)


def make_least_squares(m: int, n: int, seed: int = 0, reg: float = 0.01) -> LeastSquares:
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    x_true = np.zeros(n)
    x_true[rng.choice(n, size=max(1, n // 5), replace=False)] = 1.0
    b = A @ x_true + 0.1 * rng.standard_normal(m)
    return LeastSquares(A, b, reg=reg)


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    classes: int

    def split(self, fraction: float) -> Tuple["Dataset", "Dataset"]:
        cut = int(round(len(self.y) * fraction))
        return (Dataset(self.X[:cut], self.y[:cut], self.classes),
                Dataset(self.X[cut:], self.y[cut:], self.classes))


def generate_synthetic(n_instances: int, d: int, classes: int, seed: int,
                       separation: float = 1.0) -> Dataset:
    """Class-conditional Gaussians ``N(mu_j, I)`` with ``mu_j ~ N(0, separation^2 I)``.

    Labels cycle through the classes before shuffling, so every class
    appears whenever ``n_instances >= classes``.
    """
    for name, v in (("n_instances", n_instances), ("d", d), ("classes", classes)):
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v}")
    if classes < 2:
        raise ValueError("need at least two classes")
    rng = np.random.default_rng(seed)
    means = separation * rng.standard_normal((classes, d))
    y = np.arange(n_instances) % classes
    rng.shuffle(y)
    X = means[y] + rng.standard_normal((n_instances, d))
    return Dataset(X, y.astype(np.int64), int(classes))


def reference_optimum(obj, feasible, iterations: int, x0: Optional[Vector] = None) -> Tuple[float, float]:
    """Long exact Frank-Wolfe run with step ``2/(k+2)``.

    Returns ``(best value seen, best lower bound f(x) - gap(x))``; the true
    minimum over the set lies between the two for convex ``f``.
    """
    x = np.zeros(obj.dim) if x0 is None else np.array(x0, dtype=np.float64)
    best, lower = np.inf, -np.inf
    for k in range(1, iterations + 1):
        f, g = obj.value_and_gradient(x)
        s = feasible.lmo(g)
        best = min(best, f)
        lower = max(lower, f - float(g @ (x - s)))
        x = convex_step(x, s, FW_DEFAULT_ALPHA(k))
    best = min(best, obj.value(x))
    return float(best), float(lower)


def default_cache_dir() -> str:
    return os.environ.get("FORWARD_FW_CACHE") or os.path.join(
        os.path.expanduser("~"), ".cache", "forward_fw")


def cached_reference_optimum(obj, feasible, iterations: int,
                             cache_dir: Optional[str] = None) -> Tuple[float, float]:
    """:func:`reference_optimum` from the origin, memoized on disk.

    Keyed by the objective's fingerprint, the set and the iteration count;
    values are stored as exact float reprs so cached and fresh runs agree
    bit for bit.
    """
    cache_dir = default_cache_dir() if cache_dir is None else cache_dir
    key = hashlib.sha256(f"{obj.fingerprint()}|{feasible!r}|{iterations}".encode()).hexdigest()
    path = os.path.join(cache_dir, f"fstar-{key[:32]}.json")
    try:
        with open(path) as f:
            entry = json.load(f)
        return float(entry["f_star"]), float(entry["lower_bound"])
    except (OSError, ValueError, KeyError):
        pass
    best, lower = reference_optimum(obj, feasible, iterations)
    try:
        os.makedirs(cache_dir, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
        with os.fdopen(fd, "w") as f:
            json.dump({"f_star": best, "lower_bound": lower, "iterations": iterations,
                       "set": repr(feasible)}, f)
        os.replace(tmp, path)
    except OSError:
        # an unwritable cache only costs recomputation
        pass
    return best, lower


# --- IDX files -------------------------------------------------------------

class IdxFormatError(ValueError):
    """Malformed IDX file."""


class BadMagicError(IdxFormatError):
    pass


class UnsupportedTypeError(IdxFormatError):
    pass


class TruncatedPayloadError(IdxFormatError):
    pass


_IDX_TYPES = {
    0x08: np.dtype(np.uint8),
    0x09: np.dtype(np.int8),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


def parse_idx(raw: bytes) -> np.ndarray:
    """Decode IDX bytes: two zero bytes, type byte, rank byte, big-endian u32 dims, payload."""
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise BadMagicError("bad magic: IDX files start with two zero bytes")
    type_code, rank = raw[2], raw[3]
    if type_code not in _IDX_TYPES:
        raise UnsupportedTypeError(f"unsupported IDX type byte 0x{type_code:02x}")
    header = 4 + 4 * rank
    if len(raw) < header:
        raise TruncatedPayloadError("file shorter than its dimension header")
    dims = tuple(int.from_bytes(raw[4 + 4 * i: 8 + 4 * i], "big") for i in range(rank))
    dtype = _IDX_TYPES[type_code]
    need = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
    if len(raw) - header < need:
        raise TruncatedPayloadError("payload shorter than header promises")
    data = np.frombuffer(raw, dtype=dtype, count=need // dtype.itemsize, offset=header)
    return data.reshape(dims)


def load_idx(path) -> np.ndarray:
    """Read an IDX file (optionally gzip-compressed) into an array shaped by its header."""
    path = os.fspath(path)
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rb") as f:
        return parse_idx(f.read())


_MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def _find(directory, stem):
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx")):
        p = os.path.join(directory, name)
        if os.path.exists(p):
            return p
    raise FileNotFoundError(f"no {stem}[.gz] in {directory}")


def load_mnist(directory, split: str = "train", limit: Optional[int] = None) -> Dataset:
    """MNIST images scaled to [0, 1] and flattened row-major to 784 features."""
    if split not in _MNIST_FILES:
        raise ValueError(f"split must be one of {sorted(_MNIST_FILES)}")
    img_stem, lbl_stem = _MNIST_FILES[split]
    images = load_idx(_find(directory, img_stem))
    labels = load_idx(_find(directory, lbl_stem))
    if images.ndim != 3 or labels.ndim != 1 or len(images) != len(labels):
        raise IdxFormatError("image/label files do not describe the same number of examples")
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    X = images.reshape(len(images), -1).astype(np.float64) / 255.0
    return Dataset(X, labels.astype(np.int64), 10)
