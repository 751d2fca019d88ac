import gzip
import itertools
import math
import os
import struct

import numpy as np
import pytest

from forward_fw import L1Ball, RunConfig, run
from forward_fw.lmo import l1_ball_product
from forward_fw.problems import (BadMagicError, IdxFormatError, LeastSquares, MultinomialLogistic,
                                 Quadratic, TruncatedPayloadError, UnsupportedTypeError,
                                 cached_reference_optimum, generate_synthetic, load_idx, load_mnist,
                                 make_least_squares, make_quadratic, parse_idx, reference_optimum)


def _logistic(m=80, d=5, classes=4, seed=0):
    data = generate_synthetic(m, d, classes, seed=seed)
    return MultinomialLogistic(data.X, data.y, data.classes)


ZOO = {
    "quadratic": lambda: make_quadratic(12, seed=1),
    "least_squares": lambda: make_least_squares(30, 9, seed=1),
    "logistic": _logistic,
}


def _feasible_point(rng, n, radius=1.0):
    x = rng.standard_normal(n)
    return x * rng.uniform(0, radius) / np.abs(x).sum()


class TestLogisticValues:
    def test_zero_parameters_give_log_classes(self):
        obj = _logistic(classes=10)
        assert obj.value(np.zeros(obj.dim)) == pytest.approx(math.log(10), abs=1e-12)

    def test_binary_closed_form(self):
        obj = MultinomialLogistic(np.array([[1.0]]), np.array([0]), classes=2)
        assert obj.value(np.array([1.0, 0.0])) == pytest.approx(0.313262, abs=5e-7)
        assert obj.value(np.array([1.0, 0.0])) == pytest.approx(math.log1p(math.exp(-1)), rel=1e-15)

    def test_probabilities_sum_to_one(self, rng):
        obj = _logistic()
        p = obj.probabilities(rng.standard_normal(obj.dim) * 5)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, rtol=1e-14)
        assert np.all(p > 0)

    def test_convex_along_segments(self, rng):
        obj = _logistic()
        for _ in range(50):
            a, b = rng.standard_normal(obj.dim), rng.standard_normal(obj.dim)
            fa, fb = obj.value(a), obj.value(b)
            for lam in (0.25, 0.5, 0.75):
                assert obj.value(lam * a + (1 - lam) * b) <= lam * fa + (1 - lam) * fb + 1e-10

    def test_large_scores_do_not_overflow(self):
        obj = _logistic()
        f, g = obj.value_and_gradient(np.full(obj.dim, 300.0))
        assert np.isfinite(f) and np.all(np.isfinite(g))

    @pytest.mark.parametrize("X, y, classes", [
        (np.zeros((0, 2)), np.zeros(0, int), 2),
        (np.zeros((2, 2)), np.array([0, 2]), 2),
        (np.zeros((2, 2)), np.array([0.0, 1.0]), 2),
        (np.zeros((2, 2)), np.array([0, 0]), 1),
        (np.zeros((2, 2)), np.array([0]), 2),
    ])
    def test_rejects_bad_data(self, X, y, classes):
        with pytest.raises(ValueError):
            MultinomialLogistic(X, y, classes)


@pytest.mark.parametrize("name", sorted(ZOO))
def test_gradient_matches_central_differences(name, rng):
    obj = ZOO[name]()
    eps = 1e-6
    for _ in range(20):
        x = _feasible_point(rng, obj.dim)
        g = obj.gradient(x)
        fd = np.empty(obj.dim)
        for i in range(obj.dim):
            e = np.zeros(obj.dim)
            e[i] = eps
            fd[i] = (obj.value(x + e) - obj.value(x - e)) / (2 * eps)
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-5 * np.abs(g).max())


@pytest.mark.parametrize("name", sorted(ZOO))
def test_forward_mode_matches_gradient(name, rng):
    obj = ZOO[name]()
    for _ in range(100):
        x = rng.standard_normal(obj.dim)
        u = rng.standard_normal(obj.dim)
        f, d = obj.value_and_directional_derivative(x, u)
        assert abs(d - obj.gradient(x) @ u) <= 1e-8 * (1 + abs(d))
        assert f == pytest.approx(obj.value(x), rel=1e-14)


@pytest.mark.parametrize("name", sorted(ZOO))
def test_smoothness_constant_certifies_gradient_lipschitz(name, rng):
    obj = ZOO[name]()
    for _ in range(200):
        x, y = rng.standard_normal(obj.dim), rng.standard_normal(obj.dim)
        lhs = np.linalg.norm(obj.gradient(x) - obj.gradient(y))
        assert lhs <= obj.smoothness * np.linalg.norm(x - y) * (1 + 1e-12)


def test_quadratic_construction():
    obj = make_quadratic(20, seed=3, smoothness=2.0, condition=4.0, target_l1=1.5)
    eig = np.linalg.eigvalsh(obj.Q)
    assert eig[0] == pytest.approx(0.5) and eig[-1] == pytest.approx(2.0)
    assert obj.smoothness == pytest.approx(2.0)
    x_free = np.linalg.solve(obj.Q, obj.c)
    assert np.abs(x_free).sum() == pytest.approx(1.5)
    assert np.count_nonzero(np.abs(x_free) > 1e-9) == 5


@pytest.mark.parametrize("Q", [[[1.0, 2.0], [0.0, 1.0]], [[-1.0, 0.0], [0.0, 1.0]], [[1.0]]])
def test_quadratic_rejects_bad_matrix(Q):
    with pytest.raises(ValueError):
        Quadratic(Q, [0.0, 0.0])


def test_least_squares_rejects_negative_reg():
    with pytest.raises(ValueError):
        LeastSquares(np.eye(2), [0.0, 0.0], reg=-1.0)


class TestSynthetic:
    def test_deterministic(self):
        a, b = generate_synthetic(100, 5, 3, seed=7), generate_synthetic(100, 5, 3, seed=7)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)
        c = generate_synthetic(100, 5, 3, seed=8)
        assert not np.array_equal(a.X, c.X)

    def test_both_labels_present(self):
        for seed in range(20):
            assert set(generate_synthetic(10, 2, 2, seed=seed).y) == {0, 1}

    def test_learnable_by_exact_fw(self):
        train, test = generate_synthetic(1000, 10, 3, seed=11).split(0.7)
        obj = MultinomialLogistic(train.X, train.y, 3)
        trace = run(obj, l1_ball_product(3, 10, 1.0), RunConfig("fw", 2000))
        acc = float(np.mean(obj.predict(trace.x_final, test.X) == test.y))
        assert acc > 1 / 3 + 0.2

    @pytest.mark.parametrize("args", [(0, 2, 2), (10, 0, 2), (10, 2, 1), (10.5, 2, 2)])
    def test_rejects_bad_sizes(self, args):
        with pytest.raises(ValueError):
            generate_synthetic(*args, seed=0)


def _active_set_minimum(obj):
    """Exact minimum of a strictly convex quadratic over the unit l1-ball.

    The minimizer lies in the relative interior of some face, where it solves
    the quadratic restricted to that face's affine hull: either the free
    problem on a support S, or the one with sign constraint sigma'x_S = 1.
    Every feasible candidate is an upper bound, the true optimum is one of them.
    """
    n = obj.dim
    best = 0.0  # x = 0
    for size in range(1, n + 1):
        for S in itertools.combinations(range(n), size):
            S = list(S)
            QS, cS = obj.Q[np.ix_(S, S)], obj.c[S]
            candidates = [np.linalg.solve(QS, cS)]
            for sigma in itertools.product((-1.0, 1.0), repeat=size):
                sigma = np.array(sigma)
                # KKT: [QS sigma; sigma' 0] [x; mu] = [c; 1]
                K = np.block([[QS, sigma[:, None]], [sigma[None, :], np.zeros((1, 1))]])
                candidates.append(np.linalg.solve(K, np.append(cS, 1.0))[:size])
            for xs in candidates:
                if np.abs(xs).sum() <= 1 + 1e-12:
                    x = np.zeros(n)
                    x[S] = xs
                    best = min(best, obj.value(x))
    return best


@pytest.mark.slow
@pytest.mark.parametrize("n, seed", [(2, 0), (3, 1), (4, 2)])
def test_reference_optimum_agrees_with_active_set_solve(n, seed):
    obj = make_quadratic(n, seed=seed, support=n, target_l1=2.0)
    exact = _active_set_minimum(obj)
    best, lower = cached_reference_optimum(obj, L1Ball(n), 1_000_000)
    assert abs(best - exact) <= 1e-6
    assert lower - 1e-12 <= exact <= best + 1e-12


def test_active_set_oracle_on_hand_example():
    # f = 1/2||x||^2 - (2, 0)'x over the unit l1-ball: minimum at (1, 0) with value -1.5
    obj = Quadratic(np.eye(2), [2.0, 0.0])
    assert _active_set_minimum(obj) == pytest.approx(-1.5)


def test_reference_optimum_brackets_and_caches(tmp_path):
    obj = make_quadratic(5, seed=4)
    ball = L1Ball(5)
    fresh = reference_optimum(obj, ball, 3000)
    assert fresh[1] <= fresh[0]
    first = cached_reference_optimum(obj, ball, 3000, cache_dir=str(tmp_path))
    files = os.listdir(tmp_path)
    assert len(files) == 1 and files[0].startswith("fstar-")
    second = cached_reference_optimum(obj, ball, 3000, cache_dir=str(tmp_path))
    assert first == second == fresh


def test_fingerprint_tracks_data():
    a, b = make_quadratic(4, seed=0), make_quadratic(4, seed=0)
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != make_quadratic(4, seed=1).fingerprint()


def idx_bytes(type_code, dims, payload=b""):
    return bytes([0, 0, type_code, len(dims)]) + b"".join(struct.pack(">I", d) for d in dims) + payload


class TestIdx:
    def test_image_header(self):
        arr = parse_idx(idx_bytes(0x08, (10000, 28, 28), bytes(10000 * 28 * 28)))
        assert arr.shape == (10000, 28, 28) and arr.dtype == np.uint8

    def test_label_header(self):
        arr = parse_idx(idx_bytes(0x08, (10000,), bytes(range(10)) * 1000))
        assert arr.shape == (10000,)
        assert arr[:3].tolist() == [0, 1, 2]

    def test_big_endian_types(self):
        arr = parse_idx(idx_bytes(0x0C, (2,), struct.pack(">ii", 1, -2)))
        assert arr.tolist() == [1, -2]
        arr = parse_idx(idx_bytes(0x0E, (1,), struct.pack(">d", 0.5)))
        assert arr.tolist() == [0.5]

    def test_truncated(self):
        with pytest.raises(TruncatedPayloadError, match="payload shorter than header promises"):
            parse_idx(idx_bytes(0x08, (3, 2), bytes(5)))

    def test_bad_magic(self):
        with pytest.raises(BadMagicError):
            parse_idx(b"\x01\x00\x08\x01\x00\x00\x00\x00")

    def test_unsupported_type(self):
        with pytest.raises(UnsupportedTypeError):
            parse_idx(idx_bytes(0x0A, (1,), b"\x00"))

    def test_errors_are_distinct(self):
        kinds = {BadMagicError, UnsupportedTypeError, TruncatedPayloadError}
        assert len(kinds) == 3 and all(issubclass(k, IdxFormatError) for k in kinds)

    def test_gzip_file(self, tmp_path):
        p = tmp_path / "x.idx.gz"
        p.write_bytes(gzip.compress(idx_bytes(0x08, (2, 2), bytes([1, 2, 3, 4]))))
        assert load_idx(p).tolist() == [[1, 2], [3, 4]]


def write_fake_mnist(directory, count=12, compress=False, prefix="train"):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, (count, 28, 28), dtype=np.uint8)
    labels = (np.arange(count) % 10).astype(np.uint8)
    files = {
        f"{prefix}-images-idx3-ubyte": idx_bytes(0x08, images.shape, images.tobytes()),
        f"{prefix}-labels-idx1-ubyte": idx_bytes(0x08, labels.shape, labels.tobytes()),
    }
    for name, raw in files.items():
        if compress:
            (directory / (name + ".gz")).write_bytes(gzip.compress(raw))
        else:
            (directory / name).write_bytes(raw)
    return images, labels


@pytest.mark.parametrize("compress", [False, True])
def test_load_mnist_from_fake_files(tmp_path, compress):
    images, labels = write_fake_mnist(tmp_path, compress=compress)
    data = load_mnist(tmp_path)
    assert data.X.shape == (12, 784) and data.classes == 10
    assert data.X.min() >= 0 and data.X.max() <= 1
    np.testing.assert_array_equal(data.X[3], images[3].ravel() / 255.0)
    np.testing.assert_array_equal(data.y, labels)
    assert len(load_mnist(tmp_path, limit=5).y) == 5


def test_load_mnist_missing_or_mismatched(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_mnist(tmp_path)
    write_fake_mnist(tmp_path, count=4)
    (tmp_path / "train-labels-idx1-ubyte").write_bytes(idx_bytes(0x08, (3,), bytes(3)))
    with pytest.raises(IdxFormatError):
        load_mnist(tmp_path)
    with pytest.raises(ValueError):
        load_mnist(tmp_path, split="validation")


@pytest.mark.skipif(not os.environ.get("FORWARD_FW_MNIST"),
                    reason="set FORWARD_FW_MNIST to a directory with the MNIST IDX files")
def test_real_mnist_training_split():
    data = load_mnist(os.environ["FORWARD_FW_MNIST"])
    assert data.X.shape == (60000, 784)
    assert set(np.unique(data.y)) == set(range(10))
