import numpy as np
import pytest

from forward_fw import autodiff as ad

from forward_fw import (DEFAULT_ALPHA, Box, ConfigError, L1Ball, NonFiniteStateError, Quadratic,
                        RandomSource, RunConfig, Schedule, run, run_afgfw, run_fgfw, run_fw)
from forward_fw.lmo import L2Ball, ProductSet, Simplex, l1_ball_product
from forward_fw.problems import MultinomialLogistic, generate_synthetic, make_quadratic


def half_sq(n):
    return Quadratic(np.eye(n), np.zeros(n), f_star=0.0)


def test_one_fw_step_by_hand():
    cfg = RunConfig("fw", 1, x0=[1.0, 0.0])
    trace = run_fw(half_sq(2), L1Ball(2), cfg)
    np.testing.assert_allclose(trace.x_final, [-1 / 3, 0.0], rtol=1e-15)
    assert trace.f_value[0] == pytest.approx(1 / 18)
    assert len(trace) == 1 and trace.k.tolist() == [1]


@pytest.mark.parametrize("algorithm", ["fw", "fgfw", "afgfw"])
def test_zero_iterations(algorithm):
    x0 = np.array([0.2, -0.3])
    trace = run(half_sq(2), L1Ball(2), RunConfig(algorithm, 0, x0=x0))
    assert len(trace) == 0
    np.testing.assert_array_equal(trace.x_final, x0)
    assert trace.x_final is not x0


def test_fw_from_interior_optimum_respects_rate_bound():
    trace = run_fw(half_sq(2), L1Ball(2), RunConfig("fw", 500))
    k = trace.k
    assert np.all(trace.suboptimality <= 2 * 1 * 2 ** 2 / (k + 2))
    # zero gradient at x0 = 0 selects +e_1
    assert trace.f_value[0] == pytest.approx(0.5 * (2 / 3) ** 2)


def test_fw_values_match_direct_evaluation():
    obj = make_quadratic(8, seed=2)
    ball = L1Ball(8)
    xs = []
    trace = run_fw(obj, ball, RunConfig("fw", 30, instrumented=True), callback=lambda k, x: xs.append(x))
    np.testing.assert_allclose(trace.f_value, [obj.value(x) for x in xs], rtol=1e-14)
    gaps = []
    for x in xs:
        g = obj.gradient(x)
        gaps.append(g @ (x - ball.lmo(g)))
    np.testing.assert_allclose(trace.fw_gap, gaps, rtol=1e-12)


def test_forward_values_match_direct_evaluation():
    obj = make_quadratic(8, seed=2)
    xs = []
    trace = run_afgfw(obj, L1Ball(8), RunConfig("afgfw", 40, seed=3), callback=lambda k, x: xs.append(x))
    np.testing.assert_allclose(trace.f_value, [obj.value(x) for x in xs], rtol=1e-14)


def test_fgfw_with_gradient_directions_reproduces_fw(monkeypatch):
    # u = g / sqrt(||g||) makes phi = <g, u> u exactly g, so FGFW must follow FW's path
    import forward_fw.algorithms as alg
    from forward_fw.estimators import sample_forward_gradient

    def forced(obj, x, rng):
        g = obj.gradient(x)
        return sample_forward_gradient(obj, x, direction=g / np.sqrt(np.linalg.norm(g)))

    monkeypatch.setattr(alg, "sample_forward_gradient", forced)
    obj = make_quadratic(6, seed=5)
    ball = L1Ball(6)
    fg = run_fgfw(obj, ball, RunConfig("fgfw", 50, alpha=DEFAULT_ALPHA))
    fw = run_fw(obj, ball, RunConfig("fw", 50, alpha=DEFAULT_ALPHA))
    np.testing.assert_allclose(fg.x_final, fw.x_final, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(fg.f_value, fw.f_value, rtol=1e-12)


@pytest.mark.parametrize("algorithm", ["fgfw", "afgfw"])
def test_same_seed_same_trace(algorithm):
    obj = make_quadratic(10, seed=1)
    a = run(obj, L1Ball(10), RunConfig(algorithm, 300, seed=42))
    b = run(obj, L1Ball(10), RunConfig(algorithm, 300, seed=42))
    c = run(obj, L1Ball(10), RunConfig(algorithm, 300, seed=43))
    np.testing.assert_array_equal(a.f_value, b.f_value)
    np.testing.assert_array_equal(a.x_final, b.x_final)
    assert not np.array_equal(a.f_value, c.f_value)


@pytest.mark.parametrize("distribution", ["gaussian", "rademacher"])
def test_constant_gamma_reduces_to_fgfw(distribution):
    obj = make_quadratic(10, seed=1)
    ball = L1Ball(10)
    one = Schedule(1.0, 0.0, 0.0)
    af = run(obj, ball, RunConfig("afgfw", 500, gamma=one, seed=5, distribution=distribution))
    fg = run(obj, ball, RunConfig("fgfw", 500, seed=5, distribution=distribution))
    np.testing.assert_array_equal(af.f_value, fg.f_value)
    np.testing.assert_array_equal(af.x_final, fg.x_final)


def _sets():
    return [L1Ball(6, 0.7), Simplex(6), Box(-np.ones(6), np.ones(6)), L2Ball(6, 1.2),
            ProductSet([L1Ball(3), L1Ball(3, 0.5)])]


@pytest.mark.parametrize("feasible", _sets(), ids=lambda s: type(s).__name__)
@pytest.mark.parametrize("algorithm", ["fw", "fgfw", "afgfw"])
def test_every_iterate_feasible(feasible, algorithm):
    obj = make_quadratic(6, seed=0, target_l1=5.0)
    x0 = feasible.lmo(np.ones(6))
    bad = []
    run(obj, feasible, RunConfig(algorithm, 2000, x0=x0, seed=1),
        callback=lambda k, x: bad.append(k) if not feasible.contains(x, 1e-9) else None)
    assert bad == []


def test_ratio_condition_enforced():
    half = Schedule(1.0, 0.0, 0.5)
    with pytest.raises(ConfigError, match="ratio condition"):
        RunConfig("afgfw", 10, alpha=half, gamma=half)
    # FGFW has no gamma and no ratio condition
    RunConfig("fgfw", 10, alpha=half)


@pytest.mark.parametrize("kwargs", [
    dict(algorithm="sgd", iterations=1), dict(algorithm="fw", iterations=-1),
    dict(algorithm="fw", iterations=2.5),
])
def test_invalid_config(kwargs):
    with pytest.raises(ConfigError):
        RunConfig(**kwargs)


def test_infeasible_start_rejected():
    with pytest.raises(ConfigError, match="x0"):
        run(half_sq(2), L1Ball(2), RunConfig("fgfw", 3, x0=[1.0, 1.0]))


def test_runner_must_match_config():
    with pytest.raises(ConfigError):
        run_fgfw(half_sq(2), L1Ball(2), RunConfig("fw", 3))


class Exploding(Quadratic):
    # the value turns NaN once the iterate leaves x_1 >= -0.1
    def program(self, x):
        out = super().program(x)
        return out * np.nan if float(ad.primal(x)[0]) < -0.1 else out


def test_non_finite_state_aborts_with_seed_and_iteration():
    obj = Quadratic(np.eye(2), [-5.0, 0.0])
    broken = Exploding(obj.Q, obj.c)
    with np.errstate(invalid="ignore"):
        with pytest.raises(NonFiniteStateError) as info:
            run(broken, L1Ball(2), RunConfig("afgfw", 50, seed=9))
    assert info.value.seed == 9
    assert info.value.iteration is not None and info.value.iteration >= 1


def test_instrumentation_does_not_perturb_the_run():
    obj = make_quadratic(10, seed=2)
    obj.f_star = -1.0
    ball = L1Ball(10)
    plain = run(obj, ball, RunConfig("afgfw", 400, seed=1))
    inst = run(obj, ball, RunConfig("afgfw", 400, seed=1, instrumented=True))
    np.testing.assert_array_equal(plain.f_value, inst.f_value)
    np.testing.assert_array_equal(plain.x_final, inst.x_final)
    assert plain.fw_gap is None and plain.estimator_error is None
    assert inst.fw_gap.shape == inst.estimator_error.shape == (400,)
    assert np.all(inst.fw_gap >= -1e-12)
    np.testing.assert_allclose(inst.suboptimality, inst.f_value + 1.0)


def test_instrumented_estimator_error_by_hand():
    obj = make_quadratic(5, seed=3)
    ball = L1Ball(5)
    xs = [np.zeros(5)]
    trace = run(obj, ball, RunConfig("fgfw", 20, seed=2, instrumented=True),
                callback=lambda k, x: xs.append(x))
    # replay the draws to rebuild phi_k and compare ||phi_k - grad f(x_{k-1})||^2
    rng = RandomSource(2)
    for k in range(1, 21):
        u = rng.direction(5)
        g = obj.gradient(xs[k - 1])
        phi = (g @ u) * u
        assert trace.estimator_error[k - 1] == pytest.approx(float((phi - g) @ (phi - g)), rel=1e-10)


def test_forward_variants_never_form_the_gradient():
    class NoGradient(Quadratic):
        def gradient(self, x):
            raise AssertionError("gradient used outside instrumented mode")

        value_and_gradient = gradient

    obj = NoGradient(np.eye(3), np.ones(3))
    for algorithm in ("fgfw", "afgfw"):
        run(obj, L1Ball(3), RunConfig(algorithm, 20))


def test_logistic_over_block_product_stays_feasible():
    data = generate_synthetic(200, 4, 3, seed=0)
    obj = MultinomialLogistic(data.X, data.y, 3)
    feasible = l1_ball_product(3, 4, 1.0)
    trace = run(obj, feasible, RunConfig("afgfw", 300, seed=0))
    assert feasible.contains(trace.x_final)
    assert trace.f_value[-1] < np.log(3)


def test_metadata():
    t = run(half_sq(2), L1Ball(2), RunConfig("afgfw", 2, seed=4, problem="toy"))
    assert t.metadata["alpha"] == "1/k" and t.metadata["gamma"] == "1/sqrt(k)"
    assert t.metadata["seed"] == 4 and t.metadata["problem"] == "toy"
    assert run(half_sq(2), L1Ball(2), RunConfig("fw", 2)).metadata["alpha"] == "2/(k+2)"
