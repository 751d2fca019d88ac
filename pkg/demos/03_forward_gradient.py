"""
The projected forward gradient
==============================

``phi = <grad f(x), u> u`` needs one directional derivative and a random
direction ``u``. It is unbiased, but noisy: for Gaussian ``u`` its second
moment is ``(n + 2) ||grad f||^2``.
"""

import numpy as np

from forward_fw import RandomSource, Schedule
from forward_fw.estimators import (EstimatorState, forward_gradient_stats, sample_forward_gradient,
                                   update_average)
from forward_fw.problems import make_quadratic

n = 10
obj = make_quadratic(n, seed=0)
x = np.full(n, 0.05)
g = obj.gradient(x)

rng = RandomSource(seed=1)
sample = sample_forward_gradient(obj, x, rng)
print("one draw:  cos(phi, grad) =",
      sample.estimate @ g / np.linalg.norm(sample.estimate) / np.linalg.norm(g))

stats = forward_gradient_stats(obj, x, RandomSource(seed=2), samples=100_000)
z = np.abs(stats.mean - g) / stats.standard_error
print(f"mean of 1e5 draws: max z-score {z.max():.2f}")
print(f"E||phi||^2 / ||grad||^2 = {stats.second_moment_ratio:.2f}  (n + 2 = {n + 2})")

# averaging with gamma_k = 1/sqrt(k) at a fixed point: the error of v_k shrinks
state = EstimatorState.initial(n, Schedule(1.0, 0.0, 0.5))
rng = RandomSource(seed=3)
for k in range(1, 10_001):
    state = update_average(state, sample_forward_gradient(obj, x, rng).estimate, k)
    if k in (1, 10, 100, 1000, 10_000):
        err = np.linalg.norm(state.v - g) ** 2 / np.linalg.norm(g) ** 2
        print(f"k={k:>6}  ||v_k - grad||^2 / ||grad||^2 = {err:.4f}")
