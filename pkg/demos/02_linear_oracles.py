"""
Linear minimization oracles
===========================

Frank-Wolfe never projects. Each step asks the feasible set for the
point minimizing a linear function, which for the sets below is a
closed-form vertex.
"""

import numpy as np

from forward_fw import Box, L1Ball
from forward_fw.lmo import L2Ball, Simplex, check_oracles, l1_ball_product

g = np.array([3.0, -1.0, 0.0])
for feasible in (L1Ball(3), Simplex(3), Box([-1, -1, -1], [2, 2, 2]), L2Ball(3)):
    s = feasible.lmo(g)
    print(f"{feasible!r:40s} lmo = {np.round(s, 3)}  <s, g> = {s @ g:+.3f}")

# ties go to the lowest index
print("l1 lmo of (1, 1):", L1Ball(2).lmo(np.array([1.0, 1.0])))

# a product of balls solves each block on its own; this is the set used
# for multinomial logistic regression, one l1-ball per class
blocks = l1_ball_product(3, 2, radius=1.0)
print("blockwise:", blocks.lmo(np.array([1.0, -4.0, 0.5, 0.2, -2.0, 2.0])))
print("diameter", blocks.diameter, "=", np.sqrt(3 * 2.0 ** 2))

# the self-test behind `forward-fw lmo-check`
for r in check_oracles(trials=200):
    print(f"{r.set_type:8s} failures={r.failures} max_error={r.max_error:.1e}")
