"""
Directional derivatives with dual numbers
=========================================

A dual number carries a value and a tangent. Running a program on
``Dual(x, u)`` returns ``f(x)`` and ``<grad f(x), u>`` in one pass.
"""

import numpy as np

from forward_fw import autodiff as ad
from forward_fw.autodiff import Dual, jvp, value_and_jvp

# scalars first: d/da of a * exp(a) at a = 1 is 2e
out = Dual(1.0, 1.0) * ad.exp(Dual(1.0, 1.0))
print("value", out.primal, "derivative", out.tangent, "expected", 2 * np.e)

# arrays work elementwise; numpy matrices act on both parts
A = np.array([[2.0, 0.0], [1.0, 3.0]])
y = A @ Dual(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
print("A @ x =", y.primal, " A @ u =", y.tangent)


# a program is an ordinary function written with forward_fw.autodiff
def softmax_loss(theta):
    scores = theta.reshape(3, 2) @ np.array([1.0, -0.5])
    return ad.logsumexp(scores) - scores[0]


theta = np.linspace(-1, 1, 6)
u = np.array([1.0, -2.0, 0.5, 0.0, 3.0, 1.0])
f, d = value_and_jvp(softmax_loss, theta, u)
eps = 1e-6
fd = (softmax_loss(theta + eps * u) - softmax_loss(theta - eps * u)) / (2 * eps)
print(f"loss {f:.6f}  jvp {d:.9f}  central difference {fd:.9f}")

# linear in the direction, and exactly zero along u = 0
print("jvp(2u) / jvp(u) =", jvp(softmax_loss, theta, 2 * u) / d)
print("jvp(0) =", jvp(softmax_loss, theta, np.zeros(6)))

# kinks: ties follow the first argument
print("d|a|/da at 0 along +1:", ad.abs(Dual(0.0, 1.0)).tangent)
