"""Layers, losses and the finite-difference gradient checker.

Run: python demos/01_layers_and_gradients.py
"""

from __future__ import annotations

import numpy as np

from relsent.gradcheck import MODEL_KINDS, check_model
from relsent.nn import GRU, Conv1D, Parameter, RmsPropConfig, cross_entropy_loss, gradient_check, rmsprop_step, softmax

rng = np.random.default_rng(0)

# A same-length convolution over a 4-token sequence of 3-d vectors.
conv = Conv1D.create("conv", d_in=3, maps=5, width=3, rng=rng)
x = rng.normal(size=(4, 3))
h, _ = conv.forward(x)
print("conv output shape:", h.shape)

# A GRU runs over the convolution features; every state lies in (-1, 1).
gru = GRU.create("gru", d_in=5, hidden=2, rng=rng)
states, _ = gru.forward(h)
print("GRU states:\n", np.round(states, 4))

# Cross-entropy returns the loss and the gradient w.r.t. the logits.
logits = rng.normal(size=(4, 3))
loss, dlogits = cross_entropy_loss(softmax(logits), [1, 0, 2, 1])
print(f"cross-entropy {loss:.4f}; logit gradient rows sum to {dlogits.sum(axis=1).round(12)}")

# One RMSProp step from a fresh cache with unit gradient moves by lr / (sqrt(0.1) + eps).
p = Parameter("p", [0.0])
p.grad[...] = 1.0
rmsprop_step(p, RmsPropConfig())
print(f"first RMSProp step: {-p.value[0]:.6e}")

# The checker compares analytic gradients to central differences.
w = Parameter("w", rng.normal(size=(2, 3)))
inp, target = rng.normal(size=3), rng.normal(size=2)


def closure(backward: bool) -> float:
    r = w.value @ inp - target
    if backward:
        w.grad += np.outer(r, inp)
    return 0.5 * float(r @ r)


print(f"linear least squares: max relative error {gradient_check(closure, [w]):.2e}")

# Whole models on a five-token review, the same check `relsent gradcheck` runs.
for kind in MODEL_KINDS:
    print(f"{kind:12s} max relative error {max(check_model(kind).values()):.2e}")
