# The five one-class losses on a toy batch, and a finite-difference check
# of their gradients.

import numpy as np

from ffoneclass.losses import LOSS_ORDER, LossSpec, calibrate_state, evaluate, grad_check

rng = np.random.default_rng(0)
h = np.abs(rng.normal(size=(8, 3)))  # post-ReLU activations are never negative

# center a = batch mean, R^2 = 95th percentile of squared distances to a
for kind in LOSS_ORDER:
    spec = LossSpec(kind)
    state = calibrate_state(h, spec)
    ev = evaluate(h, spec, state)
    print(f"{kind.label:17s} C={spec.c:.1f}  total={ev.total:9.4f}  R^2={state.radius_sq:.4f}")

# the outlier row scores highest under every loss
h_out = np.vstack([h, [[4.0, 4.0, 4.0]]])
for kind in LOSS_ORDER:
    spec = LossSpec(kind)
    scores = evaluate(h_out, spec, calibrate_state(h, spec)).per_sample
    print(kind.label, "most anomalous row:", int(np.argmax(scores)))

# analytic vs central differences
for kind in LOSS_ORDER:
    spec = LossSpec(kind)
    print(kind.label, "max rel err", grad_check(spec, calibrate_state(h, spec), h))
