"""Central finite-difference verification of analytic gradients.

`finite_difference_check` recomputes the loss twice per parameter entry with
the entry nudged by +/-eps and compares the slope against what `backward`
produced. The returned figure is the worst relative error

    |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)

over every entry of every parameter; an empty parameter list yields 0.
"""

import numpy as np

from .autograd import backward, zero_grads


def finite_difference_check(loss_fn, params, eps: float = 1e-3) -> float:
    """Max relative error between analytic and central-difference gradients.

    `loss_fn` must rebuild the scalar loss from the parameters' current
    values on every call. Parameter data is perturbed in place and restored
    exactly; persistent grads are cleared first so the analytic side reflects
    this loss alone.
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    params = list(params)
    zero_grads(params)
    backward(loss_fn())
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        aflat = a.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + np.float32(eps)
            wp = float(flat[i])
            fp = float(loss_fn().data)
            flat[i] = orig - np.float32(eps)
            wm = float(flat[i])
            fm = float(loss_fn().data)
            flat[i] = orig
            numeric = (fp - fm) / (wp - wm)
            err = abs(float(aflat[i]) - numeric)
            denom = max(abs(float(aflat[i])), abs(numeric), 1e-8)
            worst = max(worst, err / denom)
    return worst
