"""AdamW over the real and imaginary components of complex parameters."""
from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger(__name__)


def _real_view(arr):
    flat = arr.reshape(-1)
    if np.iscomplexobj(flat):
        return flat.view(np.finfo(flat.dtype).dtype)
    return flat


class AdamW:
    """Decoupled weight decay Adam.

    Each complex entry is treated as two independent real parameters: moments
    are kept per component and the decay shrinks Re and Im alike.  Moment
    buffers live in ``LayerParam.opt_state`` so checkpoints can carry them.
    """

    def __init__(self, params, lr=5e-4, weight_decay=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.betas = betas
        self.eps = eps
        self.t = 0
        for p in self.params:
            if "m" not in p.opt_state:
                rv = _real_view(p.data)
                p.opt_state["m"] = np.zeros_like(rv)
                p.opt_state["v"] = np.zeros_like(rv)

    def zero_grad(self):
        for p in self.params:
            p.value.grad = None

    def step(self):
        """Apply one update.  Returns False (and leaves every parameter untouched)
        when any gradient is non-finite."""
        for p in self.params:
            g = p.value.grad
            if g is not None and not np.all(np.isfinite(g)):
                log.warning("non-finite gradient in %s; step aborted", p.name)
                return False
        self.t += 1
        t = self.t
        b1, b2 = self.betas
        c1 = 1 - b1 ** t
        c2 = 1 - b2 ** t
        for p in self.params:
            w = _real_view(p.value.data)
            if self.weight_decay:
                w *= 1 - self.lr * self.weight_decay
            if p.value.grad is None:
                continue
            g = _real_view(np.ascontiguousarray(p.value.grad, dtype=p.value.data.dtype))
            m, v = p.opt_state["m"], p.opt_state["v"]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            w -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return True


def adamw_step(params, lr=5e-4, weight_decay=1e-3, betas=(0.9, 0.999), eps=1e-8, t=1):
    """Functional single step at iteration ``t`` using each param's ``.grad``."""
    opt = AdamW(params, lr, weight_decay, betas, eps)
    opt.t = t - 1
    return opt.step()
