"""Central finite-difference oracle for the Wirtinger gradient convention."""
from __future__ import annotations

import numpy as np

from .cxcore import CTensor


def numeric_grad(loss_fn, t: CTensor, indices=None, step=1e-6):
    """``dL/dRe + j dL/dIm`` at the flat ``indices`` of ``t`` by central differences.

    ``loss_fn`` takes no arguments, reads ``t.data`` and returns a real scalar
    (a float or a 0-d tensor).  ``t.data`` is restored afterwards.
    """
    flat = t.data.reshape(-1)
    if indices is None:
        indices = range(flat.size)
    is_c = np.iscomplexobj(flat)
    out = np.zeros(len(indices), dtype=np.complex128 if is_c else np.float64)

    def value():
        v = loss_fn()
        v = v.data if isinstance(v, CTensor) else v
        return float(np.real(v))

    for n, i in enumerate(indices):
        orig = flat[i]
        dirs = (1.0, 1j) if is_c else (1.0,)
        acc = 0j
        for d in dirs:
            flat[i] = orig + step * d
            fp = value()
            flat[i] = orig - step * d
            fm = value()
            flat[i] = orig
            acc += d * (fp - fm) / (2 * step)
        out[n] = acc if is_c else acc.real
    return out


def analytic_grad(loss_fn, tensors):
    """Run backward once and return each tensor's ``.grad`` (zeros if unreached)."""
    for t in tensors:
        t.grad = None
    loss = loss_fn()
    loss.backward()
    return [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]


def rel_error(a, b):
    """Norm-wise relative error ``|a - b| / max(|a|, |b|)``."""
    a, b = np.ravel(a), np.ravel(b)
    den = max(np.linalg.norm(a), np.linalg.norm(b))
    if den == 0:
        return 0.0
    return float(np.linalg.norm(a - b) / den)
