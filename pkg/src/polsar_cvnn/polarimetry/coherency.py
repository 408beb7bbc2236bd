"""Boxcar sample coherency matrices of a Pauli-vector field."""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError

DEFAULT_WINDOW = 7


def outer(k):
    """Per-pixel ``k k^H`` of a ``(..., 3)`` field."""
    k = np.asarray(k)
    return k[..., :, None] * np.conj(k[..., None, :])


def _box_sum(a, half, axis):
    """Sum over a centred window of ``2*half+1`` along ``axis``, clipped at the edges."""
    n = a.shape[axis]
    c = np.cumsum(a, axis=axis)
    pad = [(0, 0)] * a.ndim
    pad[axis] = (1, 0)
    c = np.pad(c, pad)
    idx = np.arange(n)
    hi = np.minimum(idx + half + 1, n)
    lo = np.maximum(idx - half, 0)
    return np.take(c, hi, axis=axis) - np.take(c, lo, axis=axis)


def boxcar_scm(k, window=DEFAULT_WINDOW):
    """``T(i, j) = mean of k k^H`` over the ``window x window`` box around ``(i, j)``.

    ``k`` is an ``(H, W, 3)`` Pauli field.  Near the borders the box is
    clipped to the image, so each estimate averages only real samples.
    """
    k = np.asarray(k)
    if k.ndim != 3 or k.shape[-1] != 3:
        raise ConfigError(f"expected an (H, W, 3) Pauli field, got {k.shape}")
    h, w = k.shape[:2]
    if window < 3 or window % 2 == 0:
        raise ConfigError(f"boxcar window must be odd and >= 3, got {window}")
    if window > min(h, w):
        raise ConfigError(f"boxcar window {window} exceeds field {h}x{w}")
    half = window // 2
    kk = outer(k.astype(np.complex128))
    s = _box_sum(_box_sum(kk, half, 0), half, 1)
    ones = np.ones((h, w))
    n = _box_sum(_box_sum(ones, half, 0), half, 1)
    T = s / n[..., None, None]
    # exact Hermitian symmetry regardless of summation order
    return 0.5 * (T + np.conj(np.swapaxes(T, -1, -2)))
