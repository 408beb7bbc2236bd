"""Sinclair matrices from raster channels, and the Pauli basis."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..errors import ShapeError

SQRT2 = np.sqrt(2.0)


class PauliVector(NamedTuple):
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def stack(self):
        """``(..., 3)`` array ``k = (alpha, beta, gamma)``."""
        return np.stack([self.alpha, self.beta, self.gamma], axis=-1)


def sinclair(hh, hv, vh, vv):
    """Assemble ``(..., 2, 2)`` matrices ``[[hh, hv], [vh, vv]]``."""
    hh, hv, vh, vv = np.broadcast_arrays(*(np.asarray(c) for c in (hh, hv, vh, vv)))
    row0 = np.stack([hh, hv], axis=-1)
    row1 = np.stack([vh, vv], axis=-1)
    return np.stack([row0, row1], axis=-2)


def from_channels(data):
    """``(..., C)`` channel-last samples, C = 4 (hh, hv, vh, vv) or 3 (hh, hv, vv)."""
    data = np.asarray(data)
    c = data.shape[-1]
    if c == 4:
        return sinclair(data[..., 0], data[..., 1], data[..., 2], data[..., 3])
    if c == 3:
        return sinclair(data[..., 0], data[..., 1], data[..., 1], data[..., 2])
    raise ShapeError(f"expected 3 or 4 polarimetric channels, got {c}")


def to_channels(S, channels=4):
    S = np.asarray(S)
    if channels == 4:
        return np.stack([S[..., 0, 0], S[..., 0, 1], S[..., 1, 0], S[..., 1, 1]], axis=-1)
    if channels == 3:
        return np.stack([S[..., 0, 0], 0.5 * (S[..., 0, 1] + S[..., 1, 0]), S[..., 1, 1]], axis=-1)
    raise ShapeError(f"channels must be 3 or 4, got {channels}")


def pauli_decompose(S) -> PauliVector:
    """``alpha = (hh+vv)/sqrt2``, ``beta = (hh-vv)/sqrt2``, ``gamma = sqrt2 * hv``.

    For non-reciprocal data ``hv`` is replaced by the reciprocal average
    ``(hv+vh)/2``; the antisymmetric remainder has no Pauli coordinate here.
    """
    S = np.asarray(S)
    hh, vv = S[..., 0, 0], S[..., 1, 1]
    hv = 0.5 * (S[..., 0, 1] + S[..., 1, 0])
    return PauliVector((hh + vv) / SQRT2, (hh - vv) / SQRT2, SQRT2 * hv)


def pauli_compose(k) -> np.ndarray:
    """Inverse of :func:`pauli_decompose` on reciprocal matrices."""
    if isinstance(k, PauliVector):
        a, b, g = k
    else:
        k = np.asarray(k)
        a, b, g = k[..., 0], k[..., 1], k[..., 2]
    hh = (a + b) / SQRT2
    vv = (a - b) / SQRT2
    hv = g / SQRT2
    return sinclair(hh, hv, hv, vv)


def span(S):
    """Total power ``|hh|^2 + |hv|^2 + |vh|^2 + |vv|^2``."""
    return np.sum(np.abs(np.asarray(S)) ** 2, axis=(-2, -1))
