"""Sphere / diplane / helix split of a reciprocal scatterer in the circular basis."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..errors import ContractViolation

RIGHT, LEFT = 0, 1


class KrogagerVector(NamedTuple):
    k_s: np.ndarray
    k_d: np.ndarray
    k_h: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    phi_s: np.ndarray
    helicity: np.ndarray  # RIGHT (0) or LEFT (1)

    def h(self):
        """``(..., 3)`` array ``(k_d, k_h, k_s)`` used for false-colour composites."""
        return np.stack([self.k_d, self.k_h, self.k_s], axis=-1)


def circular(S):
    """``(S_rr, S_ll, S_rl)`` of reciprocal ``(..., 2, 2)`` matrices."""
    S = np.asarray(S)
    hh, hv, vv = S[..., 0, 0], S[..., 0, 1], S[..., 1, 1]
    d = 0.5 * (hh - vv)
    return 1j * hv + d, 1j * hv - d, 0.5j * (hh + vv)


def krogager_decompose(S, rtol=1e-9) -> KrogagerVector:
    """Decompose reciprocal Sinclair matrices.

    The helix handedness is chosen per pixel: right when ``|S_rr| >= |S_ll|``.
    Raises :class:`ContractViolation` if ``S_hv != S_vh`` beyond ``rtol``.
    """
    S = np.asarray(S)
    scale = np.maximum(np.max(np.abs(S), axis=(-2, -1)), np.finfo(float).tiny)
    if np.any(np.abs(S[..., 0, 1] - S[..., 1, 0]) > rtol * scale):
        raise ContractViolation("Krogager decomposition needs reciprocal data (S_hv == S_vh)")
    srr, sll, srl = circular(S)
    arr, all_ = np.abs(srr), np.abs(sll)
    prr, pll, prl = np.angle(srr), np.angle(sll), np.angle(srl)
    phi = 0.5 * (prr + pll - np.pi)
    theta = 0.25 * (prr - pll + np.pi)
    phi_s = prl - 0.5 * np.pi - phi
    helicity = np.where(arr >= all_, RIGHT, LEFT)
    return KrogagerVector(np.abs(srl), np.minimum(arr, all_), np.abs(arr - all_),
                          theta, phi, phi_s, helicity)


def sphere():
    return np.eye(2, dtype=complex)


def diplane(theta):
    """Diplane oriented at ``theta``: ``[[cos 2t, sin 2t], [sin 2t, -cos 2t]]``."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return np.stack([np.stack([c, s], -1), np.stack([s, -c], -1)], -2).astype(complex)


def helix(theta, helicity):
    """Unit-amplitude helix; left is ``1/2 e^{-j2t}[[1, j], [j, -1]]``, right mirrors it."""
    theta = np.asarray(theta, dtype=float)
    sgn = np.where(np.asarray(helicity) == LEFT, 1.0, -1.0)
    ph = 0.5 * np.exp(-2j * sgn * theta)
    one = np.ones_like(ph)
    m = np.stack([np.stack([one, 1j * sgn * one], -1), np.stack([1j * sgn * one, -one], -1)], -2)
    return ph[..., None, None] * m


def resynthesize(kv: KrogagerVector) -> np.ndarray:
    """``e^{j phi} (e^{j phi_s} k_s S_s + k_d S_d(theta) + k_h S_h(theta))``."""
    ks = (np.exp(1j * kv.phi_s) * kv.k_s)[..., None, None] * sphere()
    kd = np.asarray(kv.k_d)[..., None, None] * diplane(kv.theta)
    kh = np.asarray(kv.k_h)[..., None, None] * helix(kv.theta, kv.helicity)
    return np.exp(1j * kv.phi)[..., None, None] * (ks + kd + kh)
