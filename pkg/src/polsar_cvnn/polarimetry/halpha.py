"""Entropy / mean-alpha analysis of coherency matrices and the nine-zone H-alpha plane."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import ContractViolation, DataError
from .eigen import eigh3

PSD_TOL = 1e-9


class HAlphaResult(NamedTuple):
    entropy: np.ndarray
    alpha: np.ndarray  # radians
    zone: np.ndarray  # uint8 1..9, 0 for invalid pixels
    eigenvalues: np.ndarray  # (..., 3) descending
    probs: np.ndarray  # (..., 3)
    valid: np.ndarray


@dataclass(frozen=True)
class ZoneTable:
    """Rectangular partition of the H-alpha plane.

    ``h_splits`` separate low / medium / high entropy.  Each entropy band has
    two alpha splits (degrees) and three zone ids ordered from high alpha to
    low alpha.  Values on a boundary go to the lower-H / lower-alpha side.
    The default ids follow the usual convention: 7-9 low entropy (multiple,
    dipole, surface), 4-6 medium, 1-3 high.
    """

    h_splits: tuple = (0.5, 0.9)
    alpha_splits: tuple = ((42.5, 47.5), (40.0, 50.0), (40.0, 55.0))
    zone_ids: tuple = ((7, 8, 9), (4, 5, 6), (1, 2, 3))

    def rectangles(self):
        """``(zone, h_lo, h_hi, a_lo, a_hi)`` with alpha in degrees, lower edges open."""
        edges_h = (-np.inf,) + tuple(self.h_splits) + (np.inf,)
        out = []
        for band in range(3):
            lo, hi = self.alpha_splits[band]
            edges_a = (np.inf, hi, lo, -np.inf)
            for j in range(3):
                out.append((self.zone_ids[band][j], edges_h[band], edges_h[band + 1],
                            edges_a[j + 1], edges_a[j]))
        return out


DEFAULT_ZONES = ZoneTable()


def classify_zone(H, alpha, table: ZoneTable = DEFAULT_ZONES):
    """Zone ids for entropy ``H`` in [0, 1] and ``alpha`` in [0, pi/2] radians."""
    H = np.asarray(H, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    tol = 1e-12
    if np.any((H < -tol) | (H > 1 + tol)) or np.any((alpha < -tol) | (alpha > np.pi / 2 + tol)):
        raise ContractViolation("H must lie in [0, 1] and alpha in [0, pi/2]")
    deg = np.degrees(alpha)
    h1, h2 = table.h_splits
    band = np.where(H <= h1, 0, np.where(H <= h2, 1, 2))
    splits = np.asarray(table.alpha_splits, dtype=float)[band]
    col = np.where(deg > splits[..., 1], 0, np.where(deg > splits[..., 0], 1, 2))
    return np.asarray(table.zone_ids, dtype=np.uint8)[band, col]


def entropy_alpha(lam, V):
    """``H = -sum p log3 p`` and ``alpha = sum p arccos|e_i1|`` from an eigensystem."""
    total = np.sum(lam, axis=-1)
    safe = np.where(total > 0, total, 1.0)
    p = lam / safe[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    H = np.clip(-np.sum(plogp, axis=-1) / np.log(3.0), 0.0, 1.0)
    alpha_i = np.arccos(np.clip(np.abs(V[..., 0, :]), 0.0, 1.0))
    alpha = np.clip(np.sum(p * alpha_i, axis=-1), 0.0, np.pi / 2)
    return H, alpha, p


def h_alpha(T, table: ZoneTable = DEFAULT_ZONES, psd_tol=PSD_TOL) -> HAlphaResult:
    """H-alpha analysis of ``(..., 3, 3)`` coherency matrices.

    Input is symmetrised.  Eigenvalues below ``-psd_tol * trace`` raise
    :class:`DataError`; smaller negative values are clamped to 0.  Pixels with
    zero trace are flagged invalid and get zone 0.
    """
    T = np.asarray(T, dtype=np.complex128)
    lam, V = eigh3(T)
    trace = np.sum(lam, axis=-1)
    scale = np.maximum(np.abs(trace), np.finfo(float).tiny)
    if np.any(lam < -psd_tol * scale[..., None]):
        raise DataError("coherency matrix is not positive semi-definite")
    lam = np.maximum(lam, 0.0)
    valid = np.sum(lam, axis=-1) > 0
    H, alpha, p = entropy_alpha(lam, V)
    H = np.where(valid, H, 0.0)
    alpha = np.where(valid, alpha, 0.0)
    zone = np.where(valid, classify_zone(H, alpha, table), 0).astype(np.uint8)
    return HAlphaResult(H, alpha, zone, lam, np.where(valid[..., None], p, 0.0), valid)


def feasibility_curves(n=201):
    """Boundary of attainable (H, alpha) pairs as two polylines (alpha in radians).

    Lower curve: eigenvalues ``(1, m, m)`` with a pure surface first vector.
    Upper curve: ``(0, 1, 2m)`` for m <= 0.5 then ``(2m - 1, 1, 1)`` for m >= 0.5,
    weighting the dihedral-like vectors.
    """
    m = np.linspace(0.0, 1.0, n)
    lam = np.stack([np.ones_like(m), m, m], axis=-1)
    lower = _curve(lam)
    m1 = np.linspace(0.0, 0.5, n)
    m2 = np.linspace(0.5, 1.0, n)
    up1 = _curve(np.stack([np.zeros_like(m1), np.ones_like(m1), 2 * m1], axis=-1))
    up2 = _curve(np.stack([2 * m2 - 1, np.ones_like(m2), np.ones_like(m2)], axis=-1))
    upper = np.concatenate([up1, up2[1:]], axis=0)
    return lower, upper


def _curve(lam):
    """H and alpha of ``diag(lam)`` with eigenvector i equal to basis vector i."""
    p = lam / np.sum(lam, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        H = -np.sum(np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0), axis=-1) / np.log(3.0)
    alpha = p[..., 1] * np.pi / 2 + p[..., 2] * np.pi / 2
    return np.stack([H, alpha], axis=-1)


def is_feasible(H, alpha, tol=1e-6, n=2001):
    """True where ``(H, alpha)`` lies between the two feasibility curves."""
    lower, upper = feasibility_curves(n)
    lo_a = np.interp(H, lower[:, 0], lower[:, 1])
    order = np.argsort(upper[:, 0])
    hi_a = np.interp(H, upper[order, 0], upper[order, 1])
    return (alpha >= lo_a - tol) & (alpha <= hi_a + tol)
