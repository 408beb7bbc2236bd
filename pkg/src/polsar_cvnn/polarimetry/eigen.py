"""Batched eigendecomposition of 3x3 Hermitian matrices.

Eigenvalues come from the trigonometric solution of the characteristic cubic
and eigenvectors from cross products of rows of ``T - lambda I``.  Both lose
accuracy when two eigenvalues nearly coincide, so such matrices are re-solved
with cyclic complex Jacobi rotations.
"""
from __future__ import annotations

import numpy as np

GAP_RTOL = 1e-4
_JACOBI_SWEEPS = 12


def eigvalsh3(T):
    """Descending eigenvalues of ``(..., 3, 3)`` Hermitian matrices."""
    T = np.asarray(T)
    a00, a11, a22 = T[..., 0, 0].real, T[..., 1, 1].real, T[..., 2, 2].real
    a01, a02, a12 = T[..., 0, 1], T[..., 0, 2], T[..., 1, 2]
    p1 = np.abs(a01) ** 2 + np.abs(a02) ** 2 + np.abs(a12) ** 2
    q = (a00 + a11 + a22) / 3.0
    b00, b11, b22 = a00 - q, a11 - q, a22 - q
    p2 = b00 ** 2 + b11 ** 2 + b22 ** 2 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    # det(T - qI) for a Hermitian matrix; real up to rounding
    det = (b00 * b11 * b22 + 2.0 * np.real(a01 * a12 * np.conj(a02))
           - b00 * np.abs(a12) ** 2 - b11 * np.abs(a02) ** 2 - b22 * np.abs(a01) ** 2)
    safe_p = np.where(p > 0, p, 1.0)
    r = np.clip(det / (2.0 * safe_p ** 3), -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    l1 = q + 2.0 * p * np.cos(phi)
    l3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    l2 = 3.0 * q - l1 - l3
    lam = np.stack([l1, l2, l3], axis=-1)
    return np.where((p > 0)[..., None], lam, q[..., None])


def _null_vector(M):
    """Unit vector ``v`` with ``M v ~ 0`` for singular ``(..., 3, 3)`` ``M``."""
    r0, r1, r2 = M[..., 0, :], M[..., 1, :], M[..., 2, :]
    cands = np.stack([np.cross(r0, r1), np.cross(r0, r2), np.cross(r1, r2)], axis=-2)
    norms = np.linalg.norm(cands, axis=-1)
    best = np.argmax(norms, axis=-1)
    v = np.take_along_axis(cands, best[..., None, None], axis=-2)[..., 0, :]
    n = np.take_along_axis(norms, best[..., None], axis=-1)
    return v / np.where(n > 0, n, 1.0)


def jacobi_eigh3(T, sweeps=_JACOBI_SWEEPS):
    """Cyclic Jacobi on a batch; returns descending eigenvalues and column eigenvectors."""
    A = np.array(T, dtype=np.complex128, copy=True)
    batch = A.shape[:-2]
    A = A.reshape(-1, 3, 3)
    V = np.tile(np.eye(3, dtype=np.complex128), (A.shape[0], 1, 1))
    for _ in range(sweeps):
        off = np.abs(A[:, 0, 1]) ** 2 + np.abs(A[:, 0, 2]) ** 2 + np.abs(A[:, 1, 2]) ** 2
        scale = np.sum(np.abs(np.diagonal(A, axis1=1, axis2=2)) ** 2, axis=1)
        if np.all(off <= 1e-30 * np.maximum(scale, 1e-300)):
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = A[:, p, q]
            mag = np.abs(apq)
            active = mag > 0
            e = np.where(active, apq / np.where(active, mag, 1.0), 1.0)
            app, aqq = A[:, p, p].real, A[:, q, q].real
            # real rotation zeroing |apq| after removing its phase
            tau = np.where(active, (aqq - app) / (2.0 * np.where(active, mag, 1.0)), 0.0)
            t = np.where(active, np.sign(tau + (tau == 0)) / (np.abs(tau) + np.sqrt(1.0 + tau ** 2)), 0.0)
            c = 1.0 / np.sqrt(1.0 + t ** 2)
            s = t * c
            G = np.tile(np.eye(3, dtype=np.complex128), (A.shape[0], 1, 1))
            G[:, p, p] = c
            G[:, q, q] = c
            G[:, p, q] = s * e
            G[:, q, p] = -s * np.conj(e)
            A = np.conj(np.swapaxes(G, 1, 2)) @ A @ G
            V = V @ G
    lam = np.diagonal(A, axis1=1, axis2=2).real
    order = np.argsort(-lam, axis=1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return lam.reshape(batch + (3,)), V.reshape(batch + (3, 3))


def eigh3(T, gap_rtol=GAP_RTOL):
    """Descending eigenvalues ``(..., 3)`` and unit eigenvectors as columns ``(..., 3, 3)``."""
    T = np.asarray(T, dtype=np.complex128)
    T = 0.5 * (T + np.conj(np.swapaxes(T, -1, -2)))
    lam = eigvalsh3(T)
    eye = np.eye(3)
    vecs = [_null_vector(T - lam[..., i, None, None] * eye) for i in range(3)]
    V = np.stack(vecs, axis=-1)
    scale = np.maximum(np.max(np.abs(lam), axis=-1), np.finfo(float).tiny)
    gap = np.minimum(lam[..., 0] - lam[..., 1], lam[..., 1] - lam[..., 2]) / scale
    bad = gap < gap_rtol
    if np.any(bad):
        lam_j, V_j = jacobi_eigh3(T[bad])
        lam = lam.copy()
        lam[bad] = lam_j
        V[bad] = V_j
    return lam, V
