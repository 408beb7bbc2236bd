"""Cameron classification by reciprocity, symmetry and the canonical symmetric scatterers."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .sinclair import pauli_decompose

CLASSES = ("trihedral", "dihedral", "narrow-diplane", "dipole", "cylinder", "quarter-wave",
           "left-helix", "right-helix", "non-reciprocal", "asymmetric")
# label ids are 1-based; 0 marks a zero-power (invalid) pixel
LABEL = {name: i + 1 for i, name in enumerate(CLASSES)}
INVALID = 0

# canonical diagonal ratio z = s_vv' / s_hh' of each symmetric scatterer
CANONICAL_Z = {
    "trihedral": 1.0 + 0j,
    "dihedral": -1.0 + 0j,
    "narrow-diplane": -0.5 + 0j,
    "dipole": 0j,
    "cylinder": 0.5 + 0j,
    "quarter-wave": 1j,
}

REC_THRESHOLD = np.pi / 4
SYM_THRESHOLD = np.pi / 8
HELIX_THRESHOLD = np.pi / 4


class CameronResult(NamedTuple):
    label: np.ndarray  # uint8 ids, see LABEL
    rec_angle: np.ndarray
    sym_angle: np.ndarray
    z: np.ndarray
    valid: np.ndarray

    def names(self):
        table = np.array(("none",) + CLASSES, dtype=object)
        return table[self.label]


def disk_distance(z1, z2):
    """Rotation-invariant distance between symmetric scatterers with ratios ``z1``, ``z2``."""
    z1, z2 = np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex)
    num = np.maximum(np.abs(1 + z1 * np.conj(z2)), np.abs(z1 + np.conj(z2)))
    den = np.sqrt((1 + np.abs(z1) ** 2) * (1 + np.abs(z2) ** 2))
    return np.arccos(np.clip(num / den, 0.0, 1.0))


def _safe_ratio(num, den):
    out = np.zeros(np.broadcast(num, den).shape, dtype=complex)
    np.divide(num, den, out=out, where=np.abs(den) > 0)
    return out


def cameron_classify(S, rec_threshold=REC_THRESHOLD, sym_threshold=SYM_THRESHOLD,
                     helix_threshold=HELIX_THRESHOLD) -> CameronResult:
    """Classify ``(..., 2, 2)`` Sinclair matrices.

    The reciprocal part is ``k = (alpha, beta, gamma)`` in the Pauli basis;
    the angle between ``vec(S)`` and that subspace decides reciprocity.  The
    symmetric component rotates ``(beta, gamma)`` onto the diplane axis that
    holds most power; its diagonal ratio ``z`` is matched to the canonical set.
    When symmetry is too weak the larger helix projection wins, unless even
    that is further than ``helix_threshold`` away, which gives "asymmetric".
    """
    S = np.asarray(S, dtype=complex)
    total = np.sqrt(np.sum(np.abs(S) ** 2, axis=(-2, -1)))
    valid = total > 0
    a, b, g = pauli_decompose(S)
    krec = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2 + np.abs(g) ** 2)
    delta = np.abs(S[..., 0, 1] - S[..., 1, 0]) / np.sqrt(2)
    rec_angle = np.where(valid, np.arctan2(delta, krec), np.pi / 2)
    safe_krec = np.where(krec > 0, krec, 1.0)

    chi = 0.5 * np.arctan2(2 * np.real(b * np.conj(g)), np.abs(b) ** 2 - np.abs(g) ** 2)
    eps = b * np.cos(chi) + g * np.sin(chi)
    perp = g * np.cos(chi) - b * np.sin(chi)
    sym_angle = np.arctan2(np.abs(perp), np.sqrt(np.abs(a) ** 2 + np.abs(eps) ** 2))

    p = a + eps
    q = a - eps
    swap = np.abs(q) > np.abs(p)
    z = np.where(swap, _safe_ratio(p, q), _safe_ratio(q, p))

    names = list(CANONICAL_Z)
    dist = np.stack([disk_distance(z, CANONICAL_Z[n]) for n in names], axis=-1)
    sym_label = np.array([LABEL[n] for n in names])[np.argmin(dist, axis=-1)]

    left = np.abs(b - 1j * g) / np.sqrt(2)
    right = np.abs(b + 1j * g) / np.sqrt(2)
    hel_cos = np.maximum(left, right) / safe_krec
    helix_label = np.where(left >= right, LABEL["left-helix"], LABEL["right-helix"])
    helix_label = np.where(np.arccos(np.clip(hel_cos, 0.0, 1.0)) > helix_threshold,
                           LABEL["asymmetric"], helix_label)

    label = np.where(sym_angle > sym_threshold, helix_label, sym_label)
    label = np.where(rec_angle > rec_threshold, LABEL["non-reciprocal"], label)
    label = np.where(valid, label, INVALID).astype(np.uint8)
    return CameronResult(label, rec_angle, sym_angle, z, valid)
