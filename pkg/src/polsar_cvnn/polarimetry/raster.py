"""Per-pixel decompositions of a whole raster."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigError
from .cameron import HELIX_THRESHOLD, REC_THRESHOLD, SYM_THRESHOLD, CameronResult, cameron_classify
from .coherency import DEFAULT_WINDOW, boxcar_scm
from .halpha import DEFAULT_ZONES, HAlphaResult, ZoneTable, h_alpha
from .krogager import KrogagerVector, krogager_decompose
from .sinclair import from_channels, pauli_decompose

KINDS = ("pauli", "krogager", "cameron", "halpha")


@dataclass
class DecompositionMap:
    pauli: Optional[np.ndarray] = None  # (H, W, 3) complex
    krogager: Optional[KrogagerVector] = None
    cameron: Optional[CameronResult] = None
    halpha: Optional[HAlphaResult] = None
    coherency: Optional[np.ndarray] = None  # (H, W, 3, 3)


@dataclass(frozen=True)
class DecompositionOptions:
    window: int = DEFAULT_WINDOW
    zones: ZoneTable = DEFAULT_ZONES
    rec_threshold: float = REC_THRESHOLD
    sym_threshold: float = SYM_THRESHOLD
    helix_threshold: float = HELIX_THRESHOLD


def decompose_raster(data, which=KINDS, opts: DecompositionOptions = DecompositionOptions()) -> DecompositionMap:
    """Run the selected decompositions on ``(H, W, C)`` channel-last data (C = 3 or 4).

    Krogager works on the reciprocal part ``(hv + vh) / 2``; Cameron sees the
    full matrix so it can flag non-reciprocal pixels.  Invalid pixels are
    flagged in the results rather than raised.
    """
    data = data if isinstance(data, np.ndarray) else np.asarray(getattr(data, "data", data))
    if data.ndim != 3:
        raise ConfigError(f"expected (H, W, C) data, got shape {data.shape}")
    unknown = set(which) - set(KINDS)
    if unknown:
        raise ConfigError(f"unknown decomposition(s) {sorted(unknown)}")
    S = from_channels(data.astype(np.complex128))
    out = DecompositionMap()
    k = pauli_decompose(S).stack()
    if "pauli" in which:
        out.pauli = k
    if "krogager" in which:
        Sr = S.copy()
        hv = 0.5 * (S[..., 0, 1] + S[..., 1, 0])
        Sr[..., 0, 1] = hv
        Sr[..., 1, 0] = hv
        out.krogager = krogager_decompose(Sr)
    if "cameron" in which:
        out.cameron = cameron_classify(S, opts.rec_threshold, opts.sym_threshold, opts.helix_threshold)
    if "halpha" in which:
        out.coherency = boxcar_scm(k, opts.window)
        out.halpha = h_alpha(out.coherency, opts.zones)
    return out
