"""Coherent (Pauli, Krogager, Cameron) and incoherent (H-alpha) polarimetric decompositions."""
from .cameron import CLASSES as CAMERON_CLASSES
from .cameron import LABEL as CAMERON_LABEL
from .cameron import CameronResult, cameron_classify, disk_distance
from .coherency import boxcar_scm
from .eigen import eigh3, eigvalsh3, jacobi_eigh3
from .halpha import (DEFAULT_ZONES, HAlphaResult, ZoneTable, classify_zone, feasibility_curves,
                     h_alpha, is_feasible)
from .krogager import KrogagerVector, krogager_decompose, resynthesize
from .raster import DecompositionMap, DecompositionOptions, decompose_raster
from .sinclair import PauliVector, from_channels, pauli_compose, pauli_decompose, sinclair, to_channels

__all__ = [
    "CAMERON_CLASSES", "CAMERON_LABEL", "CameronResult", "cameron_classify", "disk_distance",
    "boxcar_scm", "eigh3", "eigvalsh3", "jacobi_eigh3",
    "DEFAULT_ZONES", "HAlphaResult", "ZoneTable", "classify_zone", "feasibility_curves", "h_alpha",
    "is_feasible", "KrogagerVector", "krogager_decompose", "resynthesize",
    "DecompositionMap", "DecompositionOptions", "decompose_raster",
    "PauliVector", "from_channels", "pauli_compose", "pauli_decompose", "sinclair", "to_channels",
]
