"""Synthetic polarimetric scenes with analytic ground-truth class planes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ConfigError, DataError
from ..polarimetry import cameron_classify, h_alpha, pauli_compose, pauli_decompose, to_channels
from ..polarimetry.krogager import LEFT, RIGHT, diplane, helix
from .raster import ComplexRaster

MECHANISMS = ("sphere", "dihedral", "helix", "clutter", "dipole", "cylinder", "narrow-diplane", "quarter-wave")
_DIAG = {"dipole": (1.0, 0.0), "cylinder": (1.0, 0.5), "narrow-diplane": (1.0, -0.5), "quarter-wave": (1.0, 1j)}


@dataclass
class Region:
    mask: np.ndarray  # (H, W) bool
    mechanism: str
    power: float = 1.0
    theta: float = 0.0  # orientation of dihedral / helix, radians
    hand: str = "left"  # helix handedness
    T: Optional[np.ndarray] = None  # 3x3 coherency of clutter (unit trace not required)


@dataclass
class SynthSpec:
    height: int
    width: int
    regions: list = field(default_factory=list)
    noise: float = 0.0  # std of additive circular Gaussian noise per channel (E|n|^2 = noise^2)
    seed: int = 0
    random_phase: bool = True  # per-pixel absolute phase on deterministic mechanisms
    channels: int = 4

    def validate(self):
        cover = np.zeros((self.height, self.width), dtype=np.int64)
        for r in self.regions:
            if r.mechanism not in MECHANISMS:
                raise ConfigError(f"unknown mechanism {r.mechanism!r}")
            if np.shape(r.mask) != (self.height, self.width):
                raise ConfigError("region mask does not match the raster size")
            if r.power <= 0:
                raise ConfigError("region power must be positive")
            cover += np.asarray(r.mask, dtype=np.int64)
        if np.any(cover != 1):
            raise ConfigError("region masks must partition the raster")
        if self.noise < 0:
            raise ConfigError("noise must be non-negative")
        if self.channels not in (3, 4):
            raise ConfigError("channels must be 3 or 4")
        return self


def canonical_sinclair(region: Region):
    """Unit-norm Sinclair matrix of a deterministic mechanism."""
    m = region.mechanism
    if m == "sphere":
        S = np.eye(2, dtype=complex)
    elif m == "dihedral":
        S = diplane(region.theta)
    elif m == "helix":
        S = helix(region.theta, LEFT if region.hand == "left" else RIGHT)
    elif m in _DIAG:
        a, b = _DIAG[m]
        S = np.diag([a, b]).astype(complex)
    else:
        raise ConfigError(f"{m!r} has no single Sinclair matrix")
    return S / np.linalg.norm(S)


def _clutter_factor(T):
    T = np.asarray(T, dtype=complex)
    if T.shape != (3, 3) or not np.allclose(T, np.conj(T.T), atol=1e-12):
        raise DataError("clutter coherency must be a 3x3 Hermitian matrix")
    lam, V = np.linalg.eigh(T)
    if lam.min() < -1e-12 * max(1.0, abs(lam).max()):
        raise DataError("clutter coherency is not positive semi-definite")
    return V * np.sqrt(np.maximum(lam, 0.0))


def region_truth(region: Region):
    """(Cameron label, H-alpha zone) expected for a region; Cameron is 0 for clutter."""
    if region.mechanism == "clutter":
        return 0, int(h_alpha(np.asarray(region.T, dtype=complex)).zone)
    S = canonical_sinclair(region)
    k = pauli_decompose(S).stack()
    T = np.outer(k, np.conj(k))
    return int(cameron_classify(S).label), int(h_alpha(T).zone)


def synthesize(spec: SynthSpec):
    """Render the scene; returns ``(ComplexRaster, {"cameron": uint8 plane, "halpha": uint8 plane})``."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    h, w = spec.height, spec.width
    S = np.zeros((h, w, 2, 2), dtype=complex)
    cam = np.zeros((h, w), dtype=np.uint8)
    zone = np.zeros((h, w), dtype=np.uint8)
    for r in spec.regions:
        mask = np.asarray(r.mask, dtype=bool)
        n = int(mask.sum())
        if r.mechanism == "clutter":
            L = _clutter_factor(r.T)
            g = (rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))) / np.sqrt(2)
            k = np.sqrt(r.power) * g @ L.T
            S[mask] = pauli_compose(k)
        else:
            base = np.sqrt(r.power) * canonical_sinclair(r)
            if spec.random_phase:
                ph = np.exp(1j * rng.uniform(-np.pi, np.pi, n))
            else:
                ph = np.ones(n)
            S[mask] = ph[:, None, None] * base
        cam[mask], zone[mask] = region_truth(r)
    data = to_channels(S, spec.channels)
    if spec.noise > 0:
        data = data + spec.noise * (rng.standard_normal(data.shape) + 1j * rng.standard_normal(data.shape)) / np.sqrt(2)
    meta = {"source": "synthetic", "seed": str(spec.seed), "noise": repr(spec.noise)}
    return ComplexRaster(data.astype(np.complex64), meta), {"cameron": cam, "halpha": zone}


def voronoi_masks(height, width, n_cells, rng):
    """Partition the raster into ``n_cells`` nearest-seed cells."""
    pts = rng.uniform(0, 1, (n_cells, 2)) * (height, width)
    yy, xx = np.mgrid[0:height, 0:width]
    d = (yy[..., None] - pts[:, 0]) ** 2 + (xx[..., None] - pts[:, 1]) ** 2
    owner = np.argmin(d, axis=-1)
    return [owner == i for i in range(n_cells)]


DESK_CLUTTER = np.diag([1.0, 0.2, 0.2]).astype(complex)


def desk_scene(size=512, seed=0, noise=0.01, n_cells=16, random_phase=False, clutter_cells=1):
    """Desk-scale scene: sphere, dihedral, helix and cylinder cells plus surface-like clutter.

    The first ``clutter_cells`` Voronoi cells (their seeds are random, so this
    is a random pick) hold white clutter; the rest cycle through the four
    deterministic mechanisms with random power and orientation.
    """
    if not 0 <= clutter_cells <= n_cells:
        raise ConfigError("clutter_cells must lie in [0, n_cells]")
    rng = np.random.default_rng(seed)
    masks = voronoi_masks(size, size, n_cells, rng)
    kinds = ("sphere", "dihedral", "helix", "cylinder")
    regions = []
    for i, mask in enumerate(masks):
        kind = "clutter" if i < clutter_cells else kinds[(i - clutter_cells) % len(kinds)]
        regions.append(Region(mask, kind, power=float(rng.uniform(0.5, 2.0)),
                              theta=float(rng.uniform(0, np.pi / 2)),
                              hand="left" if rng.random() < 0.5 else "right",
                              T=DESK_CLUTTER if kind == "clutter" else None))
    return SynthSpec(size, size, regions, noise=noise, seed=seed, random_phase=random_phase)
