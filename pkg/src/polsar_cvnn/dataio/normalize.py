"""Invertible amplitude scaling; parameters travel in the raster metadata."""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DataError
from .raster import ComplexRaster

MODES = ("global-amp-max", "per-channel-std")


def _scales(data, mode):
    if mode == "global-amp-max":
        peak = float(np.max(np.abs(data)))
        if not peak > 0:
            raise DataError("cannot normalise a zero-power raster")
        return np.full(data.shape[-1], 1.0 / peak)
    if mode == "per-channel-std":
        flat = data.reshape(-1, data.shape[-1])
        comps = np.concatenate([flat.real, flat.imag], axis=0)
        std = comps.std(axis=0)
        if np.any(std == 0):
            raise DataError("cannot normalise a channel with zero variance")
        return (1.0 / np.sqrt(2.0)) / std
    raise ConfigError(f"unknown normalisation mode {mode!r}")


def normalize(raster: ComplexRaster, mode="global-amp-max"):
    """Scale channels; returns ``(raster, params)`` with params also stored in ``meta``.

    ``global-amp-max`` divides by the largest amplitude.  ``per-channel-std``
    makes the pooled (Re, Im) standard deviation of every channel ``1/sqrt(2)``.
    """
    data = np.asarray(raster.data)
    if not np.all(np.isfinite(data)):
        raise DataError("raster contains non-finite samples")
    scales = _scales(data, mode)
    out = (data.astype(np.complex128) * scales).astype(data.dtype)
    params = {"norm.mode": mode}
    params.update({f"norm.scale.{c}": float(s).hex() for c, s in enumerate(scales)})
    meta = dict(raster.meta)
    meta.update(params)
    return ComplexRaster(out, meta), params


def scales_from_meta(meta):
    if "norm.mode" not in meta:
        raise DataError("raster carries no normalisation parameters")
    out, c = [], 0
    while f"norm.scale.{c}" in meta:
        out.append(float.fromhex(meta[f"norm.scale.{c}"]))
        c += 1
    return np.array(out)


def denormalize(raster: ComplexRaster, params=None):
    """Undo :func:`normalize` using ``params`` (or the raster's own metadata)."""
    meta = dict(raster.meta)
    scales = scales_from_meta(params if params is not None else meta)
    data = np.asarray(raster.data)
    out = (data.astype(np.complex128) / scales).astype(data.dtype)
    for key in [k for k in meta if k.startswith("norm.")]:
        del meta[key]
    return ComplexRaster(out, meta)
