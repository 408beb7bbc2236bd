"""ComplexRaster and the CPLXR binary container.

Layout (little-endian)::

    b"CPLXR"  u16 version  u8 dtype (0=c64, 1=c128, 2=u8)  u32 H  u32 W  u32 C
    u32 meta_len  meta (UTF-8 "key=value" lines joined by "\\n")
    payload: H*W*C samples, channel fastest, complex as interleaved (re, im)
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, FormatError

MAGIC = b"CPLXR"
VERSION = 1
DTYPES = {0: np.dtype("<c8"), 1: np.dtype("<c16"), 2: np.dtype("u1")}
_HEADER = struct.Struct("<5sHBIII")


@dataclass
class ComplexRaster:
    """``(H, W, C)`` channel-last samples plus free-form string metadata.

    Polarimetric rasters use channels (hh, hv, vh, vv) or (hh, hv, vv); label
    planes are ``uint8`` with one channel.
    """

    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim == 2:
            self.data = self.data[..., None]
        if self.data.ndim != 3:
            raise ConfigError(f"raster data must be (H, W, C), got {self.data.shape}")

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def expand_reciprocal(self):
        """4-channel copy of a 3-channel raster with ``vh := hv``."""
        if self.channels == 4:
            return self
        if self.channels != 3:
            raise ConfigError(f"cannot expand a {self.channels}-channel raster")
        d = self.data
        return ComplexRaster(np.stack([d[..., 0], d[..., 1], d[..., 1], d[..., 2]], axis=-1), dict(self.meta))


def _dtype_tag(arr):
    dt = np.dtype(arr.dtype).newbyteorder("<")
    for tag, ref in DTYPES.items():
        if dt == ref:
            return tag
    raise FormatError(f"unsupported raster dtype {arr.dtype}")


def encode_meta(meta):
    lines = []
    for key, value in meta.items():
        key, value = str(key), str(value)
        if "=" in key or "\n" in key or "\n" in value:
            raise ConfigError(f"metadata key/value not representable: {key!r}")
        lines.append(f"{key}={value}")
    return "\n".join(lines).encode("utf-8")


def decode_meta(blob, offset=0):
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("metadata is not UTF-8", offset + exc.start) from None
    meta = {}
    for line in text.split("\n") if text else []:
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"malformed metadata line {line!r}", offset)
        meta[key] = value
    return meta


def to_bytes(raster: ComplexRaster) -> bytes:
    arr = raster.data
    tag = _dtype_tag(arr)
    meta = encode_meta(raster.meta)
    h, w, c = arr.shape
    head = _HEADER.pack(MAGIC, VERSION, tag, h, w, c) + struct.pack("<I", len(meta)) + meta
    return head + np.ascontiguousarray(arr, dtype=DTYPES[tag]).tobytes()


def from_bytes(buf: bytes, expand=False) -> ComplexRaster:
    if len(buf) < len(MAGIC) or buf[:len(MAGIC)] != MAGIC:
        raise FormatError("bad magic, not a CPLXR file", 0)
    if len(buf) < _HEADER.size + 4:
        raise FormatError("truncated header", len(buf))
    _, version, tag, h, w, c = _HEADER.unpack_from(buf, 0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 5)
    if tag not in DTYPES:
        raise FormatError(f"unknown dtype tag {tag}", 7)
    (mlen,) = struct.unpack_from("<I", buf, _HEADER.size)
    pos = _HEADER.size + 4
    if pos + mlen > len(buf):
        raise FormatError("truncated metadata", len(buf))
    meta = decode_meta(buf[pos:pos + mlen], pos)
    pos += mlen
    dt = DTYPES[tag]
    need = h * w * c * dt.itemsize
    if pos + need > len(buf):
        raise FormatError(f"truncated payload: expected {need} bytes", len(buf))
    if pos + need < len(buf):
        raise FormatError("trailing bytes after payload", pos + need)
    data = np.frombuffer(buf, dtype=dt, count=h * w * c, offset=pos).reshape(h, w, c).copy()
    r = ComplexRaster(data, meta)
    return r.expand_reciprocal() if expand and c == 3 else r


def write_raster(path, raster: ComplexRaster):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(to_bytes(raster))
    os.replace(tmp, path)


def read_raster(path, expand=False) -> ComplexRaster:
    """Load a CPLXR file; ``expand`` turns 3-channel data into 4 Sinclair channels."""
    with open(path, "rb") as fh:
        return from_bytes(fh.read(), expand=expand)


def write_labels(path, labels, meta=None):
    """uint8 label plane (a sidecar for class maps) in the same container."""
    write_raster(path, ComplexRaster(np.asarray(labels, dtype=np.uint8), dict(meta or {})))


def read_labels(path):
    r = read_raster(path)
    if r.data.dtype != np.uint8:
        raise FormatError("not a label plane", 7)
    return r.data[..., 0]


def read_raw(path, height, width, channels, component="<f4", layout="hwc", meta=None) -> ComplexRaster:
    """Ingest an interleaved (re, im) float binary with caller-supplied dimensions.

    ``layout`` is ``"hwc"`` (channel fastest) or ``"chw"`` (band sequential).
    """
    comp = np.dtype(component)
    if comp.kind != "f":
        raise ConfigError(f"raw component type must be floating point, got {comp}")
    expected = height * width * channels * 2 * comp.itemsize
    size = os.path.getsize(path)
    if size != expected:
        raise FormatError(f"raw file has {size} bytes, dimensions imply {expected}", min(size, expected))
    flat = np.fromfile(path, dtype=comp)
    z = (flat[0::2] + 1j * flat[1::2]).astype(np.complex64 if comp.itemsize <= 4 else np.complex128)
    if layout == "hwc":
        data = z.reshape(height, width, channels)
    elif layout == "chw":
        data = np.moveaxis(z.reshape(channels, height, width), 0, -1)
    else:
        raise ConfigError(f"unknown raw layout {layout!r}")
    return ComplexRaster(np.ascontiguousarray(data), dict(meta or {}))
