"""Binary checkpoints ("CXAE"): parameters, buffers, optimizer moments, RNG state.

Layout (little-endian)::

    b"CXAE"  u16 version  u32 n_entries
    n_entries x { u32 name_len, utf-8 name, u8 dtype tag, u8 rank, rank x u64 extent, raw payload }
    u32 trailer_len, utf-8 JSON trailer (config, epoch, step, rng state, history)

Complex payloads are stored as interleaved (re, im) components, which is the
native numpy memory layout, so save/load is bit-exact.
"""
from __future__ import annotations

import json
import os
import struct

import numpy as np

from ..errors import FormatError

MAGIC = b"CXAE"
VERSION = 1
_TAGS = {0: np.dtype("<c8"), 1: np.dtype("<c16"), 2: np.dtype("u1"), 3: np.dtype("<f4"), 4: np.dtype("<f8")}
_CODES = {dt: tag for tag, dt in _TAGS.items()}


def _tag(arr):
    dt = arr.dtype.newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype
    try:
        return _CODES[np.dtype(dt)]
    except KeyError:
        raise FormatError(f"unsupported checkpoint dtype {arr.dtype}") from None


def write_entries(path, entries: dict, trailer: dict):
    """Write ``{name: ndarray}`` plus a JSON-able trailer atomically."""
    parts = [MAGIC, struct.pack("<HI", VERSION, len(entries))]
    for name, arr in entries.items():
        arr = np.asarray(arr)
        tag = _tag(arr)
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw)
        parts.append(struct.pack("<BB", tag, arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype=_TAGS[tag]).tobytes())
    blob = json.dumps(trailer, sort_keys=True).encode("utf-8")
    parts.append(struct.pack("<I", len(blob)) + blob)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(b"".join(parts))
    os.replace(tmp, path)


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated checkpoint while reading {what}", self.pos)
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def read_entries(path):
    """Inverse of :func:`write_entries`: ``(entries, trailer)``."""
    with open(path, "rb") as fh:
        r = _Reader(fh.read())
    if r.take(4, "magic") != MAGIC:
        raise FormatError("bad checkpoint magic", 0)
    version, count = r.unpack("<HI", "header")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", 4)
    entries = {}
    for _ in range(count):
        (n,) = r.unpack("<I", "name length")
        name = r.take(n, "name").decode("utf-8")
        at = r.pos
        tag, rank = r.unpack("<BB", "dtype tag")
        if tag not in _TAGS:
            raise FormatError(f"unknown dtype tag {tag} for {name!r}", at)
        shape = r.unpack(f"<{rank}Q", "extents")
        dt = _TAGS[tag]
        nbytes = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
        entries[name] = np.frombuffer(r.take(nbytes, name), dtype=dt).reshape(shape).copy()
    (n,) = r.unpack("<I", "trailer length")
    trailer = json.loads(r.take(n, "trailer").decode("utf-8"))
    return entries, trailer


def save_checkpoint(path, model, optimizer=None, rng=None, /, **extra):
    """Model parameters and buffers, optional AdamW moments and RNG state."""
    entries = dict(model.state_dict())
    trailer = dict(extra)
    if optimizer is not None:
        for p in optimizer.params:
            entries[f"opt/{p.name}/m"] = p.opt_state["m"]
            entries[f"opt/{p.name}/v"] = p.opt_state["v"]
        trailer["opt_t"] = optimizer.t
        trailer["opt"] = {"lr": optimizer.lr, "weight_decay": optimizer.weight_decay,
                          "betas": list(optimizer.betas), "eps": optimizer.eps}
    if rng is not None:
        trailer["rng"] = rng.bit_generator.state
    write_entries(path, entries, trailer)


def load_checkpoint(path, model, optimizer=None, rng=None):
    """Restore in place; returns the trailer dict."""
    entries, trailer = read_entries(path)
    model.load_state_dict(entries)
    if optimizer is not None:
        for p in optimizer.params:
            p.opt_state["m"] = entries[f"opt/{p.name}/m"]
            p.opt_state["v"] = entries[f"opt/{p.name}/v"]
        optimizer.t = trailer.get("opt_t", 0)
    if rng is not None and "rng" in trailer:
        rng.bit_generator.state = trailer["rng"]
    return trailer
