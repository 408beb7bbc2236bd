"""Non-overlapping tiling, seeded train/val/test split and the tile manifest."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from ..errors import ConfigError, FormatError

log = logging.getLogger(__name__)

FOLDS = ("train", "val", "test")
MIN_TILE = 8


class Tile(NamedTuple):
    raster_id: str
    row0: int
    col0: int
    size: int


@dataclass(frozen=True)
class TileSet:
    tiles: tuple
    split: tuple = ()  # fold name per tile, empty until split() is applied
    seed: int | None = None

    def __len__(self):
        return len(self.tiles)

    def indices(self, fold):
        return [i for i, f in enumerate(self.split) if f == fold]

    def fold(self, fold):
        return [self.tiles[i] for i in self.indices(fold)]

    def counts(self):
        return tuple(len(self.indices(f)) for f in FOLDS)


def tile_count(height, width, size):
    return (height // size) * (width // size)


def tile(raster_or_shape, size: int, raster_id="0") -> TileSet:
    """Row-major grid of ``size x size`` tiles; partial tiles at the edges are dropped."""
    shape = getattr(raster_or_shape, "shape", raster_or_shape)
    h, w = int(shape[0]), int(shape[1])
    if size < MIN_TILE:
        raise ConfigError(f"tile size must be >= {MIN_TILE}, got {size}")
    if size > min(h, w):
        log.warning("tile size %d exceeds raster %dx%d; no tiles produced", size, h, w)
        return TileSet(())
    tiles = tuple(Tile(raster_id, r * size, c * size, size) for r in range(h // size) for c in range(w // size))
    return TileSet(tiles)


def split_counts(n, fractions):
    """``floor(f * n)`` for val and test, the remainder to train."""
    fr = tuple(float(f) for f in fractions)
    if len(fr) != 3 or any(f < 0 for f in fr) or not math.isclose(sum(fr), 1.0, abs_tol=1e-9):
        raise ConfigError(f"split fractions must be three non-negative values summing to 1, got {fractions}")
    n_val = int(math.floor(fr[1] * n + 1e-9))
    n_test = int(math.floor(fr[2] * n + 1e-9))
    return n - n_val - n_test, n_val, n_test


def split(tiles: TileSet, fractions=(0.8, 0.1, 0.1), seed=0) -> TileSet:
    """Uniformly shuffled fold assignment, deterministic in ``seed``."""
    n = len(tiles)
    n_train, n_val, _ = split_counts(n, fractions)
    perm = np.random.default_rng(seed).permutation(n)
    folds = np.empty(n, dtype=object)
    folds[perm[:n_train]] = "train"
    folds[perm[n_train:n_train + n_val]] = "val"
    folds[perm[n_train + n_val:]] = "test"
    return replace(tiles, split=tuple(folds), seed=seed)


def extract(data, tiles, channel_first=True):
    """Stack tile crops of an ``(H, W, C)`` array as ``(N, C, s, s)`` (or ``(N, s, s, C)``)."""
    data = data if isinstance(data, np.ndarray) else np.asarray(getattr(data, "data", data))
    if not tiles:
        c = data.shape[-1]
        return np.zeros((0, c, 0, 0) if channel_first else (0, 0, 0, c), dtype=data.dtype)
    crops = np.stack([data[t.row0:t.row0 + t.size, t.col0:t.col0 + t.size] for t in tiles])
    return np.ascontiguousarray(np.moveaxis(crops, -1, 1)) if channel_first else crops


def mosaic(tiles, patches, height, width, channel_first=True):
    """Place reconstructed patches at their tile origins in an ``(H, W, C)`` canvas."""
    patches = np.asarray(patches)
    if channel_first:
        patches = np.moveaxis(patches, 1, -1)
    out = np.zeros((height, width, patches.shape[-1]), dtype=patches.dtype)
    for t, p in zip(tiles, patches):
        out[t.row0:t.row0 + t.size, t.col0:t.col0 + t.size] = p
    return out


def write_manifest(path, ts: TileSet, meta=None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# seed={'' if ts.seed is None else ts.seed}\n")
        for key, value in (meta or {}).items():
            fh.write(f"# {key}={value}\n")
        w = csv.writer(fh)
        w.writerow(("index", "raster_id", "row0", "col0", "size", "fold"))
        for i, t in enumerate(ts.tiles):
            w.writerow((i, t.raster_id, t.row0, t.col0, t.size, ts.split[i] if ts.split else ""))


def read_manifest(path):
    """Returns ``(TileSet, meta)``."""
    meta = {}
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = value
        else:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader, None)
    if header != ["index", "raster_id", "row0", "col0", "size", "fold"]:
        raise FormatError(f"bad manifest header {header}", 0)
    tiles, folds = [], []
    for row in reader:
        tiles.append(Tile(row[1], int(row[2]), int(row[3]), int(row[4])))
        folds.append(row[5])
    seed = meta.pop("seed", "")
    ts = TileSet(tuple(tiles), tuple(folds) if any(folds) else (), int(seed) if seed else None)
    return ts, meta
