"""Raster container, tiling pipeline, normalisation and synthetic scenes."""
from .normalize import MODES as NORM_MODES
from .normalize import denormalize, normalize
from .raster import (ComplexRaster, from_bytes, read_labels, read_raster, read_raw, to_bytes, write_labels,
                     write_raster)
from .synth import MECHANISMS, Region, SynthSpec, desk_scene, region_truth, synthesize, voronoi_masks
from .tiling import FOLDS, Tile, TileSet, extract, mosaic, read_manifest, split, split_counts, tile, write_manifest

__all__ = [
    "NORM_MODES", "denormalize", "normalize",
    "ComplexRaster", "from_bytes", "read_labels", "read_raster", "read_raw", "to_bytes", "write_labels",
    "write_raster",
    "MECHANISMS", "Region", "SynthSpec", "desk_scene", "region_truth", "synthesize", "voronoi_masks",
    "FOLDS", "Tile", "TileSet", "extract", "mosaic", "read_manifest", "split", "split_counts", "tile",
    "write_manifest",
]
