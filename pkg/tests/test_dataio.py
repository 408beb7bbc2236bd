import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polsar_cvnn.dataio import (ComplexRaster, Region, SynthSpec, denormalize, desk_scene, extract, from_bytes,
                                mosaic, normalize, read_labels, read_manifest, read_raster, read_raw, split,
                                split_counts, synthesize, tile, to_bytes, write_labels, write_manifest, write_raster)
from polsar_cvnn.dataio.tiling import tile_count
from polsar_cvnn.errors import ConfigError, DataError, FormatError
from polsar_cvnn.polarimetry import CAMERON_LABEL, boxcar_scm, decompose_raster, h_alpha, pauli_decompose
from polsar_cvnn.polarimetry.sinclair import from_channels

from conftest import crandn


# ---------------------------------------------------------------- container

@pytest.mark.parametrize("dtype", [np.complex64, np.complex128])
def test_raster_roundtrip_bit_exact(tmp_path, rng, dtype):
    r = ComplexRaster(crandn(rng, 16, 16, 4, dtype=dtype), {"sensor": "synthetic", "k": "a b"})
    write_raster(tmp_path / "a.cplxr", r)
    back = read_raster(tmp_path / "a.cplxr")
    assert back.data.dtype == dtype and back.data.tobytes() == r.data.tobytes() and back.meta == r.meta
    write_raster(tmp_path / "b.cplxr", back)
    assert (tmp_path / "a.cplxr").read_bytes() == (tmp_path / "b.cplxr").read_bytes()


def test_raster_format_errors(rng):
    blob = to_bytes(ComplexRaster(crandn(rng, 4, 4, 3, dtype=np.complex64)))
    with pytest.raises(FormatError, match="offset"):
        from_bytes(blob[:-5])
    with pytest.raises(FormatError, match="offset 0"):
        from_bytes(b"XPLXR" + blob[5:])
    bad = bytearray(blob)
    bad[5] = 9
    with pytest.raises(FormatError, match="version"):
        from_bytes(bytes(bad))
    with pytest.raises(FormatError, match="trailing"):
        from_bytes(blob + b"\0")


def test_three_channel_expansion(rng):
    d = crandn(rng, 3, 3, 3, dtype=np.complex64)
    r = from_bytes(to_bytes(ComplexRaster(d)), expand=True)
    assert r.channels == 4
    np.testing.assert_array_equal(r.data[..., 1], r.data[..., 2])
    np.testing.assert_array_equal(r.data[..., [0, 1, 3]], d)


def test_label_sidecar(tmp_path, rng):
    lab = rng.integers(0, 10, (5, 7)).astype(np.uint8)
    write_labels(tmp_path / "l.cplxr", lab)
    np.testing.assert_array_equal(read_labels(tmp_path / "l.cplxr"), lab)
    write_raster(tmp_path / "r.cplxr", ComplexRaster(crandn(rng, 2, 2, 4, dtype=np.complex64)))
    with pytest.raises(FormatError):
        read_labels(tmp_path / "r.cplxr")


@pytest.mark.parametrize("layout", ["hwc", "chw"])
def test_read_raw(tmp_path, rng, layout):
    d = crandn(rng, 3, 5, 4, dtype=np.complex64)
    src = d if layout == "hwc" else np.moveaxis(d, -1, 0)
    inter = np.stack([src.real, src.imag], axis=-1).astype("<f4")
    inter.tofile(tmp_path / "x.bin")
    np.testing.assert_array_equal(read_raw(tmp_path / "x.bin", 3, 5, 4, layout=layout).data, d)
    with pytest.raises(FormatError):
        read_raw(tmp_path / "x.bin", 3, 5, 3)


# ---------------------------------------------------------------- tiling

@pytest.mark.parametrize("h, w, size, n", [(22608, 8080, 64, 44478), (64, 64, 64, 1), (100, 100, 64, 1)])
def test_tile_counts(h, w, size, n):
    assert tile_count(h, w, size) == n
    assert len(tile((h, w), size)) == n


def test_tile_errors(caplog):
    with pytest.raises(ConfigError):
        tile((64, 64), 4)
    with caplog.at_level(logging.WARNING):
        assert len(tile((32, 64), 40)) == 0
    assert "exceeds" in caplog.text


@pytest.mark.parametrize("n, counts", [(44478, (35584, 4447, 4447)), (10, (8, 1, 1))])
def test_split_counts(n, counts):
    assert split_counts(n, (0.8, 0.1, 0.1)) == counts


@given(h=st.integers(8, 90), w=st.integers(8, 90), size=st.integers(8, 40), seed=st.integers(0, 100))
def test_tiles_partition_the_cropped_region(h, w, size, seed):
    ts = split(tile((h, w), size), (0.8, 0.1, 0.1), seed)
    cover = np.zeros((h, w), dtype=int)
    for t in ts.tiles:
        cover[t.row0:t.row0 + t.size, t.col0:t.col0 + t.size] += 1
    hc, wc = (h // size) * size, (w // size) * size
    assert np.all(cover[:hc, :wc] == 1) and cover.sum() == hc * wc
    assert ts.counts() == split_counts(len(ts), (0.8, 0.1, 0.1))
    assert split(tile((h, w), size), (0.8, 0.1, 0.1), seed) == ts


def test_split_rejects_bad_fractions():
    with pytest.raises(ConfigError):
        split_counts(10, (0.5, 0.2, 0.2))


def test_extract_mosaic_inverse(rng):
    d = crandn(rng, 40, 50, 4, dtype=np.complex64)
    ts = tile(d.shape, 16)
    patches = extract(d, ts.tiles)
    assert patches.shape == (len(ts), 4, 16, 16)
    np.testing.assert_array_equal(mosaic(ts.tiles, patches, 32, 48), d[:32, :48])


def test_manifest_roundtrip(tmp_path):
    ts = split(tile((100, 70), 16), (0.8, 0.1, 0.1), 5)
    write_manifest(tmp_path / "m.csv", ts, {"raster": "x.cplxr"})
    back, meta = read_manifest(tmp_path / "m.csv")
    assert back == ts and meta == {"raster": "x.cplxr"}


# ---------------------------------------------------------------- normalisation

def test_normalize_modes(rng):
    r = ComplexRaster(crandn(rng, 30, 30, 4) * np.array([1, 0.1, 0.1, 3]))
    g, _ = normalize(r)
    np.testing.assert_allclose(np.abs(g.data).max(), 1.0, rtol=1e-12)
    s, params = normalize(r, "per-channel-std")
    flat = s.data.reshape(-1, 4)
    comps = np.concatenate([flat.real, flat.imag])
    np.testing.assert_allclose(comps.std(axis=0), 1 / np.sqrt(2), atol=1e-6)
    for n in (g, s):
        np.testing.assert_allclose(denormalize(n).data, r.data, rtol=1e-7)
        assert not any(k.startswith("norm.") for k in denormalize(n).meta)


def test_normalize_errors():
    with pytest.raises(DataError):
        normalize(ComplexRaster(np.zeros((4, 4, 4), complex)))
    with pytest.raises(ConfigError):
        normalize(ComplexRaster(np.ones((4, 4, 4), complex)), "minmax")


# ---------------------------------------------------------------- synthetic scenes

def half_masks(h, w):
    left = np.zeros((h, w), bool)
    left[:, : w // 2] = True
    return left, ~left


def test_noise_free_sphere_is_trihedral():
    left, right = half_masks(8, 8)
    spec = SynthSpec(8, 8, [Region(left, "sphere"), Region(right, "dihedral", theta=0.3)], noise=0.0)
    r, lab = synthesize(spec)
    d = decompose_raster(r.data, which=("cameron",))
    np.testing.assert_array_equal(d.cameron.label, lab["cameron"])
    assert np.all(d.cameron.label[left] == CAMERON_LABEL["trihedral"])


def test_spec_validation():
    left, right = half_masks(4, 4)
    with pytest.raises(ConfigError):
        SynthSpec(4, 4, [Region(left, "sphere")]).validate()
    with pytest.raises(DataError):
        synthesize(SynthSpec(4, 4, [Region(left, "sphere"), Region(right, "clutter", T=np.diag([1, -1, 0]))]))


def test_rank_one_clutter_entropy_vanishes():
    m = np.ones((64, 64), bool)
    r, _ = synthesize(SynthSpec(64, 64, [Region(m, "clutter", T=np.diag([1.0, 0, 0]))], seed=1))
    k = pauli_decompose(from_channels(r.data.astype(complex))).stack()
    H = h_alpha(boxcar_scm(k, 9)).entropy
    assert H.max() < 1e-5


def test_identity_clutter_entropy_near_one():
    m = np.ones((110, 110), bool)
    r, _ = synthesize(SynthSpec(110, 110, [Region(m, "clutter", T=np.eye(3))], seed=2))
    k = pauli_decompose(from_channels(r.data.astype(complex))).stack()
    H = h_alpha(boxcar_scm(k, 9)).entropy[5:105, 5:105]  # 10^4 interior pixels
    assert 0.95 <= H.mean() <= 1.0


def test_desk_scene_layout():
    r, lab = synthesize(desk_scene(64, seed=3, n_cells=6))
    assert r.shape == (64, 64, 4) and r.data.dtype == np.complex64
    assert set(np.unique(lab["cameron"])) <= {0, 1, 2, 5, 7, 8}
    assert (lab["cameron"] == 0).any()
    r2, _ = synthesize(desk_scene(64, seed=3, n_cells=6))
    assert r.data.tobytes() == r2.data.tobytes()
