"""Uncompressed PPM (P6) figures: false-colour composites, class maps, confusion and shift plots."""
from __future__ import annotations

import numpy as np

from ..polarimetry.halpha import ZoneTable, feasibility_curves

# index 0 is the invalid / none colour
ZONE_PALETTE = np.array([
    (0, 0, 0), (128, 0, 128), (0, 100, 0), (160, 160, 160), (255, 0, 255), (50, 205, 50),
    (255, 165, 0), (220, 20, 60), (0, 191, 255), (0, 0, 205)], dtype=np.uint8)
CAMERON_PALETTE = np.array([
    (0, 0, 0), (0, 0, 255), (255, 0, 0), (255, 128, 0), (255, 255, 0), (0, 200, 200),
    (0, 160, 0), (200, 0, 200), (120, 60, 200), (255, 255, 255), (128, 128, 128)], dtype=np.uint8)


def write_ppm(path, rgb):
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"PPM needs an (H, W, 3) image, got {rgb.shape}")
    h, w = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def read_ppm(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    # header is four whitespace-separated tokens followed by exactly one whitespace byte
    fields, pos = [], 0
    while len(fields) < 4:
        while buf[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while end < len(buf) and not buf[end:end + 1].isspace():
            end += 1
        fields.append(buf[pos:end])
        pos = end
    if fields[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = int(fields[1]), int(fields[2])
    return np.frombuffer(buf[pos + 1:pos + 1 + w * h * 3], dtype=np.uint8).reshape(h, w, 3)


def false_colour(planes, clip_pct=99.0, gamma=0.7):
    """Stack three amplitude planes as RGB, each clipped at its percentile and gamma-mapped."""
    out = []
    for p in planes:
        p = np.abs(np.asarray(p)).astype(np.float64)
        top = np.percentile(p, clip_pct) if p.size else 0.0
        x = np.clip(p / top, 0.0, 1.0) if top > 0 else np.zeros_like(p)
        out.append(np.round(255 * x ** gamma))
    return np.stack(out, axis=-1).astype(np.uint8)


def pauli_rgb(k):
    """RGB = (|beta|, |gamma|, |alpha|): double bounce, volume, single bounce."""
    return false_colour([k[..., 1], k[..., 2], k[..., 0]])


def krogager_rgb(kv):
    """RGB = (k_d, k_h, k_s)."""
    return false_colour([kv.k_d, kv.k_h, kv.k_s])


def class_map(labels, palette):
    labels = np.asarray(labels, dtype=np.int64)
    return palette[np.clip(labels, 0, len(palette) - 1)]


def confusion_image(conf, cell=16):
    """Row-normalised confusion matrix as a grey heat map (white = all pixels)."""
    conf = np.asarray(conf, dtype=np.float64)
    rows = conf.sum(axis=1, keepdims=True)
    frac = np.divide(conf, rows, out=np.zeros_like(conf), where=rows > 0)
    img = np.repeat(np.repeat(np.round(255 * frac), cell, axis=0), cell, axis=1).astype(np.uint8)
    img = np.stack([img] * 3, axis=-1)
    img[::cell, :] = (90, 90, 90)
    img[:, ::cell] = (90, 90, 90)
    return img


def _draw_line(img, p0, p1, colour):
    (r0, c0), (r1, c1) = p0, p1
    n = int(max(abs(r1 - r0), abs(c1 - c0))) + 1
    rr = np.round(np.linspace(r0, r1, n)).astype(int)
    cc = np.round(np.linspace(c0, c1, n)).astype(int)
    keep = (rr >= 0) & (rr < img.shape[0]) & (cc >= 0) & (cc < img.shape[1])
    img[rr[keep], cc[keep]] = colour


def halpha_plane(size=256, table: ZoneTable = ZoneTable()):
    """Blank H-alpha canvas (H to the right, alpha upwards) with zone borders and the feasible region."""
    img = np.full((size, size, 3), 255, dtype=np.uint8)

    def to_px(h, a_deg):
        return (size - 1) * (1 - a_deg / 90.0), (size - 1) * h

    for hs in table.h_splits:
        _draw_line(img, to_px(hs, 0), to_px(hs, 90), (180, 180, 180))
    edges = (0.0,) + tuple(table.h_splits) + (1.0,)
    for band, (lo, hi) in enumerate(table.alpha_splits):
        for a in (lo, hi):
            _draw_line(img, to_px(edges[band], a), to_px(edges[band + 1], a), (180, 180, 180))
    for curve in feasibility_curves(101):
        pts = [to_px(h, np.degrees(a)) for h, a in curve]
        for p, q in zip(pts[:-1], pts[1:]):
            _draw_line(img, p, q, (0, 0, 0))
    return img, to_px


def shift_figure(shifts, size=256, table: ZoneTable = ZoneTable()):
    """Arrows from reference to reconstruction centroids; darker red for more pixels."""
    img, to_px = halpha_plane(size, table)
    if not shifts:
        return img
    top = max(s.count for s in shifts)
    for s in shifts:
        w = s.count / top
        colour = (255, int(200 * (1 - w)), int(200 * (1 - w)))
        p0 = to_px(s.centroid_from[0], np.degrees(s.centroid_from[1]))
        p1 = to_px(s.centroid_to[0], np.degrees(s.centroid_to[1]))
        _draw_line(img, p0, p1, colour)
        r, c = int(round(p1[0])), int(round(p1[1]))
        img[max(r - 1, 0):r + 2, max(c - 1, 0):c + 2] = colour
    return img
