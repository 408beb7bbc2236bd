"""Reconstruction fidelity and polarimetric-class preservation metrics."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError

PSNR_CLAMP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


class ReconMetrics(NamedTuple):
    mse: float
    psnr: float
    ssim: float


class ClassMetrics(NamedTuple):
    oa: float  # percent
    f1: float  # percent
    confusion: np.ndarray  # rows: reference class, cols: reconstructed class


class Histogram(NamedTuple):
    edges: np.ndarray
    counts: np.ndarray


class ShiftPair(NamedTuple):
    zone_from: int
    zone_to: int
    count: int
    centroid_from: tuple  # mean (H, alpha) of the moved pixels in the reference
    centroid_to: tuple  # same pixels in the reconstruction


def _check(x, xh):
    x, xh = np.asarray(x), np.asarray(xh)
    if x.shape != xh.shape:
        raise ShapeError(f"shape mismatch {x.shape} vs {xh.shape}")
    return x, xh


def mse(x, xh):
    x, xh = _check(x, xh)
    return float(np.mean(np.abs(x.astype(np.complex128) - xh) ** 2))


def psnr(mse_value, peak):
    """``10 log10(peak^2 / mse)``, clamped to 99 dB for (near) perfect reconstructions."""
    if mse_value < 1e-12:
        return PSNR_CLAMP
    if peak <= 0:
        return -np.inf
    return float(min(PSNR_CLAMP, 10.0 * np.log10(peak ** 2 / mse_value)))


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-r ** 2 / (2 * sigma ** 2))
    return g / g.sum()


def _filter_valid(img, g):
    """Separable correlation with ``g`` over the last two axes, 'valid' region only."""
    rows = sliding_window_view(img, len(g), axis=-2) @ g
    return sliding_window_view(rows, len(g), axis=-1) @ g


def ssim_plane(a, b, peak, size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    """Mean single-scale SSIM between two real planes (last two axes)."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    size = min(size, a.shape[-1], a.shape[-2])
    size -= (size + 1) % 2
    g = gaussian_window(size, sigma)
    c1, c2 = (0.01 * peak) ** 2, (0.03 * peak) ** 2
    mu_a, mu_b = _filter_valid(a, g), _filter_valid(b, g)
    saa = _filter_valid(a * a, g) - mu_a ** 2
    sbb = _filter_valid(b * b, g) - mu_b ** 2
    sab = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * sab + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (saa + sbb + c2)
    return num / den


def recon_metrics(x, xh) -> ReconMetrics:
    """MSE and PSNR on complex data, SSIM on amplitudes.

    ``x`` and ``xh`` are channel-last ``(H, W, C)`` rasters.  The PSNR peak and
    the SSIM dynamic range are the maximum amplitude of the reference ``x``.
    """
    x, xh = _check(x, xh)
    if x.ndim == 2:
        x, xh = x[..., None], xh[..., None]
    m = mse(x, xh)
    peak = float(np.max(np.abs(x))) if x.size else 0.0
    if peak == 0:
        peak = 1.0
    amp_x = np.moveaxis(np.abs(x), -1, 0)
    amp_xh = np.moveaxis(np.abs(xh), -1, 0)
    s = float(np.mean([np.mean(ssim_plane(amp_x[c], amp_xh[c], peak)) for c in range(amp_x.shape[0])]))
    return ReconMetrics(m, psnr(m, peak), s)


def confusion_matrix(ref, rec, K, invalid=0):
    """Counts of (reference class, reconstructed class) over labels 1..K; ``invalid`` pixels skipped."""
    ref, rec = _check(ref, rec)
    ref, rec = ref.ravel().astype(np.int64), rec.ravel().astype(np.int64)
    keep = (ref != invalid) & (rec != invalid) & (ref >= 1) & (ref <= K) & (rec >= 1) & (rec <= K)
    idx = (ref[keep] - 1) * K + (rec[keep] - 1)
    return np.bincount(idx, minlength=K * K).reshape(K, K)


def scores_from_confusion(conf, average="macro"):
    """Overall accuracy and F1 in percent from a confusion matrix."""
    conf = np.asarray(conf, dtype=np.float64)
    total = conf.sum()
    if total == 0:
        return 0.0, 0.0
    oa = 100.0 * np.trace(conf) / total
    tp = np.diag(conf)
    ref_n = conf.sum(axis=1)
    rec_n = conf.sum(axis=0)
    present = (ref_n + rec_n) > 0
    denom = ref_n + rec_n
    f1 = np.where(denom > 0, 2 * tp / np.where(denom > 0, denom, 1), 0.0)
    if average == "macro":
        score = float(np.mean(f1[present]))
    elif average == "weighted":
        score = float(np.sum(f1 * ref_n) / ref_n.sum())
    else:
        raise ValueError(f"unknown F1 average {average!r}")
    return float(oa), 100.0 * score


def classification_metrics(ref, rec, K, invalid=0, average="macro") -> ClassMetrics:
    conf = confusion_matrix(ref, rec, K, invalid)
    oa, f1 = scores_from_confusion(conf, average)
    return ClassMetrics(oa, f1, conf)


def wrap_phase(d):
    """Wrap to ``(-pi, pi]``."""
    w = np.angle(np.exp(1j * np.asarray(d)))
    return np.where(w <= -np.pi, w + 2 * np.pi, w)


def error_histograms(x, xh, bins=64, amp_range=None):
    """Amplitude error ``||x| - |xh||`` and wrapped phase error histograms.

    Amplitude bins are ``[left, right)`` and phase bins ``(left, right]`` over
    ``(-pi, pi]``; values beyond the range land in the end bins.
    """
    x, xh = _check(x, xh)
    amp = np.abs(np.abs(x) - np.abs(xh)).ravel()
    if amp_range is None:
        top = float(amp.max()) if amp.size else 0.0
        amp_range = (0.0, top if top > 0 else 1.0)
    a_edges = np.linspace(amp_range[0], amp_range[1], bins + 1)
    width = (a_edges[-1] - a_edges[0]) / bins
    ai = np.clip(np.floor((amp - a_edges[0]) / width).astype(np.int64), 0, bins - 1)
    a_counts = np.bincount(ai, minlength=bins)

    ph = wrap_phase(np.angle(xh) - np.angle(x)).ravel()
    p_edges = np.linspace(-np.pi, np.pi, bins + 1)
    pw = 2 * np.pi / bins
    pi_ = np.clip(np.ceil((ph + np.pi) / pw).astype(np.int64) - 1, 0, bins - 1)
    p_counts = np.bincount(pi_, minlength=bins)
    return Histogram(a_edges, a_counts), Histogram(p_edges, p_counts)


def shift_map(ref, rec):
    """Zone transitions between two H-alpha results of equal shape.

    Returns one :class:`ShiftPair` per ordered pair ``a != b`` that occurs,
    sorted by ``(zone_from, zone_to)``.
    """
    zr, zc = np.asarray(ref.zone).ravel(), np.asarray(rec.zone).ravel()
    if zr.shape != zc.shape:
        raise ShapeError("H-alpha planes differ in shape")
    hr, ar = np.asarray(ref.entropy).ravel(), np.asarray(ref.alpha).ravel()
    hc, ac = np.asarray(rec.entropy).ravel(), np.asarray(rec.alpha).ravel()
    moved = (zr != zc) & (zr > 0) & (zc > 0)
    out = []
    if not np.any(moved):
        return out
    pairs = np.stack([zr[moved], zc[moved]], axis=1).astype(np.int64)
    keys, inv = np.unique(pairs, axis=0, return_inverse=True)
    inv = inv.ravel()
    counts = np.bincount(inv)
    sums = [np.bincount(inv, weights=v[moved]) for v in (hr, ar, hc, ac)]
    for i, (a, b) in enumerate(keys):
        n = counts[i]
        out.append(ShiftPair(int(a), int(b), int(n), (sums[0][i] / n, sums[1][i] / n),
                             (sums[2][i] / n, sums[3][i] / n)))
    return out


@dataclass
class EvalReport:
    mse: float
    psnr: float
    ssim: float
    classification: dict = field(default_factory=dict)  # name -> ClassMetrics
    amp_hist: Optional[Histogram] = None
    phase_hist: Optional[Histogram] = None
    shifts: list = field(default_factory=list)

    def items(self):
        yield "mse", self.mse
        yield "psnr", self.psnr
        yield "ssim", self.ssim
        for name, cm in self.classification.items():
            yield f"{name}.oa", cm.oa
            yield f"{name}.f1", cm.f1
        yield "shift_pairs", len(self.shifts)

    def write(self, out_dir):
        """``report.txt`` (key=value), ``confusion_<name>.csv``, histogram and shift CSVs."""
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
            for key, value in self.items():
                fh.write(f"{key}={value!r}\n" if isinstance(value, float) else f"{key}={value}\n")
        for name, cm in self.classification.items():
            write_confusion(os.path.join(out_dir, f"confusion_{name}.csv"), cm.confusion)
        for tag, hist in (("amp", self.amp_hist), ("phase", self.phase_hist)):
            if hist is not None:
                write_histogram(os.path.join(out_dir, f"hist_{tag}.csv"), hist)
        with open(os.path.join(out_dir, "shifts.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("zone_from", "zone_to", "count", "h_from", "alpha_from", "h_to", "alpha_to"))
            for s in self.shifts:
                w.writerow((s.zone_from, s.zone_to, s.count, *map(repr, s.centroid_from), *map(repr, s.centroid_to)))


def read_report(path):
    """Parse a ``report.txt`` into a dict of floats (ints where exact)."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, value = line.split("=", 1)
            out[key] = float(value) if any(c in value for c in ".eEn") else int(value)
    return out


def write_confusion(path, conf):
    K = conf.shape[0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ref\\rec"] + [str(j + 1) for j in range(K)])
        for i in range(K):
            w.writerow([str(i + 1)] + [str(int(v)) for v in conf[i]])


def read_confusion(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([[int(v) for v in row[1:]] for row in rows[1:]], dtype=np.int64)


def write_histogram(path, hist: Histogram):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("bin_left", "bin_right", "count"))
        for i, c in enumerate(hist.counts):
            w.writerow((repr(float(hist.edges[i])), repr(float(hist.edges[i + 1])), int(c)))
