"""``polsar-cvnn`` command line: tile, synth, train, reconstruct, decompose, evaluate, ablate."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from ..cxnn.checkpoint import read_entries
from ..cxnn.model import AEConfig, build_model, count_params, predict
from ..cxnn.training import train
from ..dataio import (ComplexRaster, denormalize, desk_scene, extract, mosaic, normalize, read_manifest,
                      read_raster, split, synthesize, tile, write_labels, write_manifest, write_raster)
from ..dataio.normalize import scales_from_meta
from ..errors import ConfigError, DataError, FormatError, NumericError, PolsarError, ShapeError
from ..metrics import EvalReport, classification_metrics, error_histograms, recon_metrics, shift_map
from ..polarimetry import DecompositionOptions, decompose_raster
from ..polarimetry.cameron import CLASSES
from . import figures
from .config import RunConfig, dump_config, load_config, require_path

log = logging.getLogger("polsar_cvnn")

COMMANDS = ("tile", "synth", "train", "reconstruct", "decompose", "evaluate", "ablate")
AXES = {
    "activation": ("crelu", "cardioid", "modrelu", "zrelu"),
    "depth": (2, 3, 4),
    "sampling": (("strided-conv", "nearest"), ("strided-conv", "bilinear"),
                 ("avgpool", "nearest"), ("avgpool", "bilinear")),
    "model-kind": ("cvnn", "dual-rvnn"),
}
ABLATION_HEADER = ("axis", "value", "mse", "psnr", "ssim", "halpha_oa", "halpha_f1", "cameron_oa", "cameron_f1",
                   "status")
N_ZONES = 9


# ---------------------------------------------------------------- data plumbing

def synth_spec(cfg: RunConfig):
    d = cfg.data
    return desk_scene(d.synth_size, cfg.optim.seed, d.synth_noise, d.synth_cells, d.synth_random_phase,
                      d.synth_clutter_cells)


def load_source(cfg: RunConfig) -> ComplexRaster:
    """The configured raster, or the synthetic desk scene when no raster is set."""
    if cfg.data.raster is None:
        raster, _ = synthesize(synth_spec(cfg))
        return raster
    return read_raster(require_path(cfg.data.raster, "raster"), expand=cfg.data.expand)


def tiles_for(cfg: RunConfig, raster):
    if cfg.data.manifest is not None:
        ts, _ = read_manifest(require_path(cfg.data.manifest, "manifest"))
        if ts.tiles and ts.tiles[0].size != cfg.data.tile_size:
            raise ConfigError(f"manifest tile size {ts.tiles[0].size} differs from config {cfg.data.tile_size}")
        bad = [t for t in ts.tiles if t.row0 + t.size > raster.height or t.col0 + t.size > raster.width]
        if bad:
            raise DataError(f"manifest tile {bad[0]} lies outside the {raster.height}x{raster.width} raster")
        if not ts.split:
            ts = split(ts, cfg.data.fractions, cfg.optim.seed)
        return ts
    ts = tile(raster, cfg.data.tile_size)
    if not len(ts):
        raise DataError(f"raster {raster.height}x{raster.width} yields no {cfg.data.tile_size}px tiles")
    return split(ts, cfg.data.fractions, cfg.optim.seed)


def _dtype(precision):
    # both model kinds take complex input
    return np.complex64 if precision == 32 else np.complex128


def model_meta(cfg: RunConfig, norm_params):
    return {"kind": cfg.model.kind, "precision": cfg.model.precision, "ae": cfg.model.ae.to_dict(),
            "norm": norm_params}


# ---------------------------------------------------------------- commands

def cmd_tile(cfg: RunConfig, out, input_path=None, **_):
    path = input_path or cfg.data.raster
    if path is None:
        raise ConfigError("tile needs a raster (--input or [data] raster)")
    raster = read_raster(require_path(path, "raster"))
    ts = split(tile(raster, cfg.data.tile_size), cfg.data.fractions, cfg.optim.seed)
    os.makedirs(out, exist_ok=True)
    dest = os.path.join(out, "manifest.csv")
    write_manifest(dest, ts, {"raster": os.path.abspath(path), "height": raster.height, "width": raster.width})
    log.info("%d tiles (train/val/test %s) -> %s", len(ts), ts.counts(), dest)
    return dest


def cmd_synth(cfg: RunConfig, out, **_):
    raster, labels = synthesize(synth_spec(cfg))
    os.makedirs(out, exist_ok=True)
    write_raster(os.path.join(out, "scene.cplxr"), raster)
    for name, plane in labels.items():
        write_labels(os.path.join(out, f"truth_{name}.cplxr"), plane)
    log.info("synthetic %dx%d scene -> %s", raster.height, raster.width, out)
    return os.path.join(out, "scene.cplxr")


def cmd_train(cfg: RunConfig, out, resume=None, **_):
    raster, params = normalize(load_source(cfg), cfg.data.normalize)
    ts = tiles_for(cfg, raster)
    x = {f: extract(raster.data, ts.fold(f)) for f in ("train", "val")}
    model = build_model(cfg.model.kind, cfg.model.ae, cfg.optim.seed, cfg.model.precision)
    x = {f: v.astype(_dtype(cfg.model.precision)) for f, v in x.items()}
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.ini"), "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))
    res = train(model, x["train"], x["val"], cfg.optim, out_dir=out, resume=resume,
                model_meta=model_meta(cfg, params))
    log.info("initial val %.6g, best val %.6g at epoch %d", res.initial_val_mse, res.best_val_mse, res.best_epoch)
    return res


def load_model(path):
    """Rebuild a model from a checkpoint; returns ``(model, meta)``."""
    entries, trailer = read_entries(require_path(path, "checkpoint"))
    meta = trailer.get("model") or {}
    if "ae" not in meta:
        raise FormatError("checkpoint carries no model description", 0)
    ae = AEConfig(**meta["ae"])
    model = build_model(meta["kind"], ae, 0, meta["precision"])
    model.load_state_dict(entries)
    return model, meta


def reconstruct(model, meta, raster: ComplexRaster, batch=32) -> ComplexRaster:
    """Normalise with the training parameters, reconstruct every tile, mosaic and denormalise."""
    ae = AEConfig(**meta["ae"])
    if raster.channels != ae.input_channels:
        raise ShapeError(f"raster has {raster.channels} channels, model expects {ae.input_channels}")
    size = ae.tile_size
    h, w = (raster.height // size) * size, (raster.width // size) * size
    if h == 0 or w == 0:
        raise ShapeError(f"raster {raster.height}x{raster.width} is smaller than the {size}px tile")
    scales = scales_from_meta(meta["norm"])
    data = (raster.data.astype(np.complex128) * scales).astype(_dtype(meta["precision"]))
    ts = tile((raster.height, raster.width), size)
    rec = mosaic(ts.tiles, predict(model, extract(data, ts.tiles), batch), h, w)
    out_meta = dict(raster.meta)
    out_meta.update(meta["norm"])
    out_meta["mosaic"] = f"{h},{w}"
    return denormalize(ComplexRaster(rec.astype(raster.data.dtype), out_meta))


def cmd_reconstruct(cfg: RunConfig, out, checkpoint=None, **_):
    model, meta = load_model(checkpoint or os.path.join(out, "best.ckpt"))
    rec = reconstruct(model, meta, load_source(cfg), cfg.optim.batch)
    os.makedirs(out, exist_ok=True)
    dest = os.path.join(out, "reconstructed.cplxr")
    write_raster(dest, rec)
    log.info("reconstruction %dx%d -> %s", rec.height, rec.width, dest)
    return dest


def _options(cfg: RunConfig):
    e = cfg.eval
    return DecompositionOptions(e.window, e.zones, e.rec_threshold, e.sym_threshold, e.helix_threshold)


def cmd_decompose(cfg: RunConfig, out, input_path=None, **_):
    raster = read_raster(require_path(input_path, "raster"), expand=True) if input_path else load_source(cfg)
    d = decompose_raster(raster.data, opts=_options(cfg))
    os.makedirs(out, exist_ok=True)
    figures.write_ppm(os.path.join(out, "pauli.ppm"), figures.pauli_rgb(d.pauli))
    figures.write_ppm(os.path.join(out, "krogager.ppm"), figures.krogager_rgb(d.krogager))
    figures.write_ppm(os.path.join(out, "cameron.ppm"), figures.class_map(d.cameron.label, figures.CAMERON_PALETTE))
    figures.write_ppm(os.path.join(out, "halpha.ppm"), figures.class_map(d.halpha.zone, figures.ZONE_PALETTE))
    write_labels(os.path.join(out, "cameron.cplxr"), d.cameron.label)
    write_labels(os.path.join(out, "halpha.cplxr"), d.halpha.zone)
    return d


def evaluate(original, reconstructed, cfg: RunConfig, out=None) -> EvalReport:
    """Metrics and classification agreement between two ``(H, W, C)`` arrays; figures when ``out`` is set."""
    x, xh = np.asarray(original), np.asarray(reconstructed)
    if x.shape != xh.shape:
        raise ShapeError(f"original {x.shape} and reconstruction {xh.shape} differ")
    opts = _options(cfg)
    d0, d1 = decompose_raster(x, opts=opts), decompose_raster(xh, opts=opts)
    rm = recon_metrics(x, xh)
    avg = cfg.eval.f1_average
    cls = {"halpha": classification_metrics(d0.halpha.zone, d1.halpha.zone, N_ZONES, average=avg),
           "cameron": classification_metrics(d0.cameron.label, d1.cameron.label, len(CLASSES), average=avg)}
    amp, phase = error_histograms(x, xh, cfg.eval.bins)
    shifts = shift_map(d0.halpha, d1.halpha)
    report = EvalReport(rm.mse, rm.psnr, rm.ssim, cls, amp, phase, shifts)
    if out:
        report.write(out)
        figs = {
            "pauli_original": figures.pauli_rgb(d0.pauli), "pauli_reconstructed": figures.pauli_rgb(d1.pauli),
            "krogager_original": figures.krogager_rgb(d0.krogager),
            "krogager_reconstructed": figures.krogager_rgb(d1.krogager),
            "halpha_original": figures.class_map(d0.halpha.zone, figures.ZONE_PALETTE),
            "halpha_reconstructed": figures.class_map(d1.halpha.zone, figures.ZONE_PALETTE),
            "cameron_original": figures.class_map(d0.cameron.label, figures.CAMERON_PALETTE),
            "cameron_reconstructed": figures.class_map(d1.cameron.label, figures.CAMERON_PALETTE),
            "confusion_halpha": figures.confusion_image(cls["halpha"].confusion),
            "confusion_cameron": figures.confusion_image(cls["cameron"].confusion),
            "shifts": figures.shift_figure(shifts, table=cfg.eval.zones),
        }
        for name, img in figs.items():
            figures.write_ppm(os.path.join(out, f"{name}.ppm"), img)
    return report


def _crop_to(original: ComplexRaster, rec: ComplexRaster):
    if "mosaic" in rec.meta and original.shape != rec.shape:
        h, w = (int(v) for v in rec.meta["mosaic"].split(","))
        if h <= original.height and w <= original.width:
            return original.data[:h, :w]
    return original.data


def cmd_evaluate(cfg: RunConfig, out, reconstructed=None, **_):
    rec = read_raster(require_path(reconstructed or os.path.join(out, "reconstructed.cplxr"), "reconstruction"))
    original = load_source(cfg)
    report = evaluate(_crop_to(original, rec), rec.data, cfg, out)
    for key, value in report.items():
        log.info("%s = %s", key, value)
    return report


def run_pipeline(cfg: RunConfig, out):
    """Train, reconstruct the whole raster and evaluate it; returns ``(TrainResult, EvalReport)``."""
    res = cmd_train(cfg, out)
    source = load_source(cfg)
    model, meta = load_model(os.path.join(out, "best.ckpt"))
    rec = reconstruct(model, meta, source, cfg.optim.batch)
    write_raster(os.path.join(out, "reconstructed.cplxr"), rec)
    return res, evaluate(_crop_to(source, rec), rec.data, cfg, out)


def ablation_configs(cfg: RunConfig, axis):
    if axis not in AXES:
        raise ConfigError(f"unknown ablation axis {axis!r}; expected one of {sorted(AXES)}")
    out = []
    for value in AXES[axis]:
        ae, kind = cfg.model.ae, cfg.model.kind
        if axis == "activation":
            ae = replace(ae, activation=value)
            label = value
        elif axis == "depth":
            ae = replace(ae, depth=value)
            label = str(value)
        elif axis == "sampling":
            ae = replace(ae, downsample=value[0], upsample=value[1])
            label = "/".join(value)
        else:
            kind = value
            label = value
        out.append((label, replace(cfg, model=replace(cfg.model, kind=kind, ae=ae))))
    return out


def cmd_ablate(cfg: RunConfig, out, axis=None, **_):
    """One run per axis value; failures are recorded in the table and the others proceed."""
    if axis is None:
        raise ConfigError("ablate needs --axis")
    runs = ablation_configs(cfg, axis)
    os.makedirs(out, exist_ok=True)
    rows = []
    for label, run_cfg in runs:
        run_dir = os.path.join(out, f"{axis}-{label.replace('/', '-')}")
        try:
            run_cfg.model.ae.validate()
            _, rep = run_pipeline(run_cfg, run_dir)
            h, c = rep.classification["halpha"], rep.classification["cameron"]
            rows.append((axis, label, rep.mse, rep.psnr, rep.ssim, h.oa, h.f1, c.oa, c.f1, "ok"))
        except PolsarError as exc:
            log.error("run %s=%s failed: %s", axis, label, exc)
            rows.append((axis, label) + ("",) * 7 + (f"failed: {type(exc).__name__}: {exc}",))
    dest = os.path.join(out, f"ablation_{axis}.csv")
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ABLATION_HEADER)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    with open(os.path.join(out, "params.json"), "w") as fh:
        json.dump({label: count_params(c.model.ae, c.model.kind == "cvnn") for label, c in runs}, fh, indent=1)
    return dest


# ---------------------------------------------------------------- entry point

def build_parser():
    p = argparse.ArgumentParser(prog="polsar-cvnn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="INI run configuration")
        s.add_argument("--seed", type=int, help="override [optim] seed")
        s.add_argument("--out", help="output directory (overrides [output] dir)")
        s.add_argument("-v", "--verbose", action="store_true")
        if name in ("tile", "decompose"):
            s.add_argument("--input", dest="input_path", help="raster to process")
        if name == "train":
            s.add_argument("--resume", help="continue from a last.ckpt")
        if name == "reconstruct":
            s.add_argument("--checkpoint", help="checkpoint (default <out>/best.ckpt)")
        if name == "evaluate":
            s.add_argument("--reconstructed", help="reconstruction (default <out>/reconstructed.cplxr)")
        if name == "ablate":
            s.add_argument("--axis", choices=sorted(AXES), required=True)
    return p


HANDLERS = {"tile": cmd_tile, "synth": cmd_synth, "train": cmd_train, "reconstruct": cmd_reconstruct,
            "decompose": cmd_decompose, "evaluate": cmd_evaluate, "ablate": cmd_ablate}
EXIT_CODES = ((ConfigError, 2), (NumericError, 4), (PolsarError, 3))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    extra = {k: v for k, v in vars(args).items() if k not in ("command", "config", "seed", "out", "verbose")}
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        out = args.out or cfg.out_dir
        HANDLERS[args.command](cfg, out, **extra)
    except PolsarError as exc:
        code = next(c for cls, c in EXIT_CODES if isinstance(exc, cls))
        print(f"polsar-cvnn {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
