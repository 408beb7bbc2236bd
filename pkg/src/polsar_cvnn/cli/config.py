"""INI run configuration with strict key checking."""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from ..cxnn.model import AEConfig
from ..cxnn.training import TrainConfig
from ..errors import ConfigError
from ..polarimetry.cameron import HELIX_THRESHOLD, REC_THRESHOLD, SYM_THRESHOLD
from ..polarimetry.halpha import ZoneTable


@dataclass(frozen=True)
class DataConfig:
    raster: Optional[str] = None
    manifest: Optional[str] = None
    tile_size: int = 64
    fractions: tuple = (0.8, 0.1, 0.1)
    normalize: str = "global-amp-max"
    expand: bool = True
    synth_size: int = 512
    synth_noise: float = 0.01
    synth_cells: int = 16
    synth_clutter_cells: int = 1
    synth_random_phase: bool = False


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "cvnn"
    precision: int = 32
    ae: AEConfig = AEConfig()


@dataclass(frozen=True)
class EvalConfig:
    window: int = 7
    zones: ZoneTable = ZoneTable()
    rec_threshold: float = REC_THRESHOLD
    sym_threshold: float = SYM_THRESHOLD
    helix_threshold: float = HELIX_THRESHOLD
    bins: int = 64
    f1_average: str = "macro"


@dataclass(frozen=True)
class RunConfig:
    data: DataConfig = DataConfig()
    model: ModelConfig = ModelConfig()
    optim: TrainConfig = TrainConfig()
    eval: EvalConfig = EvalConfig()
    out_dir: str = "out"
    source: Optional[str] = field(default=None, compare=False)

    def with_seed(self, seed):
        return replace(self, optim=replace(self.optim, seed=seed))

    def with_out(self, out_dir):
        return replace(self, out_dir=out_dir)


def _bool(v):
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _floats(v):
    return tuple(float(x) for x in v.replace(";", ",").split(",") if x.strip())


def _opt_int(v):
    s = v.strip().lower()
    return None if s in ("", "none", "0") else int(s)


def _path(v):
    return v.strip() or None


DATA_KEYS = {"raster": _path, "manifest": _path, "tile_size": int, "fractions": _floats, "normalize": str.strip,
             "expand": _bool, "synth_size": int, "synth_noise": float, "synth_cells": int,
             "synth_clutter_cells": int, "synth_random_phase": _bool}
AE_KEYS = {"depth": int, "width": int, "kernel": int, "activation": str.strip, "bottleneck_dim": _opt_int,
           "downsample": str.strip, "upsample": str.strip, "input_channels": int, "tile_size": int}
MODEL_KEYS = dict(AE_KEYS, kind=str.strip, precision=int)
OPTIM_KEYS = {"lr": float, "weight_decay": float, "beta1": float, "beta2": float, "eps": float, "batch": int,
              "epochs": int, "seed": int}
EVAL_KEYS = {"window": int, "h_splits": _floats, "alpha_splits": str, "rec_threshold": float,
             "sym_threshold": float, "helix_threshold": float, "bins": int, "f1_average": str.strip}
OUTPUT_KEYS = {"dir": _path}
SECTIONS = {"data": DATA_KEYS, "model": MODEL_KEYS, "optim": OPTIM_KEYS, "eval": EVAL_KEYS, "output": OUTPUT_KEYS}


def _parse_section(cp, name, keys):
    out = {}
    if not cp.has_section(name):
        return out
    for key, raw in cp.items(name):
        if key not in keys:
            raise ConfigError(f"unknown key {key!r} in [{name}]")
        try:
            out[key] = keys[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {name}.{key}: {exc}") from None
    return out


def _alpha_splits(text):
    bands = [b for b in text.split(";") if b.strip()]
    if len(bands) != 3:
        raise ConfigError("alpha_splits needs three ';'-separated bands of two values")
    out = []
    for b in bands:
        vals = tuple(float(x) for x in b.split(","))
        if len(vals) != 2 or not vals[0] <= vals[1]:
            raise ConfigError(f"bad alpha split band {b!r}")
        out.append(vals)
    return tuple(out)


def parse_config(text, source=None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
    d = _parse_section(cp, "data", DATA_KEYS)
    m = _parse_section(cp, "model", MODEL_KEYS)
    o = _parse_section(cp, "optim", OPTIM_KEYS)
    e = _parse_section(cp, "eval", EVAL_KEYS)
    out = _parse_section(cp, "output", OUTPUT_KEYS)

    data = replace(DataConfig(), **d)
    ae_args = {k: v for k, v in m.items() if k in AE_KEYS}
    ae_args.setdefault("tile_size", data.tile_size)
    ae = replace(AEConfig(), **ae_args).validate()
    if ae.tile_size != data.tile_size:
        raise ConfigError(f"model tile_size {ae.tile_size} differs from data tile_size {data.tile_size}")
    model = ModelConfig(kind=m.get("kind", "cvnn"), precision=m.get("precision", 32), ae=ae)
    if model.kind not in ("cvnn", "dual-rvnn"):
        raise ConfigError(f"unknown model kind {model.kind!r}")
    if model.precision not in (32, 64):
        raise ConfigError("precision must be 32 or 64")
    betas = (o.pop("beta1", 0.9), o.pop("beta2", 0.999))
    optim = replace(TrainConfig(), betas=betas, **o).validate()
    zones = ZoneTable()
    if "h_splits" in e:
        zones = replace(zones, h_splits=tuple(e.pop("h_splits")))
    if "alpha_splits" in e:
        zones = replace(zones, alpha_splits=_alpha_splits(e.pop("alpha_splits")))
    ev = replace(EvalConfig(), zones=zones, **e)
    if ev.f1_average not in ("macro", "weighted"):
        raise ConfigError("f1_average must be macro or weighted")
    if ev.window < 3 or ev.window % 2 == 0:
        raise ConfigError("eval window must be odd and >= 3")
    return RunConfig(data, model, optim, ev, out.get("dir") or "out", source)


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    if not os.path.exists(path):
        raise ConfigError(f"config file {path} does not exist")
    with open(path, encoding="utf-8") as fh:
        cfg = parse_config(fh.read(), source=path)
    base = os.path.dirname(os.path.abspath(path))

    def rel(p):
        return p if p is None or os.path.isabs(p) else os.path.join(base, p)

    return replace(cfg, data=replace(cfg.data, raster=rel(cfg.data.raster), manifest=rel(cfg.data.manifest)))


def require_path(p, what):
    if p is None:
        raise ConfigError(f"{what} is not configured")
    if not os.path.exists(p):
        raise ConfigError(f"{what} {p} does not exist")
    return p


def dump_config(cfg: RunConfig) -> str:
    """INI text that :func:`parse_config` maps back to ``cfg``."""
    d, m, o, e = cfg.data, cfg.model, cfg.optim, cfg.eval
    ae = m.ae
    lines = ["[data]"]
    for f in fields(DataConfig):
        v = getattr(d, f.name)
        if v is None:
            continue
        if isinstance(v, tuple):
            v = ",".join(repr(x) for x in v)
        lines.append(f"{f.name} = {v}")
    lines.append("\n[model]")
    lines.append(f"kind = {m.kind}")
    lines.append(f"precision = {m.precision}")
    for f in fields(AEConfig):
        v = getattr(ae, f.name)
        lines.append(f"{f.name} = {'none' if v is None else v}")
    lines.append("\n[optim]")
    for key in ("lr", "weight_decay", "eps", "batch", "epochs", "seed"):
        lines.append(f"{key} = {getattr(o, key)!r}")
    lines.append(f"beta1 = {o.betas[0]!r}")
    lines.append(f"beta2 = {o.betas[1]!r}")
    lines.append("\n[eval]")
    lines.append(f"window = {e.window}")
    lines.append("h_splits = " + ",".join(repr(x) for x in e.zones.h_splits))
    lines.append("alpha_splits = " + ";".join(",".join(repr(x) for x in b) for b in e.zones.alpha_splits))
    for key in ("rec_threshold", "sym_threshold", "helix_threshold"):
        lines.append(f"{key} = {getattr(e, key)!r}")
    lines.append(f"bins = {e.bins}")
    lines.append(f"f1_average = {e.f1_average}")
    lines.append("\n[output]")
    lines.append(f"dir = {cfg.out_dir}")
    return "\n".join(lines) + "\n"

