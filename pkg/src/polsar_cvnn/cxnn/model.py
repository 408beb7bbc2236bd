"""Convolutional AutoEncoder assembly and its dual real-valued twin."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from ..cxcore import CTensor, as_tensor, concat, imag, make_complex, real
from ..errors import ConfigError
from . import functional as F
from .layers import Bottleneck, Conv2d, Module, ResBlock, Upsample, _inits


@dataclass(frozen=True)
class AEConfig:
    depth: int = 2
    width: int = 64
    kernel: int = 3
    activation: str = "crelu"
    bottleneck_dim: Optional[int] = None
    downsample: str = "strided-conv"
    upsample: str = "nearest"
    input_channels: int = 4
    tile_size: int = 64

    def validate(self):
        if self.depth < 0:
            raise ConfigError("depth must be non-negative")
        if self.tile_size % (2 ** self.depth):
            raise ConfigError(f"tile size {self.tile_size} not divisible by 2^{self.depth}")
        if self.bottleneck_dim is not None and self.bottleneck_dim <= 0:
            raise ConfigError("bottleneck dimension must be positive")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ConfigError("kernel extent must be a positive odd number")
        if self.activation not in F.ACTIVATIONS + ("relu",):
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.downsample not in ("strided-conv", "avgpool"):
            raise ConfigError(f"unknown downsampling {self.downsample!r}")
        if self.upsample not in ("nearest", "bilinear"):
            raise ConfigError(f"unknown upsampling {self.upsample!r}")
        if self.width < 1 or self.input_channels < 1:
            raise ConfigError("width and input channels must be positive")
        return self

    def to_dict(self):
        return asdict(self)

    @property
    def latent_size(self):
        return self.tile_size // (2 ** self.depth)


class AutoEncoder(Module):
    """Input conv, ``depth`` halving ResBlocks, optional dense bottleneck,
    then ``depth`` (upsample, ResBlock) stages and an output conv.

    Channel widths double at every encoder stage and halve on the way back.
    """

    def __init__(self, cfg: AEConfig, complex=True, rng=None, dtype=None):
        cfg.validate()
        self.cfg = cfg
        self.complex = complex
        if dtype is None:
            dtype = np.complex64 if complex else np.float32
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(0) if rng is None else rng
        init, linear_init = _inits(complex)
        k, w, act = cfg.kernel, cfg.width, cfg.activation
        kw = dict(complex=complex, rng=rng, dtype=dtype)

        self.inp = Conv2d(cfg.input_channels, w, k, init=init, rng=rng, dtype=dtype)
        self.encoder = [ResBlock(w * 2 ** i, w * 2 ** (i + 1), k, act, cfg.downsample, **kw)
                        for i in range(cfg.depth)]
        top = w * 2 ** cfg.depth
        self.bottleneck = None
        if cfg.bottleneck_dim:
            self.bottleneck = Bottleneck(top, cfg.latent_size, cfg.bottleneck_dim, act, **kw)
        self.upsamplers = [Upsample(cfg.upsample) for _ in range(cfg.depth)]
        self.decoder = [ResBlock(w * 2 ** (cfg.depth - i), w * 2 ** (cfg.depth - i - 1), k, act, None, **kw)
                        for i in range(cfg.depth)]
        self.out = Conv2d(w, cfg.input_channels, k, init=linear_init, rng=rng, dtype=dtype)

    def encode(self, x):
        h = self.inp(x)
        for block in self.encoder:
            h = block(h)
        return h

    def decode(self, h):
        if self.bottleneck is not None:
            h = self.bottleneck(h)
        for up, block in zip(self.upsamplers, self.decoder):
            h = block(up(h))
        return self.out(h)

    def forward(self, x):
        x = as_tensor(x)
        if x.ndim != 4 or x.shape[1] != self.cfg.input_channels or x.shape[2:] != (self.cfg.tile_size,) * 2:
            raise ConfigError(f"input {x.shape} does not match config "
                              f"({self.cfg.input_channels} x {self.cfg.tile_size} x {self.cfg.tile_size})")
        return self.decode(self.encode(x))


class DualRVNN(Module):
    """Real-valued AE over stacked (Re, Im) channels; complex in, complex out."""

    def __init__(self, cfg: AEConfig, rng=None, dtype=np.float32):
        self.cfg = cfg
        self.complex = False
        self.real_cfg = replace(cfg, input_channels=2 * cfg.input_channels,
                                width=_parity_width(cfg), activation="relu")
        self.net = AutoEncoder(self.real_cfg, complex=False, rng=rng, dtype=dtype)
        self.dtype = self.net.dtype

    def forward(self, x):
        x = as_tensor(x)
        c = self.cfg.input_channels
        stacked = concat([real(x), imag(x)], axis=1)
        y = self.net(stacked)
        return make_complex(y[:, :c], y[:, c:])


def count_params(cfg: AEConfig, complex=True):
    """Closed-form trainable parameter count (real scalars) of ``AutoEncoder(cfg)``."""
    f = 2 if complex else 1
    bn = 6 if complex else 2
    act = 1 if cfg.activation == "modrelu" else 0
    k = cfg.kernel

    def conv(ci, co, kk):
        return f * (ci * co * kk * kk + co)

    def block(ci, co, down):
        n = conv(ci, co, k) + conv(co, co, k) + 2 * (bn + act) * co
        if down or ci != co:
            n += conv(ci, co, 1)
        return n

    w, d = cfg.width, cfg.depth
    total = conv(cfg.input_channels, w, k) + conv(w, cfg.input_channels, k)
    total += sum(block(w * 2 ** i, w * 2 ** (i + 1), True) for i in range(d))
    total += sum(block(w * 2 ** (d - i), w * 2 ** (d - i - 1), False) for i in range(d))
    if cfg.bottleneck_dim:
        n, p = w * 2 ** d * cfg.latent_size ** 2, cfg.bottleneck_dim
        total += f * (2 * n * p + n + p) + (bn + act) * (n + p)
    return total


def _parity_width(cfg: AEConfig):
    target = count_params(cfg, True)
    best, best_gap = 1, np.inf
    for w in range(1, 4 * cfg.width + 1):
        rc = replace(cfg, input_channels=2 * cfg.input_channels, width=w, activation="relu")
        gap = abs(count_params(rc, False) - target) / target
        if gap < best_gap:
            best, best_gap = w, gap
    return best


def build_autoencoder(cfg: AEConfig, seed=0, dtype=np.complex64):
    return AutoEncoder(cfg, complex=True, rng=np.random.default_rng(seed), dtype=dtype)


def build_dual_rvnn(cfg: AEConfig, seed=0, dtype=np.float32):
    """Real twin with stacked Re/Im input, ReLU, real BN and He init at parameter parity."""
    cfg.validate()
    return DualRVNN(cfg, rng=np.random.default_rng(seed), dtype=dtype)


def build_model(kind, cfg: AEConfig, seed=0, precision=32):
    if kind == "cvnn":
        return build_autoencoder(cfg, seed, np.complex64 if precision == 32 else np.complex128)
    if kind == "dual-rvnn":
        return build_dual_rvnn(cfg, seed, np.float32 if precision == 32 else np.float64)
    raise ConfigError(f"unknown model kind {kind!r}")


def predict(model, x, batch=32):
    """Eval-mode forward over an ``(N, C, H, W)`` array, returned as an array."""
    was = model.training
    model.eval()
    outs = []
    for i in range(0, len(x), batch):
        outs.append(model(CTensor(np.asarray(x[i:i + batch]))).data)
    model.train(was)
    return np.concatenate(outs, axis=0) if outs else np.zeros_like(x)
