"""Trainable layers built on :mod:`polsar_cvnn.cxnn.functional`."""
from __future__ import annotations

import numpy as np

from ..cxcore import CTensor, reshape
from ..errors import ConfigError
from . import functional as F
from .init import LayerParam, init_param


def real_dtype(dtype):
    return np.finfo(np.dtype(dtype)).dtype


def _inits(complex):
    """(scheme before a nonlinearity, scheme on a purely linear path).

    He keeps the power through a rectifier; on skip and output convs it would
    double the power at every stage, so those use Xavier.
    """
    if complex:
        return "complex-he-normal", "complex-xavier-normal"
    return "he-normal", "xavier-normal"


class Module:
    """Minimal parameter/buffer registry with train/eval switching."""

    training = True

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def _children(self):
        for key, value in vars(self).items():
            if isinstance(value, (Module, LayerParam)):
                yield key, value
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, (Module, LayerParam)):
                        yield f"{key}.{i}", item

    def named_parameters(self, prefix=""):
        for key, child in self._children():
            full = f"{prefix}{key}"
            if isinstance(child, LayerParam):
                child.name = full
                yield full, child
            else:
                yield from child.named_parameters(full + ".")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix=""):
        for key, value in getattr(self, "buffers", {}).items():
            yield f"{prefix}{key}", value
        for key, child in self._children():
            if isinstance(child, Module):
                yield from child.named_buffers(f"{prefix}{key}.")

    def modules(self):
        yield self
        for _, child in self._children():
            if isinstance(child, Module):
                yield from child.modules()

    def train(self, mode=True):
        for m in self.modules():
            m.training = mode
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for p in self.parameters():
            p.value.grad = None

    def state_dict(self):
        state = {f"param/{n}": p.data for n, p in self.named_parameters()}
        state.update({f"buffer/{n}": b for n, b in self.named_buffers()})
        return state

    def load_state_dict(self, state):
        for n, p in self.named_parameters():
            src = state[f"param/{n}"]
            if src.shape != p.data.shape:
                raise ConfigError(f"shape mismatch for {n}: {src.shape} vs {p.data.shape}")
            p.value.data = np.array(src, dtype=p.data.dtype)
        for n, b in self.named_buffers():
            b[...] = state[f"buffer/{n}"]

    def num_real_params(self):
        """Trainable parameter count in real scalars (a complex entry counts twice)."""
        return sum(p.data.size * (2 if np.iscomplexobj(p.data) else 1) for p in self.parameters())


class Conv2d(Module):
    def __init__(self, in_ch, out_ch, kernel, stride=1, padding=None, bias=True,
                 init="complex-he-normal", rng=None, dtype=np.complex64):
        self.stride = stride
        self.padding = kernel // 2 if padding is None else padding
        fan_in, fan_out = in_ch * kernel * kernel, out_ch * kernel * kernel
        self.weight = init_param((out_ch, in_ch, kernel, kernel), init, fan_in, fan_out, rng, dtype)
        self.bias = init_param((out_ch,), "zeros", dtype=dtype) if bias else None

    def forward(self, z):
        b = self.bias.value if self.bias is not None else None
        return F.conv2d(z, self.weight.value, b, stride=self.stride, padding=self.padding)


class Linear(Module):
    def __init__(self, n_in, n_out, bias=True, init="complex-he-normal", rng=None, dtype=np.complex64):
        self.weight = init_param((n_out, n_in), init, n_in, n_out, rng, dtype)
        self.bias = init_param((n_out,), "zeros", dtype=dtype) if bias else None

    def forward(self, z):
        return F.linear(z, self.weight.value, self.bias.value if self.bias is not None else None)


class Activation(Module):
    """Pointwise nonlinearity; modReLU owns one real bias per channel."""

    def __init__(self, kind, channels=None, ndim=4, dtype=np.complex64):
        if kind not in F.ACTIVATIONS + ("relu",):
            raise ConfigError(f"unknown activation {kind!r}")
        self.kind = kind
        self.b = None
        if kind == "modrelu":
            if channels is None:
                raise ConfigError("modReLU needs a channel count for its bias")
            shape = (1, channels) + (1,) * (ndim - 2)
            self.b = init_param(shape, "zeros", dtype=real_dtype(dtype))

    def forward(self, z):
        return F.activation(z, self.kind, self.b.value if self.b is not None else None)


class BatchNorm(Module):
    """Complex whitening batch norm, or ordinary batch norm when ``complex=False``."""

    def __init__(self, channels, complex=True, eps=1e-5, momentum=0.1, dtype=np.complex64):
        self.complex = complex
        self.eps = eps
        self.momentum = momentum
        rdt = real_dtype(dtype)
        if complex:
            eye = np.tile(np.eye(2), (channels, 1, 1))
            self.gamma = LayerParam("", CTensor(eye.astype(rdt), requires_grad=True), "identity")
            self.beta = init_param((channels,), "zeros", dtype=dtype)
            self.buffers = {
                "running_mean": np.zeros(channels, dtype=dtype),
                "running_cov": np.tile(np.array([0.5, 0.0, 0.5]), (channels, 1)).astype(rdt),
            }
        else:
            self.gamma = init_param((channels,), "ones", dtype=rdt)
            self.beta = init_param((channels,), "zeros", dtype=rdt)
            self.buffers = {
                "running_mean": np.zeros(channels, dtype=rdt),
                "running_var": np.ones(channels, dtype=rdt),
            }

    def forward(self, z):
        if self.complex:
            running = {"mean": self.buffers["running_mean"], "cov": self.buffers["running_cov"]}
            return F.complex_batchnorm(z, self.gamma.value, self.beta.value, running,
                                       training=self.training, eps=self.eps, momentum=self.momentum)
        running = {"mean": self.buffers["running_mean"], "var": self.buffers["running_var"]}
        return F.real_batchnorm(z, self.gamma.value, self.beta.value, running,
                                training=self.training, eps=self.eps, momentum=self.momentum)


class ResBlock(Module):
    """``Y = BN(act(Conv(X)))``, ``Y' = skip(X) + BN(act(Conv(Y)))``.

    ``downsample`` is ``None`` (stride 1), ``"strided-conv"`` (first conv has
    stride 2) or ``"avgpool"`` (first conv followed by 2x2 average pooling).
    The skip is the identity when shapes agree and a 1x1 conv otherwise.
    """

    def __init__(self, in_ch, out_ch, kernel=3, activation="crelu", downsample=None,
                 complex=True, rng=None, dtype=np.complex64):
        if downsample not in (None, "strided-conv", "avgpool"):
            raise ConfigError(f"unknown downsampling {downsample!r}")
        init, linear_init = _inits(complex)
        self.downsample = downsample
        stride = 2 if downsample == "strided-conv" else 1
        self.conv1 = Conv2d(in_ch, out_ch, kernel, stride=stride, init=init, rng=rng, dtype=dtype)
        self.act1 = Activation(activation, out_ch, dtype=dtype)
        self.bn1 = BatchNorm(out_ch, complex=complex, dtype=dtype)
        self.conv2 = Conv2d(out_ch, out_ch, kernel, init=init, rng=rng, dtype=dtype)
        self.act2 = Activation(activation, out_ch, dtype=dtype)
        self.bn2 = BatchNorm(out_ch, complex=complex, dtype=dtype)
        self.skip = None
        if downsample is not None or in_ch != out_ch:
            self.skip = Conv2d(in_ch, out_ch, 1, stride=stride, padding=0, init=linear_init, rng=rng, dtype=dtype)

    def _down(self, z):
        return F.avgpool2d(z, 2) if self.downsample == "avgpool" else z

    def forward(self, x):
        y = self.bn1(self.act1(self._down(self.conv1(x))))
        y = self.bn2(self.act2(self.conv2(y)))
        s = x if self.skip is None else self._down(self.skip(x))
        return s + y


class Bottleneck(Module):
    """Flatten -> Linear(p) -> act -> BN -> Linear(back) -> act -> BN -> Unflatten."""

    def __init__(self, channels, spatial, latent, activation="crelu", complex=True, rng=None,
                 dtype=np.complex64):
        init, _ = _inits(complex)
        n = channels * spatial * spatial
        self.shape = (channels, spatial, spatial)
        self.lin0 = Linear(n, latent, init=init, rng=rng, dtype=dtype)
        self.act0 = Activation(activation, latent, ndim=2, dtype=dtype)
        self.bn0 = BatchNorm(latent, complex=complex, dtype=dtype)
        self.lin1 = Linear(latent, n, init=init, rng=rng, dtype=dtype)
        self.act1 = Activation(activation, n, ndim=2, dtype=dtype)
        self.bn1 = BatchNorm(n, complex=complex, dtype=dtype)

    def forward(self, x):
        b = x.shape[0]
        y = self.bn0(self.act0(self.lin0(reshape(x, (b, -1)))))
        y = self.bn1(self.act1(self.lin1(y)))
        return reshape(y, (b,) + self.shape)


class Upsample(Module):
    def __init__(self, mode="nearest", factor=2):
        if mode not in ("nearest", "bilinear"):
            raise ConfigError(f"unknown upsampling {mode!r}")
        self.mode, self.factor = mode, factor

    def forward(self, z):
        if self.mode == "nearest":
            return F.upsample_nearest(z, self.factor)
        return F.upsample_bilinear(z, self.factor)
