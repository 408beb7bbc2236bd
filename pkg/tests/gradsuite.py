"""Finite-difference gradient checks over random layer shapes at 64-bit precision."""
import numpy as np

from polsar_cvnn import CTensor
from polsar_cvnn.cxcore import conj, mul, real, tsum
from polsar_cvnn.cxnn import (Activation, AEConfig, BatchNorm, Bottleneck, Conv2d, Linear, ResBlock, Upsample,
                              build_autoencoder, build_dual_rvnn)
from polsar_cvnn.cxnn import functional as F
from polsar_cvnn.gradcheck import numeric_grad, rel_error

C128 = np.complex128
ACTS = ("crelu", "cardioid", "modrelu", "zrelu")
N_SHAPES = 20
MAX_COORDS = 48  # sampled coordinates per case, spread over input and parameters


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _probe_loss(out, probe):
    # L = Re<probe, out> + |out|^2 / 2: smooth in out with a non-trivial upstream gradient
    lin = tsum(real(mul(conj(probe), out)))
    return lin + tsum(real(mul(conj(out), out))) * 0.5


def check(forward, x, params, rng, step=1e-6):
    """Relative error between backward and central differences on a random coordinate subset."""
    x_t = CTensor(x, requires_grad=True)
    leaves = [x_t] + [p.value for p in params]
    out0 = forward(x_t)
    probe_data = crandn(rng, *out0.shape) if np.iscomplexobj(out0.data) else rng.standard_normal(out0.shape)
    probe = CTensor(probe_data)

    def loss():
        return _probe_loss(forward(x_t), probe)

    for t in leaves:
        t.grad = None
    loss().backward()
    sizes = np.array([t.data.size for t in leaves])
    picks = rng.choice(sizes.sum(), size=min(MAX_COORDS, sizes.sum()), replace=False)
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    ana, num = [], []
    for k, t in enumerate(leaves):
        idx = [int(i - bounds[k]) for i in np.sort(picks) if bounds[k] <= i < bounds[k + 1]]
        if not idx:
            continue
        g = t.grad if t.grad is not None else np.zeros_like(t.data)
        ana.append(np.ravel(g)[idx])
        num.append(numeric_grad(loss, t, idx, step=step))
    return rel_error(np.concatenate(ana), np.concatenate(num))


def _shape4(rng, lo=3, hi=7, cmax=3):
    return int(rng.integers(1, 4)), int(rng.integers(1, cmax + 1)), int(rng.integers(lo, hi + 1))


def conv_case(rng):
    b, ci, h = _shape4(rng)
    co, k = int(rng.integers(1, 4)), int(rng.choice([1, 3, 5]))
    layer = Conv2d(ci, co, k, stride=int(rng.integers(1, 3)), padding=int(rng.integers(0, k // 2 + 1)),
                   rng=rng, dtype=C128)
    layer.bias.value.data[...] = crandn(rng, co)
    return layer, crandn(rng, b, ci, h, h + int(rng.integers(0, 3)))


def linear_case(rng):
    n_in, n_out, b = (int(v) for v in rng.integers(1, 7, size=3))
    layer = Linear(n_in, n_out, rng=rng, dtype=C128)
    layer.bias.value.data[...] = crandn(rng, n_out)
    return layer, crandn(rng, b, n_in)


def activation_case(rng, i):
    kind = ACTS[i % 4]
    b, ch, h = _shape4(rng)
    layer = Activation(kind, ch, dtype=C128)
    if layer.b is not None:
        layer.b.value.data[...] = rng.uniform(-0.5, 0.2, layer.b.data.shape)
    return layer, crandn(rng, b, ch, h, h)


def complex_bn_case(rng):
    b, ch, h = _shape4(rng, lo=2, hi=4)
    layer = BatchNorm(ch, dtype=C128)
    layer.gamma.value.data[...] += 0.3 * rng.standard_normal(layer.gamma.data.shape)
    layer.beta.value.data[...] = crandn(rng, ch)
    x = crandn(rng, b + 1, ch, h, h) * (1 + rng.uniform(0, 2, (1, ch, 1, 1))) + rng.uniform(-1, 1)
    return layer, x


def real_bn_case(rng):
    b, ch, h = _shape4(rng, lo=2, hi=4)
    layer = BatchNorm(ch, complex=False, dtype=C128)
    layer.gamma.value.data[...] = rng.uniform(0.5, 1.5, ch)
    layer.beta.value.data[...] = rng.standard_normal(ch)
    return layer, rng.standard_normal((b + 1, ch, h, h))


def resblock_case(rng, i):
    b, ci, _ = _shape4(rng)
    co = ci if i % 3 == 0 else int(rng.integers(1, 4))
    down = (None, "strided-conv", "avgpool")[i % 3]
    h = 2 * int(rng.integers(2, 4))
    layer = ResBlock(ci, co, kernel=int(rng.choice([1, 3])), activation=ACTS[i % 4], downsample=down,
                     rng=rng, dtype=C128)
    return layer, crandn(rng, b + 1, ci, h, h)


def bottleneck_case(rng, i):
    b, ch, s = int(rng.integers(2, 5)), int(rng.integers(1, 3)), int(rng.integers(1, 3))
    layer = Bottleneck(ch, s, int(rng.integers(2, 5)), activation=ACTS[i % 4], rng=rng, dtype=C128)
    return layer, crandn(rng, b, ch, s, s)


def upsample_case(rng, i):
    b, ch, h = _shape4(rng, lo=1, hi=4)
    return Upsample(("nearest", "bilinear")[i % 2], int(rng.integers(2, 4))), crandn(rng, b, ch, h, h + 1)


class _Pool:
    def __init__(self, fn, window, stride):
        self.fn, self.window, self.stride = fn, window, stride

    def __call__(self, z):
        return self.fn(z, self.window, self.stride)

    def parameters(self):
        return []


def pool_case(rng, i):
    b, ch, h = _shape4(rng, lo=4, hi=8)
    w = int(rng.integers(1, 4))
    fn = (F.avgpool2d, F.maxpool2d)[i % 2]
    return _Pool(fn, w, int(rng.integers(1, w + 1))), crandn(rng, b, ch, h, h)


def autoencoder_case(rng, i):
    cfg = AEConfig(depth=2, width=int(rng.integers(2, 4)), activation=ACTS[i % 4], tile_size=4 * int(rng.integers(1, 3)),
                   bottleneck_dim=int(rng.integers(2, 5)) if i % 5 == 4 else None,
                   downsample=("strided-conv", "avgpool")[i % 2], upsample=("nearest", "bilinear")[(i // 2) % 2])
    # every seventh case is the real-valued baseline, which splits the complex input itself
    model = build_dual_rvnn(cfg, i, np.float64) if i % 7 == 6 else build_autoencoder(cfg, i, C128)
    return model, crandn(rng, int(rng.integers(2, 4)), 4, cfg.tile_size, cfg.tile_size)


CASES = {
    "Conv2d": lambda rng, i: conv_case(rng),
    "Linear": lambda rng, i: linear_case(rng),
    "Activation": activation_case,
    "BatchNorm(complex)": lambda rng, i: complex_bn_case(rng),
    "BatchNorm(real)": lambda rng, i: real_bn_case(rng),
    "ResBlock": resblock_case,
    "Bottleneck": bottleneck_case,
    "Upsample": upsample_case,
    "Pooling": pool_case,
    "AutoEncoder(depth 2)": autoencoder_case,
}


def run_suite(seed=0, n=N_SHAPES):
    """``{layer name: [rel. error per random shape]}``."""
    rng = np.random.default_rng(seed)
    out = {}
    for name, make in CASES.items():
        errs = []
        for i in range(n):
            layer, x = make(rng, i)
            errs.append(check(layer, x, layer.parameters(), rng))
        out[name] = errs
    return out
