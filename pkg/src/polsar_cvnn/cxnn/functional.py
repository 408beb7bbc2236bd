"""Stateless complex layer operations with hand-written backward rules.

All image tensors are laid out ``(batch, channels, height, width)``.  The same
functions accept real arrays, which is how the dual real-valued baseline is
built on the same machinery.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..cxcore import CTensor, add, as_tensor, concat, imag, make_complex, matmul, mean, real, sqrt
from ..errors import ConfigError, ShapeError

ACTIVATIONS = ("crelu", "cardioid", "modrelu", "zrelu")


# -- convolution --------------------------------------------------------------

def _im2col(xt, k, stride, ho, wo):
    """Patch matrix ``(C*k*k, B*Ho*Wo)`` from a channel-first ``(C, B, H, W)`` array."""
    c, b = xt.shape[:2]
    cols = np.empty((c, k, k, b, ho, wo), dtype=xt.dtype)
    for p in range(k):
        for q in range(k):
            cols[:, p, q] = xt[:, :, p:p + stride * ho:stride, q:q + stride * wo:stride]
    return cols.reshape(c * k * k, b * ho * wo)


def conv2d(z, weight, bias=None, stride=1, padding=0) -> CTensor:
    """Channel-summed cross-correlation ``out(i,j) = sum_pq z(i*s+p, j*s+q) F(p,q)``.

    ``weight`` has shape ``(out_ch, in_ch, k, k)``; the output spatial extent is
    ``floor((H + 2*padding - k) / stride) + 1``.
    """
    z, weight = as_tensor(z), as_tensor(weight)
    if z.ndim != 4 or weight.ndim != 4:
        raise ShapeError(f"conv2d expects 4-d input and weight, got {z.shape}, {weight.shape}")
    b, c, h, w = z.shape
    co, ci, k, k2 = weight.shape
    if ci != c or k != k2:
        raise ShapeError(f"weight {weight.shape} does not match input channels {c}")
    if stride < 1:
        raise ShapeError("stride must be positive")
    hp, wp = h + 2 * padding, w + 2 * padding
    if k > hp or k > wp:
        raise ShapeError(f"kernel {k} larger than padded input {hp}x{wp}")
    ho, wo = (hp - k) // stride + 1, (wp - k) // stride + 1

    xt = np.zeros((c, b, hp, wp), dtype=np.result_type(z.dtype, weight.dtype))
    xt[:, :, padding:padding + h, padding:padding + w] = z.data.transpose(1, 0, 2, 3)
    cols = _im2col(xt, k, stride, ho, wo)
    wm = weight.data.reshape(co, ci * k * k)
    out = wm @ cols  # (co, b*ho*wo)
    if bias is not None:
        bias = as_tensor(bias)
        out += bias.data[:, None]
    out = np.ascontiguousarray(out.reshape(co, b, ho, wo).transpose(1, 0, 2, 3))
    parents = (z, weight) if bias is None else (z, weight, bias)

    def backward(g):
        gm = np.ascontiguousarray(g.transpose(1, 0, 2, 3)).reshape(co, b * ho * wo)
        gw = gz = None
        if weight.requires_grad:
            gw = np.conj(np.conj(gm) @ cols.T).reshape(weight.shape)
        if z.requires_grad:
            gcols = (np.conj(wm).T @ gm).reshape(ci, k, k, b, ho, wo)
            gx = np.zeros((ci, b, hp, wp), dtype=gcols.dtype)
            for p in range(k):
                for q in range(k):
                    gx[:, :, p:p + stride * ho:stride, q:q + stride * wo:stride] += gcols[:, p, q]
            gz = gx[:, :, padding:padding + h, padding:padding + w].transpose(1, 0, 2, 3)
        if bias is None:
            return gz, gw
        return gz, gw, gm.sum(axis=1)

    return CTensor._from_op(out, "conv2d", parents, backward)


def subsample(z, factor) -> CTensor:
    """Keep every ``factor``-th sample along both spatial axes."""
    z = as_tensor(z)
    shape = z.shape
    out = z.data[:, :, ::factor, ::factor]

    def backward(g):
        gz = np.zeros(shape, dtype=g.dtype)
        gz[:, :, ::factor, ::factor] = g
        return (gz,)

    return CTensor._from_op(np.ascontiguousarray(out), "subsample", (z,), backward)


def linear(z, weight, bias=None) -> CTensor:
    """``W z + beta`` for a vector or a batch of row vectors ``(batch, n)``."""
    z, weight = as_tensor(z), as_tensor(weight)
    if weight.ndim != 2 or z.shape[-1] != weight.shape[1]:
        raise ShapeError(f"linear: input {z.shape} incompatible with weight {weight.shape}")
    if bias is not None and as_tensor(bias).shape != (weight.shape[0],):
        raise ShapeError(f"linear: bias must have shape ({weight.shape[0]},)")
    if z.ndim == 1:
        out = matmul(weight, z)
    else:
        out = matmul(z, weight.transpose())
    return out if bias is None else add(out, bias)


# -- activations --------------------------------------------------------------

def _pointwise(z, out, jac, op):
    """Elementwise op from its real Jacobian ``(du/dx, du/dy, dv/dx, dv/dy)``."""
    def backward(g):
        ux, uy, vx, vy = jac()
        gu, gv = np.real(g), np.imag(g)
        return ((gu * ux + gv * vx) + 1j * (gu * uy + gv * vy),)

    return CTensor._from_op(out, op, (z,), backward)


def crelu(z) -> CTensor:
    """``ReLU(Re z) + j ReLU(Im z)``."""
    z = as_tensor(z)
    x, y = z.data.real, z.data.imag
    mx, my = x > 0, y > 0
    out = (np.where(mx, x, 0) + 1j * np.where(my, y, 0)).astype(z.dtype)

    def backward(g):
        return (np.where(mx, g.real, 0) + 1j * np.where(my, g.imag, 0),)

    return CTensor._from_op(out, "crelu", (z,), backward)


def zrelu(z) -> CTensor:
    """Pass ``z`` when its phase lies in ``[0, pi/2]``, else 0."""
    z = as_tensor(z)
    mask = (z.data.real >= 0) & (z.data.imag >= 0)
    out = np.where(mask, z.data, 0).astype(z.dtype)
    return CTensor._from_op(out, "zrelu", (z,), lambda g: (np.where(mask, g, 0),))


def modrelu(z, b) -> CTensor:
    """``ReLU(|z| + b) z/|z|`` with a real (learnable) bias ``b``."""
    z, b = as_tensor(z), as_tensor(b)
    if b.is_complex:
        raise ConfigError("modReLU bias must be real")
    zd = z.data
    r = np.abs(zd)
    active = (r + b.data > 0) & (r > 0)
    rs = np.where(r > 0, r, 1)
    unit = np.where(r > 0, zd / rs, 0)
    out = np.where(active, (r + b.data) * unit, 0).astype(z.dtype)

    def backward(g):
        bb = np.broadcast_to(b.data, zd.shape)
        # dy/dz = 1 + b/(2|z|),  dy/dz* = -b z^2 / (2|z|^3)
        gz = g * (1 + bb / (2 * rs)) - np.conj(g) * bb * zd * zd / (2 * rs ** 3)
        gz = np.where(active, gz, 0)
        gb = np.where(active, np.real(np.conj(unit) * g), 0)
        return gz, gb

    return CTensor._from_op(out, "modrelu", (z, b), backward)


def cardioid(z) -> CTensor:
    """``(1 + cos(arg z)) / 2 * z``; 0 at the origin."""
    z = as_tensor(z)
    zd = z.data
    r = np.abs(zd)
    rs = np.where(r > 0, r, 1)
    c = np.where(r > 0, zd.real / rs, 1)
    s = np.where(r > 0, zd.imag / rs, 0)
    out = (0.5 * (1 + c) * zd).astype(z.dtype)

    def jac():
        nz = r > 0
        ux = np.where(nz, 0.5 * (1 + c) + 0.5 * c * s * s, 0)
        uy = np.where(nz, -0.5 * c * c * s, 0)
        vx = np.where(nz, 0.5 * s ** 3, 0)
        vy = np.where(nz, 0.5 * (1 + c) - 0.5 * c * s * s, 0)
        return ux, uy, vx, vy

    return _pointwise(z, out, jac, "cardioid")


def activation(z, kind, b=None) -> CTensor:
    if kind == "crelu":
        return crelu(z)
    if kind == "zrelu":
        return zrelu(z)
    if kind == "cardioid":
        return cardioid(z)
    if kind == "modrelu":
        if b is None:
            raise ConfigError("modReLU requires a bias b")
        return modrelu(z, b)
    if kind == "relu":
        from ..cxcore import relu
        return relu(z)
    raise ConfigError(f"unknown activation {kind!r}")


# -- pooling and resampling ---------------------------------------------------

def _windows(z, window, stride):
    h, w = z.shape[2], z.shape[3]
    if window > h or window > w:
        raise ShapeError(f"pooling window {window} exceeds input {h}x{w}")
    win = sliding_window_view(z.data, (window, window), axis=(2, 3))[:, :, ::stride, ::stride]
    return win


def _scatter_windows(shape, g_win, window, stride, dtype):
    gz = np.zeros(shape, dtype=dtype)
    ho, wo = g_win.shape[2], g_win.shape[3]
    for p in range(window):
        for q in range(window):
            gz[:, :, p:p + stride * ho:stride, q:q + stride * wo:stride] += g_win[..., p, q]
    return gz


def avgpool2d(z, window, stride=None) -> CTensor:
    """Average Re and Im independently over each window."""
    z = as_tensor(z)
    stride = stride or window
    win = _windows(z, window, stride)
    out = win.mean(axis=(-2, -1))
    shape = z.shape

    def backward(g):
        gw = np.broadcast_to((g / (window * window))[..., None, None], g.shape + (window, window))
        return (_scatter_windows(shape, gw, window, stride, g.dtype),)

    return CTensor._from_op(out.astype(z.dtype), "avgpool", (z,), backward)


def maxpool2d(z, window, stride=None) -> CTensor:
    """Return the window element of largest modulus; ties go to the lowest flat index."""
    z = as_tensor(z)
    stride = stride or window
    win = _windows(z, window, stride)
    flat = win.reshape(win.shape[:4] + (window * window,))
    idx = np.argmax(np.abs(flat), axis=-1)
    out = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
    shape = z.shape

    def backward(g):
        gw = np.zeros(flat.shape, dtype=g.dtype)
        np.put_along_axis(gw, idx[..., None], g[..., None], axis=-1)
        gw = gw.reshape(win.shape)
        return (_scatter_windows(shape, gw, window, stride, g.dtype),)

    return CTensor._from_op(np.ascontiguousarray(out), "maxpool", (z,), backward)


def upsample_nearest(z, factor) -> CTensor:
    """``out(i, j) = z(i // f, j // f)``."""
    z = as_tensor(z)
    if factor < 1:
        raise ShapeError("upsampling factor must be >= 1")
    if factor == 1:
        return z
    b, c, h, w = z.shape
    out = np.repeat(np.repeat(z.data, factor, axis=2), factor, axis=3)

    def backward(g):
        return (g.reshape(b, c, h, factor, w, factor).sum(axis=(3, 5)),)

    return CTensor._from_op(out, "upsample_nearest", (z,), backward)


def _bilinear_matrix(n, factor):
    # half-pixel centres, edge-clamped (align_corners=False convention)
    m = np.zeros((n * factor, n))
    for i in range(n * factor):
        src = (i + 0.5) / factor - 0.5
        src = min(max(src, 0.0), n - 1)
        lo = int(np.floor(src))
        hi = min(lo + 1, n - 1)
        t = src - lo
        m[i, lo] += 1 - t
        m[i, hi] += t
    return m


def upsample_bilinear(z, factor) -> CTensor:
    """Separable bilinear interpolation of Re and Im."""
    z = as_tensor(z)
    if factor < 1:
        raise ShapeError("upsampling factor must be >= 1")
    b, c, h, w = z.shape
    ah = _bilinear_matrix(h, factor).astype(z.data.real.dtype)
    aw = _bilinear_matrix(w, factor).astype(z.data.real.dtype)
    out = np.einsum("ih,bchw,jw->bcij", ah, z.data, aw, optimize=True)

    def backward(g):
        return (np.einsum("ih,bcij,jw->bchw", ah, g, aw, optimize=True),)

    return CTensor._from_op(out.astype(z.dtype), "upsample_bilinear", (z,), backward)


# -- normalisation ------------------------------------------------------------

def _stat_axes(ndim):
    return (0,) + tuple(range(2, ndim))


def _bshape(ndim):
    return (1, -1) + (1,) * (ndim - 2)


def whiten_stats(x):
    """Per-channel mean and 2x2 covariance ``(vrr, vri, vii)`` of a complex batch."""
    axes = _stat_axes(x.ndim)
    mu = x.mean(axis=axes)
    xc = x - mu.reshape(_bshape(x.ndim))
    vrr = (xc.real ** 2).mean(axis=axes)
    vii = (xc.imag ** 2).mean(axis=axes)
    vri = (xc.real * xc.imag).mean(axis=axes)
    return mu, vrr, vri, vii


def complex_batchnorm(z, gamma, beta, running=None, training=True, eps=1e-5, momentum=0.1) -> CTensor:
    """Complex batch normalisation with 2x2 whitening.

    ``gamma`` is real with shape ``(C, 2, 2)``, ``beta`` complex with shape
    ``(C,)``.  The centred (Re, Im) pairs are multiplied by ``(2 V)^(-1/2)`` where
    ``V`` is the per-channel covariance plus ``eps`` on the diagonal, which gives
    a whitened batch with ``E|z|^2 = 1`` and zero pseudo-variance.  ``running``
    is a dict with ``mean`` (complex C) and ``cov`` (real C x 3: rr, ri, ii),
    updated in place in training mode.
    """
    z, gamma, beta = as_tensor(z), as_tensor(gamma), as_tensor(beta)
    nd = z.ndim
    shp = _bshape(nd)
    axes = _stat_axes(nd)
    n = z.size // z.shape[1]
    if training:
        if n < 2:
            raise ShapeError("complex batchnorm needs at least 2 samples per channel in training mode")
        mu = mean(z, axis=axes, keepdims=True)
        xc = z - mu
        mom = _second_moments(xc, axes)
        vrr, vri, vii = mom[0] + eps, mom[1], mom[2] + eps
        if running is not None:
            running["mean"][...] = (1 - momentum) * running["mean"] + momentum * mu.data.reshape(-1)
            stats = mom.data.reshape(3, -1).T
            running["cov"][...] = (1 - momentum) * running["cov"] + momentum * stats
    else:
        xc = z - as_tensor(running["mean"].reshape(shp))
        cov = running["cov"]
        vrr = as_tensor((cov[:, 0] + eps).reshape(shp))
        vri = as_tensor(cov[:, 1].reshape(shp))
        vii = as_tensor((cov[:, 2] + eps).reshape(shp))
    # inverse square root of the symmetric 2x2 matrix 2V, folded into Gamma
    vrr, vri, vii = vrr * 2.0, vri * 2.0, vii * 2.0
    s = sqrt(vrr * vii - vri * vri)
    t = sqrt(vrr + vii + s * 2.0)
    inv = 1.0 / (s * t)
    wrr, wii, wri = (vii + s) * inv, (vrr + s) * inv, (vri * -1.0) * inv
    grr = gamma[:, 0, 0].reshape(shp)
    gri = gamma[:, 0, 1].reshape(shp)
    gir = gamma[:, 1, 0].reshape(shp)
    gii = gamma[:, 1, 1].reshape(shp)
    m = concat([grr * wrr + gri * wri, grr * wri + gri * wii,
                gir * wrr + gii * wri, gir * wri + gii * wii], axis=0)
    return _mix2x2(xc, m) + beta.reshape(shp)


def _second_moments(xc: CTensor, axes) -> CTensor:
    """Stacked per-channel ``(E[a^2], E[ab], E[b^2])`` of ``xc = a + jb``, shape ``(3, ...)``."""
    a, b = xc.data.real, xc.data.imag
    n = xc.size // xc.shape[1]
    out = np.concatenate([(a * a).mean(axis=axes, keepdims=True),
                          (a * b).mean(axis=axes, keepdims=True),
                          (b * b).mean(axis=axes, keepdims=True)], axis=0)

    def backward(g):
        ga = (2.0 / n) * g[0:1] * a + (1.0 / n) * g[1:2] * b
        gb = (1.0 / n) * g[1:2] * a + (2.0 / n) * g[2:3] * b
        return (ga + 1j * gb,)

    return CTensor._from_op(out, "moments", (xc,), backward)


def _mix2x2(xc: CTensor, m: CTensor) -> CTensor:
    """Per-channel real 2x2 map on (Re, Im); ``m`` stacks rows as ``(4, ...)``."""
    a, b = xc.data.real, xc.data.imag
    md = m.data
    axes = _stat_axes(xc.ndim)
    out = (md[0:1] * a + md[1:2] * b) + 1j * (md[2:3] * a + md[3:4] * b)
    out = out.astype(np.result_type(xc.dtype, np.complex64), copy=False)

    def backward(g):
        gu, gv = g.real, g.imag
        gx = gm = None
        if xc.requires_grad:
            gx = (gu * md[0:1] + gv * md[2:3]) + 1j * (gu * md[1:2] + gv * md[3:4])
        if m.requires_grad:
            gm = np.concatenate([(gu * a).sum(axis=axes, keepdims=True), (gu * b).sum(axis=axes, keepdims=True),
                                 (gv * a).sum(axis=axes, keepdims=True), (gv * b).sum(axis=axes, keepdims=True)],
                                axis=0)
        return gx, gm

    return CTensor._from_op(out, "mix2x2", (xc, m), backward)


def whitened(z, eps=1e-5):
    """Pre-affine whitening only (unit-scale Gamma, zero beta), as a plain array."""
    z = np.asarray(z)
    c = z.shape[1]
    gamma = np.tile(np.eye(2), (c, 1, 1))
    return complex_batchnorm(z, gamma, np.zeros(c, dtype=z.dtype), eps=eps).data


def real_batchnorm(x, gamma, beta, running=None, training=True, eps=1e-5, momentum=0.1) -> CTensor:
    """Standard per-channel batch normalisation for real tensors."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    nd = x.ndim
    shp = _bshape(nd)
    axes = _stat_axes(nd)
    if training:
        mu = mean(x, axis=axes, keepdims=True)
        xc = x - mu
        var = mean(xc * xc, axis=axes, keepdims=True)
        if running is not None:
            running["mean"][...] = (1 - momentum) * running["mean"] + momentum * mu.data.reshape(-1)
            running["var"][...] = (1 - momentum) * running["var"] + momentum * var.data.reshape(-1)
    else:
        xc = x - running["mean"].reshape(shp)
        var = as_tensor(running["var"].reshape(shp))
    y = xc / sqrt(var + eps)
    return y * gamma.reshape(shp) + beta.reshape(shp)


# -- loss ---------------------------------------------------------------------

def mse_loss(pred, target) -> CTensor:
    """Mean of ``|pred - target|^2`` as a real scalar."""
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"mse_loss shape mismatch {pred.shape} vs {target.shape}")
    d = pred.data - target.data
    n = d.size
    out = np.asarray(np.mean(np.abs(d) ** 2))

    def backward(g):
        gd = (2.0 / n) * np.real(g) * d
        return gd, -gd

    return CTensor._from_op(out, "mse", (pred, target), backward)
