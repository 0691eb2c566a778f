"""Differentiable operations.

Each op computes its forward value with numpy and, when a tape is active,
records a closure producing input gradients. Reductions accumulate in
float64 and cast back to the input dtype.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .. import _kernels
from .core import ShapeError, Tensor, as_tensor, record


def _data(x):
    return x.data if isinstance(x, Tensor) else np.asarray(x)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _result_dtype(*xs):
    for x in xs:
        if isinstance(x, Tensor):
            return x.dtype
    return np.result_type(*[np.asarray(x) for x in xs])


def _cast(v, dtype):
    return np.asarray(v, dtype=dtype) if not isinstance(v, np.ndarray) or v.dtype != dtype else v


def _binary_check(name, a, b):
    try:
        np.broadcast_shapes(np.shape(a), np.shape(b))
    except ValueError:
        raise ShapeError(f"{name}: incompatible shapes {np.shape(a)} and {np.shape(b)}") from None


# elementwise arithmetic


def add(a, b) -> Tensor:
    dt = _result_dtype(a, b)
    ad, bd = _cast(_data(a), dt), _cast(_data(b), dt)
    _binary_check("add", ad, bd)
    out = Tensor(ad + bd)
    record(out, (a, b), lambda g: (_unbroadcast(g, ad.shape), _unbroadcast(g, bd.shape)))
    return out


def sub(a, b) -> Tensor:
    dt = _result_dtype(a, b)
    ad, bd = _cast(_data(a), dt), _cast(_data(b), dt)
    _binary_check("sub", ad, bd)
    out = Tensor(ad - bd)
    record(out, (a, b), lambda g: (_unbroadcast(g, ad.shape), _unbroadcast(-g, bd.shape)))
    return out


def mul(a, b) -> Tensor:
    dt = _result_dtype(a, b)
    ad, bd = _cast(_data(a), dt), _cast(_data(b), dt)
    _binary_check("mul", ad, bd)
    out = Tensor(ad * bd)
    record(
        out,
        (a, b),
        lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)),
    )
    return out


def square(x: Tensor) -> Tensor:
    xd = x.data
    out = Tensor(xd * xd)
    record(out, (x,), lambda g: (2.0 * g * xd,))
    return out


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    out = Tensor(y)
    record(out, (x,), lambda g: (g * y,))
    return out


def log(x: Tensor) -> Tensor:
    xd = x.data
    out = Tensor(np.log(xd))
    record(out, (x,), lambda g: (g / xd,))
    return out


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    out = Tensor(y)
    record(out, (x,), lambda g: (g * (1.0 - y * y),))
    return out


def sigmoid(x: Tensor) -> Tensor:
    y = 0.5 * (np.tanh(0.5 * x.data) + 1.0)
    out = Tensor(y.astype(x.dtype, copy=False))
    record(out, (x,), lambda g: (g * y * (1.0 - y),))
    return out


def leaky_relu(x: Tensor, slope: float = 0.01) -> Tensor:
    xd = x.data
    scale = np.where(xd > 0, 1.0, slope).astype(xd.dtype)
    out = Tensor(xd * scale)
    record(out, (x,), lambda g: (g * scale,))
    return out


# reductions


def sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    xd = x.data
    out = Tensor(np.asarray(xd.sum(axis=axis, keepdims=keepdims, dtype=np.float64), dtype=xd.dtype))

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, xd.shape).astype(xd.dtype),)

    record(out, (x,), back)
    return out


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    xd = x.data
    count = xd.size if axis is None else int(np.prod([xd.shape[a] for a in np.atleast_1d(axis)]))
    out = Tensor(
        np.asarray(xd.mean(axis=axis, keepdims=keepdims, dtype=np.float64), dtype=xd.dtype)
    )

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return ((np.broadcast_to(g, xd.shape) / count).astype(xd.dtype),)

    record(out, (x,), back)
    return out


# shape manipulation


def reshape(x: Tensor, shape) -> Tensor:
    src = x.shape
    try:
        out = Tensor(x.data.reshape(shape))
    except ValueError:
        raise ShapeError(f"reshape: cannot view {src} as {shape}") from None
    record(out, (x,), lambda g: (g.reshape(src),))
    return out


def flatten(x: Tensor, start: int = 1) -> Tensor:
    return reshape(x, x.shape[:start] + (-1,))


def unflatten(x: Tensor, shape) -> Tensor:
    return reshape(x, (x.shape[0],) + tuple(shape))


def transpose(x: Tensor, axes) -> Tensor:
    inv = np.argsort(axes)
    out = Tensor(np.ascontiguousarray(x.data.transpose(axes)))
    record(out, (x,), lambda g: (g.transpose(inv),))
    return out


def getitem(x: Tensor, index) -> Tensor:
    out = Tensor(x.data[index])

    def back(g):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g) if _fancy(index) else full.__setitem__(index, g)
        return (full,)

    record(out, (x,), back)
    return out


def _fancy(index) -> bool:
    idx = index if isinstance(index, tuple) else (index,)
    return any(isinstance(i, (list, np.ndarray)) for i in idx)


def concat(xs: Sequence[Tensor], axis: int = -1) -> Tensor:
    datas = [_data(x) for x in xs]
    dt = _result_dtype(*xs)
    try:
        out = Tensor(np.concatenate([_cast(d, dt) for d in datas], axis=axis))
    except ValueError:
        raise ShapeError(f"concat: shapes {[d.shape for d in datas]} along axis {axis}") from None
    bounds = np.cumsum([d.shape[axis] for d in datas])[:-1]

    def back(g):
        return tuple(np.split(g, bounds, axis=axis))

    record(out, tuple(xs), back)
    return out


def stack(xs: Sequence[Tensor], axis: int = 0) -> Tensor:
    datas = [_data(x) for x in xs]
    out = Tensor(np.stack(datas, axis=axis))

    def back(g):
        return tuple(np.moveaxis(g, axis, 0))

    record(out, tuple(xs), back)
    return out


def unstack(x: Tensor, axis: int = 0) -> list[Tensor]:
    """Split along ``axis`` into views; one backward node for all pieces."""
    outs = [Tensor(v) for v in np.moveaxis(x.data, axis, 0)]

    def back(*gs):
        return (np.stack(gs, axis=axis),)

    record(outs, (x,), back)
    return outs


# linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    ad, bd = _data(a), _data(b)
    if ad.shape[-1] != bd.shape[0] or bd.ndim != 2:
        raise ShapeError(f"matmul: shapes {ad.shape} and {bd.shape} do not align")
    out = Tensor(ad @ bd)

    def back(g):
        ga = g @ bd.T
        gb = ad.reshape(-1, ad.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        return ga, gb

    record(out, (a, b), back)
    return out


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight + bias`` with ``weight`` stored as (in, out)."""
    xd, wd = x.data, weight.data
    if xd.shape[-1] != wd.shape[0]:
        raise ShapeError(f"linear: input {xd.shape} does not match weight {wd.shape}")
    y = xd @ wd
    if bias is not None:
        y += bias.data
    out = Tensor(y)

    def back(g):
        g2 = g.reshape(-1, g.shape[-1])
        gx = g @ wd.T
        gw = xd.reshape(-1, xd.shape[-1]).T @ g2
        gb = g2.sum(axis=0, dtype=np.float64).astype(g.dtype) if bias is not None else None
        return gx, gw, gb

    record(out, (x, weight, bias), back)
    return out


def embedding(weight: Tensor, index) -> Tensor:
    idx = np.asarray(index, dtype=np.int64)
    n = weight.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ShapeError(f"embedding: token outside vocabulary of {n}")
    out = Tensor(weight.data[idx])

    def back(g):
        gw = np.zeros_like(weight.data)
        np.add.at(gw, idx.reshape(-1), g.reshape(-1, g.shape[-1]))
        return (gw,)

    record(out, (weight,), back)
    return out


# convolutions, (batch, channels, length) layout


def conv_out_length(length: int, kernel: int, stride: int, padding: int) -> int:
    return (length + 2 * padding - kernel) // stride + 1


def deconv_out_length(length: int, kernel: int, stride: int, padding: int, output_padding: int) -> int:
    return (length - 1) * stride - 2 * padding + kernel + output_padding


def conv1d(x: Tensor, weight: Tensor, bias: Tensor | None, stride: int = 2, padding: int = 1) -> Tensor:
    """``weight`` has shape (out_channels, in_channels, kernel)."""
    xd, wd = x.data, weight.data
    B, C, L = xd.shape
    O, Cw, K = wd.shape
    if C != Cw:
        raise ShapeError(f"conv1d: input {xd.shape} has {C} channels, weight {wd.shape} expects {Cw}")
    Lout = conv_out_length(L, K, stride, padding)
    if Lout < 1:
        raise ShapeError(f"conv1d: input length {L} too short for kernel {K}")
    xp = np.pad(xd, ((0, 0), (0, 0), (padding, padding)))
    win = sliding_window_view(xp, K, axis=2)[:, :, ::stride][:, :, :Lout]  # B,C,Lout,K
    cols = np.ascontiguousarray(win.transpose(0, 2, 1, 3)).reshape(B * Lout, C * K)
    wmat = wd.reshape(O, C * K)
    y = cols @ wmat.T
    if bias is not None:
        y += bias.data
    out = Tensor(np.ascontiguousarray(y.reshape(B, Lout, O).transpose(0, 2, 1)))

    def back(g):
        g2 = np.ascontiguousarray(g.transpose(0, 2, 1)).reshape(B * Lout, O)
        gw = (g2.T @ cols).reshape(O, C, K)
        gb = g2.sum(axis=0, dtype=np.float64).astype(g.dtype) if bias is not None else None
        dcols = (g2 @ wmat).reshape(B, Lout, C, K)
        gxp = np.zeros_like(xp)
        span = stride * (Lout - 1) + 1
        for k in range(K):
            gxp[:, :, k : k + span : stride] += dcols[:, :, :, k].transpose(0, 2, 1)
        return gxp[:, :, padding : padding + L], gw, gb

    record(out, (x, weight, bias), back)
    return out


def conv_transpose1d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None,
    stride: int = 2,
    padding: int = 1,
    output_padding: int = 0,
) -> Tensor:
    """``weight`` has shape (in_channels, out_channels, kernel)."""
    xd, wd = x.data, weight.data
    B, C, L = xd.shape
    Cw, O, K = wd.shape
    if C != Cw:
        raise ShapeError(f"conv_transpose1d: input {xd.shape} vs weight {wd.shape}")
    if not 0 <= output_padding < stride:
        raise ShapeError(f"conv_transpose1d: output padding {output_padding} outside [0, {stride})")
    Lout = deconv_out_length(L, K, stride, padding, output_padding)
    if Lout < 1:
        raise ShapeError("conv_transpose1d: non-positive output length")
    full = (L - 1) * stride + K + output_padding
    xt = np.ascontiguousarray(xd.transpose(0, 2, 1)).reshape(B * L, C)
    wmat = wd.reshape(C, O * K)
    cols = (xt @ wmat).reshape(B, L, O, K)
    yfull = np.zeros((B, O, max(full, padding + Lout)), dtype=cols.dtype)
    span = stride * (L - 1) + 1
    for k in range(K):
        yfull[:, :, k : k + span : stride] += cols[:, :, :, k].transpose(0, 2, 1)
    y = yfull[:, :, padding : padding + Lout]
    if bias is not None:
        y = y + bias.data[None, :, None]
    out = Tensor(np.ascontiguousarray(y))

    def back(g):
        gfull = np.zeros_like(yfull)
        gfull[:, :, padding : padding + Lout] = g
        dcols = np.empty((B, L, O, K), dtype=g.dtype)
        for k in range(K):
            dcols[:, :, :, k] = gfull[:, :, k : k + span : stride].transpose(0, 2, 1)
        d2 = dcols.reshape(B * L, O * K)
        gx = (d2 @ wmat.T).reshape(B, L, C).transpose(0, 2, 1)
        gw = (xt.T @ d2).reshape(C, O, K)
        gb = g.sum(axis=(0, 2), dtype=np.float64).astype(g.dtype) if bias is not None else None
        return np.ascontiguousarray(gx), gw, gb

    record(out, (x, weight, bias), back)
    return out


# normalisation and regularisation


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel normalisation over (batch,) or (batch, length) for axis 1 channels.

    In training mode the running statistics are updated in place.
    """
    xd = x.data
    if xd.ndim not in (2, 3) or xd.shape[1] != gamma.shape[0]:
        raise ShapeError(f"batch_norm: input {xd.shape} vs {gamma.shape[0]} channels")
    axes = (0,) if xd.ndim == 2 else (0, 2)
    shape = (1, -1) if xd.ndim == 2 else (1, -1, 1)
    if training:
        m = xd.mean(axis=axes, dtype=np.float64)
        v = xd.var(axis=axes, dtype=np.float64)
        n = xd.size // xd.shape[1]
        running_mean *= 1 - momentum
        running_mean += momentum * m
        running_var *= 1 - momentum
        running_var += momentum * v * n / max(n - 1, 1)
    else:
        m, v = running_mean, running_var
    inv = (1.0 / np.sqrt(v + eps)).astype(xd.dtype)
    xhat = (xd - m.astype(xd.dtype).reshape(shape)) * inv.reshape(shape)
    out = Tensor(xhat * gamma.data.reshape(shape) + beta.data.reshape(shape))

    def back(g):
        gg = (g * xhat).sum(axis=axes, dtype=np.float64).astype(g.dtype)
        gb = g.sum(axis=axes, dtype=np.float64).astype(g.dtype)
        gxhat = g * gamma.data.reshape(shape)
        if training:
            n = xd.size // xd.shape[1]
            mg = gxhat.mean(axis=axes, keepdims=True, dtype=np.float64)
            mgx = (gxhat * xhat).mean(axis=axes, keepdims=True, dtype=np.float64)
            gx = (gxhat - mg - xhat * mgx) * inv.reshape(shape)
            gx = gx.astype(xd.dtype)
        else:
            gx = gxhat * inv.reshape(shape)
        return gx, gg, gb

    record(out, (x, gamma, beta), back)
    return out


def dropout(x: Tensor, p: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    if not training or p <= 0:
        return x
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)
    out = Tensor(x.data * keep)
    record(out, (x,), lambda g: (g * keep,))
    return out


# probabilities


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    xd = x.data
    e = np.exp(xd - xd.max(axis=axis, keepdims=True))
    y = e / e.sum(axis=axis, keepdims=True, dtype=np.float64).astype(xd.dtype)
    out = Tensor(y)

    def back(g):
        s = (g * y).sum(axis=axis, keepdims=True, dtype=np.float64).astype(g.dtype)
        return (y * (g - s),)

    record(out, (x,), back)
    return out


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    xd = x.data
    shifted = xd - xd.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True, dtype=np.float64)).astype(xd.dtype)
    y = shifted - lse
    out = Tensor(y)

    def back(g):
        return (g - np.exp(y) * g.sum(axis=axis, keepdims=True, dtype=np.float64).astype(g.dtype),)

    record(out, (x,), back)
    return out


def nll(log_probs: Tensor, target) -> Tensor:
    """Mean negative log-likelihood of integer ``target`` over all leading positions."""
    lp = log_probs.data
    t = np.asarray(target, dtype=np.int64)
    if lp.shape[:-1] != t.shape:
        raise ShapeError(f"nll: log-probs {lp.shape} vs targets {t.shape}")
    flat = lp.reshape(-1, lp.shape[-1])
    tf = t.reshape(-1)
    picked = flat[np.arange(len(tf)), tf]
    out = Tensor(np.asarray(-picked.mean(dtype=np.float64), dtype=lp.dtype))

    def back(g):
        gl = np.zeros_like(flat)
        gl[np.arange(len(tf)), tf] = -g / len(tf)
        return (gl.reshape(lp.shape),)

    record(out, (log_probs,), back)
    return out


# recurrent


def lstm_cell(pre: Tensor, c_prev: Tensor) -> tuple[Tensor, Tensor]:
    """Fused LSTM gate update from pre-activations laid out as [i, f, g, o]."""
    pd, cd = pre.data, _data(c_prev)
    if pd.shape[1] != 4 * cd.shape[1] or pd.shape[0] != cd.shape[0]:
        raise ShapeError(f"lstm_cell: pre-activations {pd.shape} vs cell {cd.shape}")
    h, c, gates, tc = _kernels.lstm_cell_forward(pd, cd)
    h_t, c_t = Tensor(h), Tensor(c)

    def back(gh, gc):
        dpre, dc_prev = _kernels.lstm_cell_backward(gh, gc, gates, cd, tc)
        return dpre, dc_prev

    record((h_t, c_t), (pre, c_prev), back)
    return h_t, c_t


def detach(x: Tensor) -> Tensor:
    return Tensor(x.data)


__all__ = [
    "add", "sub", "mul", "square", "exp", "log", "tanh", "sigmoid", "leaky_relu",
    "sum", "mean", "reshape", "flatten", "unflatten", "transpose", "getitem", "concat",
    "stack", "unstack", "matmul", "linear", "embedding", "conv1d", "conv_transpose1d",
    "conv_out_length", "deconv_out_length", "batch_norm", "dropout", "softmax",
    "log_softmax", "nll", "lstm_cell", "detach", "as_tensor",
]
