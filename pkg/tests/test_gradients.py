"""Every differentiable op checked against central finite differences."""

import zlib

import numpy as np
import pytest

from schedvae.tensor import Tensor, ops

from gradcheck import check

TRIALS = 50
TOL = 1e-3


def away_from_zero(rng, shape, margin=0.05):
    x = rng.standard_normal(shape)
    return np.sign(x) * (np.abs(x) + margin)


def dims(rng, n, lo=1, hi=4):
    return tuple(int(v) for v in rng.integers(lo, hi + 1, size=n))


def _linear(rng):
    b, i, o = dims(rng, 3)
    return (lambda x, w, bb: ops.linear(x, w, bb)), [
        rng.standard_normal((b, i)), rng.standard_normal((i, o)), rng.standard_normal(o)
    ]


def _matmul(rng):
    b, i, o = dims(rng, 3)
    return ops.matmul, [rng.standard_normal((b, i)), rng.standard_normal((i, o))]


def _broadcast_arith(rng):
    r, c = dims(rng, 2)

    def f(a, b, d):
        return ops.mul(ops.sub(ops.add(a, b), d), a)

    return f, [rng.standard_normal((r, c)), rng.standard_normal(c), rng.standard_normal((r, 1))]


def _unary(name):
    def make(rng):
        shape = dims(rng, 2)
        fn = getattr(ops, name)
        if name == "log":
            return fn, [rng.uniform(0.5, 2.0, shape)]
        if name == "leaky_relu":
            return fn, [away_from_zero(rng, shape)]
        return fn, [rng.standard_normal(shape)]

    return make


def _reductions(rng):
    shape = dims(rng, 3)
    axis = int(rng.integers(0, 3))

    def f(x):
        return ops.add(ops.mean(x, axis=axis), ops.mul(ops.sum(x, axis=axis, keepdims=False), 0.5))

    return f, [rng.standard_normal(shape)]


def _shape_ops(rng):
    a, b, c = dims(rng, 3, 2, 4)

    def f(x):
        y = ops.transpose(x, (2, 0, 1))
        y = ops.reshape(y, (c, a * b))
        y = ops.getitem(y, (slice(None), slice(1, None)))
        return ops.unflatten(ops.flatten(ops.reshape(y, (c, 1, -1))), (1, -1))

    return f, [rng.standard_normal((a, b, c))]


def _fancy_getitem(rng):
    n, d = dims(rng, 2, 2, 5)
    idx = rng.integers(0, n, size=6)
    return (lambda x: ops.getitem(x, idx)), [rng.standard_normal((n, d))]


def _concat_stack(rng):
    r, c1, c2 = dims(rng, 3)

    def f(a, b):
        cat = ops.concat([a, b, a], axis=1)
        parts = ops.unstack(cat, axis=1)
        return ops.stack(parts[::-1], axis=0)

    return f, [rng.standard_normal((r, c1)), rng.standard_normal((r, c2))]


def _embedding(rng):
    v, d = dims(rng, 2, 2, 5)
    idx = rng.integers(0, v, size=(3, 4))
    return (lambda w: ops.embedding(w, idx)), [rng.standard_normal((v, d))]


def _conv1d(rng):
    b, c, o = dims(rng, 3, 1, 3)
    length = int(rng.integers(2, 9))
    padding = int(rng.integers(1, 3))
    if ops.conv_out_length(length, 4, 2, padding) < 1:
        padding = 2

    def f(x, w, bb):
        return ops.conv1d(x, w, bb, stride=2, padding=padding)

    return f, [
        rng.standard_normal((b, c, length)),
        rng.standard_normal((o, c, 4)),
        rng.standard_normal(o),
    ]


def _conv_transpose1d(rng):
    b, c, o = dims(rng, 3, 1, 3)
    length = int(rng.integers(1, 6))
    op = int(rng.integers(0, 2))
    padding = 1 if length > 1 else int(rng.integers(1, 3))
    if ops.deconv_out_length(length, 4, 2, padding, op) < 1:
        op = 1

    def f(x, w, bb):
        return ops.conv_transpose1d(x, w, bb, stride=2, padding=padding, output_padding=op)

    return f, [
        rng.standard_normal((b, c, length)),
        rng.standard_normal((c, o, 4)),
        rng.standard_normal(o),
    ]


def _batch_norm(training, ndim):
    def make(rng):
        b = int(rng.integers(3, 7))
        c = int(rng.integers(1, 4))
        shape = (b, c) if ndim == 2 else (b, c, int(rng.integers(2, 4)))
        rm = rng.standard_normal(c)
        rv = rng.uniform(0.5, 2.0, c)

        def f(x, g, be):
            return ops.batch_norm(x, g, be, rm.copy(), rv.copy(), training)

        return f, [rng.standard_normal(shape) * 2, rng.uniform(0.5, 1.5, c), rng.standard_normal(c)]

    return make


def _dropout(rng):
    shape = dims(rng, 2, 2, 5)
    seed = int(rng.integers(1 << 30))

    def f(x):
        return ops.dropout(x, 0.3, np.random.default_rng(seed), True)

    return f, [rng.standard_normal(shape)]


def _softmaxes(rng):
    shape = dims(rng, 2, 2, 5)
    return (lambda x: ops.add(ops.softmax(x, axis=1), ops.log_softmax(x, axis=1))), [
        rng.standard_normal(shape) * 2
    ]


def _nll(rng):
    b, t, v = dims(rng, 3, 2, 5)
    target = rng.integers(0, v, size=(b, t))
    return (lambda x: ops.nll(ops.log_softmax(x, axis=-1), target)), [
        rng.standard_normal((b, t, v))
    ]


def _lstm_cell(rng):
    b, h = dims(rng, 2, 1, 3)
    return ops.lstm_cell, [rng.standard_normal((b, 4 * h)), rng.standard_normal((b, h))]


def _lstm_unrolled(rng):
    b, h, i = dims(rng, 3, 1, 3)
    steps = 3

    def f(x, wi, wh, bias):
        hh = Tensor(np.zeros((b, h), x.dtype))
        cc = Tensor(np.zeros((b, h), x.dtype))
        proj = ops.unstack(ops.linear(x, wi, bias), axis=1)
        outs = []
        for t in range(steps):
            hh, cc = ops.lstm_cell(ops.add(proj[t], ops.matmul(hh, wh)), cc)
            outs.append(hh)
        return ops.stack(outs, axis=1)

    return f, [
        rng.standard_normal((b, steps, i)),
        rng.standard_normal((i, 4 * h)) * 0.5,
        rng.standard_normal((h, 4 * h)) * 0.5,
        rng.standard_normal(4 * h) * 0.5,
    ]


CASES = {
    "linear": _linear,
    "matmul": _matmul,
    "broadcast_arith": _broadcast_arith,
    "exp": _unary("exp"),
    "log": _unary("log"),
    "square": _unary("square"),
    "tanh": _unary("tanh"),
    "sigmoid": _unary("sigmoid"),
    "leaky_relu": _unary("leaky_relu"),
    "reductions": _reductions,
    "shape_ops": _shape_ops,
    "fancy_getitem": _fancy_getitem,
    "concat_stack": _concat_stack,
    "embedding": _embedding,
    "conv1d": _conv1d,
    "conv_transpose1d": _conv_transpose1d,
    "batch_norm_train_2d": _batch_norm(True, 2),
    "batch_norm_train_3d": _batch_norm(True, 3),
    "batch_norm_eval": _batch_norm(False, 3),
    "dropout": _dropout,
    "softmax": _softmaxes,
    "nll": _nll,
    "lstm_cell": _lstm_cell,
    "lstm_unrolled": _lstm_unrolled,
}


@pytest.mark.parametrize("name", sorted(CASES))
def test_gradient_matches_finite_differences(name):
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    worst = 0.0
    for _ in range(TRIALS):
        fn, inputs = CASES[name](rng)
        worst = max(worst, check(fn, inputs, rng))
    assert worst < TOL, f"{name}: worst relative error {worst:.2e}"
