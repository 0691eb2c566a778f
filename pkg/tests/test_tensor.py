import numpy as np
import pytest

from schedvae import _kernels
from schedvae._kernels import _pykernels
from schedvae.tensor import Adam, Parameter, ShapeError, Tape, TapeError, Tensor, ops
from schedvae.tensor import checkpoint
from schedvae.tensor.nn import LSTM, BatchNorm1d, Dropout, Linear
from schedvae.tensor.rng import stream

from gradcheck import check


def test_linear_identity():
    x = Tensor(np.array([[1.0, 2.0]], np.float32))
    w = Tensor(np.eye(2, dtype=np.float32))
    b = Tensor(np.zeros(2, np.float32))
    np.testing.assert_array_equal(ops.linear(x, w, b).data, [[1, 2]])


def test_softmax_uniform_and_normalised(rng):
    np.testing.assert_allclose(ops.softmax(Tensor(np.zeros(3, np.float32))).data, [1 / 3] * 3)
    y = ops.softmax(Tensor(rng.standard_normal((5, 7)).astype(np.float32) * 10), axis=1)
    np.testing.assert_allclose(y.data.sum(axis=1), 1.0, atol=1e-6)


def test_conv_length_arithmetic():
    x = Tensor(np.zeros((1, 3, 144), np.float32))
    w = Tensor(np.zeros((5, 3, 4), np.float32))
    assert ops.conv1d(x, w, None, stride=2, padding=1).shape == (1, 5, 72)
    assert ops.conv_out_length(144, 4, 2, 1) == (144 + 2 - 4) // 2 + 1 == 72


def test_shape_mismatch_names_op_and_shapes():
    with pytest.raises(ShapeError, match=r"linear.*\(2, 3\).*\(4, 2\)"):
        ops.linear(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))))


def test_backward_sum_wx():
    W = Parameter(np.arange(4, dtype=np.float32).reshape(2, 2))
    x = Tensor(np.ones((1, 2), np.float32))
    with Tape() as tape:
        loss = ops.sum(ops.matmul(x, W))
    tape.backward(loss)
    np.testing.assert_array_equal(W.grad, [[1, 1], [1, 1]])


def test_backward_sigmoid_at_zero():
    x = Parameter(np.zeros(1, np.float32))
    with Tape() as tape:
        loss = ops.sum(ops.sigmoid(x))
    tape.backward(loss)
    assert x.grad[0] == pytest.approx(0.25)


def test_backward_errors():
    x = Parameter(np.ones(3, np.float32))
    with Tape() as tape:
        y = ops.mul(x, 2.0)
        loss = ops.sum(y)
    with pytest.raises(TapeError, match="scalar"):
        tape.backward(y)
    tape = Tape()
    with tape:
        loss = ops.sum(ops.mul(x, 2.0))
    tape.backward(loss)
    with pytest.raises(TapeError, match="consumed"):
        tape.backward(loss)


def test_no_tape_records_nothing():
    x = Parameter(np.ones(3, np.float32))
    y = ops.mul(x, 2.0)
    assert not y.requires_grad


def test_random_three_layer_net_matches_finite_differences(rng):
    init = stream(1, "init")
    l1, l2, l3 = Linear(4, 6, init), Linear(6, 5, init), Linear(5, 3, init)
    x = rng.standard_normal((7, 4))

    def net(x, w1, w2, w3):
        h = ops.tanh(ops.linear(x, w1, Tensor(l1.bias.data.astype(x.dtype))))
        h = ops.sigmoid(ops.linear(h, w2, None))
        return ops.linear(h, w3, None)

    err = check(net, [x, l1.weight.data, l2.weight.data, l3.weight.data], rng)
    assert err < 1e-3


def test_batchnorm_eval_is_affine_and_deterministic(rng):
    bn = BatchNorm1d(4)
    x = Tensor(rng.standard_normal((32, 4)).astype(np.float32) * 3 + 1)
    bn(x)
    bn.eval()
    a, b = bn(x).data, bn(x).data
    np.testing.assert_array_equal(a, b)
    inv = 1 / np.sqrt(bn.running_var + bn.eps)
    np.testing.assert_allclose(a, (x.data - bn.running_mean) * inv, rtol=1e-5, atol=1e-5)


def test_dropout_eval_is_identity(rng):
    d = Dropout(0.5, stream(0, "dropout"))
    x = Tensor(rng.standard_normal((4, 5)).astype(np.float32))
    d.eval()
    assert d(x) is x


def test_adam_zero_grad_leaves_params():
    p = Parameter(np.ones(3, np.float32))
    opt = Adam([p], lr=0.1)
    p.grad = np.zeros(3, np.float32)
    opt.step()
    np.testing.assert_array_equal(p.data, 1.0)


def test_adam_first_step_is_lr_sign():
    # bias-corrected m/sqrt(v) = g/|g| on the first step
    g = np.array([0.3, -2.0, 5e-3], np.float32)
    p = Parameter(np.zeros(3, np.float32))
    opt = Adam([p], lr=0.01)
    p.grad = g
    opt.step()
    np.testing.assert_allclose(p.data, -0.01 * np.sign(g), rtol=1e-4)


def _train_tiny(seed):
    init = stream(seed, "init")
    lin = Linear(3, 2, init)
    opt = Adam(lin.parameters(), lr=0.01)
    x = Tensor(stream(seed, "data").standard_normal((8, 3)).astype(np.float32))
    for _ in range(5):
        opt.zero_grad()
        with Tape() as tape:
            loss = ops.mean(ops.square(lin(x)))
        tape.backward(loss)
        opt.step()
    return [p.data.copy() for p in lin.parameters()]


def test_training_is_deterministic():
    for a, b in zip(_train_tiny(4), _train_tiny(4)):
        np.testing.assert_array_equal(a, b)


def test_checkpoint_round_trip(tmp_path, rng):
    tensors = {"a.weight": rng.standard_normal((3, 4)).astype(np.float32), "b": np.ones(5)}
    checkpoint.save(tmp_path / "m.ckpt", tensors, meta="[model]\nkind = x\n")
    back, meta = checkpoint.load(tmp_path / "m.ckpt")
    assert meta.startswith("[model]")
    np.testing.assert_array_equal(back["a.weight"], tensors["a.weight"])
    np.testing.assert_array_equal(back["b"], 1.0)


def test_checkpoint_rejects_garbage(tmp_path):
    (tmp_path / "x").write_bytes(b"nope")
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.load(tmp_path / "x")


def test_lstm_module_runs_and_steps_agree(rng):
    lstm = LSTM(3, 5, 2, 0.0, stream(2, "init"))
    x = Tensor(rng.standard_normal((4, 6, 3)).astype(np.float32))
    seq, hs, cs = lstm(x)
    h, c = lstm.zero_state(4)
    for t in range(6):
        top, h, c = lstm.step(Tensor(x.data[:, t]), h, c)
    np.testing.assert_allclose(top.data, seq.data[:, -1], rtol=1e-5, atol=1e-6)
    np.testing.assert_allclose(h[0].data, hs[0].data, rtol=1e-5, atol=1e-6)


@pytest.mark.skipif(_kernels.BACKEND != "cython", reason="compiled kernels not built")
def test_compiled_lstm_kernel_matches_fallback(rng):
    from schedvae._kernels import _ckernels

    for dt in (np.float32, np.float64):
        pre = rng.standard_normal((6, 20)).astype(dt)
        c0 = rng.standard_normal((6, 5)).astype(dt)
        a = _ckernels.lstm_cell_forward(pre, c0)
        b = _pykernels.lstm_cell_forward(pre, c0)
        for x, y in zip(a, b):
            np.testing.assert_allclose(x, y, rtol=1e-5, atol=1e-6)
        dh, dc = rng.standard_normal((2, 6, 5)).astype(dt)
        a = _ckernels.lstm_cell_backward(dh, dc, b[2], c0, b[3])
        b2 = _pykernels.lstm_cell_backward(dh, dc, b[2], c0, b[3])
        for x, y in zip(a, b2):
            np.testing.assert_allclose(x, y, rtol=1e-5, atol=1e-6)


@pytest.mark.skipif(_kernels.BACKEND != "cython", reason="compiled kernels not built")
def test_compiled_schedule_kernels_match_fallback(rng):
    from schedvae._kernels import _ckernels

    from conftest import random_schedule
    from schedvae.encoding import sample_arrays

    sample = [random_schedule(rng) for _ in range(300)]
    acts, durs, offs = sample_arrays(sample)
    for step in (5, 10, 30, 120):
        np.testing.assert_array_equal(
            _ckernels.encode_bins(acts, durs, offs, step),
            _pykernels.encode_bins(acts, durs, offs, step),
        )
    toks = _pykernels.encode_bins(acts, durs, offs, 10)
    for x, y in zip(_ckernels.run_lengths(toks), _pykernels.run_lengths(toks)):
        np.testing.assert_array_equal(x, y)
    fr = rng.random(len(acts))
    fr[::7] = 0.25
    np.testing.assert_array_equal(
        _ckernels.largest_remainder_batch(fr, offs, 1440),
        _pykernels.largest_remainder_batch(fr, offs, 1440),
    )
