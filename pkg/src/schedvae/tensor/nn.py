"""Layer modules holding parameters, buffers and train/eval state."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from . import ops
from .core import Parameter, Tensor

DTYPE = np.float32


class Module:
    training = True

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, value in vars(self).items():
            path = f"{prefix}{name}"
            if isinstance(value, Parameter):
                yield path, value
            elif isinstance(value, Module):
                yield from value.named_parameters(path + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{path}.{i}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for name, value in vars(self).items():
            path = f"{prefix}{name}"
            if isinstance(value, Module):
                yield from value.named_buffers(path + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_buffers(f"{path}.{i}.")
        for name in getattr(self, "_buffers", ()):
            yield f"{prefix}{name}", getattr(self, name)

    def modules(self) -> Iterator["Module"]:
        yield self
        for value in vars(self).values():
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        yield from item.modules()

    def train(self, mode: bool = True) -> "Module":
        for m in self.modules():
            m.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def state_dict(self) -> dict[str, np.ndarray]:
        out = {name: p.data for name, p in self.named_parameters()}
        out.update({name: b for name, b in self.named_buffers()})
        return out

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        buffers = dict(self.named_buffers())
        missing = (set(params) | set(buffers)) - set(state)
        if missing:
            raise KeyError(f"state lacks {sorted(missing)}")
        for name, p in params.items():
            if state[name].shape != p.shape:
                raise ValueError(f"{name}: shape {state[name].shape} != {p.shape}")
            p.data = np.array(state[name], dtype=p.dtype)
        for name, b in buffers.items():
            b[...] = state[name]

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


def he_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(DTYPE)


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, bias: bool = True):
        self.weight = Parameter(he_uniform(rng, (n_in, n_out), n_in))
        self.bias = Parameter(np.zeros(n_out, DTYPE)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return ops.linear(x, self.weight, self.bias)


class Embedding(Module):
    def __init__(self, n_tokens: int, dim: int, rng: np.random.Generator):
        self.weight = Parameter(rng.standard_normal((n_tokens, dim)).astype(DTYPE))

    def forward(self, index) -> Tensor:
        return ops.embedding(self.weight, index)


class Conv1d(Module):
    def __init__(self, n_in, n_out, rng, kernel=4, stride=2, padding=1):
        self.weight = Parameter(he_uniform(rng, (n_out, n_in, kernel), n_in * kernel))
        self.bias = Parameter(np.zeros(n_out, DTYPE))
        self.stride, self.padding = stride, padding

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv1d(x, self.weight, self.bias, self.stride, self.padding)


class ConvTranspose1d(Module):
    def __init__(self, n_in, n_out, rng, kernel=4, stride=2, padding=1, output_padding=0):
        self.weight = Parameter(he_uniform(rng, (n_in, n_out, kernel), n_in * kernel))
        self.bias = Parameter(np.zeros(n_out, DTYPE))
        self.stride, self.padding, self.output_padding = stride, padding, output_padding

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv_transpose1d(
            x, self.weight, self.bias, self.stride, self.padding, self.output_padding
        )


class BatchNorm1d(Module):
    _buffers = ("running_mean", "running_var")

    def __init__(self, n: int, momentum: float = 0.1, eps: float = 1e-5):
        self.gamma = Parameter(np.ones(n, DTYPE))
        self.beta = Parameter(np.zeros(n, DTYPE))
        self.running_mean = np.zeros(n, np.float64)
        self.running_var = np.ones(n, np.float64)
        self.momentum, self.eps = momentum, eps

    def forward(self, x: Tensor) -> Tensor:
        return ops.batch_norm(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            self.training, self.momentum, self.eps,
        )


class Dropout(Module):
    def __init__(self, p: float, rng: np.random.Generator):
        self.p = p
        self.rng = rng

    def forward(self, x: Tensor) -> Tensor:
        return ops.dropout(x, self.p, self.rng, self.training)


class LSTMLayer(Module):
    """One LSTM layer; gates ordered input, forget, cell, output."""

    def __init__(self, n_in: int, hidden: int, rng: np.random.Generator):
        bound = 1.0 / np.sqrt(hidden)
        self.w_ih = Parameter(rng.uniform(-bound, bound, (n_in, 4 * hidden)).astype(DTYPE))
        self.w_hh = Parameter(rng.uniform(-bound, bound, (hidden, 4 * hidden)).astype(DTYPE))
        self.bias = Parameter(rng.uniform(-bound, bound, 4 * hidden).astype(DTYPE))
        self.hidden = hidden

    def step(self, x_proj: Tensor, h: Tensor, c) -> tuple[Tensor, Tensor]:
        """``x_proj`` is the already-projected input ``x @ w_ih + bias``."""
        return ops.lstm_cell(ops.add(x_proj, ops.matmul(h, self.w_hh)), c)

    def project(self, x: Tensor) -> Tensor:
        return ops.linear(x, self.w_ih, self.bias)


class LSTM(Module):
    """Stacked LSTM with dropout between layers (train mode only)."""

    def __init__(self, n_in: int, hidden: int, n_layers: int, dropout: float, rng):
        self.layers = [
            LSTMLayer(n_in if i == 0 else hidden, hidden, rng) for i in range(n_layers)
        ]
        self.drop = Dropout(dropout, rng)
        self.hidden, self.n_layers = hidden, n_layers

    def zero_state(self, batch: int, dtype=DTYPE):
        z = Tensor(np.zeros((batch, self.hidden), dtype))
        return [z] * self.n_layers, [z] * self.n_layers

    def step(self, x: Tensor, hs: list, cs: list) -> tuple[Tensor, list, list]:
        """Advance every layer by one time step; returns top output and new states."""
        new_h, new_c = [], []
        inp = x
        for i, layer in enumerate(self.layers):
            if i > 0:
                inp = self.drop(inp)
            h, c = layer.step(layer.project(inp), hs[i], cs[i])
            new_h.append(h)
            new_c.append(c)
            inp = h
        return inp, new_h, new_c

    def forward(self, x: Tensor, hs=None, cs=None, last=None) -> tuple[Tensor, list, list]:
        """Run over a (batch, time, features) sequence, layer by layer.

        ``last`` (one index per row) picks which step's states are returned,
        so rows shorter than the padded length report their own final state.
        """
        B, T, _ = x.shape
        if hs is None:
            hs, cs = self.zero_state(B, x.dtype)
        seq = x
        out_h, out_c = [], []
        for i, layer in enumerate(self.layers):
            if i > 0:
                seq = self.drop(seq)
            steps = ops.unstack(layer.project(seq), axis=1)
            h, c = hs[i], cs[i]
            outs, cells = [], []
            for t in range(T):
                h, c = layer.step(steps[t], h, c)
                outs.append(h)
                cells.append(c)
            seq = ops.stack(outs, axis=1)
            if last is not None:
                rows = (np.arange(B), np.asarray(last))
                h = ops.getitem(seq, rows)
                c = ops.getitem(ops.stack(cells, axis=1), rows)
            out_h.append(h)
            out_c.append(c)
        return seq, out_h, out_c
