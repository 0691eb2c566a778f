"""Encoder and decoder bodies for the three architectures.

Encoders take embedded features (batch, length, S) and return a flat
feature vector. Decoders take the resized latent vector and return
per-position hidden features (batch, length, S), except the recurrent
decoder which runs its own output head step by step.
"""

from __future__ import annotations

import numpy as np

from ..tensor import Tensor, nn, ops

KERNEL, STRIDE = 4, 2


class DenseBlock(nn.Module):
    def __init__(self, n_in, n_out, dropout, rng, drop_rng):
        self.linear = nn.Linear(n_in, n_out, rng)
        self.norm = nn.BatchNorm1d(n_out)
        self.drop = nn.Dropout(dropout, drop_rng)

    def forward(self, x):
        return self.drop(ops.leaky_relu(self.norm(self.linear(x))))


class ConvBlock(nn.Module):
    def __init__(self, conv, size, dropout, drop_rng):
        self.conv = conv
        self.norm = nn.BatchNorm1d(size)
        self.drop = nn.Dropout(dropout, drop_rng)

    def forward(self, x):
        return self.drop(ops.leaky_relu(self.norm(self.conv(x))))


def conv_plan(length: int, n_blocks: int) -> tuple[list[int], list[int]]:
    """Paddings per block and the lengths between blocks.

    Padding 1 halves the length; once a length of 1 is reached padding 2
    keeps it at 1 instead of collapsing to zero.
    """
    lengths, paddings = [length], []
    for _ in range(n_blocks):
        p = 1 if ops.conv_out_length(lengths[-1], KERNEL, STRIDE, 1) >= 1 else 2
        paddings.append(p)
        lengths.append(ops.conv_out_length(lengths[-1], KERNEL, STRIDE, p))
    return paddings, lengths


# feed-forward


class FFEncoder(nn.Module):
    def __init__(self, length, size, n_blocks, dropout, rng, drop_rng):
        self.blocks = [
            DenseBlock(length * size if i == 0 else size, size, dropout, rng, drop_rng)
            for i in range(n_blocks)
        ]
        self.n_features = size

    def forward(self, x):
        h = ops.flatten(x)
        for b in self.blocks:
            h = b(h)
        return h


class FFDecoder(nn.Module):
    def __init__(self, length, size, n_blocks, dropout, rng, drop_rng):
        self.blocks = [DenseBlock(size, size, dropout, rng, drop_rng) for _ in range(n_blocks)]
        self.out = nn.Linear(size, length * size, rng)
        self.n_in = size
        self.length, self.size = length, size

    def forward(self, h):
        for b in self.blocks:
            h = b(h)
        return ops.unflatten(self.out(h), (self.length, self.size))


# convolutional


class CNNEncoder(nn.Module):
    def __init__(self, length, size, n_blocks, dropout, rng, drop_rng):
        paddings, lengths = conv_plan(length, n_blocks)
        self.blocks = [
            ConvBlock(nn.Conv1d(size, size, rng, KERNEL, STRIDE, p), size, dropout, drop_rng)
            for p in paddings
        ]
        self.n_features = size * lengths[-1]

    def forward(self, x):
        h = ops.transpose(x, (0, 2, 1))
        for b in self.blocks:
            h = b(h)
        return ops.flatten(h)


class CNNDecoder(nn.Module):
    def __init__(self, length, size, n_blocks, dropout, rng, drop_rng):
        paddings, lengths = conv_plan(length, n_blocks)
        self.blocks = []
        for i in reversed(range(n_blocks)):
            p = paddings[i]
            reach = ops.deconv_out_length(lengths[i + 1], KERNEL, STRIDE, p, 0)
            op = lengths[i] - reach
            if op not in (0, 1):
                raise ValueError(f"cannot mirror length {lengths[i + 1]} -> {lengths[i]}")
            conv = nn.ConvTranspose1d(size, size, rng, KERNEL, STRIDE, p, op)
            self.blocks.append(ConvBlock(conv, size, dropout, drop_rng))
        self.start = (size, lengths[-1])
        self.n_in = size * lengths[-1]

    def forward(self, h):
        h = ops.unflatten(h, self.start)
        for b in self.blocks:
            h = b(h)
        return ops.transpose(h, (0, 2, 1))


# recurrent


class RNNEncoder(nn.Module):
    def __init__(self, length, size, n_blocks, dropout, rng, drop_rng):
        self.lstm = nn.LSTM(size, size, n_blocks, dropout, rng)
        self.lstm.drop = nn.Dropout(dropout, drop_rng)
        self.n_features = size * n_blocks

    def forward(self, x, last=None):
        """``last`` marks each row's end token; padding after it is not read
        into the returned state."""
        if last is not None:
            # steps past the longest row's end never reach the returned state
            x = ops.getitem(x, (slice(None), slice(0, int(np.max(last)) + 1)))
        _, hs, _ = self.lstm(x, last=last)
        return ops.concat(hs, axis=-1)


class RNNDecoder(nn.Module):
    """Autoregressive LSTM decoder.

    The latent vector is resized into initial hidden and cell states for
    every layer. Each step is fed either the ground-truth previous token
    (teacher forcing, decided by one coin per step for the whole batch) or
    the argmax and duration the model predicted at the previous step.
    """

    def __init__(self, length, size, n_blocks, dropout, rng, drop_rng):
        self.lstm = nn.LSTM(size, size, n_blocks, dropout, rng)
        self.lstm.drop = nn.Dropout(dropout, drop_rng)
        self.n_in = 2 * n_blocks * size
        self.length, self.size, self.n_layers = length, size, n_blocks

    def initial_state(self, h):
        parts = ops.unstack(ops.unflatten(h, (2 * self.n_layers, self.size)), axis=1)
        return list(parts[: self.n_layers]), list(parts[self.n_layers :])

    def forward(self, h, embed, unembed, start, targets=None, ratio=0.0, coin=None):
        """Returns stacked (log_probs, durations or None)."""
        hs, cs = self.initial_state(h)
        batch = h.shape[0]
        tok = np.full(batch, start, dtype=np.int64)
        dur = np.zeros(batch, dtype=np.float32)
        continuous = unembed.duration is not None
        all_lp, all_d = [], []
        for t in range(self.length):
            x = embed(tok, dur) if continuous else embed(tok)
            top, hs, cs = self.lstm.step(x, hs, cs)
            lp, d = unembed(top)
            all_lp.append(lp)
            if continuous:
                all_d.append(d)
            if targets is not None and coin is not None and coin.random() < ratio:
                tok = targets[0][:, t]
                if continuous:
                    dur = targets[1][:, t].astype(np.float32)
            else:
                tok = lp.data.argmax(axis=-1)
                if continuous:
                    dur = d.data
        log_probs = ops.stack(all_lp, axis=1)
        durations = ops.stack(all_d, axis=1) if continuous else None
        return log_probs, durations


ENCODERS = {"FF": FFEncoder, "CNN": CNNEncoder, "RNN": RNNEncoder}
DECODERS = {"FF": FFDecoder, "CNN": CNNDecoder, "RNN": RNNDecoder}
