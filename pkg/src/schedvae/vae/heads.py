"""Embedding, un-embedding, latent sampling and the training losses."""

from __future__ import annotations

import numpy as np

from ..encoding import EOS, N_ACTIVITIES, VOCAB_SIZE, EncodingError
from ..tensor import Tensor, nn, ops


class TokenEmbedding(nn.Module):
    """Maps encodings to (batch, length, S) features.

    Discrete models embed activity ids; an extra row (id 8) serves as the
    recurrent decoder's start input. Continuous models embed the 10-symbol
    vocabulary into S-1 columns and append the duration as the last column.
    """

    def __init__(self, kind: str, size: int, rng):
        self.kind = kind
        self.size = size
        if kind == "discrete":
            self.n_tokens = N_ACTIVITIES + 1
            self.table = nn.Embedding(self.n_tokens, size, rng)
        else:
            self.n_tokens = VOCAB_SIZE
            self.table = nn.Embedding(self.n_tokens, size - 1, rng)

    def forward(self, symbols, durations=None) -> Tensor:
        symbols = np.asarray(symbols, dtype=np.int64)
        if symbols.size and (symbols.min() < 0 or symbols.max() >= self.n_tokens):
            raise EncodingError(f"token outside vocabulary of {self.n_tokens}")
        emb = self.table(symbols)
        if self.kind == "discrete":
            return emb
        if durations is None:
            raise EncodingError("continuous embedding needs durations")
        if isinstance(durations, Tensor):
            d = ops.reshape(durations, durations.shape + (1,))
        else:
            d = Tensor(np.asarray(durations, dtype=emb.dtype)[..., None])
        return ops.concat([emb, d], axis=-1)


class Unembed(nn.Module):
    """Per-position heads: activity log-probabilities and, for continuous
    models, a sigmoid duration."""

    def __init__(self, kind: str, size: int, rng):
        self.kind = kind
        n_classes = N_ACTIVITIES if kind == "discrete" else VOCAB_SIZE
        self.logits = nn.Linear(size, n_classes, rng)
        self.duration = nn.Linear(size, 1, rng) if kind == "continuous" else None

    def forward(self, h: Tensor) -> tuple[Tensor, Tensor | None]:
        log_probs = ops.log_softmax(self.logits(h), axis=-1)
        if self.duration is None:
            return log_probs, None
        d = ops.sigmoid(self.duration(h))
        return log_probs, ops.reshape(d, d.shape[:-1])


def reparameterize(mu: Tensor, logvar: Tensor, eps) -> Tensor:
    """z = mu + exp(0.5 * logvar) * eps."""
    eps = np.asarray(eps, dtype=mu.dtype)
    return ops.add(mu, ops.mul(ops.exp(ops.mul(logvar, 0.5)), eps))


class LatentBlock(nn.Module):
    def __init__(self, n_features: int, latent: int, n_out: int, rng):
        self.to_mu = nn.Linear(n_features, latent, rng)
        self.to_logvar = nn.Linear(n_features, latent, rng)
        self.from_z = nn.Linear(latent, n_out, rng)
        self.latent = latent

    def encode(self, features: Tensor) -> tuple[Tensor, Tensor]:
        return self.to_mu(features), self.to_logvar(features)

    def forward(self, features: Tensor, rng) -> tuple[Tensor, Tensor, Tensor]:
        mu, logvar = self.encode(features)
        z = reparameterize(mu, logvar, rng.standard_normal(mu.shape))
        return z, mu, logvar


def kl_divergence(mu: Tensor, logvar: Tensor) -> Tensor:
    """KL(N(mu, exp(logvar)) || N(0, I)), summed over dims, averaged over batch."""
    mu = mu if isinstance(mu, Tensor) else Tensor(np.asarray(mu, np.float64))
    logvar = logvar if isinstance(logvar, Tensor) else Tensor(np.asarray(logvar, np.float64))
    terms = ops.sub(ops.add(ops.square(mu), ops.exp(logvar)), ops.add(logvar, 1.0))
    per_row = ops.sum(terms, axis=-1) if terms.ndim > 1 else ops.sum(terms)
    return ops.mul(ops.mean(per_row), 0.5)


def loss_discrete(log_probs: Tensor, targets, mu, logvar, beta: float):
    """Returns (total, ce, kl); CE is the mean over all steps of all rows."""
    ce = ops.nll(log_probs, targets)
    kl = kl_divergence(mu, logvar)
    return ops.add(ce, ops.mul(kl, beta)), ce, kl


def loss_continuous(log_probs: Tensor, durations: Tensor, symbols, target_durations,
                    mu, logvar, alpha: float, beta: float):
    """Returns (total, ce, mse, kl) with MSE averaged over all 16 steps."""
    ce = ops.nll(log_probs, symbols)
    target = np.asarray(target_durations, dtype=durations.dtype)
    mse = ops.mean(ops.square(ops.sub(durations, target)))
    kl = kl_divergence(mu, logvar)
    total = ops.add(ops.add(ce, ops.mul(mse, alpha)), ops.mul(kl, beta))
    return total, ce, mse, kl


__all__ = [
    "TokenEmbedding", "Unembed", "LatentBlock", "reparameterize", "kl_divergence",
    "loss_discrete", "loss_continuous", "EOS",
]
