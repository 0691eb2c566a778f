"""The assembled VAE and its checkpoint format."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..encoding import EOS, N_ACTIVITIES, SOS
from ..tensor import Tensor, checkpoint, nn, ops
from ..tensor.rng import stream
from .blocks import DECODERS, ENCODERS
from .config import ModelConfig
from .heads import LatentBlock, TokenEmbedding, Unembed, loss_continuous, loss_discrete

DISCRETE_START = N_ACTIVITIES


class CheckpointMismatch(ValueError):
    """A checkpoint does not fit the model it is loaded into."""


@dataclass
class Batch:
    """Model-facing arrays; ``durations`` is None for discrete models."""

    symbols: np.ndarray
    durations: np.ndarray | None = None

    def __len__(self):
        return len(self.symbols)

    def take(self, index) -> "Batch":
        d = None if self.durations is None else self.durations[index]
        return Batch(self.symbols[index], d)


@dataclass
class Output:
    log_probs: Tensor
    durations: Tensor | None
    mu: Tensor
    logvar: Tensor


def end_positions(symbols: np.ndarray) -> np.ndarray:
    """Index of each row's first EOS, or the last position if it has none."""
    symbols = np.asarray(symbols)
    is_eos = symbols == EOS
    return np.where(is_eos.any(axis=1), is_eos.argmax(axis=1), symbols.shape[1] - 1)


class VaeModel(nn.Module):
    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        init = stream(seed, "init")
        drop = stream(seed, "dropout")
        self.noise = stream(seed, "latent")
        self.coin = stream(seed, "teacher")
        c = config
        L, S, N = c.seq_len, c.block_size, c.n_blocks
        self.embed = TokenEmbedding(c.kind, S, init)
        self.encoder = ENCODERS[c.arch](L, S, N, c.dropout, init, drop)
        self.decoder = DECODERS[c.arch](L, S, N, c.dropout, init, drop)
        self.latent = LatentBlock(self.encoder.n_features, c.latent, self.decoder.n_in, init)
        self.unembed = Unembed(c.kind, S, init)

    @property
    def continuous(self) -> bool:
        return self.config.kind == "continuous"

    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def _start(self) -> int:
        return SOS if self.continuous else DISCRETE_START

    def decode(self, z: Tensor, targets: Batch | None = None) -> tuple[Tensor, Tensor | None]:
        h = self.latent.from_z(z)
        if self.config.arch == "RNN":
            tf = None
            if targets is not None and self.training:
                tf = (targets.symbols, targets.durations)
            return self.decoder(
                h, self.embed, self.unembed, self._start(),
                targets=tf, ratio=self.config.teacher_forcing, coin=self.coin,
            )
        return self.unembed(self.decoder(h))

    def forward(self, batch: Batch) -> Output:
        x = self.embed(batch.symbols, batch.durations)
        if self.config.arch == "RNN" and self.continuous:
            feats = self.encoder(x, last=end_positions(batch.symbols))
        else:
            feats = self.encoder(x)
        if self.training:
            z, mu, logvar = self.latent(feats, self.noise)
        else:
            mu, logvar = self.latent.encode(feats)
            z = mu
        lp, d = self.decode(z, batch)
        return Output(lp, d, mu, logvar)

    def loss(self, batch: Batch, out: Output | None = None):
        """Returns the scalar loss and a dict of float components."""
        out = out if out is not None else self(batch)
        c = self.config
        if self.continuous:
            total, ce, mse, kl = loss_continuous(
                out.log_probs, out.durations, batch.symbols, batch.durations,
                out.mu, out.logvar, c.alpha, c.beta,
            )
            parts = {"ce": ce.item(), "mse": mse.item(), "kl": kl.item()}
        else:
            total, ce, kl = loss_discrete(out.log_probs, batch.symbols, out.mu, out.logvar, c.beta)
            parts = {"ce": ce.item(), "mse": 0.0, "kl": kl.item()}
        parts["total"] = total.item()
        return total, parts

    def sample(self, z: np.ndarray) -> Batch:
        """Decode latent vectors to argmax symbols (and durations); eval mode."""
        was = self.training
        self.eval()
        try:
            lp, d = self.decode(Tensor(np.asarray(z, dtype=np.float32)))
        finally:
            self.train(was)
        symbols = lp.data.argmax(axis=-1)
        return Batch(symbols, None if d is None else d.data.astype(np.float64))

    # persistence

    def save(self, path: str | Path) -> None:
        checkpoint.save(path, self.state_dict(), meta=self.config.to_text())

    @classmethod
    def load(cls, path: str | Path, config: ModelConfig | None = None) -> "VaeModel":
        tensors, meta = checkpoint.load(path)
        stored = ModelConfig.from_text(meta)
        if config is not None and config != stored:
            raise CheckpointMismatch(f"checkpoint holds {stored.name or stored}, expected {config.name or config}")
        model = cls(stored, seed=0)
        try:
            model.load_state_dict(tensors)
        except (KeyError, ValueError) as e:
            raise CheckpointMismatch(str(e)) from None
        return model.eval()
