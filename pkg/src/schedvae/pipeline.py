"""Training loop with plateau stopping, and synthetic-sample generation."""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encoding import decode_continuous_batch, decode_discrete_batch, encode_continuous_batch, encode_discrete_batch
from .schedule import ScheduleSample
from .tensor import Adam, Tape, clip_grad_norm
from .tensor.rng import stream
from .vae import Batch, CheckpointMismatch, ModelConfig, VaeModel

CLIP_NORM = 5.0
EVAL_CHUNK = 4096
COMPONENTS = ("total", "ce", "mse", "kl")


class DivergenceError(FloatingPointError):
    """Training produced a non-finite loss or gradient."""


def to_batch(sample, config: ModelConfig) -> Batch:
    if config.kind == "discrete":
        return Batch(encode_discrete_batch(sample, config.step))
    symbols, durations = encode_continuous_batch(sample, config.max_len)
    return Batch(symbols, durations)


@dataclass
class EpochRecord:
    epoch: int
    train: dict
    val: dict
    seconds: float


@dataclass
class TrainReport:
    config: ModelConfig
    seed: int
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_val: float = float("inf")
    stop_reason: str = ""
    steps: int = 0
    wall_clock: float = 0.0
    checkpoint: str = ""

    def to_csv(self, timings: bool = False) -> str:
        """Per-epoch loss table; wall-clock columns only when ``timings``."""
        buf = io.StringIO()
        cols = ["epoch"] + [f"train_{c}" for c in COMPONENTS] + [f"val_{c}" for c in COMPONENTS]
        buf.write(",".join(cols + (["seconds"] if timings else [])) + "\n")
        for r in self.epochs:
            row = [str(r.epoch)]
            row += [f"{r.train[c]:.6g}" for c in COMPONENTS]
            row += [f"{r.val[c]:.6g}" for c in COMPONENTS]
            if timings:
                row.append(f"{r.seconds:.3f}")
            buf.write(",".join(row) + "\n")
        return buf.getvalue()


def evaluate_loss(model: VaeModel, batch: Batch, chunk: int = EVAL_CHUNK) -> dict:
    """Eval-mode loss components averaged over ``batch`` (z = mu, no dropout)."""
    was = model.training
    model.eval()
    sums = dict.fromkeys(COMPONENTS, 0.0)
    try:
        for lo in range(0, len(batch), chunk):
            part = batch.take(slice(lo, lo + chunk))
            _, comps = model.loss(part)
            for k in COMPONENTS:
                sums[k] += comps[k] * len(part)
    finally:
        model.train(was)
    return {k: v / len(batch) for k, v in sums.items()}


def _check_finite(value: float, what: str, epoch: int, step: int) -> None:
    if not np.isfinite(value):
        raise DivergenceError(f"{what} became non-finite ({value}) at epoch {epoch}, step {step}")


def train_step(model: VaeModel, opt: Adam, batch: Batch) -> dict:
    opt.zero_grad()
    with Tape() as tape:
        total, parts = model.loss(batch)
    tape.backward(total)
    if model.config.arch == "RNN":
        parts["grad_norm"] = clip_grad_norm(model.parameters(), CLIP_NORM)
    opt.step()
    return parts


def train(
    config: ModelConfig,
    train_sample,
    val_sample,
    seed: int = 0,
    *,
    patience: int = 10,
    min_delta: float = 1e-4,
    max_epochs: int = 200,
    max_seconds: float | None = None,
    log=None,
) -> tuple[VaeModel, TrainReport]:
    """Fit a model, stopping once validation loss stops improving.

    The returned model carries the weights of the best validation epoch.
    ``max_seconds`` also stops after the first epoch that ends past the
    budget; being wall-clock based, it makes the epoch count machine
    dependent, so seeded experiments leave it unset.
    """
    if len(train_sample) == 0 or len(val_sample) == 0:
        raise ValueError("training and validation samples must be non-empty")
    started = time.perf_counter()
    model = VaeModel(config, seed)
    opt = Adam(model.parameters(), lr=config.lr)
    shuffle = stream(seed, "shuffle")
    data = to_batch(train_sample, config)
    val = to_batch(val_sample, config)
    report = TrainReport(config, seed)
    best_state = None
    stale = 0
    for epoch in range(max_epochs):
        t0 = time.perf_counter()
        model.train()
        order = shuffle.permutation(len(data))
        sums = dict.fromkeys(COMPONENTS, 0.0)
        for lo in range(0, len(order), config.batch_size):
            batch = data.take(order[lo : lo + config.batch_size])
            parts = train_step(model, opt, batch)
            report.steps += 1
            _check_finite(parts["total"], "training loss", epoch, report.steps)
            _check_finite(parts.get("grad_norm", 0.0), "gradient norm", epoch, report.steps)
            for k in COMPONENTS:
                sums[k] += parts[k] * len(batch)
        tr = {k: v / len(data) for k, v in sums.items()}
        vl = evaluate_loss(model, val)
        _check_finite(vl["total"], "validation loss", epoch, report.steps)
        report.epochs.append(EpochRecord(epoch, tr, vl, time.perf_counter() - t0))
        if log is not None:
            log(f"epoch {epoch}: train {tr['total']:.4f} val {vl['total']:.4f}")
        if vl["total"] < report.best_val - min_delta:
            report.best_val = vl["total"]
            report.best_epoch = epoch
            best_state = {k: v.copy() for k, v in model.state_dict().items()}
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                report.stop_reason = f"plateau after {patience} epochs"
                break
        if max_seconds is not None and time.perf_counter() - started > max_seconds:
            report.stop_reason = f"time budget {max_seconds:g}s"
            break
    else:
        report.stop_reason = f"reached {max_epochs} epochs"
    if best_state is not None:
        model.load_state_dict(best_state)
    report.wall_clock = time.perf_counter() - started
    return model.eval(), report


# generation


@dataclass
class Generated:
    sample: ScheduleSample
    requested: int
    degenerate: int


def generate(model, n: int, seed: int = 0, *, config: ModelConfig | None = None,
             chunk: int = EVAL_CHUNK) -> Generated:
    """Decode ``n`` independent latent draws into schedules.

    ``model`` is a VaeModel or a checkpoint path. Draws that decode to no
    activity are counted in ``degenerate`` and not replaced.
    """
    if n < 1:
        raise ValueError("generation count must be at least 1")
    if not isinstance(model, VaeModel):
        model = VaeModel.load(Path(model), config)
    elif config is not None and model.config != config:
        raise CheckpointMismatch("model config differs from the requested config")
    cfg = model.config
    z = stream(seed, "latent").standard_normal((n, cfg.latent)).astype(np.float32)
    schedules = []
    degenerate = 0
    for lo in range(0, n, chunk):
        out = model.sample(z[lo : lo + chunk])
        if cfg.kind == "discrete":
            schedules.extend(decode_discrete_batch(out.symbols, cfg.step))
        else:
            decoded, bad = decode_continuous_batch(out.symbols, out.durations)
            degenerate += bad
            schedules.extend(s for s in decoded if s is not None)
    sample = ScheduleSample(tuple(schedules), "synthetic", seed, cfg.name or cfg.arch)
    return Generated(sample, n, degenerate)
