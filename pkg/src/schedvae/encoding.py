"""Schedule <-> model-facing token encodings.

Discrete: one activity id per fixed time bin.
Continuous: ``[SOS, (act, fraction-of-day)..., EOS...]`` padded to 16 tokens.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .schedule import (
    DAY_MINUTES,
    N_ACTIVITIES,
    ActivityType,
    Schedule,
    ScheduleError,
    ScheduleSample,
    round_to_minutes,
)

SOS = N_ACTIVITIES
EOS = N_ACTIVITIES + 1
VOCAB_SIZE = N_ACTIVITIES + 2
MAX_LEN = 16
DEFAULT_STEP = 10


class EncodingError(ValueError):
    pass


class DegenerateOutput(EncodingError):
    """A decoded token sequence holds no activity before its first EOS."""


def check_step(step: int) -> int:
    step = int(step)
    if step <= 0 or DAY_MINUTES % step:
        raise EncodingError(f"step {step} does not divide {DAY_MINUTES}")
    return step


@dataclass(frozen=True)
class DiscreteEncoding:
    tokens: np.ndarray
    step: int = DEFAULT_STEP

    def __post_init__(self):
        check_step(self.step)
        if len(self.tokens) * self.step != DAY_MINUTES:
            raise EncodingError(
                f"{len(self.tokens)} tokens of {self.step} min do not cover the day"
            )
        if len(self.tokens) and (self.tokens.min() < 0 or self.tokens.max() >= N_ACTIVITIES):
            raise EncodingError("discrete tokens must be activity ids 0..7")


@dataclass(frozen=True)
class ContinuousEncoding:
    symbols: np.ndarray
    durations: np.ndarray

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.symbols.tolist(), self.durations.tolist()))


def sample_arrays(schedules: Sequence[Schedule]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flatten schedules into (acts, minutes, offsets) arrays."""
    lengths = np.fromiter((len(s) for s in schedules), dtype=np.int64, count=len(schedules))
    offsets = np.zeros(len(schedules) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    acts = np.fromiter(
        (int(a) for s in schedules for a in s.acts), dtype=np.int64, count=offsets[-1]
    )
    durs = np.fromiter(
        (d for s in schedules for d in s.durations), dtype=np.int64, count=offsets[-1]
    )
    return acts, durs, offsets


def _schedules(sample) -> Sequence[Schedule]:
    return sample.schedules if isinstance(sample, ScheduleSample) else sample


# discrete


def encode_discrete(schedule: Schedule, step: int = DEFAULT_STEP) -> DiscreteEncoding:
    step = check_step(step)
    if schedule.total != DAY_MINUTES:
        raise EncodingError(f"schedule covers {schedule.total} minutes")
    tokens = encode_discrete_batch([schedule], step)[0]
    return DiscreteEncoding(tokens, step)


def encode_discrete_batch(sample, step: int = DEFAULT_STEP) -> np.ndarray:
    acts, durs, offsets = sample_arrays(_schedules(sample))
    return _kernels.encode_bins(acts, durs, offsets, check_step(step))


def decode_discrete(encoding: DiscreteEncoding) -> Schedule:
    return decode_discrete_batch(encoding.tokens[None, :], encoding.step)[0]


def decode_discrete_batch(tokens: np.ndarray, step: int = DEFAULT_STEP) -> list[Schedule]:
    step = check_step(step)
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.ndim != 2 or tokens.shape[1] * step != DAY_MINUTES:
        raise EncodingError(f"token matrix {tokens.shape} does not match step {step}")
    acts, lens, offsets = _kernels.run_lengths(tokens)
    members = list(ActivityType)
    acts = [members[a] for a in acts.tolist()]
    lens = (lens * step).tolist()
    return [
        Schedule(tuple(acts[lo:hi]), tuple(lens[lo:hi]))
        for lo, hi in zip(offsets[:-1].tolist(), offsets[1:].tolist())
    ]


# continuous


def encode_continuous(schedule: Schedule, max_len: int = MAX_LEN) -> ContinuousEncoding:
    if len(schedule) > max_len - 1:
        raise EncodingError(
            f"schedule has {len(schedule)} activities; at most {max_len - 1} fit"
        )
    symbols = np.full(max_len, EOS, dtype=np.int64)
    durations = np.zeros(max_len, dtype=np.float64)
    symbols[0] = SOS
    n = len(schedule)
    symbols[1 : n + 1] = [int(a) for a in schedule.acts]
    durations[1 : n + 1] = np.asarray(schedule.durations, dtype=np.float64) / DAY_MINUTES
    return ContinuousEncoding(symbols, durations)


def encode_continuous_batch(sample, max_len: int = MAX_LEN) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(symbols, durations)`` arrays of shape (n, max_len)."""
    schedules = _schedules(sample)
    acts, durs, offsets = sample_arrays(schedules)
    lengths = np.diff(offsets)
    if len(lengths) and lengths.max() > max_len - 1:
        raise EncodingError(f"a schedule has more than {max_len - 1} activities")
    n = len(schedules)
    symbols = np.full((n, max_len), EOS, dtype=np.int64)
    durations = np.zeros((n, max_len), dtype=np.float64)
    symbols[:, 0] = SOS
    rows = np.repeat(np.arange(n), lengths)
    cols = np.arange(len(acts)) - np.repeat(offsets[:-1], lengths) + 1
    symbols[rows, cols] = acts
    durations[rows, cols] = durs / DAY_MINUTES
    return symbols, durations


def _trim(symbols: np.ndarray, durations: np.ndarray) -> tuple[list[int], list[float]]:
    acts, fracs = [], []
    for s, d in zip(symbols.tolist(), durations.tolist()):
        if s == EOS:
            break
        if s == SOS:
            continue
        acts.append(s)
        fracs.append(max(float(d), 0.0))
    return acts, fracs


def decode_continuous(tokens) -> Schedule:
    """Decode raw (symbol, fraction) tokens that may come straight from a model.

    SOS tokens are dropped, everything from the first EOS on is ignored, and
    the remaining durations are renormalised to one day before rounding.
    """
    if isinstance(tokens, ContinuousEncoding):
        symbols, durations = tokens.symbols, tokens.durations
    else:
        symbols = np.asarray([t[0] for t in tokens], dtype=np.int64)
        durations = np.asarray([t[1] for t in tokens], dtype=np.float64)
    acts, fracs = _trim(symbols, durations)
    if not acts:
        raise DegenerateOutput("no activity precedes the first EOS")
    total = sum(fracs)
    if total <= 0:
        raise DegenerateOutput("activity durations sum to zero")
    return round_to_minutes([(a, f / total) for a, f in zip(acts, fracs)])


def decode_continuous_batch(
    symbols: np.ndarray, durations: np.ndarray
) -> tuple[list[Schedule | None], int]:
    """Batch decode; degenerate rows come back as ``None`` and are counted."""
    symbols = np.asarray(symbols, dtype=np.int64)
    durations = np.clip(np.asarray(durations, dtype=np.float64), 0.0, None)
    n, length = symbols.shape
    is_eos = symbols == EOS
    first_eos = np.where(is_eos.any(axis=1), is_eos.argmax(axis=1), length)
    valid = (np.arange(length)[None, :] < first_eos[:, None]) & (symbols != SOS)
    counts = valid.sum(axis=1)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    acts = symbols[valid]
    fracs = durations[valid]
    minutes = _kernels.largest_remainder_batch(fracs, offsets, DAY_MINUTES)
    members = list(ActivityType)
    out: list[Schedule | None] = []
    degenerate = 0
    acts_l, mins_l, fr_l = acts.tolist(), minutes.tolist(), fracs.tolist()
    for lo, hi in zip(offsets[:-1].tolist(), offsets[1:].tolist()):
        if hi == lo or sum(fr_l[lo:hi]) <= 0:
            out.append(None)
            degenerate += 1
            continue
        kept = [(members[a], m) for a, m in zip(acts_l[lo:hi], mins_l[lo:hi]) if m > 0]
        if not kept:
            out.append(None)
            degenerate += 1
            continue
        out.append(Schedule(tuple(a for a, _ in kept), tuple(m for _, m in kept)))
    return out, degenerate


__all__ = [
    "SOS",
    "EOS",
    "VOCAB_SIZE",
    "MAX_LEN",
    "DEFAULT_STEP",
    "EncodingError",
    "DegenerateOutput",
    "ScheduleError",
    "DiscreteEncoding",
    "ContinuousEncoding",
    "encode_discrete",
    "encode_discrete_batch",
    "decode_discrete",
    "decode_discrete_batch",
    "encode_continuous",
    "encode_continuous_batch",
    "decode_continuous",
    "decode_continuous_batch",
    "sample_arrays",
]
