"""Marginal distributions extracted from a schedule sample.

Every extractor returns a mapping from segment name to a distribution, and
each distribution keeps the raw observations it was built from so that
descriptive means are computed before binning.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from ..schedule import DAY_MINUTES, ActivityType, Schedule

N_TIME_BINS = 288
BIN_DAYS = 1.0 / N_TIME_BINS

LABELS = [a.label for a in ActivityType]


@dataclass(frozen=True)
class RateDistribution:
    """Per-schedule occurrence counts; ``masses[k]`` = P(count == k)."""

    counts: np.ndarray

    @property
    def masses(self) -> np.ndarray:
        if len(self.counts) == 0:
            return np.ones(1)
        return np.bincount(self.counts) / len(self.counts)

    @property
    def total(self) -> int:
        """Occurrences summed over schedules; the segment frequency."""
        return int(self.counts.sum())

    def mean(self) -> float:
        return float(self.counts.mean()) if len(self.counts) else 0.0


@dataclass(frozen=True)
class TimeDistribution:
    """Times in days, binned into 288 five-minute bins."""

    values: np.ndarray

    @property
    def masses(self) -> np.ndarray:
        return _bin1(self.values)

    @property
    def total(self) -> int:
        return len(self.values)

    def mean(self) -> float:
        return float(self.values.mean()) if len(self.values) else 0.0


@dataclass(frozen=True)
class BivariateTimeDistribution:
    """Pairs of times in days over a 288 x 288 grid."""

    values: np.ndarray  # (n, 2)

    @property
    def masses(self) -> np.ndarray:
        if len(self.values) == 0:
            return np.zeros((N_TIME_BINS, N_TIME_BINS))
        idx = _bin_index(self.values)
        flat = np.bincount(idx[:, 0] * N_TIME_BINS + idx[:, 1], minlength=N_TIME_BINS**2)
        return (flat / len(self.values)).reshape(N_TIME_BINS, N_TIME_BINS)

    @property
    def total(self) -> int:
        return len(self.values)

    def mean(self) -> float:
        """Mean of the coordinate sum, i.e. the typical combined time."""
        return float(self.values.sum(axis=1).mean()) if len(self.values) else 0.0


def _bin_index(days: np.ndarray) -> np.ndarray:
    return np.clip((np.asarray(days) * N_TIME_BINS).astype(np.int64), 0, N_TIME_BINS - 1)


def _bin1(days: np.ndarray) -> np.ndarray:
    if len(days) == 0:
        return np.zeros(N_TIME_BINS)
    return np.bincount(_bin_index(days), minlength=N_TIME_BINS) / len(days)


def _type_counts(sample) -> np.ndarray:
    """(n, 8) matrix of per-schedule activity-type counts."""
    out = np.zeros((len(sample), len(LABELS)), dtype=np.int64)
    for i, s in enumerate(sample):
        for a in s.acts:
            out[i, int(a)] += 1
    return out


def sequence_lengths(sample) -> RateDistribution:
    return RateDistribution(np.fromiter((len(s) for s in sample), dtype=np.int64, count=len(sample)))


def participation_rates(sample) -> dict[str, RateDistribution]:
    counts = _type_counts(sample)
    return {label: RateDistribution(counts[:, k]) for k, label in enumerate(LABELS)}


def pair_participation_rates(sample) -> dict[str, RateDistribution]:
    """Unordered type pairs; n_a * n_b for distinct types, C(n_a, 2) otherwise."""
    counts = _type_counts(sample)
    out = {}
    for a, b in combinations_with_replacement(range(len(LABELS)), 2):
        if a == b:
            c = counts[:, a] * (counts[:, a] - 1) // 2
        else:
            c = counts[:, a] * counts[:, b]
        out[f"{LABELS[a]}+{LABELS[b]}"] = RateDistribution(c)
    return out


def ngram_rates(sample, n: int) -> dict[str, RateDistribution]:
    """Consecutive type n-grams, keyed like ``home>work>home``."""
    per: list[Counter] = []
    seen: set = set()
    for s in sample:
        acts = [int(a) for a in s.acts]
        c = Counter(tuple(acts[i : i + n]) for i in range(len(acts) - n + 1))
        per.append(c)
        seen.update(c)
    out = {}
    for gram in sorted(seen):
        counts = np.fromiter((c.get(gram, 0) for c in per), dtype=np.int64, count=len(per))
        out[">".join(LABELS[g] for g in gram)] = RateDistribution(counts)
    return out


def enumerate_activities(schedule: Schedule) -> list[str]:
    """``home0, work0, home1, ...``: type plus count of earlier same-type entries."""
    seen: Counter = Counter()
    out = []
    for a in schedule.acts:
        out.append(f"{a.label}{seen[a]}")
        seen[a] += 1
    return out


@dataclass(frozen=True)
class Timings:
    starts: dict[str, TimeDistribution]
    durations: dict[str, TimeDistribution]
    start_durations: dict[str, BivariateTimeDistribution]
    joint_durations: dict[str, BivariateTimeDistribution]


def timing_distributions(sample) -> Timings:
    starts, durs = defaultdict(list), defaultdict(list)
    start_dur, joint = defaultdict(list), defaultdict(list)
    for s in sample:
        names = enumerate_activities(s)
        t = 0
        d_days = [d / DAY_MINUTES for d in s.durations]
        for k, (name, a, d) in enumerate(zip(names, s.acts, d_days)):
            st = t / DAY_MINUTES
            starts[name].append(st)
            durs[name].append(d)
            start_dur[a.label].append((st, d))
            if k + 1 < len(d_days):
                joint[f"{a.label}-"].append((d, d_days[k + 1]))
            t += s.durations[k]

    def one(m):
        return {k: TimeDistribution(np.asarray(v, dtype=np.float64)) for k, v in sorted(m.items())}

    def two(m):
        return {
            k: BivariateTimeDistribution(np.asarray(v, dtype=np.float64).reshape(-1, 2))
            for k, v in sorted(m.items())
        }

    return Timings(one(starts), one(durs), two(start_dur), two(joint))
