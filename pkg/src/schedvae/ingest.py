"""Travel diary rows to cleaned schedule samples."""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass
from itertools import groupby
from typing import Iterable, Sequence

import numpy as np

from .schedule import (
    DAY_MINUTES,
    RESTRICTED_CONSECUTIVE,
    ActivityType,
    Schedule,
    ScheduleSample,
    is_home_based,
    merge_consecutive,
)

log = logging.getLogger(__name__)

DIARY_COLUMNS = ("pid", "day", "act", "start_min", "end_min", "trip_min")


class IngestError(ValueError):
    pass


class TilingError(IngestError):
    """Activities and trips do not exactly cover the day."""


@dataclass(frozen=True)
class DiaryRow:
    pid: str
    day: str
    act: str
    start: int
    end: int
    trip: int = 0


class LabelMap(dict):
    """Raw diary label -> canonical :class:`ActivityType`."""

    def lookup(self, raw: str) -> ActivityType:
        try:
            return self[raw]
        except KeyError:
            raise IngestError(f"label {raw!r} missing from label map") from None

    @classmethod
    def identity(cls) -> "LabelMap":
        return cls({a.label: a for a in ActivityType})


def read_labelmap(path: "str | os.PathLike") -> LabelMap:
    """Two-column CSV ``raw,canonical``; a header row is optional."""
    out = LabelMap()
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            raw, canon = row[0].strip(), row[1].strip()
            if (raw, canon) == ("raw", "canonical"):
                continue
            out[raw] = ActivityType.parse(canon)
    return out


def read_diaries(path: "str | os.PathLike") -> list[DiaryRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(DIARY_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise IngestError(f"diary file lacks columns {sorted(missing)}")
        for rec in reader:
            trip = rec["trip_min"].strip()
            rows.append(
                DiaryRow(
                    rec["pid"],
                    rec["day"],
                    rec["act"].strip(),
                    int(float(rec["start_min"])),
                    int(float(rec["end_min"])),
                    int(float(trip)) if trip else 0,
                )
            )
    return rows


def absorb_trips(rows: Sequence[DiaryRow], labels: LabelMap | None = None) -> Schedule:
    """Fold each trip into the activity before it.

    Start times are preserved; a trip after the final activity extends that
    activity.
    """
    labels = labels or LabelMap.identity()
    if not rows:
        raise TilingError("no rows")
    rows = sorted(rows, key=lambda r: r.start)
    expected = 0
    acts, durs = [], []
    for r in rows:
        if not (0 <= r.start <= r.end <= DAY_MINUTES) or r.trip < 0:
            raise TilingError(f"row out of range: {r}")
        if r.start != expected:
            kind = "gap" if r.start > expected else "overlap"
            raise TilingError(f"{kind} at minute {min(r.start, expected)}")
        acts.append(labels.lookup(r.act))
        durs.append(r.end - r.start + r.trip)
        expected = r.end + r.trip
    if expected != DAY_MINUTES:
        raise TilingError(f"day ends at minute {expected}")
    return Schedule(tuple(acts), tuple(durs))


def diaries_to_sample(
    rows: Iterable[DiaryRow], labels: LabelMap | None = None, source: str = ""
) -> tuple[ScheduleSample, int]:
    """Convert all person-days; returns the sample and the count of dropped days."""
    ordered = sorted(rows, key=lambda r: (r.pid, r.day, r.start))
    pids, schedules, dropped = [], [], 0
    for (pid, day), group in groupby(ordered, key=lambda r: (r.pid, r.day)):
        try:
            schedules.append(absorb_trips(list(group), labels))
        except TilingError as exc:
            dropped += 1
            log.debug("dropping %s/%s: %s", pid, day, exc)
            continue
        pids.append(f"{pid}:{day}")
    if dropped:
        log.info("dropped %d person-days that do not tile the day", dropped)
    return ScheduleSample(tuple(schedules), "real", None, source, tuple(pids)), dropped


@dataclass(frozen=True)
class CleanReport:
    n_in: int
    dropped: int
    merged: int


def clean(sample: ScheduleSample) -> tuple[ScheduleSample, CleanReport]:
    """Drop non-home-based schedules and merge consecutive home/work/education."""
    keep, pids, dropped, merged = [], [], 0, 0
    for pid, s in zip(sample.ids(), sample.schedules):
        if not is_home_based(s):
            dropped += 1
            continue
        m = merge_consecutive(s, RESTRICTED_CONSECUTIVE)
        merged += len(m) != len(s)
        keep.append(m)
        pids.append(pid)
    out = ScheduleSample(tuple(keep), sample.kind, sample.seed, sample.source, tuple(pids))
    return out, CleanReport(len(sample), dropped, merged)


def split_train_val(
    sample: ScheduleSample, fraction: float = 0.9, seed: int = 0
) -> tuple[ScheduleSample, ScheduleSample]:
    n = len(sample)
    if n < 10:
        raise IngestError(f"sample of {n} schedules is too small to split")
    n_train = math.floor(fraction * n)
    perm = np.random.default_rng(seed).permutation(n)
    return sample.subset(perm[:n_train].tolist()), sample.subset(perm[n_train:].tolist())
