"""Canonical 24-hour activity schedule representation.

Time is held internally as integer minutes; fractions of a day only appear at
the encoding and reporting boundaries.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DAY_MINUTES = 1440


class ActivityType(enum.IntEnum):
    HOME = 0
    WORK = 1
    EDUCATION = 2
    MEDICAL = 3
    ESCORT = 4
    OTHER = 5
    VISIT = 6
    SHOP = 7

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, label: "str | int | ActivityType") -> "ActivityType":
        if isinstance(label, ActivityType):
            return label
        if isinstance(label, (int, np.integer)):
            return cls(int(label))
        try:
            return cls[label.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown activity label {label!r}") from None


N_ACTIVITIES = len(ActivityType)
RESTRICTED_CONSECUTIVE = frozenset(
    {ActivityType.HOME, ActivityType.WORK, ActivityType.EDUCATION}
)


class ScheduleError(ValueError):
    """Raised when a schedule cannot be built or converted."""


@dataclass(frozen=True)
class Schedule:
    """Ordered (activity, minutes) entries.

    Construction does not enforce the 1440-minute total so that malformed
    schedules can still be inspected with :func:`validate`.
    """

    acts: tuple[ActivityType, ...]
    durations: tuple[int, ...]

    def __post_init__(self):
        if len(self.acts) != len(self.durations):
            raise ScheduleError("acts and durations differ in length")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple["str | int | ActivityType", int]]) -> "Schedule":
        acts, durs = [], []
        for act, dur in pairs:
            acts.append(ActivityType.parse(act))
            durs.append(int(dur))
        return cls(tuple(acts), tuple(durs))

    def __len__(self) -> int:
        return len(self.acts)

    def __iter__(self):
        return iter(zip(self.acts, self.durations))

    @property
    def starts(self) -> tuple[int, ...]:
        out, t = [], 0
        for d in self.durations:
            out.append(t)
            t += d
        return tuple(out)

    @property
    def total(self) -> int:
        return sum(self.durations)

    def key(self) -> tuple:
        """Hashable identity at one-minute precision."""
        return (tuple(int(a) for a in self.acts), self.durations)

    def __str__(self) -> str:
        return "-".join(f"{a.label}({d})" for a, d in self)


@dataclass(frozen=True)
class ScheduleSample:
    schedules: tuple[Schedule, ...]
    kind: str = "real"
    seed: int | None = None
    source: str = ""
    pids: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("real", "synthetic"):
            raise ValueError(f"sample kind must be real or synthetic, got {self.kind!r}")
        if self.pids is not None and len(self.pids) != len(self.schedules):
            raise ValueError("pids and schedules differ in length")

    def __len__(self) -> int:
        return len(self.schedules)

    def __iter__(self):
        return iter(self.schedules)

    def __getitem__(self, i):
        return self.schedules[i]

    def ids(self) -> tuple[str, ...]:
        if self.pids is not None:
            return self.pids
        return tuple(str(i) for i in range(len(self.schedules)))

    def subset(self, index: Sequence[int]) -> "ScheduleSample":
        ids = self.ids()
        pids = tuple(ids[i] for i in index)
        return ScheduleSample(
            tuple(self.schedules[i] for i in index), self.kind, self.seed, self.source, pids
        )


def validate(schedule: Schedule) -> str | None:
    """Return ``None`` if the schedule is valid, else the first violated rule."""
    if len(schedule) == 0:
        return "empty schedule"
    for d in schedule.durations:
        if d < 0:
            return f"negative duration {d}"
    total = schedule.total
    if total != DAY_MINUTES:
        return f"duration-sum {total} ≠ {DAY_MINUTES}"
    return None


def is_valid(schedule: Schedule) -> bool:
    return validate(schedule) is None


def is_home_based(schedule: Schedule) -> bool:
    return (
        len(schedule) > 0
        and schedule.acts[0] == ActivityType.HOME
        and schedule.acts[-1] == ActivityType.HOME
    )


def has_forbidden_consecutive(
    schedule: Schedule, types: frozenset = RESTRICTED_CONSECUTIVE
) -> bool:
    acts = schedule.acts
    return any(a == b and a in types for a, b in zip(acts, acts[1:]))


def merge_consecutive(
    schedule: Schedule, types: Iterable = RESTRICTED_CONSECUTIVE
) -> Schedule:
    types = frozenset(ActivityType.parse(t) for t in types)
    acts: list[ActivityType] = []
    durs: list[int] = []
    for a, d in schedule:
        if acts and acts[-1] == a and a in types:
            durs[-1] += d
        else:
            acts.append(a)
            durs.append(d)
    return Schedule(tuple(acts), tuple(durs))


def largest_remainder(fractions: Sequence[float], total: int = DAY_MINUTES) -> list[int]:
    """Apportion ``total`` proportionally to ``fractions``.

    Remainder units go to the largest fractional parts; ties go to the earliest
    entry. Fractions are normalised first, so their sum only needs to be
    positive.
    """
    w = np.asarray(fractions, dtype=np.float64)
    s = w.sum()
    if not np.isfinite(s) or s <= 0:
        raise ScheduleError("fractions must have a positive finite sum")
    exact = w / s * total
    base = np.floor(exact).astype(np.int64)
    rem = exact - base
    short = total - int(base.sum())
    if short > 0:
        # stable sort on -rem keeps earliest index first among ties
        order = np.argsort(-rem, kind="stable")
        base[order[:short]] += 1
    return base.tolist()


def round_to_minutes(
    pairs: Sequence[tuple["str | int | ActivityType", float]],
    *,
    strict: bool = False,
    tol: float = 1e-6,
) -> Schedule:
    """Convert (activity, fraction-of-day) pairs into an integer-minute schedule.

    Entries that round to zero minutes are dropped unless ``strict`` is set, in
    which case a :class:`ScheduleError` is raised instead.
    """
    if not pairs:
        raise ScheduleError("empty schedule")
    acts = [ActivityType.parse(a) for a, _ in pairs]
    fracs = [float(f) for _, f in pairs]
    if any(f < 0 for f in fracs):
        raise ScheduleError("negative duration fraction")
    if abs(sum(fracs) - 1.0) > tol:
        raise ScheduleError(f"fractions sum to {sum(fracs)!r}, expected 1")
    minutes = largest_remainder(fracs)
    kept = [(a, m) for a, m in zip(acts, minutes) if m > 0]
    if len(kept) != len(acts) and strict:
        raise ScheduleError("an activity rounded to zero minutes")
    if not kept:
        raise ScheduleError("all activities rounded to zero minutes")
    return Schedule(tuple(a for a, _ in kept), tuple(m for _, m in kept))
