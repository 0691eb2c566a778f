"""Line-oriented schedule sample files.

Each data line is ``pid;act0:dur0,act1:dur1,...`` with integer minute
durations. Provenance is kept in ``#`` header lines as ``key=value`` pairs.
"""

from __future__ import annotations

import os
from pathlib import Path

from .schedule import ActivityType, Schedule, ScheduleError, ScheduleSample, validate


class SampleFileError(ValueError):
    pass


def format_schedule(schedule: Schedule) -> str:
    return ",".join(f"{a.label}:{d}" for a, d in schedule)


def parse_schedule(text: str) -> Schedule:
    pairs = []
    for token in text.split(","):
        act, sep, dur = token.partition(":")
        if not sep:
            raise SampleFileError(f"bad entry {token!r}")
        pairs.append((ActivityType.parse(act), int(dur)))
    return Schedule.from_pairs(pairs)


def write_sample(sample: ScheduleSample, path: "str | os.PathLike") -> None:
    lines = [f"# kind={sample.kind}"]
    if sample.seed is not None:
        lines.append(f"# seed={sample.seed}")
    if sample.source:
        lines.append(f"# source={sample.source}")
    for pid, s in zip(sample.ids(), sample.schedules):
        lines.append(f"{pid};{format_schedule(s)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_sample(path: "str | os.PathLike", *, check: bool = True) -> ScheduleSample:
    meta = {"kind": "real", "seed": None, "source": ""}
    pids, schedules = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].strip().partition("=")
                if sep and key in meta:
                    meta[key] = value.strip()
                continue
            pid, sep, body = line.partition(";")
            if not sep:
                raise SampleFileError(f"{path}:{lineno}: missing ';' separator")
            try:
                s = parse_schedule(body)
            except (ValueError, ScheduleError) as exc:
                raise SampleFileError(f"{path}:{lineno}: {exc}") from None
            if check and (err := validate(s)) is not None:
                raise SampleFileError(f"{path}:{lineno}: {err}")
            pids.append(pid)
            schedules.append(s)
    seed = None if meta["seed"] in (None, "", "None") else int(meta["seed"])
    return ScheduleSample(tuple(schedules), meta["kind"], seed, meta["source"], tuple(pids))
