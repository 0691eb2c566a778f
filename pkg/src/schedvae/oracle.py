"""Ground-truth schedule grammar and reference implementations for tests."""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize, stats

from . import _kernels
from .schedule import (
    DAY_MINUTES,
    ActivityType,
    Schedule,
    ScheduleSample,
    has_forbidden_consecutive,
    is_home_based,
)
from .tensor.rng import stream

DEFAULT_SPEC = Path(__file__).parent / "presets" / "oracle.cfg"


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class Slot:
    act: ActivityType
    mean: float
    sd: float


@dataclass(frozen=True)
class Template:
    name: str
    weight: float
    slots: tuple[Slot, ...]

    @property
    def acts(self) -> tuple[ActivityType, ...]:
        return tuple(s.act for s in self.slots)


@dataclass(frozen=True)
class GrammarSpec:
    templates: tuple[Template, ...]
    min_minutes: float = 10.0
    max_minutes: float = DAY_MINUTES

    def __post_init__(self):
        if not self.templates:
            raise GrammarError("grammar has no templates")
        w = np.array([t.weight for t in self.templates])
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise GrammarError(f"template weights must be non-negative and sum to 1, got {w.sum()}")
        if not 0 < self.min_minutes < self.max_minutes:
            raise GrammarError("need 0 < min_minutes < max_minutes")
        for t in self.templates:
            probe = Schedule(t.acts, (1,) * len(t.acts))
            if not is_home_based(probe) or has_forbidden_consecutive(probe):
                raise GrammarError(f"template {t.name} is not home-based or repeats home/work/education")
            worst = self.min_minutes / (len(t.slots) * self.max_minutes) * DAY_MINUTES
            if worst < 1:
                raise GrammarError(f"template {t.name} could round a slot to zero minutes")

    @property
    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.templates])

    @classmethod
    def from_text(cls, text: str) -> "GrammarSpec":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        cp.read_string(text)
        g = cp["grammar"] if "grammar" in cp else {}
        templates = []
        for section in cp.sections():
            if not section.startswith("template "):
                continue
            body = cp[section]
            try:
                slots = tuple(_slot(s) for s in body["slots"].split(";") if s.strip())
                templates.append(Template(section[9:].strip(), float(body["weight"]), slots))
            except (KeyError, ValueError) as e:
                raise GrammarError(f"[{section}]: {e}") from None
        return cls(
            tuple(templates),
            float(g.get("min_minutes", 10)),
            float(g.get("max_minutes", DAY_MINUTES)),
        )

    @classmethod
    def load(cls, path: str | Path = DEFAULT_SPEC) -> "GrammarSpec":
        return cls.from_text(Path(path).read_text())


def _slot(text: str) -> Slot:
    parts = text.split()
    if len(parts) != 3:
        raise ValueError(f"slot {text!r} must be 'activity mean sd'")
    return Slot(ActivityType.parse(parts[0]), float(parts[1]), float(parts[2]))


def _draw_minutes(spec: GrammarSpec, template: Template, n: int, rng) -> np.ndarray:
    cols = []
    for s in template.slots:
        if s.sd == 0:
            cols.append(np.full(n, float(np.clip(s.mean, spec.min_minutes, spec.max_minutes))))
            continue
        a = (spec.min_minutes - s.mean) / s.sd
        b = (spec.max_minutes - s.mean) / s.sd
        cols.append(stats.truncnorm.rvs(a, b, loc=s.mean, scale=s.sd, size=n, random_state=rng))
    return np.stack(cols, axis=1)


def draw_sample(spec: GrammarSpec, n: int, seed: int = 0) -> ScheduleSample:
    """``n`` i.i.d. schedules; slot durations are scaled to fill the day."""
    rng = stream(seed, "oracle")
    choice = rng.choice(len(spec.templates), size=n, p=spec.weights)
    rows: list[Schedule | None] = [None] * n
    members = list(ActivityType)
    for k, template in enumerate(spec.templates):
        idx = np.flatnonzero(choice == k)
        if not len(idx):
            continue
        raw = _draw_minutes(spec, template, len(idx), rng)
        fracs = raw / raw.sum(axis=1, keepdims=True)
        m = len(template.slots)
        offsets = np.arange(len(idx) + 1, dtype=np.int64) * m
        minutes = _kernels.largest_remainder_batch(fracs.reshape(-1), offsets, DAY_MINUTES)
        minutes = minutes.reshape(len(idx), m)
        acts = tuple(members[int(a)] for a in template.acts)
        for i, row in zip(idx.tolist(), minutes.tolist()):
            rows[i] = Schedule(acts, tuple(row))
    return ScheduleSample(tuple(rows), "real", seed, "oracle")


def template_of(schedule: Schedule) -> tuple[int, ...]:
    return tuple(int(a) for a in schedule.acts)


def null_sample(spec: GrammarSpec, n: int, seed: int = 0) -> ScheduleSample:
    """Uniform-random template, uniform-random split of the day.

    The reference point a trained model must beat: correct vocabulary of
    sequences, no knowledge of their frequencies or timings.
    """
    rng = stream(seed, "oracle", 1)
    choice = rng.integers(len(spec.templates), size=n)
    members = list(ActivityType)
    out = []
    for k in choice.tolist():
        acts = tuple(members[int(a)] for a in spec.templates[k].acts)
        m = len(acts)
        while True:
            cuts = np.sort(rng.integers(1, DAY_MINUTES, size=m - 1))
            durs = np.diff(np.concatenate([[0], cuts, [DAY_MINUTES]]))
            if (durs > 0).all():
                break
        out.append(Schedule(acts, tuple(int(d) for d in durs)))
    return ScheduleSample(tuple(out), "synthetic", seed, "null")


# reference distances


def brute_force_emd(p, q, positions=None, method: str = "greedy") -> float:
    """Exact 1-D transport cost between histograms on shared ``positions``.

    ``greedy`` runs the north-west corner rule, optimal on a line;
    ``lp`` solves the full transport linear program.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("histograms must be 1-D and equally long")
    x = np.arange(len(p), dtype=np.float64) if positions is None else np.asarray(positions, float)
    p = p / p.sum()
    q = q / q.sum()
    if method == "lp":
        n = len(p)
        cost = np.abs(x[:, None] - x[None, :]).reshape(-1)
        a_rows = np.kron(np.eye(n), np.ones(n))
        a_cols = np.kron(np.ones(n), np.eye(n))
        res = optimize.linprog(
            cost, A_eq=np.vstack([a_rows, a_cols]), b_eq=np.concatenate([p, q]),
            bounds=(0, None), method="highs",
        )
        if not res.success:
            raise RuntimeError(res.message)
        return float(res.fun)
    supply, demand = p.copy(), q.copy()
    i = j = 0
    total = 0.0
    while i < len(p) and j < len(q):
        moved = min(supply[i], demand[j])
        total += moved * abs(x[i] - x[j])
        supply[i] -= moved
        demand[j] -= moved
        if supply[i] <= demand[j]:
            i += 1
        else:
            j += 1
    return total


def resample_baseline(real: ScheduleSample, seed: int = 0, evaluator=None):
    """Evaluate one random half of ``real`` against the other half."""
    if len(real) < 1000:
        raise ValueError("resample baseline needs at least 1000 schedules")
    from .evaluation import evaluate

    order = stream(seed, "split", 1).permutation(len(real))
    half = len(real) // 2
    a = real.subset(order[:half])
    b = real.subset(order[half : 2 * half])
    b = ScheduleSample(b.schedules, "synthetic", seed, "resample", b.pids)
    return (evaluator or evaluate)(a, b)
