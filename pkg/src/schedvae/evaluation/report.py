"""Segment distances, frequency-weighted aggregation, validity and creativity."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from ..schedule import has_forbidden_consecutive, is_home_based
from .distances import emd, l1_bivariate
from .marginals import (
    pair_participation_rates,
    participation_rates,
    sequence_lengths,
    ngram_rates,
    timing_distributions,
)

DOMAINS: dict[str, tuple[str, ...]] = {
    "participations": ("lengths", "participation", "pair"),
    "transitions": ("2-gram", "3-gram", "4-gram"),
    "timing": ("start times", "durations", "start-durations", "joint durations"),
}
DISTRIBUTIONS = tuple(d for ds in DOMAINS.values() for d in ds)
DOMAIN_OF = {d: dom for dom, ds in DOMAINS.items() for d in ds}

# distance when a timing segment exists in only one sample
MISSING = {"emd_days": 1.0, "l1": 2.0}


@dataclass(frozen=True)
class SegmentRow:
    distribution: str
    segment: str
    distance: float
    weight: float = 1.0
    description_real: float = float("nan")
    description_syn: float = float("nan")
    unit: str = ""

    @property
    def domain(self) -> str:
        return DOMAIN_OF[self.distribution]


@dataclass
class EvalReport:
    rows: list[SegmentRow]
    distributions: dict[str, float]
    domains: dict[str, float]
    validity: dict[str, float] = field(default_factory=dict)
    creativity: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def summary_rows(self) -> list[tuple[str, str, float, str]]:
        """(level, name, value, unit) in a fixed order."""
        out = [("domain", d, self.domains[d], "distance") for d in DOMAINS if d in self.domains]
        out += [
            ("distribution", d, self.distributions[d], _unit(d))
            for d in DISTRIBUTIONS
            if d in self.distributions
        ]
        out += [("validity", k, v, "probability") for k, v in self.validity.items()]
        out += [("creativity", k, v, "probability") for k, v in self.creativity.items()]
        return out

    def report_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["domain", "distribution", "segment", "description_real",
                    "description_syn", "distance", "unit", "weight"])
        for r in self.rows:
            w.writerow([r.domain, r.distribution, r.segment, _fmt(r.description_real),
                        _fmt(r.description_syn), _fmt(r.distance), r.unit, _fmt(r.weight)])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "name", "value", "unit"])
        for level, name, value, unit in self.summary_rows():
            w.writerow([level, name, _fmt(value), unit])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return "" if x is None or (isinstance(x, float) and np.isnan(x)) else f"{x:.6f}"


def _unit(distribution: str) -> str:
    if distribution in ("start times", "durations"):
        return "days"
    if distribution in ("start-durations", "joint durations"):
        return "l1"
    return "count"


def aggregate(rows: Iterable[SegmentRow]) -> tuple[dict[str, float], dict[str, float]]:
    """Weighted mean per distribution, then unweighted mean per domain."""
    num: dict[str, float] = {}
    den: dict[str, float] = {}
    for r in rows:
        num[r.distribution] = num.get(r.distribution, 0.0) + r.weight * r.distance
        den[r.distribution] = den.get(r.distribution, 0.0) + r.weight
    dists = {d: (num[d] / den[d] if den[d] > 0 else 0.0) for d in DISTRIBUTIONS if d in num}
    domains = {}
    for dom, members in DOMAINS.items():
        vals = [dists[m] for m in members if m in dists]
        if vals:
            domains[dom] = float(np.mean(vals))
    return dists, domains


def _weight(real, syn) -> float:
    """Real-sample frequency; synthetic frequency for segments only the model invents."""
    return float(real.total if real is not None and real.total > 0 else (syn.total if syn is not None else 0))


def _rate_rows(name, real: dict, syn: dict) -> list[SegmentRow]:
    rows = []
    for seg in sorted(set(real) | set(syn)):
        p, q = real.get(seg), syn.get(seg)
        w = _weight(p, q)
        if w == 0:
            continue
        pm = p.masses if p is not None else np.ones(1)
        qm = q.masses if q is not None else np.ones(1)
        rows.append(SegmentRow(
            name, seg, emd(pm, qm, 1.0), w,
            p.mean() if p is not None else 0.0, q.mean() if q is not None else 0.0, "count",
        ))
    return rows


def _time_rows(name, real: dict, syn: dict, bivariate: bool) -> list[SegmentRow]:
    rows = []
    unit = "l1" if bivariate else "days"
    for seg in sorted(set(real) | set(syn)):
        p, q = real.get(seg), syn.get(seg)
        w = _weight(p, q)
        if w == 0:
            continue
        if p is None or q is None or p.total == 0 or q.total == 0:
            d = MISSING["l1" if bivariate else "emd_days"]
        elif bivariate:
            d = l1_bivariate(p, q)
        else:
            d = emd(p, q)
        rows.append(SegmentRow(
            name, seg, d, w,
            p.mean() if p is not None else float("nan"),
            q.mean() if q is not None else float("nan"),
            unit,
        ))
    return rows


def segment_rows(real, syn) -> list[SegmentRow]:
    rows = _rate_rows("lengths", {"all": sequence_lengths(real)}, {"all": sequence_lengths(syn)})
    rows += _rate_rows("participation", participation_rates(real), participation_rates(syn))
    rows += _rate_rows("pair", pair_participation_rates(real), pair_participation_rates(syn))
    for n in (2, 3, 4):
        rows += _rate_rows(f"{n}-gram", ngram_rates(real, n), ngram_rates(syn, n))
    tr, ts = timing_distributions(real), timing_distributions(syn)
    rows += _time_rows("start times", tr.starts, ts.starts, False)
    rows += _time_rows("durations", tr.durations, ts.durations, False)
    rows += _time_rows("start-durations", tr.start_durations, ts.start_durations, True)
    rows += _time_rows("joint durations", tr.joint_durations, ts.joint_durations, True)
    return rows


# quality beyond density


def invalidity(synthetic, training, degenerate: int = 0) -> dict[str, float]:
    """Invalid fractions among novel schedules; degenerate outputs count as invalid."""
    train_keys = {s.key() for s in training}
    novel = [s for s in synthetic if s.key() not in train_keys]
    n = len(novel) + degenerate
    if n == 0:
        return {"not home-based": 0.0, "consecutive": 0.0, "combined": 0.0, "novel": 0}
    nhb = np.fromiter((not is_home_based(s) for s in novel), dtype=bool, count=len(novel))
    cons = np.fromiter((has_forbidden_consecutive(s) for s in novel), dtype=bool, count=len(novel))
    return {
        "not home-based": (nhb.sum() + degenerate) / n,
        "consecutive": (cons.sum() + degenerate) / n,
        "combined": ((nhb | cons).sum() + degenerate) / n,
        "novel": n,
    }


def combine_creativity(homogeneity: float, conservatism: float) -> float:
    return (homogeneity + conservatism) / 2


def creativity(synthetic, training) -> dict[str, float]:
    keys = [s.key() for s in synthetic]
    if not keys:
        return {"homogeneity": 0.0, "conservatism": 0.0, "creativity": 0.0}
    counts = Counter(keys)
    train_keys = {s.key() for s in training}
    h = sum(counts[k] > 1 for k in keys) / len(keys)
    c = sum(k in train_keys for k in keys) / len(keys)
    return {"homogeneity": h, "conservatism": c, "creativity": combine_creativity(h, c)}


@dataclass(frozen=True)
class WelchResult:
    t: float
    p: float
    df: float


def compare_runs(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Welch's unequal-variance t-test of per-run distances."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("need at least two runs per model")
    va, vb = a.var(ddof=1) / len(a), b.var(ddof=1) / len(b)
    if va + vb == 0:
        t = 0.0 if a.mean() == b.mean() else float(np.sign(a.mean() - b.mean()) * np.inf)
        return WelchResult(t, 1.0 if t == 0 else 0.0, float(len(a) + len(b) - 2))
    res = stats.ttest_ind(a, b, equal_var=False)
    df = (va + vb) ** 2 / (va**2 / (len(a) - 1) + vb**2 / (len(b) - 1))
    return WelchResult(float(res.statistic), float(res.pvalue), float(df))


def evaluate(real, synthetic, training=None, degenerate: int = 0) -> EvalReport:
    """Full comparison of a synthetic sample against the real one.

    Validity and creativity use ``training`` (defaults to ``real``).
    """
    training = real if training is None else training
    rows = segment_rows(real, synthetic)
    dists, domains = aggregate(rows)
    return EvalReport(
        rows,
        dists,
        domains,
        {k: v for k, v in invalidity(synthetic, training, degenerate).items() if k != "novel"},
        creativity(synthetic, training),
        {"real": len(real), "synthetic": len(synthetic), "degenerate": degenerate},
    )
