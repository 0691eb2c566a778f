import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schedvae.evaluation import (
    SegmentRow,
    aggregate,
    combine_creativity,
    compare_runs,
    creativity,
    emd,
    enumerate_activities,
    evaluate,
    invalidity,
    l1_bivariate,
    ngram_rates,
    pair_participation_rates,
    participation_rates,
    sequence_lengths,
    timing_distributions,
    write_report,
)
from schedvae.evaluation.marginals import N_TIME_BINS
from schedvae.oracle import brute_force_emd

import published_tables as T
from conftest import S

HWH = S(("home", 480), ("work", 540), ("home", 420))


def test_participation_examples():
    rates = participation_rates([HWH])
    np.testing.assert_array_equal(rates["home"].masses, [0, 0, 1])
    np.testing.assert_array_equal(rates["education"].masses, [1])
    np.testing.assert_array_equal(sequence_lengths([HWH]).masses, [0, 0, 0, 1])


def test_rate_masses_sum_to_one(rng):
    from conftest import random_schedule

    sample = [random_schedule(rng) for _ in range(200)]
    for d in list(participation_rates(sample).values()) + list(pair_participation_rates(sample).values()):
        assert d.masses.sum() == pytest.approx(1.0, abs=1e-9)


def test_pair_participation_worked_example():
    pairs = pair_participation_rates([HWH])
    assert pairs["home+work"].counts.tolist() == [2]
    assert pairs["home+home"].counts.tolist() == [1]
    assert sum(p.total for p in pairs.values()) == 3
    three = pair_participation_rates([S(("home", 400), ("shop", 40), ("home", 400), ("shop", 200), ("home", 400))])
    assert three["home+home"].counts.tolist() == [3]
    single = pair_participation_rates([S(("home", 1440))])
    assert all(p.total == 0 for p in single.values())


def test_ngram_worked_examples():
    bi = ngram_rates([HWH], 2)
    assert {k: v.total for k, v in bi.items()} == {"home>work": 1, "work>home": 1}
    tri = ngram_rates([HWH], 3)
    assert {k: v.total for k, v in tri.items()} == {"home>work>home": 1}
    assert ngram_rates([HWH], 4) == {}


def test_timing_examples():
    t = timing_distributions([HWH, S(("home", 600), ("shop", 840))])
    assert t.starts["home0"].masses[0] == 1.0
    assert enumerate_activities(HWH) == ["home0", "work0", "home1"]
    np.testing.assert_allclose(t.joint_durations["home-"].values[0], [480 / 1440, 540 / 1440])
    np.testing.assert_allclose(t.joint_durations["work-"].values[0], [540 / 1440, 420 / 1440])
    assert t.start_durations["home"].masses.shape == (N_TIME_BINS, N_TIME_BINS)
    assert t.start_durations["home"].masses.sum() == pytest.approx(1.0, abs=1e-9)
    assert t.durations["work0"].mean() == pytest.approx(540 / 1440)


def test_emd_examples():
    p = np.array([0.2, 0.3, 0.5])
    assert emd(p, p) == 0.0
    assert emd([1, 0, 0, 0], [0, 0, 0, 1]) == 3.0
    assert emd([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.25)
    assert brute_force_emd([0.5, 0.5], [0.25, 0.75], method="lp") == pytest.approx(0.25)


def test_emd_matches_brute_force_oracle():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(1, 65))
        p = rng.random(n) * (rng.random(n) < 0.7)
        q = rng.random(n) * (rng.random(n) < 0.7)
        p[0] += 1e-3
        q[-1] += 1e-3
        p, q = p / p.sum(), q / q.sum()
        assert abs(emd(p, q) - brute_force_emd(p, q)) < 1e-9


def test_greedy_oracle_matches_linear_program():
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = int(rng.integers(2, 12))
        p, q = rng.random(n), rng.random(n)
        assert brute_force_emd(p, q) == pytest.approx(brute_force_emd(p, q, method="lp"), abs=1e-7)


hist = st.lists(st.floats(0, 1), min_size=1, max_size=30).filter(lambda v: sum(v) > 1e-3)


@settings(max_examples=200, deadline=None)
@given(hist, hist, hist)
def test_emd_is_a_metric(a, b, c):
    n = max(len(a), len(b), len(c))
    p, q, r = (np.pad(np.array(x), (0, n - len(x))) for x in (a, b, c))
    p, q, r = p / p.sum(), q / q.sum(), r / r.sum()
    assert emd(p, p) == 0
    assert emd(p, q) == pytest.approx(emd(q, p), abs=1e-12)
    assert emd(p, r) <= emd(p, q) + emd(q, r) + 1e-9


def test_l1_examples():
    p = np.zeros((N_TIME_BINS, N_TIME_BINS))
    q = p.copy()
    p[3, 4] = 1
    q[100, 7] = 1
    assert l1_bivariate(p, p) == 0
    assert l1_bivariate(p, q) == 2.0


def _rows(model):
    return [SegmentRow(d, "all", vals[model]) for d, vals in T.DISTRIBUTION.items()]


def test_aggregate_examples():
    rows = [SegmentRow("lengths", "all", 0.154), SegmentRow("participation", "all", 0.033),
            SegmentRow("pair", "all", 0.004)]
    assert aggregate(rows)[1]["participations"] == pytest.approx(0.064, abs=1e-3)
    zero = [SegmentRow(d, "x", 0.0, 3.0) for d in T.DISTRIBUTION]
    dists, doms = aggregate(zero)
    assert set(dists.values()) == {0.0} and set(doms.values()) == {0.0}


def test_aggregate_is_frequency_weighted():
    rows = [SegmentRow("participation", "home", 0.1, 30), SegmentRow("participation", "work", 0.4, 10)]
    assert aggregate(rows)[0]["participation"] == pytest.approx((3 + 4) / 40)


@pytest.mark.parametrize("model", range(6), ids=T.MODELS)
def test_domain_rows_from_distribution_rows(model):
    _, domains = aggregate(_rows(model))
    for dom, vals in T.DOMAIN.items():
        assert domains[dom] == pytest.approx(vals[model], abs=1e-3)


def test_creativity_row_from_components():
    for h, c, want in zip(T.HOMOGENEITY, T.CONSERVATISM, T.CREATIVITY):
        assert combine_creativity(h, c) == pytest.approx(want, abs=1e-3)


def test_creativity_examples():
    a, b, c = HWH, S(("home", 1440)), S(("home", 700), ("shop", 740))
    out = creativity([a, a, b, c], training=[S(("home", 100), ("work", 1340))])
    assert out["homogeneity"] == 0.5
    assert out["conservatism"] == 0.0
    out = creativity([a, b], training=[a])
    assert out["conservatism"] == 0.5
    assert out["creativity"] == 0.25


def test_invalidity_examples():
    assert invalidity([HWH], [])["combined"] == 0.0
    whw = S(("work", 400), ("home", 600), ("work", 440))
    out = invalidity([whw, HWH], [])
    assert out["not home-based"] == 0.5
    hhh = S(("home", 400), ("home", 1040))
    out = invalidity([whw, hhh, HWH, S(("work", 100), ("work", 1340))], [])
    assert out["not home-based"] == 0.5
    assert out["consecutive"] == 0.5
    assert out["combined"] == 0.75


def test_invalidity_counts_only_novel_and_degenerate():
    whw = S(("work", 400), ("home", 600), ("work", 440))
    assert invalidity([whw, HWH], [whw])["not home-based"] == 0.0
    assert invalidity([HWH], [], degenerate=1)["combined"] == 0.5


def test_welch_fixtures():
    assert compare_runs([1, 2, 3], [1, 2, 3]).t == 0
    r = compare_runs([1, 2, 3, 4, 5], [2, 4, 6, 8, 10])
    # means 3 and 6, variances 2.5 and 10, n = 5 each
    assert r.t == pytest.approx(-3 / np.sqrt(2.5 / 5 + 10 / 5), abs=1e-6)
    assert r.df == pytest.approx((0.5 + 2) ** 2 / (0.5**2 / 4 + 2**2 / 4), abs=1e-6)
    with pytest.raises(ValueError):
        compare_runs([1], [2, 3])


def test_evaluate_identical_samples_is_zero(tmp_path):
    from schedvae.oracle import GrammarSpec, draw_sample

    real = draw_sample(GrammarSpec.load(), 300, 1)
    rep = evaluate(real, real)
    assert all(v == 0 for v in rep.domains.values())
    assert rep.creativity["conservatism"] == 1.0
    write_report(rep, real, real, tmp_path)
    head = (tmp_path / "report.csv").read_text().splitlines()[0]
    assert head.startswith("domain,distribution,segment,description_real,description_syn,distance,unit")
    assert (tmp_path / "summary.csv").read_text().startswith("level,name,value,unit")
    assert (tmp_path / "activity_frequencies.svg").read_text().lstrip().startswith("<?xml")
