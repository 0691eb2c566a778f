from collections import Counter

import numpy as np
import pytest

from schedvae.evaluation import evaluate
from schedvae.oracle import (
    GrammarError,
    GrammarSpec,
    brute_force_emd,
    draw_sample,
    null_sample,
    resample_baseline,
    template_of,
)
from schedvae.schedule import has_forbidden_consecutive, is_home_based, is_valid

ONE = """
[template H]
weight = 1
slots = home 1440 0
"""

TWO = """
[template A]
weight = 0.5
slots = home 600 60; work 480 60; home 360 60
[template B]
weight = 0.5
slots = home 700 60; shop 40 10; home 700 60
"""


def test_single_template():
    s = draw_sample(GrammarSpec.from_text(ONE), 20, 0)
    assert {x.key() for x in s} == {((0,), (1440,))}


def test_two_templates_binomial():
    n = 100_000
    s = draw_sample(GrammarSpec.from_text(TWO), n, 1)
    share = Counter(template_of(x) for x in s)[(0, 1, 0)] / n
    assert abs(share - 0.5) < 3 * np.sqrt(0.25 / n)


def test_deterministic_per_seed():
    spec = GrammarSpec.load()
    assert draw_sample(spec, 500, 3).schedules == draw_sample(spec, 500, 3).schedules
    assert draw_sample(spec, 500, 3).schedules != draw_sample(spec, 500, 4).schedules


def test_every_draw_is_valid_home_based_and_clean():
    for x in draw_sample(GrammarSpec.load(), 20_000, 5):
        assert is_valid(x) and is_home_based(x) and not has_forbidden_consecutive(x)


def test_means_converge():
    spec = GrammarSpec.from_text(TWO)
    n = 100_000
    s = draw_sample(spec, n, 9)
    shop = np.array([x.durations[1] for x in s if x.acts[1] == 7], dtype=float)
    raw = np.array([x.durations for x in s if x.acts[1] == 7], dtype=float)
    # slots are rescaled to the day; compare against the scaled expectation
    expected = 40 / (700 + 40 + 700) * 1440
    assert abs(shop.mean() - expected) < 3 * shop.std() / np.sqrt(len(shop)) + 0.5
    assert raw.sum(axis=1).max() == 1440


def test_rejects_bad_grammars():
    with pytest.raises(GrammarError):
        GrammarSpec.from_text(TWO.replace("0.5", "0.6", 1))
    with pytest.raises(GrammarError):
        GrammarSpec.from_text(ONE.replace("home 1440 0", "work 1440 0"))
    with pytest.raises(GrammarError):
        GrammarSpec.from_text(ONE.replace("home 1440 0", "home 700 0; home 740 0"))


def test_brute_force_examples():
    assert brute_force_emd([0, 1, 0], [0, 0, 1]) == 1.0
    assert brute_force_emd([1, 0, 0, 0, 0], [0, 0, 0, 0, 1], method="lp") == pytest.approx(4.0)
    p = np.array([0.1, 0.9])
    assert brute_force_emd(p, p) == 0.0


def test_null_sample_uses_grammar_sequences():
    spec = GrammarSpec.load()
    seqs = {t.acts for t in spec.templates}
    for x in null_sample(spec, 300, 0):
        assert x.acts in seqs and is_valid(x)


def test_resample_baseline():
    spec = GrammarSpec.load()
    real = draw_sample(spec, 4000, 2)
    a = resample_baseline(real, seed=1)
    b = resample_baseline(real, seed=1)
    assert a.domains == b.domains
    assert a.distributions["start times"] > 0 and a.distributions["durations"] > 0
    with pytest.raises(ValueError):
        resample_baseline(draw_sample(spec, 999, 2))


def test_rate_noise_floor_shrinks_with_n():
    spec = GrammarSpec.load()
    small = np.mean([resample_baseline(draw_sample(spec, 2000, s), s).distributions["lengths"] for s in range(4)])
    large = np.mean([resample_baseline(draw_sample(spec, 8000, s), s).distributions["lengths"] for s in range(4)])
    assert large < small
