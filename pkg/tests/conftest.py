import numpy as np
import pytest
from hypothesis import strategies as st

from schedvae.schedule import ActivityType, Schedule


def random_schedule(rng, max_acts=15, min_acts=1):
    """Valid schedule with random types and positive integer minute durations."""
    k = int(rng.integers(min_acts, max_acts + 1))
    cuts = np.sort(rng.choice(np.arange(1, 1440), size=k - 1, replace=False))
    durs = np.diff(np.concatenate(([0], cuts, [1440])))
    acts = rng.integers(0, 8, size=k)
    return Schedule(tuple(ActivityType(int(a)) for a in acts), tuple(int(d) for d in durs))


@st.composite
def schedules(draw, max_acts=15, step=1):
    k = draw(st.integers(1, max_acts))
    slots = 1440 // step
    cuts = sorted(draw(st.sets(st.integers(1, slots - 1), min_size=k - 1, max_size=k - 1)))
    bounds = [0] + [c * step for c in cuts] + [1440]
    durs = [b - a for a, b in zip(bounds, bounds[1:])]
    acts = draw(st.lists(st.integers(0, 7), min_size=k, max_size=k))
    return Schedule(tuple(ActivityType(a) for a in acts), tuple(durs))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def S(*pairs):
    return Schedule.from_pairs(pairs)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
