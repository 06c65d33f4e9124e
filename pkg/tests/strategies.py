"""Hypothesis strategies shared by the property tests"""
from hypothesis import strategies as st

from core.model import Adversary, Crash, FailurePattern


@st.composite
def adversaries(draw, n=3, t=1, value_count=2, horizon=None):
    """Valid adversaries; crash rounds range over 1..horizon+1"""
    horizon = t + 1 if horizon is None else horizon
    values = draw(st.lists(st.integers(0, value_count - 1), min_size=n, max_size=n))
    faulty = draw(st.lists(st.integers(1, n), unique=True, max_size=t))
    crashes = []
    for process in sorted(faulty):
        others = [j for j in range(1, n + 1) if j != process]
        crashes.append(Crash(
            process,
            draw(st.integers(1, horizon + 1)),
            draw(st.frozensets(st.sampled_from(others))),
        ))
    return Adversary(n, tuple(values), FailurePattern(tuple(crashes), t))


@st.composite
def active_nodes(draw, adv, horizon=None):
    """(process, time) pairs with the process still active at that time"""
    horizon = adv.t + 1 if horizon is None else horizon
    m = draw(st.integers(0, horizon))
    alive = [i for i in range(1, adv.n + 1) if adv.active_at(i, m)]
    return draw(st.sampled_from(alive)), m
