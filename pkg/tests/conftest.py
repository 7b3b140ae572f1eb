import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from mlogic.checks import random_formula, random_hfset
from mlogic.hfset import Structure, v_stage

settings.register_profile(
    "default",
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# criterion lines collected by test_acceptance and echoed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@st.composite
def formulas(draw, depth=4, free=("a", "b"), stage=3):
    rng = random.Random(draw(st.integers(0, 2**32 - 1)))
    consts = [random_hfset(rng, stage) for _ in range(2)]
    return random_formula(rng, draw(st.integers(0, depth)), free=free, constants=consts)


@st.composite
def substructures(draw, stage=4, min_size=1, max_size=16):
    carrier = v_stage(stage).carrier
    picks = draw(st.sets(st.sampled_from(carrier), min_size=min_size, max_size=max_size))
    return Structure.of(picks)


@pytest.fixture
def v2():
    return v_stage(2)


@pytest.fixture
def v3():
    return v_stage(3)
