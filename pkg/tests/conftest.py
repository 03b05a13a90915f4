import numpy as np
import pytest
from hypothesis import settings

from nbsl import make_world

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def report():
    """Record one acceptance line; call before asserting so failures are reported too."""

    def _report(criterion: str, passed: bool, detail: str = ""):
        ACCEPTANCE[criterion] = (bool(passed), detail)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int("".join(c for c in k if c.isdigit()) or 0), k)):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def coin_world():
    """Two agents, two states, signal H with probability 0.8 or 0.2."""
    lik = [[0.8, 0.2], [0.2, 0.8]]
    return make_world(["a", "b"], "a", [lik, lik])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
