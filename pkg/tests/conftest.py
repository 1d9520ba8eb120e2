import numpy as np
import pytest

from geoflow import PhaseState
from geoflow.integrals import random_regular_momentum

# acceptance criteria report one line each at the end of the run
ACCEPTANCE = {}


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n} {'PASS' if ok else 'FAIL'}: {title}  [{detail}]")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def random_states(model, n, seed=0, g_range=1.0):
    r = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        p = random_regular_momentum(model, r)
        g = r.uniform(-g_range, g_range, 3)
        out.append(PhaseState.make(model, p, g))
    return out
