import numpy as np
import pytest

from lambda_memory.system import make_config


@pytest.fixture
def rb_pi():
    return make_config(2, 1, 1, "pi")


@pytest.fixture
def rb_x():
    return make_config(2, 1, 1, "x")


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def random_density(rng, n, rank=None):
    rank = rank or n
    a = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


VERDICT = {"passed": "PASS", "failed": "FAIL"}


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, tagged via ``record_property``."""
    lines = []
    for outcome, verdict in VERDICT.items():
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", []))
            if rep.when == "call" and "criterion" in props:
                lines.append((props["criterion"], verdict, props.get("detail", "")))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, verdict, detail in sorted(lines):
        terminalreporter.write_line(f"{verdict}  criterion {number:>2}  {detail}")
