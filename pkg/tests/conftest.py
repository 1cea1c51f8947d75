import numpy as np
import pytest

from structemb.evaluation import gen_barbell, gen_mirrored
from structemb.graph import load_karate


@pytest.fixture(scope="session")
def karate():
    return load_karate()


@pytest.fixture(scope="session")
def barbell():
    return gen_barbell(10, 10)


@pytest.fixture(scope="session")
def mirrored_karate(karate):
    return gen_mirrored(karate, bridge="1")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion and assert it."""

    def check(name: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
