import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from valgebra import arith

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def float_mode():
    arith.set_mode(arith.FLOAT)
    yield
    arith.set_mode(arith.FLOAT)


@pytest.fixture
def exact_mode():
    arith.set_mode(arith.EXACT)
    yield
    arith.set_mode(arith.FLOAT)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# acceptance report: one line per criterion, repeated in the terminal summary

_acceptance_lines: dict[str, list[str]] = {}


@pytest.fixture
def criterion():
    def record(number: int, passed: bool, detail: str, note: bool = False) -> None:
        tag = "NOTE" if note else ("PASS" if passed else "FAIL")
        line = f"criterion {number:>2} {tag}  {detail}"
        _acceptance_lines.setdefault(f"{number:02d}", []).append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance_lines):
        for line in _acceptance_lines[key]:
            terminalreporter.write_line(line)
