import numpy as np
import pytest

from mbqed.statevec import StateVector, make_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_state(rng, n) -> StateVector:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return make_state(n, v)


def random_unitary(rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    return q * (np.diag(r) / abs(np.diag(r)))


ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def record_criterion():
    """Store one pass/fail line per acceptance criterion; returns the verdict."""

    def record(key: str, ok: bool, detail: str) -> bool:
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[key] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int("".join(c for c in k if c.isdigit())), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
