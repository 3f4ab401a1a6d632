import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def rand_oct(rng, n=None, unit=False):
    shape = (8,) if n is None else (n, 8)
    x = rng.uniform(-1, 1, size=shape)
    if unit:
        x = x / np.linalg.norm(x, axis=-1, keepdims=True)
    return x


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
