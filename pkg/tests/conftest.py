import numpy as np
import pytest

from twistorlab.lambda2 import CurvatureBlocks


def synthetic_blocks(rng, asd=False, einstein=False, s=None):
    """Random algebraic curvature blocks (tr A = tr C), optionally ASD and/or Einstein."""
    A = rng.standard_normal((3, 3))
    A = A + A.T
    C = rng.standard_normal((3, 3))
    C = C + C.T
    B = rng.standard_normal((3, 3))
    if asd:
        A = np.trace(A) / 3 * np.eye(3)
    if s is not None:
        A = A - (np.trace(A) - s / 4) / 3 * np.eye(3)
    C = C + (np.trace(A) - np.trace(C)) / 3 * np.eye(3)
    if einstein:
        B = 0 * B
    return CurvatureBlocks(A, B, C)


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


@pytest.fixture
def make_blocks():
    return synthetic_blocks


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
