import numpy as np
import pytest

from qfikit.states import LinearFamily, UnitaryFamily
from qfikit.xstate import XStateParams, xstate_family

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)

PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
BELL = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)

BELL_PARAMS = XStateParams(0.5, 0.0, 0.0, 0.5, 0.5)
EXAMPLE_PARAMS = XStateParams(0.3, 0.15, 0.25, 0.3, 0.2)
UNIFORM_PARAMS = XStateParams(0.25, 0.25, 0.25, 0.25, 0.25)


def projector(psi):
    return np.outer(psi, psi.conj())


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def bell_family():
    return xstate_family(BELL_PARAMS)


@pytest.fixture
def example_family():
    return xstate_family(EXAMPLE_PARAMS)


@pytest.fixture
def invariant_family():
    return UnitaryFamily(np.diag([1.0, 0.0]), (SZ,))


@pytest.fixture
def plus_family():
    return UnitaryFamily(projector(PLUS), (SZ,))


@pytest.fixture
def classical_family():
    return LinearFamily(0.5 * I2, (0.5 * SZ,))


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE[number] = f"{'PASS' if passed else 'FAIL'}  criterion {number}: {detail}"
    print(ACCEPTANCE[number])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
