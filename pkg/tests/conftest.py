from functools import reduce

import numpy as np
import pytest

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_all(mats):
    return reduce(np.kron, mats)


def dense_expectation(amps, word):
    """<psi| P |psi> from the explicit Kronecker matrix; oracle for small n."""
    op = kron_all([PAULI[c] for c in word])
    return np.vdot(amps, op @ amps)


def projector_probability(amps, axes, outcomes):
    """Born probability of a joint outcome tuple via explicit projectors."""
    mats = [(PAULI["I"] + o * PAULI[a]) / 2 for a, o in zip(axes, outcomes)]
    proj = kron_all(mats)
    return float(np.real(np.vdot(amps, proj @ amps)))


def ghz_amps(n, sign=-1):
    a = np.zeros(2**n, dtype=complex)
    a[0] = 1 / np.sqrt(2)
    a[-1] = sign / np.sqrt(2)
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: list[tuple[str, bool, str]] = []


class _Criterion:
    def __init__(self, label):
        self.label = label
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        _ACCEPTANCE.append((self.label, exc_type is None, self.detail or (str(exc) if exc else "")))
        return False


@pytest.fixture
def criterion():
    """``with criterion("AC1 ...") as c:`` records one pass/fail line."""
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        line = f"{'PASS' if ok else 'FAIL'}  {label}"
        if detail:
            line += f"  [{detail.splitlines()[0][:120]}]"
        terminalreporter.write_line(line)
