import numpy as np
import pytest
import scipy.linalg
from hypothesis import HealthCheck, settings

from vqite_noise.pauli_state import PauliString, pauli_matrix

settings.register_profile(
    "repo", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


def random_state(n, rng):
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return psi / np.linalg.norm(psi)


def dense_rotation(letters, angle):
    """Matrix-exponential oracle for exp(-i angle P)."""
    return scipy.linalg.expm(-1j * angle * pauli_matrix(PauliString(letters)))


def dense_prepare(spec, theta):
    psi = spec.reference().amplitudes.copy()
    for g, t in zip(spec.generators, theta):
        psi = dense_rotation(g.letters, t) @ psi
    return psi


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, repeated in the terminal summary
CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}" + (f" -- {detail}" if detail else "")
        CRITERIA.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
