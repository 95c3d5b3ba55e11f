import json
from importlib import resources

import numpy as np
import pytest
from hypothesis import settings

from vibraq.operators import LCUOperator, lcu_weight, pauli_decompose, shifted_hamiltonian, to_dense

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed once at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_hermitian(rng, dim, scale=0.5):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2


def random_pauli_lcu(rng, qubits, terms=4, scale=1.0):
    """Sparse random Pauli LCU with ``terms`` distinct words and signed coefficients."""
    letters = "IXYZ"
    words = set()
    while len(words) < min(terms, 4**qubits):
        words.add("".join(rng.choice(list(letters), size=qubits)))
    coeffs = scale * rng.uniform(0.2, 1.0, size=len(words)) * rng.choice([-1, 1], size=len(words))
    return LCUOperator.from_terms(list(zip(coeffs, sorted(words))), qubits)


def random_gapped_hamiltonian(rng, qubits, gap_range=(0.5, 1.5)):
    """Dense-Pauli ``H0`` with ground energy 0 and a spectral gap drawn from ``gap_range``."""
    dim = 1 << qubits
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    levels = np.concatenate([[0.0], np.sort(rng.uniform(*gap_range, size=dim - 1))])
    return pauli_decompose((q * levels) @ q.conj().T)


def oracle_kappa(h0, e0, margin=1.02):
    hp = shifted_hamiltonian(h0, e0)
    values = np.abs(np.linalg.eigvalsh(to_dense(hp))) / lcu_weight(hp)
    live = values[values > 1e-9]
    return float(margin / live.min())


def load_fixture(name):
    return json.loads(resources.files("vibraq").joinpath("fixtures", name).read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def two_level():
    h0 = LCUOperator.from_terms([(0.5, "I"), (-0.5, "Z")])
    v = LCUOperator.from_terms([(1.0, "X")])
    return h0, v


@pytest.fixture
def fixture_path():
    def path(name):
        return str(resources.files("vibraq").joinpath("fixtures", name))
    return path

