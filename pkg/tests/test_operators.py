import numpy as np
import pytest
from functools import reduce
from hypothesis import given, strategies as st

from vibraq.config import set_cap_qubits
from vibraq.errors import CapExceeded, DimensionMismatch
from vibraq.operators import (
    EigenSystem,
    LCUOperator,
    PauliWord,
    eigensystem,
    lcu_weight,
    pauli_decompose,
    pauli_matrix,
    shifted_hamiltonian,
    to_dense,
    validate_perturbation,
)

from conftest import random_hermitian

words = st.text(alphabet="IXYZ", min_size=1, max_size=4)


def kron_reference(letters):
    return reduce(np.kron, [pauli_matrix(c) for c in letters])


class TestPauliWord:
    @pytest.mark.parametrize("text,letters,sign", [
        ("XZ", "XZ", 1), ("-xzy", "XZY", -1), ("+I", "I", 1), (" yy ", "YY", 1),
    ])
    def test_parse(self, text, letters, sign):
        w = PauliWord.parse(text)
        assert (w.letters, w.sign) == (letters, sign)

    @pytest.mark.parametrize("bad", ["", "XA", "-", "Q"])
    def test_rejects_bad_words(self, bad):
        with pytest.raises(ValueError):
            PauliWord.parse(bad)

    def test_y_convention(self):
        y = PauliWord("Y").to_dense()
        assert np.allclose(y @ [1, 0], [0, 1j])

    def test_qubit_zero_is_most_significant(self):
        xi = PauliWord("XI").to_dense()
        # X on qubit 0 maps |00> (index 0) to |10> (index 2)
        assert xi[2, 0] == 1

    @given(words, st.sampled_from([1, -1]))
    def test_dense_matches_kron(self, letters, sign):
        assert np.allclose(PauliWord(letters, sign).to_dense(), sign * kron_reference(letters))

    @given(words)
    def test_words_square_to_identity(self, letters):
        m = PauliWord(letters).to_dense()
        assert np.allclose(m @ m, np.eye(len(m)))

    def test_cap(self):
        set_cap_qubits(3)
        try:
            with pytest.raises(CapExceeded):
                PauliWord("XXXX").to_dense()
        finally:
            set_cap_qubits(None)


class TestLCUOperator:
    def test_negative_coefficients_fold_into_sign(self):
        op = LCUOperator.from_terms([(-0.5, "XZ"), (0.25, "YY"), (0.0, "ZZ")])
        assert len(op) == 2
        assert op.terms[0][1].sign == -1 and op.terms[0][0] == 0.5
        assert np.all(op.weights > 0)

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ValueError):
            LCUOperator(((-1.0, PauliWord("X")),), 1)

    def test_rejects_mixed_widths(self):
        with pytest.raises(DimensionMismatch):
            LCUOperator.from_terms([(1.0, "X"), (1.0, "XX")])

    def test_zero_operator(self):
        zero = LCUOperator.zero(2)
        assert lcu_weight(zero) == 0.0
        assert np.allclose(to_dense(zero), 0)

    def test_records_round_trip(self):
        op = LCUOperator.from_terms([(-0.5, "XZ"), (0.25, "YY")])
        again = LCUOperator.from_records(op.to_records())
        assert np.allclose(to_dense(again), to_dense(op))
        assert op.to_records()[0] == {"pauli": "XZ", "coeff": -0.5}

    def test_weight_sums_in_order(self):
        op = LCUOperator.from_terms([(0.1, "X"), (0.2, "Z"), (-0.3, "Y")])
        assert lcu_weight(op) == (0.1 + 0.2) + 0.3

    def test_addition_and_scaling(self):
        a = LCUOperator.from_terms([(1.0, "X")])
        b = LCUOperator.from_terms([(2.0, "Z")])
        assert np.allclose(to_dense(a + b), to_dense(a) + to_dense(b))
        assert np.allclose(to_dense(a.scaled(-2.0)), -2 * to_dense(a))


class TestShiftedHamiltonian:
    @pytest.mark.parametrize("e0", [-1.3, 0.0, 0.7])
    def test_dense_form(self, e0):
        h0 = LCUOperator.from_terms([(0.5, "IZ"), (-0.25, "XX"), (0.1, "YI")])
        hp = shifted_hamiltonian(h0, e0)
        assert np.allclose(to_dense(hp), e0 * np.eye(4) - to_dense(h0))
        assert lcu_weight(hp) == pytest.approx(abs(e0) + lcu_weight(h0))

    def test_identity_term_first(self):
        h0 = LCUOperator.from_terms([(0.5, "Z")])
        hp = shifted_hamiltonian(h0, -2.0)
        assert hp.terms[0][1] == PauliWord("I", -1)
        assert hp.terms[0][0] == 2.0


class TestPauliDecompose:
    @pytest.mark.parametrize("qubits", [1, 2, 3, 4])
    def test_round_trip(self, qubits):
        rng = np.random.default_rng(qubits)
        m = random_hermitian(rng, 1 << qubits)
        assert np.allclose(to_dense(pauli_decompose(m)), m, atol=1e-12)

    def test_matches_trace_formula(self):
        rng = np.random.default_rng(5)
        m = random_hermitian(rng, 4)
        op = pauli_decompose(m)
        for weight, word in op.terms:
            coeff = np.trace(PauliWord(word.letters).to_dense() @ m).real / 4
            assert word.sign * weight == pytest.approx(coeff, abs=1e-12)

    def test_single_word(self):
        op = pauli_decompose(PauliWord("YX").to_dense() * -0.75)
        assert op.to_records() == [{"pauli": "YX", "coeff": -0.75}]

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            pauli_decompose(np.array([[0, 1], [0, 0]]))

    def test_rejects_bad_shape(self):
        with pytest.raises(DimensionMismatch):
            pauli_decompose(np.eye(3))


class TestEigenAndPerturbation:
    def test_eigensystem_sorted(self, rng):
        m = random_hermitian(rng, 8)
        eig = eigensystem(m)
        assert np.all(np.diff(eig.eigenvalues) >= 0)
        assert np.allclose(m @ eig.ground_vector, eig.ground_energy * eig.ground_vector)

    def test_valid_when_nondegenerate(self, rng):
        eig = eigensystem(np.diag([0.0, 1.0, 2.0, 3.0]))
        assert validate_perturbation(random_hermitian(rng, 4), eig)

    def test_invalid_inside_degenerate_space(self):
        eig = eigensystem(np.diag([0.0, 1.0, 1.0, 2.0]))
        v = np.zeros((4, 4))
        v[1, 2] = v[2, 1] = 0.3
        assert not validate_perturbation(v, eig)
        v[1, 2] = v[2, 1] = 0.0
        v[0, 3] = v[3, 0] = 1.0
        assert validate_perturbation(v, eig)

    def test_dimension_mismatch(self):
        eig = EigenSystem(np.array([0.0, 1.0]), np.eye(2))
        with pytest.raises(DimensionMismatch):
            validate_perturbation(np.eye(4), eig)
