import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import chebyshev
from scipy import stats

from vibraq.block_encoding import (
    BlockEncoding,
    binomial_tails,
    encode_k,
    encode_lcu,
    inverse_coefficients,
    merge_queries,
    prepare_state,
    product_vav,
    pseudo_inverse,
    pseudo_inverse_charge,
)
from vibraq.errors import InvalidPrecision, PerturbationInvalid, SpectrumViolation
from vibraq.operators import LCUOperator, lcu_weight, shifted_hamiltonian, to_dense
from vibraq.oracle import exact_k_expectation, k_operator, moore_penrose
from vibraq.simulator import StateVector, apply

from conftest import oracle_kappa, random_gapped_hamiltonian, random_pauli_lcu


class TestLCUEncoding:
    @given(st.integers(1, 3), st.integers(1, 9), st.integers(0, 2**31 - 1))
    def test_block_times_alpha_is_operator(self, n, terms, seed):
        op = random_pauli_lcu(np.random.default_rng(seed), n, terms)
        enc = encode_lcu(op)
        assert enc.alpha == pytest.approx(lcu_weight(op))
        assert enc.ancilla_count == (math.ceil(math.log2(len(op))) if len(op) > 1 else 0)
        assert np.allclose(enc.encoded(), to_dense(op), atol=1e-10)

    def test_single_term_needs_no_ancilla(self):
        enc = encode_lcu(LCUOperator.from_terms([(-0.7, "XY")]))
        assert enc.ancilla_count == 0
        assert np.allclose(enc.encoded(), -0.7 * to_dense(LCUOperator.from_terms([(1, "XY")])))

    def test_zero_operator_encodes_zero(self):
        enc = encode_lcu(LCUOperator.zero(2))
        assert enc.alpha == 2.0
        assert np.allclose(enc.block(), 0)

    def test_prepare_amplitudes(self):
        op = LCUOperator.from_terms([(0.1, "X"), (0.2, "Y"), (0.3, "Z")])
        state = apply(prepare_state(op), StateVector.zero(2)).amplitudes
        assert np.allclose(state, np.sqrt([1 / 6, 2 / 6, 3 / 6, 0]))

    def test_query_ledger(self):
        enc = encode_lcu(LCUOperator.from_terms([(1, "X"), (1, "Z")]), "V")
        assert enc.queries == {"P_V": 2, "U_V": 1}
        assert merge_queries(enc.queries, enc.queries, scale=3) == {"P_V": 12, "U_V": 6}

    def test_circuit_is_unitary(self, rng):
        enc = encode_lcu(random_pauli_lcu(rng, 2, 5))
        u = enc.circuit.to_matrix()
        assert np.allclose(u.conj().T @ u, np.eye(len(u)), atol=1e-12)


class TestInversePolynomial:
    @pytest.mark.parametrize("B", [1, 3, 5, 8])
    def test_coefficients_match_chebyshev_interpolation(self, B):
        # (1 - (1 - x^2)^B) / x = x * sum_j (1 - x^2)^j has degree 2B - 1; interpolate it
        def f(x):
            return x * sum((1 - x**2) ** j for j in range(B))
        expansion = chebyshev.chebinterpolate(f, 2 * B - 1)
        n = np.arange(B)
        formula = 4 * (-1.0) ** n * stats.binom.sf(B + n, 2 * B, 0.5)
        assert np.allclose(expansion[1::2], formula, atol=1e-12)
        assert np.allclose(expansion[0::2], 0, atol=1e-12)

    @pytest.mark.parametrize("B,N", [(10, 7), (200, 40), (20001, 5)])
    def test_binomial_tails(self, B, N):
        assert np.allclose(binomial_tails(B, N), stats.binom.sf(B + np.arange(N + 1), 2 * B, 0.5),
                           rtol=1e-10, atol=1e-300)

    def test_known_sizes(self):
        poly = inverse_coefficients(8.0, 1e-3)
        assert (poly.B, poly.N, poly.degree) == (5998, 326, 653)
        assert poly.B == math.ceil(64 * math.log(16 / 1e-3) ** 2)

    @pytest.mark.parametrize("kappa", [1.0, 2.0, 4.0, 8.0])
    @pytest.mark.parametrize("eps", [1e-2, 1e-3])
    def test_deviation_and_sum_bound(self, kappa, eps):
        poly = inverse_coefficients(kappa, eps)
        assert poly.max_deviation(1000) <= eps
        assert poly.coefficient_sum <= 4 * poly.N
        assert poly(1.0) == pytest.approx(poly.coefficient_sum)

    def test_odd(self):
        poly = inverse_coefficients(3.0, 1e-2)
        x = np.linspace(-1, 1, 101)
        assert np.allclose(poly(-x), -poly(x))

    @pytest.mark.parametrize("kappa,eps", [(0.5, 0.1), (2.0, 0.0), (2.0, 1.0)])
    def test_rejects_bad_inputs(self, kappa, eps):
        with pytest.raises(InvalidPrecision):
            inverse_coefficients(kappa, eps)

    def test_charge(self):
        assert pseudo_inverse_charge(4.0, 1e-3) == math.ceil(4 * math.log(1e3))
        assert pseudo_inverse_charge(1.0, 0.9) == 1


class TestPseudoInverse:
    def test_pauli_z(self):
        enc = pseudo_inverse(LCUOperator.from_terms([(1.0, "Z")]), 1.0, 1e-3)
        assert np.allclose(enc.encoded(), np.diag([1, -1]), atol=1e-3)

    @pytest.mark.parametrize("seed", range(6))
    def test_against_moore_penrose(self, seed):
        rng = np.random.default_rng(seed)
        h0 = random_gapped_hamiltonian(rng, 2)
        hp = shifted_hamiltonian(h0, 0.0)
        kappa = oracle_kappa(h0, 0.0)
        enc = pseudo_inverse(hp, kappa, 1e-3)
        target = moore_penrose(to_dense(hp))
        assert np.linalg.norm(enc.encoded() - target, 2) <= 1e-3 * np.linalg.norm(target, 2)
        kernel = np.linalg.eigh(to_dense(hp))[1][:, np.argmin(np.abs(np.linalg.eigvalsh(to_dense(hp))))]
        assert np.linalg.norm(enc.encoded() @ kernel) <= 1e-3
        assert enc.alpha * enc.epsilon <= 1e-3 / lcu_weight(hp) * (1 + 1e-12)

    def test_dilation_is_unitary(self, rng):
        h0 = random_gapped_hamiltonian(rng, 2)
        enc = pseudo_inverse(shifted_hamiltonian(h0, 0.0), oracle_kappa(h0, 0.0), 1e-2)
        u = enc.circuit.to_matrix()
        assert np.allclose(u.conj().T @ u, np.eye(len(u)), atol=1e-10)

    def test_spectrum_violation(self):
        hp = LCUOperator.from_terms([(1.0, "Z"), (0.05, "I")])
        with pytest.raises(SpectrumViolation):
            pseudo_inverse(hp, 1.0, 1e-2)

    def test_ledger_charges_h_prime(self):
        enc = pseudo_inverse(LCUOperator.from_terms([(1.0, "Z")]), 2.0, 1e-2)
        charge = pseudo_inverse_charge(2.0, 1e-2)
        assert enc.queries == {"P_H'": 2 * charge, "U_H'": charge}


class TestProduct:
    @given(st.integers(1, 2), st.integers(0, 2**31 - 1))
    @settings(max_examples=15)
    def test_exact_factors(self, n, seed):
        rng = np.random.default_rng(seed)
        v = encode_lcu(random_pauli_lcu(rng, n, 3), "V")
        a = encode_lcu(random_pauli_lcu(rng, n, 5), "A")
        prod = product_vav(v, a)
        dv, da = to_dense(random_pauli_lcu(np.random.default_rng(seed), n, 3)), a.encoded()
        assert prod.ancilla_count == 2 * v.ancilla_count + a.ancilla_count
        assert prod.alpha == pytest.approx(v.alpha**2 * a.alpha)
        assert np.allclose(prod.encoded(), dv @ da @ dv, atol=1e-10)
        assert prod.queries == {"P_V": 4, "U_V": 2, "P_A": 2, "U_A": 1}


class TestEncodeK:
    def test_two_level(self, two_level):
        h0, v = two_level
        enc = encode_k(v, h0, 0.0, 1.05, 1e-3)
        assert np.allclose(enc.encoded(), np.diag([-1.0, 0.0]), atol=1e-3)
        assert enc.alpha * enc.epsilon <= 1e-3 * (1 + 1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_random_within_target(self, seed):
        rng = np.random.default_rng(100 + seed)
        h0 = random_gapped_hamiltonian(rng, 2)
        v = random_pauli_lcu(rng, 2, 3)
        enc = encode_k(v, h0, 0.0, oracle_kappa(h0, 0.0), 1e-3)
        exact = k_operator(h0, v, 0.0)
        assert np.linalg.norm(enc.encoded() - exact, 2) <= 1e-3
        ground = np.linalg.eigh(to_dense(h0))[1][:, 0]
        assert np.vdot(ground, enc.encoded() @ ground).real == pytest.approx(
            exact_k_expectation(h0, v), abs=1e-3)

    def test_rejects_degenerate_coupling(self):
        h0 = LCUOperator.from_terms([(1.0, "ZI")])
        v = LCUOperator.from_terms([(1.0, "IX")])
        with pytest.raises(PerturbationInvalid):
            encode_k(v, h0, -1.0, 2.0, 1e-2)

    def test_returns_block_encoding(self, two_level):
        h0, v = two_level
        assert isinstance(encode_k(v, h0, 0.0, 1.05, 1e-2), BlockEncoding)
