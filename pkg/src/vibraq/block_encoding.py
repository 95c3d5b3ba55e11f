"""Block encodings: LCU prepare/select, the VAV product, and the pseudo-inverse.

A :class:`BlockEncoding` is a circuit on ``ancilla_count + system_qubits``
qubits (ancillas first) whose top-left block, with every ancilla in ``|0>``,
equals ``M / alpha`` up to ``||alpha * block - M|| <= alpha * epsilon``.

The pseudo-inverse is realized by applying an odd Chebyshev polynomial that
approximates ``1/x`` directly to the eigenvalues of the block-encoded
``H'/|a|`` and embedding the result in a one-ancilla unitary dilation. The
query ledger still charges the applications of ``U_H'`` a phase-factor
circuit would spend (``ceil(kappa * ln(1/epsilon))``, constants set to 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev
from scipy import stats

from .errors import (
    DimensionMismatch,
    InvalidPrecision,
    PerturbationInvalid,
    SpectrumViolation,
)
from .operators import (
    LCUOperator,
    PauliWord,
    eigensystem,
    lcu_weight,
    shifted_hamiltonian,
    to_dense,
    validate_perturbation,
)
from .simulator import Block, Circuit, Gate, Phase, apply_columns, gate, state_preparation_unitary
from .operators import pauli_matrix

# Binomial tails are summed exactly with integers up to this B, then via scipy.
EXACT_TAIL_LIMIT = 20000
KERNEL_TOL = 1e-9
SPECTRUM_TOL = 1e-9


def merge_queries(*ledgers, scale: int = 1) -> dict:
    out: dict = {}
    for ledger in ledgers:
        for name, count in ledger.items():
            out[name] = out.get(name, 0) + scale * count
    return out


@dataclass(frozen=True, eq=False)
class BlockEncoding:
    alpha: float
    ancilla_count: int
    epsilon: float
    circuit: Circuit
    system_qubits: int
    queries: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.circuit.qubit_count != self.ancilla_count + self.system_qubits:
            raise DimensionMismatch("circuit width must equal ancillas plus system qubits")

    @property
    def total_qubits(self) -> int:
        return self.circuit.qubit_count

    def block(self) -> np.ndarray:
        """Top-left ``2**n x 2**n`` block, obtained by simulating the circuit."""
        dim = 1 << self.system_qubits
        columns = np.zeros((1 << self.total_qubits, dim), dtype=complex)
        columns[:dim, :dim] = np.eye(dim)
        return apply_columns(self.circuit, columns)[:dim, :]

    def encoded(self) -> np.ndarray:
        """``alpha * block``: the operator this encoding represents."""
        return self.alpha * self.block()


def ancillas_for(term_count: int) -> int:
    return max(0, math.ceil(math.log2(term_count))) if term_count > 1 else 0


def _canonical(op: LCUOperator) -> LCUOperator:
    # the zero operator has no positive-weight LCU; use I - I so the block is 0
    if len(op) == 0:
        n = op.qubit_count
        return LCUOperator(((1.0, PauliWord("I" * n)), (1.0, PauliWord("I" * n, -1))), n)
    return op


def prepare_state(op: LCUOperator) -> Circuit:
    """Circuit mapping ``|0>`` to ``sum_l sqrt(b_l/|b|) |l>`` on ``ceil(log2 L)`` qubits."""
    if len(op) == 0:
        raise ValueError("prepare_state needs a nonempty operator")
    a = ancillas_for(len(op))
    if a == 0:
        return Circuit(0)
    amplitudes = np.zeros(1 << a)
    amplitudes[: len(op)] = np.sqrt(op.weights / lcu_weight(op))
    return Circuit(a, (Gate(state_preparation_unitary(amplitudes), tuple(range(a))),))


def _word_circuit(word: PauliWord) -> Circuit:
    ops = [gate(pauli_matrix(letter), q) for q, letter in enumerate(word.letters) if letter != "I"]
    if word.sign < 0:
        ops.append(Phase(-1.0))
    return Circuit(word.qubit_count, tuple(ops))


def select(op: LCUOperator) -> Circuit:
    """``|l>|psi> -> |l> U_l |psi>`` with the word sign inside ``U_l``; padding acts as identity."""
    if len(op) == 0:
        raise ValueError("select needs a nonempty operator")
    a = ancillas_for(len(op))
    n = op.qubit_count
    system = tuple(range(a, a + n))
    controls = tuple(range(a))
    ops = []
    for index, word in enumerate(op.words):
        pattern = tuple((index >> (a - 1 - j)) & 1 for j in range(a))
        ops.append(Block(_word_circuit(word), system, controls, pattern))
    return Circuit(a + n, tuple(ops))


def encode_lcu(op: LCUOperator, name: str = "V") -> BlockEncoding:
    """``(|b|, ceil(log2 L), 0)`` encoding ``P^dagger U P``: two prepare calls, one select."""
    canonical = _canonical(op)
    a = ancillas_for(len(canonical))
    n = canonical.qubit_count
    ops = []
    prep = prepare_state(canonical)
    if a:
        ops.append(Block(prep, tuple(range(a))))
    ops.extend(select(canonical).ops)
    if a:
        ops.append(Block(prep.adjoint(), tuple(range(a))))
    return BlockEncoding(
        alpha=lcu_weight(canonical),
        ancilla_count=a,
        epsilon=0.0,
        circuit=Circuit(a + n, tuple(ops)),
        system_qubits=n,
        queries={f"P_{name}": 2, f"U_{name}": 1},
        info={"terms": len(canonical)},
    )


@dataclass(frozen=True, eq=False)
class InversePolynomial:
    """Odd polynomial ``g(x) = sum_n c_n T_{2n+1}(x)`` approximating ``1/x`` on ``[1/kappa, 1]``.

    ``c_n = 4 (-1)^n P(Bin(2B, 1/2) >= B + n + 1)``, the truncated Chebyshev
    expansion of ``(1 - (1 - x^2)^B) / x``.
    """

    coefficients: np.ndarray
    N: int
    B: int
    kappa: float
    epsilon: float

    @property
    def degree(self) -> int:
        return 2 * self.N + 1

    @property
    def chebyshev_coefficients(self) -> np.ndarray:
        full = np.zeros(self.degree + 1)
        full[1::2] = self.coefficients
        return full

    def __call__(self, x):
        return chebyshev.chebval(x, self.chebyshev_coefficients)

    @property
    def coefficient_sum(self) -> float:
        """``sum_n c_n``, which equals ``g(1)``."""
        return float(np.sum(self.coefficients))

    @property
    def coefficient_norm(self) -> float:
        return float(np.sum(np.abs(self.coefficients)))

    def max_deviation(self, points: int = 1000) -> float:
        """Largest ``|g(x) - 1/x|`` on an evenly spaced grid over ``[1/kappa, 1]``."""
        grid = np.linspace(1.0 / self.kappa, 1.0, points)
        return float(np.max(np.abs(self(grid) - 1.0 / grid)))

    def sup_norm(self) -> float:
        """Maximum of ``|g|`` on ``[-1, 1]`` (odd, so ``[0, 1]`` suffices), from a dense grid."""
        return _sup_norm(self)


@lru_cache(maxsize=64)
def _sup_norm(poly: InversePolynomial) -> float:
    points = max(8192, 32 * poly.degree)
    grid = np.sin(np.linspace(0.0, np.pi / 2, points))  # clusters near x = 1
    grid = np.concatenate([grid, np.linspace(0.0, 1.0, points)])
    return float(np.max(np.abs(poly(grid))))


def binomial_tails(B: int, N: int) -> np.ndarray:
    """``P(Bin(2B, 1/2) >= B + n + 1)`` for ``n = 0..N``."""
    tails = np.zeros(N + 1)
    if B <= EXACT_TAIL_LIMIT:
        # walk i = B down to 1 with C(2B, B+i) updated in place
        term = 1  # C(2B, 2B)
        running = 0
        total = 1 << (2 * B)
        for i in range(B, 0, -1):
            running += term
            n = i - 1
            if n <= N:
                tails[n] = running / total
            k = B + i  # C(2B, k-1) = C(2B, k) * k / (2B - k + 1)
            term = term * k // (2 * B - k + 1)
        return tails
    n = np.arange(N + 1)
    return stats.binom.sf(B + n, 2 * B, 0.5)


@lru_cache(maxsize=64)
def inverse_coefficients(kappa: float, epsilon: float) -> InversePolynomial:
    """Coefficients of the odd ``1/x`` approximant for condition bound ``kappa``.

    ``B = ceil(kappa^2 ln^2(2 kappa / epsilon))`` and
    ``N = ceil(sqrt(B ln(8 B / epsilon)))``.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidPrecision(f"epsilon must lie in (0, 1), got {epsilon}")
    if not kappa >= 1.0:
        raise InvalidPrecision(f"kappa must be at least 1, got {kappa}")
    B = max(1, math.ceil(kappa**2 * math.log(2.0 * kappa / epsilon) ** 2))
    N = math.ceil(math.sqrt(B * math.log(8.0 * B / epsilon)))
    signs = np.where(np.arange(N + 1) % 2 == 0, 1.0, -1.0)
    coefficients = 4.0 * signs * binomial_tails(B, N)
    return InversePolynomial(coefficients, N, B, float(kappa), float(epsilon))


def pseudo_inverse_charge(kappa: float, epsilon: float) -> int:
    """Applications of ``U_H'`` charged for one pseudo-inverse (constant 1 in the O-bound)."""
    return max(1, math.ceil(kappa * math.log(1.0 / epsilon)))


def pseudo_inverse(h_prime: LCUOperator, kappa: float, epsilon: float,
                   name: str = "H'") -> BlockEncoding:
    """Block encoding of the Moore-Penrose inverse of ``h_prime``.

    Requires every nonzero eigenvalue of ``h_prime / |a|`` to have magnitude in
    ``[1/kappa, 1]``; exact zeros (the shifted ground level) map to zero. The
    result satisfies ``||alpha * block - pinv(h_prime)|| <= epsilon / |a|``,
    which is at most ``epsilon * ||pinv(h_prime)||``.
    """
    poly = inverse_coefficients(float(kappa), float(epsilon))
    h_enc = encode_lcu(h_prime, name)
    a_norm = h_enc.alpha
    normalized = h_enc.block()
    normalized = 0.5 * (normalized + normalized.conj().T)
    values, vectors = np.linalg.eigh(normalized)

    kernel = np.abs(values) <= KERNEL_TOL
    live = np.abs(values[~kernel])
    if live.size and (live.min() < 1.0 / kappa - SPECTRUM_TOL or live.max() > 1.0 + SPECTRUM_TOL):
        raise SpectrumViolation(
            f"nonzero |eigenvalues| of H'/|a| span [{live.min():.6g}, {live.max():.6g}], "
            f"outside [1/kappa, 1] = [{1.0 / kappa:.6g}, 1]"
        )

    g = np.where(kernel, 0.0, poly(values))
    scale = max(poly.sup_norm(), float(np.max(np.abs(g))) if g.size else 0.0)
    b = g / scale
    c = np.sqrt(np.clip(1.0 - b**2, 0.0, None))
    blk = (vectors * b) @ vectors.conj().T
    comp = (vectors * c) @ vectors.conj().T
    dilation = np.block([[blk, comp], [comp, -blk]])
    n = h_prime.qubit_count
    charge = pseudo_inverse_charge(kappa, epsilon)
    return BlockEncoding(
        alpha=scale / a_norm,
        ancilla_count=1,
        epsilon=epsilon / scale,
        circuit=Circuit(n + 1, (Gate(dilation, tuple(range(n + 1))),)),
        system_qubits=n,
        queries=merge_queries(h_enc.queries, scale=charge),
        info={
            "lcu_weight": a_norm,
            "polynomial_degree": poly.degree,
            "polynomial_scale": scale,
            "kappa": float(kappa),
            "target_epsilon": float(epsilon),
            "nominal_ancillas": h_enc.ancilla_count + 1,
        },
    )


def product_vav(v_enc: BlockEncoding, a_enc: BlockEncoding) -> BlockEncoding:
    """Encode ``V A V`` from an encoding of ``V`` used twice and one of ``A``.

    Ancilla layout follows the three-register picture: ``V`` ancillas, then
    ``A`` ancillas, then the second copy of the ``V`` ancillas, then the system.
    """
    if v_enc.system_qubits != a_enc.system_qubits:
        raise DimensionMismatch("V and A encodings act on different system sizes")
    aL, aA, n = v_enc.ancilla_count, a_enc.ancilla_count, v_enc.system_qubits
    total = 2 * aL + aA + n
    system = tuple(range(2 * aL + aA, total))
    first = tuple(range(aL)) + system
    middle = tuple(range(aL, aL + aA)) + system
    last = tuple(range(aL + aA, 2 * aL + aA)) + system
    ops = (
        Block(v_enc.circuit, first),
        Block(a_enc.circuit, middle),
        Block(v_enc.circuit, last),
    )
    lam_v, lam_a = v_enc.alpha, a_enc.alpha
    err_v = lam_v * v_enc.epsilon
    err_a = lam_a * a_enc.epsilon
    # absolute errors combine as beta*gamma*e_a + alpha*gamma*e_b + alpha*beta*e_c
    combined = lam_a * lam_v * err_v + lam_v * lam_v * err_a + lam_v * lam_a * err_v
    alpha = lam_v * lam_v * lam_a
    return BlockEncoding(
        alpha=alpha,
        ancilla_count=2 * aL + aA,
        epsilon=combined / alpha,
        circuit=Circuit(total, ops),
        system_qubits=n,
        queries=merge_queries(v_enc.queries, a_enc.queries, v_enc.queries),
        info={"factors": (v_enc.info, a_enc.info)},
    )


def encode_k(v: LCUOperator, h0: LCUOperator, e0: float, kappa: float, epsilon: float,
             eig=None) -> BlockEncoding:
    """Encoding of ``K = V (E0 I - H0)^+ V`` with ``||alpha * block - K|| <= epsilon``.

    The pseudo-inverse precision is tightened by ``|a| / |b|^2`` so that the
    error, multiplied through the two ``V`` factors, stays below ``epsilon``.
    """
    if v.qubit_count != h0.qubit_count:
        raise DimensionMismatch("V and H0 act on different qubit counts")
    if not epsilon > 0:
        raise InvalidPrecision("epsilon must be positive")
    if eig is None:
        eig = eigensystem(to_dense(h0))
    if not validate_perturbation(v, eig):
        raise PerturbationInvalid("V couples degenerate eigenstates of H0")
    h_prime = shifted_hamiltonian(h0, e0)
    a_norm = lcu_weight(h_prime)
    b_norm = lcu_weight(v)
    poly_eps = epsilon * a_norm / b_norm**2 if b_norm > 0 else epsilon
    poly_eps = min(poly_eps, 0.5)
    v_enc = encode_lcu(v, "V")
    a_enc = pseudo_inverse(h_prime, kappa, poly_eps)
    out = product_vav(v_enc, a_enc)
    info = dict(out.info)
    info.update({"b_norm": b_norm, "a_norm": a_norm, "kappa": float(kappa),
                 "target_epsilon": float(epsilon), "polynomial_epsilon": poly_eps})
    return BlockEncoding(out.alpha, out.ancilla_count, out.epsilon, out.circuit,
                         out.system_qubits, out.queries, info)
