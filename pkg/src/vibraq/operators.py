"""Pauli-word operators and their linear-combination-of-unitaries form.

Conventions used throughout the package:

* Qubit 0 is the most significant bit of a computational-basis index, so a
  word ``"XZ"`` is ``kron(X, Z)``.
* Signs live on the word, never on the weight. ``-0.5 * XZ`` is stored as
  weight ``0.5`` on the word ``"-XZ"`` so that every LCU weight is strictly
  positive and prepare amplitudes stay real and nonnegative.
* Term order is preserved from construction and summations run in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import check_dense
from .errors import DimensionMismatch

PAULI_LETTERS = "IXYZ"

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_matrix(letter: str) -> np.ndarray:
    return _SINGLE[letter].copy()


@dataclass(frozen=True)
class PauliWord:
    letters: str
    sign: int = 1

    def __post_init__(self):
        if not self.letters:
            raise ValueError("a Pauli word needs at least one letter")
        bad = set(self.letters) - set(PAULI_LETTERS)
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def qubit_count(self) -> int:
        return len(self.letters)

    @classmethod
    def parse(cls, text: str) -> "PauliWord":
        """Parse ``"XZY"`` or ``"-XZY"`` (case-insensitive)."""
        text = text.strip().upper()
        sign = 1
        if text.startswith("-"):
            sign, text = -1, text[1:]
        elif text.startswith("+"):
            text = text[1:]
        return cls(text, sign)

    def __str__(self):
        return ("-" if self.sign < 0 else "") + self.letters

    def negated(self) -> "PauliWord":
        return PauliWord(self.letters, -self.sign)

    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    def to_dense(self) -> np.ndarray:
        """Signed dense matrix, built as a phased permutation in O(2**n)."""
        n = self.qubit_count
        check_dense(n, "Pauli word")
        dim = 1 << n
        cols = np.arange(dim)
        rows = cols.copy()
        phase = np.full(dim, complex(self.sign))
        for q, letter in enumerate(self.letters):
            shift = n - 1 - q
            bit = (cols >> shift) & 1
            if letter in "XY":
                rows ^= 1 << shift
            if letter == "Z":
                phase *= 1 - 2 * bit
            elif letter == "Y":
                # Y|0> = i|1>, Y|1> = -i|0>
                phase *= 1j * (1 - 2 * bit)
        out = np.zeros((dim, dim), dtype=complex)
        out[rows, cols] = phase
        return out


@dataclass(frozen=True)
class LCUOperator:
    """Hermitian operator ``sum_l weight_l * word_l`` with positive weights.

    An empty term list is the zero operator.
    """

    terms: tuple = ()
    qubit_count: int = 1

    def __post_init__(self):
        if self.qubit_count < 1:
            raise ValueError("qubit_count must be positive")
        for weight, word in self.terms:
            if not weight > 0:
                raise ValueError(f"LCU weights must be strictly positive, got {weight}")
            if word.qubit_count != self.qubit_count:
                raise DimensionMismatch(
                    f"word {word} has {word.qubit_count} qubits, operator has {self.qubit_count}"
                )

    @classmethod
    def from_terms(cls, terms: Iterable, qubit_count: int | None = None) -> "LCUOperator":
        """Build from ``(coefficient, word)`` pairs.

        ``word`` may be a :class:`PauliWord` or a string. Negative coefficients
        are folded into the word sign and zero coefficients are dropped.
        """
        folded = []
        for coeff, word in terms:
            if isinstance(word, str):
                word = PauliWord.parse(word)
            coeff = float(coeff)
            if qubit_count is None:
                qubit_count = word.qubit_count
            if coeff == 0.0:
                continue
            if coeff < 0:
                coeff, word = -coeff, word.negated()
            folded.append((coeff, word))
        if qubit_count is None:
            raise ValueError("qubit_count is required for an empty operator")
        return cls(tuple(folded), qubit_count)

    @classmethod
    def zero(cls, qubit_count: int) -> "LCUOperator":
        return cls((), qubit_count)

    def __len__(self):
        return len(self.terms)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms], dtype=float)

    @property
    def words(self) -> list:
        return [w for _, w in self.terms]

    def scaled(self, factor: float) -> "LCUOperator":
        return LCUOperator.from_terms(
            [(factor * w, word) for w, word in self.terms], self.qubit_count
        )

    def __add__(self, other: "LCUOperator") -> "LCUOperator":
        if other.qubit_count != self.qubit_count:
            raise DimensionMismatch("cannot add operators on different qubit counts")
        return LCUOperator(self.terms + other.terms, self.qubit_count)

    def to_records(self) -> list:
        """Signed ``{"pauli", "coeff"}`` records, the job-file term format."""
        return [
            {"pauli": word.letters, "coeff": weight * word.sign} for weight, word in self.terms
        ]

    @classmethod
    def from_records(cls, records: Sequence[dict], qubit_count: int | None = None):
        return cls.from_terms([(r["coeff"], r["pauli"]) for r in records], qubit_count)


def lcu_weight(op: LCUOperator) -> float:
    """Sum of the LCU weights, accumulated sequentially in term order."""
    total = 0.0
    for weight, _ in op.terms:
        total += weight
    return total


def to_dense(op: LCUOperator) -> np.ndarray:
    check_dense(op.qubit_count)
    dim = 1 << op.qubit_count
    out = np.zeros((dim, dim), dtype=complex)
    for weight, word in op.terms:
        out += weight * word.to_dense()
    return out


def shifted_hamiltonian(h0: LCUOperator, e0: float) -> LCUOperator:
    """LCU form of ``e0 * I - h0``.

    The identity term comes first with weight ``|e0|`` so the total weight is
    ``|e0| + sum_j a_j``, the normalization the pseudo-inverse step divides by.
    """
    if not np.isfinite(e0):
        raise ValueError("e0 must be finite")
    n = h0.qubit_count
    terms = []
    if e0 != 0.0:
        terms.append((abs(e0), PauliWord("I" * n, 1 if e0 > 0 else -1)))
    terms.extend((weight, word.negated()) for weight, word in h0.terms)
    return LCUOperator(tuple(terms), n)


def pauli_decompose(matrix: np.ndarray, tol: float = 1e-12) -> LCUOperator:
    """Expand a Hermitian matrix over Pauli words.

    Uses the per-qubit transform ``(m00, m01, m10, m11) -> (I, X, Y, Z)``
    applied along every qubit axis, which costs O(n 4**n) instead of a trace
    per word. Terms with ``|coeff| <= tol`` are dropped; words come out in
    lexicographic ``IXYZ`` order.
    """
    matrix = np.asarray(matrix, dtype=complex)
    dim = matrix.shape[0]
    if matrix.shape != (dim, dim) or dim & (dim - 1) or dim < 2:
        raise DimensionMismatch(f"expected a square 2**n matrix, got {matrix.shape}")
    if np.max(np.abs(matrix - matrix.conj().T)) > 1e-10 * max(1.0, np.max(np.abs(matrix))):
        raise ValueError("pauli_decompose expects a Hermitian matrix")
    n = dim.bit_length() - 1
    check_dense(n)
    # transform[r, c, p] = Tr(P_p |c><r|) / 2 contribution of entry (r, c)
    transform = np.zeros((2, 2, 4), dtype=complex)
    transform[0, 0] = [0.5, 0, 0, 0.5]
    transform[1, 1] = [0.5, 0, 0, -0.5]
    transform[0, 1] = [0, 0.5, 0.5j, 0]
    transform[1, 0] = [0, 0.5, -0.5j, 0]
    tensor = matrix.reshape((2,) * (2 * n))
    # axes: row bits r0..r_{n-1}, column bits c0..c_{n-1}; contract pairs one at a time
    for q in range(n):
        tensor = np.tensordot(tensor, transform, axes=([0, n - q], [0, 1]))
    coeffs = tensor.reshape(-1).real
    terms = []
    for index in np.flatnonzero(np.abs(coeffs) > tol):
        letters = "".join(
            PAULI_LETTERS[(index >> (2 * (n - 1 - q))) & 3] for q in range(n)
        )
        terms.append((coeffs[index], letters))
    return LCUOperator.from_terms(terms, n)


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues with eigenvectors as columns; index 0 is the ground."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    ground_index: int = 0

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[self.ground_index])

    @property
    def ground_vector(self) -> np.ndarray:
        return self.eigenvectors[:, self.ground_index]

    @property
    def dimension(self) -> int:
        return len(self.eigenvalues)

    def degeneracy_tolerance(self, relative: float = 1e-9) -> float:
        spread = float(self.eigenvalues[-1] - self.eigenvalues[0])
        return max(relative * spread, 1e-12)


def eigensystem(matrix: np.ndarray) -> EigenSystem:
    values, vectors = np.linalg.eigh(matrix)
    order = np.argsort(values, kind="stable")
    return EigenSystem(values[order], vectors[:, order])


def _as_dense(op) -> np.ndarray:
    if isinstance(op, LCUOperator):
        return to_dense(op)
    return np.asarray(op, dtype=complex)


def validate_perturbation(v, eig: EigenSystem, tol: float = 1e-9,
                          degeneracy_tol: float | None = None) -> bool:
    """Check that ``v`` has no matrix elements inside degenerate eigenspaces.

    True iff ``|<E_j|v|E_k>| <= tol`` for every pair ``j != k`` whose
    eigenvalues agree to within ``degeneracy_tol`` (default: 1e-9 times the
    spectral range).
    """
    dense = _as_dense(v)
    if dense.shape != (eig.dimension, eig.dimension):
        raise DimensionMismatch(
            f"perturbation is {dense.shape}, eigensystem has dimension {eig.dimension}"
        )
    if degeneracy_tol is None:
        degeneracy_tol = eig.degeneracy_tolerance()
    values = eig.eigenvalues
    close = np.abs(values[:, None] - values[None, :]) <= degeneracy_tol
    np.fill_diagonal(close, False)
    if not close.any():
        return True
    elements = eig.eigenvectors.conj().T @ dense @ eig.eigenvectors
    return bool(np.all(np.abs(elements[close]) <= tol))
