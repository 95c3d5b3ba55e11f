"""Exact classical reference values by dense diagonalization.

Also generates Feynman-Kitaev clock Hamiltonians, whose history-state sector
has a closed-form spectrum and so makes a convenient analytic test instance.
FK operators are laid out as ``clock (x) system`` with the clock register in
the most significant qubits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import check_dense
from .errors import DegenerateGround, DimensionMismatch
from .operators import EigenSystem, LCUOperator, eigensystem, pauli_decompose, to_dense

PINV_RELATIVE_TOL = 1e-10


def _dense(op) -> np.ndarray:
    if isinstance(op, LCUOperator):
        return to_dense(op)
    return np.asarray(op, dtype=complex)


def ground_state(h0, degeneracy_tol: float | None = None) -> EigenSystem:
    """Full sorted eigendecomposition; refuses a degenerate ground level."""
    matrix = _dense(h0)
    eig = eigensystem(matrix)
    if eig.dimension > 1:
        tol = eig.degeneracy_tolerance() if degeneracy_tol is None else degeneracy_tol
        gap = eig.eigenvalues[1] - eig.eigenvalues[0]
        if gap <= tol:
            raise DegenerateGround(f"ground level is degenerate (E1 - E0 = {gap:.3e})")
    return eig


def moore_penrose(matrix: np.ndarray, relative_tol: float = PINV_RELATIVE_TOL) -> np.ndarray:
    """Pseudo-inverse of a Hermitian matrix by eigenvalue inversion.

    Eigenvalues with ``|lambda| <= relative_tol * max|lambda|`` are treated as zero.
    """
    matrix = np.asarray(matrix, dtype=complex)
    values, vectors = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    cutoff = relative_tol * (np.max(np.abs(values)) if values.size else 0.0)
    inverted = np.zeros_like(values)
    live = np.abs(values) > cutoff
    inverted[live] = 1.0 / values[live]
    return (vectors * inverted) @ vectors.conj().T


def _check(h0, v, eig):
    h = _dense(h0)
    vm = _dense(v)
    if h.shape != vm.shape:
        raise DimensionMismatch(f"H0 is {h.shape}, V is {vm.shape}")
    if eig is None:
        eig = ground_state(h)
    elif eig.dimension > 1 and eig.eigenvalues[1] - eig.eigenvalues[0] <= eig.degeneracy_tolerance():
        raise DegenerateGround("ground level is degenerate")
    return h, vm, eig


def second_derivative_sum(h0, v, eig: EigenSystem | None = None) -> float:
    """``2 sum_{k != 0} |<E_k|V|E_0>|^2 / (E_0 - E_k)``."""
    _, vm, eig = _check(h0, v, eig)
    coupling = eig.eigenvectors.conj().T @ (vm @ eig.ground_vector)
    gaps = eig.ground_energy - eig.eigenvalues
    terms = np.abs(coupling[1:]) ** 2 / gaps[1:]
    return float(2.0 * np.sum(terms))


def exact_k_expectation(h0, v, eig: EigenSystem | None = None, e0: float | None = None) -> float:
    """``<E0| V^dagger pinv(E0 I - H0) V |E0>`` by explicit matrices."""
    h, vm, eig = _check(h0, v, eig)
    e0 = eig.ground_energy if e0 is None else e0
    shifted = e0 * np.eye(h.shape[0]) - h
    k = vm.conj().T @ moore_penrose(shifted) @ vm
    ground = eig.ground_vector
    return float(np.vdot(ground, k @ ground).real)


def k_operator(h0, v, e0: float) -> np.ndarray:
    h, vm = _dense(h0), _dense(v)
    return vm.conj().T @ moore_penrose(e0 * np.eye(h.shape[0]) - h) @ vm


def _ground_energy(matrix: np.ndarray) -> float:
    values = np.linalg.eigvalsh(matrix)
    if values.size > 1 and values[1] - values[0] <= max(1e-9 * (values[-1] - values[0]), 1e-12):
        raise DegenerateGround("ground level is degenerate along the finite-difference stencil")
    return float(values[0])


def finite_difference_d2(h0, v, h: float | None = None, richardson: bool = False) -> float:
    """Central second difference of the ground energy of ``H0 + s V`` at ``s = 0``.

    The default step is ``1e-3`` times the spectral gap. With ``richardson``
    the ``h`` and ``h/2`` stencils are combined to cancel the ``h**2`` term.
    """
    hm, vm = _dense(h0), _dense(v)
    if hm.shape != vm.shape:
        raise DimensionMismatch(f"H0 is {hm.shape}, V is {vm.shape}")
    if h is None:
        values = np.linalg.eigvalsh(hm)
        gap = values[1] - values[0] if values.size > 1 else 1.0
        h = 1e-3 * gap if gap > 0 else 1e-3
    if not h > 0:
        raise ValueError("step must be positive")

    def stencil(step):
        plus = _ground_energy(hm + step * vm)
        centre = _ground_energy(hm)
        minus = _ground_energy(hm - step * vm)
        return (plus - 2.0 * centre + minus) / step**2

    coarse = stencil(h)
    if not richardson:
        return coarse
    fine = stencil(h / 2)
    return (4.0 * fine - coarse) / 3.0


@dataclass(frozen=True, eq=False)
class FKInstance:
    """A gate sequence ``U_1 .. U_L`` on ``n`` system qubits.

    Each gate is ``(matrix, qubits)``; ``U_0`` is the implicit identity.
    """

    gates: tuple
    system_qubits: int

    @property
    def L(self) -> int:
        return len(self.gates)

    @property
    def clock_qubits(self) -> int:
        return max(1, math.ceil(math.log2(self.L + 1)))

    @property
    def total_qubits(self) -> int:
        return self.clock_qubits + self.system_qubits

    @classmethod
    def identity(cls, L: int, system_qubits: int = 1) -> "FKInstance":
        eye = np.eye(2, dtype=complex)
        return cls(tuple((eye, (0,)) for _ in range(L)), system_qubits)

    def padded(self) -> "FKInstance":
        """Extend with identity gates until ``L + 1`` is a power of two."""
        target = (1 << self.clock_qubits) - 1
        eye = np.eye(2, dtype=complex)
        return FKInstance(self.gates + tuple((eye, (0,)) for _ in range(target - self.L)),
                          self.system_qubits)

    def gate_unitaries(self) -> list:
        from .simulator import Circuit, Gate

        n = self.system_qubits
        return [Circuit(n, (Gate(np.asarray(m, dtype=complex), tuple(q)),)).to_matrix()
                for m, q in self.gates]

    def history_vectors(self) -> list:
        """``U_t ... U_1 |0...0>`` for ``t = 0..L``."""
        state = np.zeros(1 << self.system_qubits, dtype=complex)
        state[0] = 1.0
        out = [state]
        for u in self.gate_unitaries():
            state = u @ state
            out.append(state)
        return out


def _clock_projector(dim: int, row: int, col: int) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=complex)
    out[row, col] = 1.0
    return out


def feynman_kitaev_matrix(instance: FKInstance, input_penalty: float = 0.0) -> np.ndarray:
    """Dense ``H_FK`` on ``clock (x) system``.

    ``input_penalty > 0`` adds ``penalty * sum_i |1><1|_i (x) |0><0|_clock``,
    which makes the history state of ``|0...0>`` the unique ground state.
    """
    inst = instance.padded()
    check_dense(inst.total_qubits, "Feynman-Kitaev Hamiltonian")
    clock_dim = 1 << inst.clock_qubits
    sys_dim = 1 << inst.system_qubits
    eye = np.eye(sys_dim, dtype=complex)
    h = np.zeros((clock_dim * sys_dim,) * 2, dtype=complex)
    for t, u in enumerate(inst.gate_unitaries(), start=1):
        forward = _clock_projector(clock_dim, t, t - 1)
        h -= np.kron(forward, u) + np.kron(forward.T, u.conj().T)
        h += np.kron(_clock_projector(clock_dim, t, t), eye)
        h += np.kron(_clock_projector(clock_dim, t - 1, t - 1), eye)
    if input_penalty:
        n = inst.system_qubits
        ones = np.zeros(sys_dim)
        for index in range(sys_dim):
            ones[index] = bin(index).count("1")  # sum_i |1><1|_i is the Hamming weight
        h += input_penalty * np.kron(_clock_projector(clock_dim, 0, 0), np.diag(ones))
    return h


def feynman_kitaev(instance: FKInstance, input_penalty: float = 0.0) -> LCUOperator:
    """Pauli-LCU form of :func:`feynman_kitaev_matrix`."""
    return pauli_decompose(feynman_kitaev_matrix(instance, input_penalty))


def fk_expected_spectrum(L: int) -> np.ndarray:
    k = np.arange(L + 1)
    return 2.0 * (1.0 - np.cos(np.pi * k / (L + 1)))


def fk_connected_spectrum(instance: FKInstance, hamiltonian: np.ndarray | None = None) -> np.ndarray:
    """Eigenvalues of ``H_FK`` restricted to the span of ``|t> (x) U_t..U_1|0>``."""
    inst = instance.padded()
    h = feynman_kitaev_matrix(inst) if hamiltonian is None else hamiltonian
    clock_dim = 1 << inst.clock_qubits
    basis = []
    for t, phi in enumerate(inst.history_vectors()):
        tick = np.zeros(clock_dim)
        tick[t] = 1.0
        basis.append(np.kron(tick, phi))
    iso = np.array(basis).T
    return np.linalg.eigvalsh(iso.conj().T @ h @ iso)


def history_state(instance: FKInstance, k: int = 0) -> np.ndarray:
    """``(L+1)^{-1/2} sum_j exp(2 pi i j k / (L+1)) |j> (x) U_j..U_1|0>``."""
    inst = instance.padded()
    clock_dim = 1 << inst.clock_qubits
    L = inst.L
    out = np.zeros(clock_dim << inst.system_qubits, dtype=complex)
    for j, phi in enumerate(inst.history_vectors()):
        tick = np.zeros(clock_dim, dtype=complex)
        tick[j] = np.exp(2j * np.pi * j * k / (L + 1))
        out += np.kron(tick, phi)
    return out / np.sqrt(L + 1)


def fk_phase_rotation(L: int, system_qubits: int = 0) -> np.ndarray:
    """``sum_j exp(2 pi i j / (L+1)) |j><j| (x) I`` on the padded clock."""
    clock_qubits = max(1, math.ceil(math.log2(L + 1)))
    check_dense(clock_qubits + system_qubits, "phase rotation")
    j = np.arange(1 << clock_qubits)
    diag = np.exp(2j * np.pi * j / (L + 1))
    return np.kron(np.diag(diag), np.eye(1 << system_qubits))


def fk_perturbation(instance: FKInstance) -> np.ndarray:
    """``R_+ P0 + P0 R_+^dagger`` with ``P0 = |0><0|`` on the first system qubit."""
    inst = instance.padded()
    rot = fk_phase_rotation(inst.L, inst.system_qubits)
    clock_dim = 1 << inst.clock_qubits
    zero = np.diag([1.0, 0.0])
    proj = np.kron(np.eye(clock_dim), np.kron(zero, np.eye(1 << (inst.system_qubits - 1))))
    return rot @ proj + proj @ rot.conj().T
