"""Dense statevector simulation.

A :class:`Circuit` is an ordered list of operations on ``qubit_count``
qubits. Operations are

* :class:`Gate` - a dense unitary on a tuple of qubits,
* :class:`Phase` - multiply the amplitudes whose control qubits match a bit
  pattern by a unit-modulus scalar (an empty pattern is a global phase),
* :class:`Block` - a whole sub-circuit placed on a tuple of qubits, optionally
  conditioned on a control bit pattern,
* :class:`QFT` - the (inverse) quantum Fourier transform on a register.

Qubit 0 is the most significant bit of a basis index. Internally a state is a
tensor of shape ``(2,) * n + (batch,)`` so that the same code applies a
circuit to one vector or to all columns of the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import check_dense, check_statevector
from .errors import DimensionMismatch

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True, eq=False)
class Gate:
    matrix: np.ndarray
    qubits: tuple

    def adjoint(self) -> "Gate":
        return Gate(self.matrix.conj().T, self.qubits)


@dataclass(frozen=True)
class Phase:
    value: complex
    controls: tuple = ()
    pattern: tuple = ()

    def adjoint(self) -> "Phase":
        return Phase(np.conj(self.value), self.controls, self.pattern)


@dataclass(frozen=True, eq=False)
class Block:
    circuit: "Circuit"
    qubits: tuple
    controls: tuple = ()
    pattern: tuple = ()

    def adjoint(self) -> "Block":
        return Block(self.circuit.adjoint(), self.qubits, self.controls, self.pattern)


@dataclass(frozen=True)
class QFT:
    qubits: tuple
    inverse: bool = True

    def adjoint(self) -> "QFT":
        return QFT(self.qubits, not self.inverse)


def _touched(op) -> tuple:
    if isinstance(op, Gate):
        return op.qubits
    if isinstance(op, Phase):
        return op.controls
    if isinstance(op, Block):
        return op.controls + op.qubits
    return op.qubits


@dataclass(frozen=True, eq=False)
class Circuit:
    qubit_count: int
    ops: tuple = ()

    def __post_init__(self):
        for op in self.ops:
            qubits = _touched(op)
            if len(set(qubits)) != len(qubits):
                raise ValueError(f"repeated qubit in {type(op).__name__} on {qubits}")
            if any(q < 0 or q >= self.qubit_count for q in qubits):
                raise ValueError(
                    f"{type(op).__name__} touches {qubits}, circuit has {self.qubit_count} qubits"
                )
            if isinstance(op, Gate) and op.matrix.shape != (1 << len(op.qubits),) * 2:
                raise DimensionMismatch(f"gate matrix {op.matrix.shape} on qubits {op.qubits}")
            if isinstance(op, Block) and op.circuit.qubit_count != len(op.qubits):
                raise DimensionMismatch("block qubit map does not match its circuit size")
            if isinstance(op, (Phase, Block)) and len(op.pattern) != len(op.controls):
                raise ValueError("control pattern length must match control qubits")

    def then(self, *ops) -> "Circuit":
        return Circuit(self.qubit_count, self.ops + tuple(ops))

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.qubit_count != self.qubit_count:
            raise DimensionMismatch("cannot concatenate circuits of different widths")
        return Circuit(self.qubit_count, self.ops + other.ops)

    def adjoint(self) -> "Circuit":
        return Circuit(self.qubit_count, tuple(op.adjoint() for op in reversed(self.ops)))

    def power(self, exponent: int) -> "Circuit":
        return Circuit(self.qubit_count, self.ops * exponent)

    def embed(self, qubits: Sequence[int], total: int) -> "Circuit":
        """This circuit as a single block acting on ``qubits`` of a wider register."""
        return Circuit(total, (Block(self, tuple(qubits)),))

    def to_matrix(self) -> np.ndarray:
        check_dense(self.qubit_count, "circuit")
        dim = 1 << self.qubit_count
        tensor = np.eye(dim, dtype=complex).reshape((2,) * self.qubit_count + (dim,))
        tensor = _run(self.ops, tensor, list(range(self.qubit_count)))
        return tensor.reshape(dim, dim)


def gate(matrix, *qubits) -> Gate:
    return Gate(np.asarray(matrix, dtype=complex), tuple(qubits))


def _apply_gate(tensor, matrix, axes):
    k = len(axes)
    if k == 0:
        return tensor * matrix[0, 0]
    op = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def _control_index(ndim, axes, pattern):
    index = [slice(None)] * ndim
    for axis, bit in zip(axes, pattern):
        index[axis] = bit
    return tuple(index)


def _run(ops, tensor, axis_of):
    """Apply ``ops`` to ``tensor``; circuit qubit ``q`` lives on axis ``axis_of[q]``."""
    for op in ops:
        if isinstance(op, Gate):
            tensor = _apply_gate(tensor, op.matrix, [axis_of[q] for q in op.qubits])
        elif isinstance(op, Phase):
            if not op.controls:
                tensor = tensor * op.value
            else:
                index = _control_index(tensor.ndim, [axis_of[q] for q in op.controls], op.pattern)
                tensor = tensor.copy()
                tensor[index] *= op.value
        elif isinstance(op, Block):
            body_axes = [axis_of[q] for q in op.qubits]
            if not op.controls:
                tensor = _run(op.circuit.ops, tensor, body_axes)
                continue
            control_axes = sorted(axis_of[q] for q in op.controls)
            pattern = dict(zip((axis_of[q] for q in op.controls), op.pattern))
            index = _control_index(tensor.ndim, control_axes, [pattern[a] for a in control_axes])
            # slicing removes the control axes; shift the remaining body axes down
            shifted = [a - sum(c < a for c in control_axes) for a in body_axes]
            tensor = tensor.copy()
            tensor[index] = _run(op.circuit.ops, tensor[index], shifted)
        elif isinstance(op, QFT):
            axes = [axis_of[q] for q in op.qubits]
            k = len(axes)
            moved = np.moveaxis(tensor, axes, list(range(k)))
            shape = moved.shape
            flat = moved.reshape((1 << k, -1))
            # numpy's forward FFT has kernel exp(-2 pi i jk/N), i.e. the inverse QFT
            flat = np.fft.fft(flat, axis=0, norm="ortho") if op.inverse else np.fft.ifft(
                flat, axis=0, norm="ortho")
            tensor = np.moveaxis(flat.reshape(shape), list(range(k)), axes)
        else:
            raise TypeError(f"unknown operation {op!r}")
    return tensor


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes over ``qubit_count`` qubits.

    ``normalized`` is False only for deliberately projected, not yet
    renormalized states.
    """

    amplitudes: np.ndarray
    qubit_count: int
    normalized: bool = True

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 1 << self.qubit_count:
            raise DimensionMismatch(
                f"{amps.size} amplitudes cannot describe {self.qubit_count} qubits"
            )
        if self.normalized and abs(np.linalg.norm(amps) - 1.0) > 1e-10:
            raise ValueError("state is not normalized; pass normalized=False for projections")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, qubit_count: int) -> "StateVector":
        amps = np.zeros(1 << qubit_count, dtype=complex)
        amps[0] = 1.0
        return cls(amps, qubit_count)

    @classmethod
    def basis(cls, qubit_count: int, index: int) -> "StateVector":
        amps = np.zeros(1 << qubit_count, dtype=complex)
        amps[index] = 1.0
        return cls(amps, qubit_count)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(np.kron(self.amplitudes, other.amplitudes),
                           self.qubit_count + other.qubit_count,
                           self.normalized and other.normalized)

    def project(self, qubits: Sequence[int], bits: Sequence[int]) -> "StateVector":
        tensor = np.array(self.amplitudes).reshape((2,) * self.qubit_count)
        keep = np.zeros_like(tensor)
        index = _control_index(tensor.ndim, list(qubits), list(bits))
        keep[index] = tensor[index]
        return StateVector(keep.reshape(-1), self.qubit_count, normalized=False)


def apply(circuit: Circuit, state: StateVector) -> StateVector:
    """Return ``U |state>`` for the circuit's unitary ``U``."""
    if circuit.qubit_count != state.qubit_count:
        raise DimensionMismatch(
            f"circuit has {circuit.qubit_count} qubits, state has {state.qubit_count}"
        )
    check_statevector(circuit.qubit_count)
    n = circuit.qubit_count
    tensor = np.array(state.amplitudes).reshape((2,) * n + (1,))
    tensor = _run(circuit.ops, tensor, list(range(n)))
    return StateVector(tensor.reshape(-1), n, state.normalized)


def apply_columns(circuit: Circuit, columns: np.ndarray) -> np.ndarray:
    """Apply the circuit to every column of a ``(2**n, batch)`` array."""
    n = circuit.qubit_count
    check_statevector(n)
    columns = np.asarray(columns, dtype=complex)
    if columns.shape[0] != 1 << n:
        raise DimensionMismatch("column length does not match the circuit width")
    tensor = columns.reshape((2,) * n + (columns.shape[1],))
    return _run(circuit.ops, tensor, list(range(n))).reshape(columns.shape)


def controlled(circuit: Circuit, control_count: int = 1, pattern=None) -> Circuit:
    """Condition ``circuit`` on ``control_count`` new leading qubits.

    By default every control must read 1; ``pattern`` selects another bit string.
    """
    if control_count < 1:
        raise ValueError("need at least one control qubit")
    pattern = tuple(pattern) if pattern is not None else (1,) * control_count
    total = control_count + circuit.qubit_count
    block = Block(circuit, tuple(range(control_count, total)),
                  tuple(range(control_count)), pattern)
    return Circuit(total, (block,))


def qft(register_size: int) -> Circuit:
    if register_size < 1:
        raise ValueError("register size must be positive")
    return Circuit(register_size, (QFT(tuple(range(register_size)), inverse=False),))


def inverse_qft(register_size: int) -> Circuit:
    if register_size < 1:
        raise ValueError("register size must be positive")
    return Circuit(register_size, (QFT(tuple(range(register_size)), inverse=True),))


def qft_matrix(register_size: int) -> np.ndarray:
    """Reference QFT matrix with entries ``omega**(j k) / sqrt(2**k)``."""
    dim = 1 << register_size
    j = np.arange(dim)
    return np.exp(2j * np.pi * np.outer(j, j) / dim) / np.sqrt(dim)


def outcome_probability(state: StateVector, qubits: Sequence[int], bits: Sequence[int]) -> float:
    """Squared norm of the projection of ``state`` onto ``bits`` on ``qubits``."""
    qubits, bits = list(qubits), list(bits)
    if len(qubits) != len(bits):
        raise ValueError("need one bit per qubit")
    if any(q < 0 or q >= state.qubit_count for q in qubits) or len(set(qubits)) != len(qubits):
        raise ValueError(f"invalid qubit indices {qubits}")
    tensor = state.amplitudes.reshape((2,) * state.qubit_count)
    selected = tensor[_control_index(tensor.ndim, qubits, bits)]
    return float(np.sum(np.abs(selected) ** 2))


def marginal_distribution(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Outcome probabilities of measuring ``qubits``, indexed MSB-first."""
    qubits = list(qubits)
    n = state.qubit_count
    probs = np.abs(state.amplitudes.reshape((2,) * n)) ** 2
    rest = [q for q in range(n) if q not in qubits]
    probs = np.moveaxis(probs, qubits, list(range(len(qubits))))
    return probs.sum(axis=tuple(range(len(qubits), n))).reshape(-1) if rest else probs.reshape(-1)


def state_preparation_unitary(vector: np.ndarray) -> np.ndarray:
    """A unitary whose first column is ``vector`` (a phased Householder reflection)."""
    vector = np.asarray(vector, dtype=complex).reshape(-1)
    vector = vector / np.linalg.norm(vector)
    phase = np.exp(1j * np.angle(vector[0])) if abs(vector[0]) > 0 else 1.0
    w = vector / phase
    u = -w
    u[0] += 1.0
    dim = vector.size
    norm2 = np.vdot(u, u).real
    if norm2 < 1e-30:
        return phase * np.eye(dim, dtype=complex)
    return phase * (np.eye(dim, dtype=complex) - 2.0 * np.outer(u, u.conj()) / norm2)
