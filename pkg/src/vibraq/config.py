"""Process-wide size limits.

The dense-matrix cap bounds every explicit ``2**n x 2**n`` realization. It
defaults to 10 qubits and can be raised through ``VIBRAQ_CAP_QUBITS`` or
:func:`set_cap_qubits` (the CLI flag ``--cap-qubits`` calls the latter).
Statevector simulation is cheaper than dense matrices and has its own, larger
limit.
"""

import os

from .errors import CapExceeded

DEFAULT_CAP_QUBITS = 10
STATEVECTOR_CAP_QUBITS = 24

_override = None


def cap_qubits() -> int:
    if _override is not None:
        return _override
    env = os.environ.get("VIBRAQ_CAP_QUBITS")
    if env:
        return int(env)
    return DEFAULT_CAP_QUBITS


def set_cap_qubits(value):
    """Set (or with ``None`` clear) the in-process dense cap."""
    global _override
    if value is not None and int(value) < 1:
        raise ValueError("cap must be a positive integer")
    _override = None if value is None else int(value)


def check_dense(qubits: int, what: str = "operator") -> None:
    cap = cap_qubits()
    if qubits > cap:
        raise CapExceeded(f"{what} on {qubits} qubits exceeds the dense cap of {cap}")


def check_statevector(qubits: int, what: str = "circuit") -> None:
    if qubits > STATEVECTOR_CAP_QUBITS:
        raise CapExceeded(
            f"{what} on {qubits} qubits exceeds the statevector cap of {STATEVECTOR_CAP_QUBITS}"
        )
