"""Hadamard test, walk operator, amplitude estimation and query costs.

Register layout for the Hadamard test ``T`` on ``1 + m + n`` qubits: qubit 0
is the interference qubit, the next ``m`` qubits are the ancillas of the
``K`` encoding and the last ``n`` are the system. The "good" outcome is
qubit 0 reading 0.

Amplitude estimation puts ``k + 1`` phase qubits in front of that. Because
qubit 0 is the most significant bit, phase qubit ``j`` controls
``W**(2**(k - j))``; read as an integer, the register then holds the power of
``W`` that was applied, which is the figure's wiring with the wire order
reversed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .block_encoding import BlockEncoding, merge_queries
from .config import check_dense, check_statevector
from .errors import DimensionMismatch, InvalidBounds, InvalidPrecision, PreconditionViolated
from .simulator import (
    HADAMARD,
    Block,
    Circuit,
    Gate,
    Phase,
    QFT,
    StateVector,
    apply,
    gate,
    marginal_distribution,
    outcome_probability,
    state_preparation_unitary,
)

AE_SUCCESS = 8.0 / math.pi**2
# exponent rate in the median-of-D failure bound exp(-D (8 - pi^2/2) / 16)
MEDIAN_RATE = (8.0 - math.pi**2 / 2.0) / 16.0


@dataclass(frozen=True, eq=False)
class HadamardTestInstance:
    u_k: BlockEncoding
    u_0: Circuit

    def __post_init__(self):
        if self.u_0.qubit_count != self.u_k.system_qubits:
            raise DimensionMismatch("ground-state preparation and K encoding differ in system size")

    @property
    def total_qubits(self) -> int:
        return 1 + self.u_k.total_qubits

    @property
    def alpha(self) -> float:
        return self.u_k.alpha

    @property
    def system_slice(self) -> tuple:
        return tuple(range(1 + self.u_k.ancilla_count, self.total_qubits))


def ground_preparation(vector: np.ndarray) -> Circuit:
    """Circuit ``U_0`` with ``U_0 |0> = vector``."""
    vector = np.asarray(vector, dtype=complex)
    n = int(round(math.log2(vector.size)))
    return Circuit(n, (Gate(state_preparation_unitary(vector), tuple(range(n))),))


@dataclass(frozen=True)
class PriorBounds:
    """Known bracket ``k_min <= <E0|K|E0> <= k_max`` with both inside ``[-alpha, alpha]``."""

    k_min: float
    k_max: float
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidBounds("alpha must be positive")
        if not self.k_min <= self.k_max:
            raise InvalidBounds(f"k_min {self.k_min} exceeds k_max {self.k_max}")
        if abs(self.k_min) > self.alpha * (1 + 1e-12) or abs(self.k_max) > self.alpha * (1 + 1e-12):
            raise InvalidBounds("prior bounds must lie within [-alpha, alpha]")

    @classmethod
    def loose(cls, alpha: float) -> "PriorBounds":
        return cls(-alpha, alpha, alpha)

    def probabilities(self, slack: float = 0.0) -> tuple:
        """``(P_min, P_max)`` implied by the bounds, widened by ``slack`` in K units."""
        p_min = 0.5 + (self.k_min - slack) / (2 * self.alpha)
        p_max = 0.5 + (self.k_max + slack) / (2 * self.alpha)
        return float(np.clip(p_min, 0, 1)), float(np.clip(p_max, 0, 1))


@dataclass
class EstimateReport:
    value: float
    error_bound: float
    delta: float
    queries: dict
    method: str
    details: dict = field(default_factory=dict)


def hadamard_circuit(inst: HadamardTestInstance) -> Circuit:
    m = inst.u_k.ancilla_count
    total = inst.total_qubits
    ops = (
        gate(HADAMARD, 0),
        Block(inst.u_0, inst.system_slice),
        Block(inst.u_k.circuit, tuple(range(1, total)), (0,), (1,)),
        gate(HADAMARD, 0),
    )
    return Circuit(total, ops)


def hadamard_state(inst: HadamardTestInstance) -> StateVector:
    check_statevector(inst.total_qubits, "Hadamard test")
    return apply(hadamard_circuit(inst), StateVector.zero(inst.total_qubits))


def hadamard_probability(inst: HadamardTestInstance) -> float:
    """Probability that the interference qubit reads 0 after ``T |0...0>``."""
    return outcome_probability(hadamard_state(inst), [0], [0])


def walk_operator(inst: HadamardTestInstance) -> Circuit:
    """``W = -(I - 2 T|0><0|T^dagger)(I - 2 P_G)`` as a circuit."""
    check_statevector(inst.total_qubits, "walk operator")
    total = inst.total_qubits
    t = hadamard_circuit(inst)
    everything = tuple(range(total))
    ops = (
        Phase(-1.0, (0,), (0,)),
        Block(t.adjoint(), everything),
        Phase(-1.0, everything, (0,) * total),
        Block(t, everything),
        Phase(-1.0),
    )
    return Circuit(total, ops)


def walk_matrix(inst: HadamardTestInstance) -> np.ndarray:
    check_dense(inst.total_qubits, "walk operator")
    return walk_operator(inst).to_matrix()


def ae_error_bound(M: int, p_min: float = 0.0, p_max: float = 1.0) -> float:
    """``2 pi sqrt(P_max (1 - P_min)) / M + pi^2 / M^2``."""
    return 2 * math.pi * math.sqrt(max(p_max * (1 - p_min), 0.0)) / M + math.pi**2 / M**2


def decode(y, M: int):
    return np.sin(np.pi * np.asarray(y) / M) ** 2


def ae_success_mass(distribution: np.ndarray, p_true: float,
                    p_min: float = 0.0, p_max: float = 1.0) -> float:
    """Probability mass of outcomes whose estimate is within the AE bound of ``p_true``."""
    M = len(distribution)
    estimates = decode(np.arange(M), M)
    bound = ae_error_bound(M, p_min, p_max)
    return float(np.sum(distribution[np.abs(estimates - p_true) <= bound * (1 + 1e-12)]))


@dataclass(frozen=True, eq=False)
class AmplitudeEstimate:
    p_hat: float
    distribution: np.ndarray
    M: int
    report: EstimateReport


def _invariant_subspace(inst: HadamardTestInstance):
    """Orthonormal basis of the span of ``T|0>`` and ``W T|0>`` and ``W`` restricted to it."""
    walk = walk_operator(inst)
    psi = hadamard_state(inst).amplitudes
    basis = [psi]
    w_psi = apply(walk, StateVector(psi, inst.total_qubits)).amplitudes
    second = w_psi - np.vdot(psi, w_psi) * psi
    if np.linalg.norm(second) > 1e-9:
        basis.append(second / np.linalg.norm(second))
    basis = np.array(basis).T
    images = np.array([apply(walk, StateVector(col, inst.total_qubits)).amplitudes
                       for col in basis.T]).T
    reduced = basis.conj().T @ images
    residual = np.linalg.norm(images - basis @ reduced)
    if residual > 1e-8:
        raise RuntimeError(f"walk operator does not preserve the 2D subspace ({residual:.2e})")
    return reduced


def _subspace_distribution(inst: HadamardTestInstance, k: int) -> np.ndarray:
    reduced = _invariant_subspace(inst)
    amplitudes = np.zeros((1, reduced.shape[0]), dtype=complex)
    amplitudes[0, 0] = 1.0
    # phase qubit of weight 2**b controls W**(2**b): doubling builds W**x c0 for every x
    power = reduced
    for _ in range(k + 1):
        amplitudes = np.concatenate([amplitudes, amplitudes @ power.T])
        power = power @ power
    M = amplitudes.shape[0]
    spectrum = np.fft.fft(amplitudes / np.sqrt(M), axis=0, norm="ortho")
    return np.sum(np.abs(spectrum) ** 2, axis=1)


def amplitude_estimation_circuit(inst: HadamardTestInstance, k: int) -> Circuit:
    reg = k + 1
    total = reg + inst.total_qubits
    system = tuple(range(reg, total))
    walk = walk_operator(inst)
    ops = [gate(HADAMARD, j) for j in range(reg)]
    ops.append(Block(hadamard_circuit(inst), system))
    for j in range(reg):
        ops.append(Block(walk.power(1 << (k - j)), system, (j,), (1,)))
    ops.append(QFT(tuple(range(reg)), inverse=True))
    return Circuit(total, tuple(ops))


def _circuit_distribution(inst: HadamardTestInstance, k: int) -> np.ndarray:
    circuit = amplitude_estimation_circuit(inst, k)
    check_statevector(circuit.qubit_count, "amplitude estimation")
    final = apply(circuit, StateVector.zero(circuit.qubit_count))
    return marginal_distribution(final, range(k + 1))


def ae_queries(inst: HadamardTestInstance, M: int, repetitions: int = 1) -> dict:
    walks = repetitions * (M - 1)
    # each W uses T and T^dagger; one more T prepares the initial state
    t_calls = repetitions * (2 * (M - 1) + 1)
    ledger = {"W": walks, "U_0": t_calls, "controlled-U_K": t_calls}
    return merge_queries(ledger, merge_queries(inst.u_k.queries, scale=t_calls))


def amplitude_estimate(inst: HadamardTestInstance, k: int, backend: str = "subspace",
                       p_min: float = 0.0, p_max: float = 1.0) -> AmplitudeEstimate:
    """Exact outcome distribution of phase estimation on ``W`` with ``M = 2**(k+1)``.

    ``backend="circuit"`` simulates the full register; ``"subspace"`` runs
    the same controlled powers and inverse QFT on the two-dimensional
    invariant subspace of ``W`` containing ``T|0>``, which gives the same
    distribution at a cost independent of the system size.
    """
    if k < 1:
        raise ValueError("register parameter k must be at least 1")
    M = 1 << (k + 1)
    if backend == "circuit":
        distribution = _circuit_distribution(inst, k)
    elif backend == "subspace":
        check_statevector(inst.total_qubits, "amplitude estimation")
        distribution = _subspace_distribution(inst, k)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    best = int(np.argmax(distribution))
    p_hat = float(decode(best, M))
    report = EstimateReport(
        value=p_hat,
        error_bound=ae_error_bound(M, p_min, p_max),
        delta=1.0 - AE_SUCCESS,
        queries=ae_queries(inst, M),
        method=f"amplitude-estimation/{backend}",
        details={"M": M, "outcome": best},
    )
    return AmplitudeEstimate(p_hat, distribution, M, report)


def median_failure_bound(d: int) -> float:
    return math.exp(-d * MEDIAN_RATE)


def repetitions_for(delta: float) -> int:
    """Smallest odd ``D >= 16 ln(1/delta) / (8 - pi^2/2)``."""
    d = max(1, math.ceil(math.log(1.0 / delta) / MEDIAN_RATE - 1e-12))
    return d if d % 2 else d + 1


def median_amplify(single_run: Callable, d: int, rng_seed=None) -> float:
    """Median of ``d`` independent calls ``single_run(rng)`` sharing one seeded generator."""
    if d < 1 or d % 2 == 0:
        raise ValueError("repetition count must be a positive odd integer")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return float(np.median([single_run(rng) for _ in range(d)]))


def register_size(epsilon0: float, p_min: float, p_max: float) -> int:
    """Smallest power of two ``M >= 4`` with ``M >= pi (sqrt q + sqrt(q + eps0)) / eps0``."""
    q = max(p_max * (1 - p_min), 0.0)
    needed = math.pi * (math.sqrt(q) + math.sqrt(q + epsilon0)) / epsilon0
    return max(4, 1 << math.ceil(math.log2(needed) - 1e-12))


def estimate_expectation(inst: HadamardTestInstance, bounds: PriorBounds, epsilon: float,
                         delta: float, rng_seed=None, backend: str = "subspace",
                         distribution: np.ndarray | None = None) -> EstimateReport:
    """Estimate ``<E0|K|E0>`` as ``alpha (2 p_hat - 1)`` from a median of AE runs.

    The AE part of the error is at most ``epsilon`` with probability at least
    ``1 - delta``; ``error_bound`` adds the encoding error ``alpha * eps_K``.
    A precomputed outcome ``distribution`` may be passed to skip simulation.
    """
    if not epsilon > 0:
        raise InvalidPrecision("epsilon must be positive")
    if not 0 < delta < 1:
        raise InvalidPrecision("delta must lie in (0, 1)")
    if not math.isclose(bounds.alpha, inst.alpha, rel_tol=1e-9):
        raise InvalidBounds("prior bounds were built for a different alpha")
    alpha = inst.alpha
    encoding_error = alpha * inst.u_k.epsilon
    p_min, p_max = bounds.probabilities(slack=encoding_error)
    epsilon0 = epsilon / (2 * alpha)
    M = register_size(epsilon0, p_min, p_max)
    k = int(math.log2(M)) - 1
    if distribution is None:
        distribution = amplitude_estimate(inst, k, backend).distribution
    elif len(distribution) != M:
        raise DimensionMismatch(f"distribution has {len(distribution)} outcomes, need {M}")
    D = repetitions_for(delta)
    probs = np.clip(distribution, 0, None)
    probs = probs / probs.sum()

    def single_run(rng):
        return float(decode(rng.choice(M, p=probs), M))

    p_hat = median_amplify(single_run, D, rng_seed)
    value = alpha * (2 * p_hat - 1)
    ae_bound = 2 * alpha * ae_error_bound(M, p_min, p_max)
    return EstimateReport(
        value=value,
        error_bound=ae_bound + encoding_error,
        delta=delta,
        queries=ae_queries(inst, M, D),
        method=f"amplitude-estimation/{backend}",
        details={"M": M, "D": D, "p_hat": p_hat, "p_min": p_min, "p_max": p_max,
                 "alpha": alpha, "encoding_error": encoding_error, "ae_error": ae_bound},
    )


# -- query-cost calculator -------------------------------------------------------------


def lambert_w(z: float, branch: int = 0, tol: float = 1e-12, max_iter: int = 100) -> float:
    """Real Lambert W on branch 0 or -1 by Halley iteration."""
    if z < -1.0 / math.e:
        raise ValueError("Lambert W is not real below -1/e")
    if branch == -1 and not z < 0:
        raise ValueError("branch -1 needs z in [-1/e, 0)")
    if branch not in (0, -1):
        raise ValueError("only branches 0 and -1 are supported")
    if z == -1.0 / math.e:
        return -1.0
    near_branch_point = z < -0.3
    if near_branch_point:
        p = math.sqrt(2.0 * (math.e * z + 1.0))
        w = -1.0 + p if branch == 0 else -1.0 - p
    elif branch == 0:
        w = math.log1p(z) if z < 3 else math.log(z) - math.log(math.log(z))
    else:
        w = math.log(-z) - math.log(-math.log(-z))
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - z
        if f == 0:
            break
        wp1 = w + 1.0
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= tol * max(1.0, abs(w)):
            break
    return w


@dataclass(frozen=True)
class CostParams:
    b_norm: float
    kappa: float
    epsilon: float
    delta: float
    k_min: float
    k_max: float
    mu_min: float
    T: float
    theta_list: tuple


def query_cost(params: CostParams) -> dict:
    """Evaluate the nested query bounds with every hidden constant set to 1.

    Natural units (hbar = k_B = 1). Returned keys:

    ``Z``, ``epsilon_theta`` (= eps T / Z), ``epsilon_k`` (= epsilon_theta
    sqrt(mu_min)), ``epsilon_1`` (block-encoding precision from Lambert W),
    ``queries_U_K``, ``alpha``, ``queries_expectation`` (median-amplified AE
    to accuracy ``epsilon_k``), ``queries_theta`` (their product, one mode),
    ``queries_s_vib`` (same as ``queries_theta``, the total-entropy bound),
    ``queries_all_modes`` and ``leading`` (``Z |b|^4 kappa^2 ln(1/delta) /
    (eps T sqrt(mu_min))``). All counts are "up to constants".
    """
    p = params
    positives = {"b_norm": p.b_norm, "kappa": p.kappa, "epsilon": p.epsilon, "delta": p.delta,
                 "mu_min": p.mu_min, "T": p.T}
    for name, value in positives.items():
        if not value > 0:
            raise PreconditionViolated(f"{name} must be positive")
    if not p.delta < 1:
        raise PreconditionViolated("delta must be below 1")
    if not p.theta_list or any(not t > 0 for t in p.theta_list):
        raise PreconditionViolated("theta_list must hold positive temperatures")
    if p.k_min > p.k_max:
        raise PreconditionViolated("k_min exceeds k_max")

    Z = float(sum(1.0 / math.expm1(t / (2.0 * p.T)) for t in p.theta_list))
    eps_theta = p.epsilon * p.T / Z
    eps_k = eps_theta * math.sqrt(p.mu_min)
    if not eps_k < p.k_min / 2:
        raise PreconditionViolated(
            f"spring-constant accuracy {eps_k:.3g} must be below k_min/2 = {p.k_min / 2:.3g}"
        )
    c = p.b_norm**2 * p.kappa
    x = eps_k / c
    if not x < 1.0 / math.e:
        raise PreconditionViolated("epsilon / (|b|^2 kappa) must be below 1/e")
    # the -1 branch gives the small root of eps1 ln(1/eps1) = eps / (|b|^2 kappa)
    eps1 = -x / lambert_w(-x, branch=-1)
    queries_uk = c * math.log(c / eps1)
    alpha = c
    q = max((0.5 + p.k_max / (2 * alpha)) * (0.5 - p.k_min / (2 * alpha)), 0.0)
    queries_exp = alpha * math.log(1.0 / p.delta) / eps_k * (math.sqrt(q) + math.sqrt(eps_k / alpha))
    per_theta = queries_uk * queries_exp
    leading = Z * c**2 * math.log(1.0 / p.delta) / (p.epsilon * p.T * math.sqrt(p.mu_min))
    return {
        "Z": Z,
        "epsilon_theta": eps_theta,
        "epsilon_k": eps_k,
        "epsilon_1": eps1,
        "queries_U_K": queries_uk,
        "alpha": alpha,
        "queries_expectation": queries_exp,
        "queries_theta": per_theta,
        "queries_s_vib": per_theta,
        "queries_all_modes": per_theta * len(p.theta_list),
        "leading": leading,
    }
