"""Thermochemistry: spring constants, characteristic temperatures and entropies.

Entropies are returned in units of ``k_B``. Natural units set
``hbar = k_B = h = 1``; SI uses the exact CODATA 2018 values of ``h`` and
``k_B`` with ``hbar = h / (2 pi)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .block_encoding import encode_k, merge_queries
from .errors import (
    InvalidPrecision,
    PreconditionViolated,
    UnstableMode,
    ValidationError,
)
from .estimation import (
    HadamardTestInstance,
    PriorBounds,
    estimate_expectation,
    ground_preparation,
)
from .operators import LCUOperator, to_dense
from .oracle import exact_k_expectation, ground_state

PLANCK_SI = 6.62607015e-34
BOLTZMANN_SI = 1.380649e-23
HBAR_SI = PLANCK_SI / (2 * math.pi)

UNIT_SYSTEMS = {
    "natural": {"h": 1.0, "hbar": 1.0, "k_B": 1.0},
    "SI": {"h": PLANCK_SI, "hbar": HBAR_SI, "k_B": BOLTZMANN_SI},
}

SMALL_X = 1e-8


@dataclass(frozen=True)
class ThermoConfig:
    temperature: float
    pressure: float = 1.0
    mass: float = 1.0
    sigma_r: int = 1
    theta_rot: tuple = (1.0, 1.0, 1.0)
    unit_system: str = "natural"

    def __post_init__(self):
        if self.unit_system not in UNIT_SYSTEMS:
            raise ValueError(f"unit_system must be one of {sorted(UNIT_SYSTEMS)}")
        for name in ("temperature", "pressure", "mass"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if int(self.sigma_r) != self.sigma_r or self.sigma_r < 1:
            raise ValueError("sigma_r must be a positive integer")
        if len(self.theta_rot) != 3 or any(not t > 0 for t in self.theta_rot):
            raise ValueError("theta_rot must be three positive temperatures")
        object.__setattr__(self, "theta_rot", tuple(float(t) for t in self.theta_rot))

    @property
    def constants(self) -> dict:
        return UNIT_SYSTEMS[self.unit_system]


@dataclass(frozen=True)
class VibrationalMode:
    """One normal mode.

    ``static_curvature`` is any curvature of the energy along the mode that
    does not come from level repulsion (for example ``<E0|d2H/dx2|E0>``);
    the spring constant is ``static_curvature + d2e``. ``k_bounds`` is a known
    bracket on the spring constant, required by the simulated pipeline.
    """

    name: str
    perturbation: LCUOperator
    mu: float
    static_curvature: float = 0.0
    k_bounds: tuple | None = None
    k_spring: float | None = None
    theta: float | None = None

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mode {self.name}: reduced mass must be positive")
        if self.k_bounds is not None:
            lo, hi = self.k_bounds
            if lo > hi:
                raise ValueError(f"mode {self.name}: k_bounds must be ordered")


@dataclass(frozen=True)
class SpringConstant:
    value: float
    provenance: str = "exact"
    d2e: float = 0.0
    static_curvature: float = 0.0

    def __float__(self):
        return float(self.value)

    @property
    def unstable(self) -> bool:
        return not self.value > 0


def spring_constant(d2e: float, provenance: str = "exact",
                    static_curvature: float = 0.0) -> SpringConstant:
    """``k = static_curvature + d2e``, tagged with where ``d2e`` came from."""
    if provenance not in ("exact", "simulated", "finite-difference"):
        raise ValueError(f"unknown provenance {provenance!r}")
    return SpringConstant(float(static_curvature + d2e), provenance, float(d2e),
                          float(static_curvature))


def characteristic_temperature(k, mu: float, cfg: ThermoConfig, mode: str | None = None) -> float:
    """``theta = (hbar / k_B) sqrt(k / mu)``."""
    k = float(k)
    if not k > 0:
        raise UnstableMode(
            f"mode {mode or '?'} has spring constant {k:.6g} <= 0 (imaginary frequency)",
            mode=mode, spring_constant=k,
        )
    c = cfg.constants
    return c["hbar"] / c["k_B"] * math.sqrt(k / mu)


def vibrational_summand(x):
    """``x / (e^x - 1) - ln(1 - e^-x)`` evaluated without overflow or cancellation."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("theta / T must be positive")
    out = np.empty_like(x)
    small = x < SMALL_X
    xs = x[small]
    out[small] = 1.0 - np.log(xs) + xs**2 / 24.0
    xl = x[~small]
    tail = -np.expm1(-xl)  # 1 - e^-x
    out[~small] = xl * np.exp(-xl) / tail - np.log(tail)
    return out if out.ndim else float(out)


def vibrational_entropy(thetas: Sequence[float], T: float) -> float:
    if not T > 0:
        raise ValueError("temperature must be positive")
    thetas = np.asarray(list(thetas), dtype=float)
    if thetas.size == 0:
        return 0.0
    return float(np.sum(vibrational_summand(thetas / T)))


def _translational_argument(cfg: ThermoConfig) -> float:
    c = cfg.constants
    T = cfg.temperature
    thermal = 2 * math.pi * cfg.mass * c["k_B"] * T / c["h"] ** 2
    return thermal**1.5 * c["k_B"] * T / cfg.pressure


def _rotational_argument(cfg: ThermoConfig) -> float:
    tx, ty, tz = cfg.theta_rot
    T = cfg.temperature
    return math.sqrt(math.pi) * T**1.5 / (cfg.sigma_r * math.sqrt(tx * ty * tz))


def translational_entropy(cfg: ThermoConfig) -> float:
    """Ideal-gas translational entropy (Sackur-Tetrode form)."""
    return math.log(_translational_argument(cfg)) + 2.5


def rotational_entropy(cfg: ThermoConfig) -> float:
    """High-temperature rigid-rotor entropy; warns when ``T < max(theta_rot)``."""
    if cfg.temperature < max(cfg.theta_rot):
        warnings.warn(
            f"T = {cfg.temperature} is below the largest rotational temperature "
            f"{max(cfg.theta_rot)}; the classical rotor formula is unreliable",
            RuntimeWarning, stacklevel=2,
        )
    return math.log(_rotational_argument(cfg)) + 1.5


def electronic_entropy(*_args, **_kwargs) -> float:
    """Zero: the electronic ground state is nondegenerate."""
    return 0.0


def total_entropy(cfg: ThermoConfig, s_vib: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rot = rotational_entropy(cfg)
    return s_vib + translational_entropy(cfg) + rot + electronic_entropy()


def merged_entropy(cfg: ThermoConfig, s_vib: float) -> float:
    """Single-logarithm form of :func:`total_entropy` with the constants merged into 4."""
    return s_vib + math.log(_translational_argument(cfg) * _rotational_argument(cfg)) + 4.0


@dataclass(frozen=True)
class ErrorBudget:
    Z: float
    epsilon_prime: float
    theta_tolerance: tuple

    def per_mode_bounds(self, thetas: Sequence[float], T: float) -> np.ndarray:
        return np.array([per_mode_bound(tol, th, T)
                         for tol, th in zip(self.theta_tolerance, thetas)])


def z_sum(thetas: Sequence[float], T: float) -> float:
    """``Z = sum_i 1 / (e^{theta_i / 2T} - 1)``."""
    return float(sum(1.0 / math.expm1(t / (2.0 * T)) for t in thetas))


def per_mode_bound(tolerance: float, theta: float, T: float) -> float:
    """Entropy error of one mode whose theta is known to within ``tolerance <= theta/2``."""
    return 5.0 * tolerance / (2.0 * T * math.expm1(theta / (2.0 * T)))


def error_budget(epsilon: float, T: float, thetas: Sequence[float]) -> ErrorBudget:
    """Split an entropy tolerance ``epsilon`` across modes.

    ``epsilon_prime = epsilon T / Z`` as in the asymptotic statement.
    ``theta_tolerance`` is the per-mode accuracy actually used: ``2 epsilon T /
    (5 Z)``, which makes the per-mode bounds sum to exactly ``epsilon``,
    clamped to ``theta_i / 2`` where the bound stops applying.
    """
    thetas = [float(t) for t in thetas]
    if not epsilon > 0 or not T > 0:
        raise PreconditionViolated("epsilon and T must be positive")
    if any(not t > 0 for t in thetas):
        raise PreconditionViolated("characteristic temperatures must be positive")
    if thetas and not epsilon < min(thetas) / 2:
        raise PreconditionViolated(
            f"epsilon = {epsilon} must be below min(theta)/2 = {min(thetas) / 2}"
        )
    Z = z_sum(thetas, T)
    if Z == 0.0:
        return ErrorBudget(0.0, math.inf, tuple(t / 2 for t in thetas))
    eps_prime = epsilon * T / Z
    base = 2.0 * epsilon * T / (5.0 * Z)
    return ErrorBudget(Z, eps_prime, tuple(min(base, t / 2) for t in thetas))


@dataclass(frozen=True)
class SystemSpec:
    hamiltonian: LCUOperator
    kappa: float
    modes: tuple
    thermo: ThermoConfig
    epsilon: float = 0.05
    delta: float = 0.1
    e0: float | None = None
    backend: str = "subspace"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidPrecision("epsilon must be positive")
        if not 0 < self.delta < 1:
            raise InvalidPrecision("delta must lie in (0, 1)")
        if not self.kappa >= 1:
            raise ValidationError("kappa must be at least 1")
        for mode in self.modes:
            if mode.perturbation.qubit_count != self.hamiltonian.qubit_count:
                raise ValidationError(f"mode {mode.name} acts on the wrong number of qubits")


@dataclass
class ModeResult:
    name: str
    k_spring: float
    theta: float | None
    expectation: float
    d2e: float
    s_vib: float
    excluded: bool = False
    provenance: str = "exact"
    k_error: float = 0.0
    theta_error: float = 0.0
    entropy_error: float = 0.0
    details: dict = field(default_factory=dict)


@dataclass
class EntropyReport:
    mode: str
    e0: float
    modes: list
    s_vib: float
    s_trans: float
    s_rot: float
    s_el: float
    total: float
    error_bound: float
    delta: float
    queries: dict
    Z: float
    epsilon_prime: float
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "modes"}
        out["modes"] = [m.__dict__.copy() for m in self.modes]
        return out


def _theta_or_none(k, mode: VibrationalMode, cfg: ThermoConfig, allow_exclude: bool):
    try:
        return characteristic_temperature(k, mode.mu, cfg, mode.name)
    except UnstableMode:
        if allow_exclude:
            return None
        raise


def _theta_factor(cfg: ThermoConfig) -> float:
    c = cfg.constants
    return c["hbar"] / c["k_B"]


def _exact_modes(spec: SystemSpec, eig, e0, allow_exclude):
    results = []
    for mode in spec.modes:
        expectation = exact_k_expectation(spec.hamiltonian, mode.perturbation, eig, e0)
        k = spring_constant(2.0 * expectation, "exact", mode.static_curvature)
        theta = _theta_or_none(k, mode, spec.thermo, allow_exclude)
        results.append(ModeResult(mode.name, k.value, theta, expectation, k.d2e, 0.0,
                                  excluded=theta is None))
    return results


def _simulated_modes(spec: SystemSpec, eig, e0, allow_exclude, seed):
    cfg = spec.thermo
    T = cfg.temperature
    factor = _theta_factor(cfg)
    active = []
    results: list = [None] * len(spec.modes)
    for i, mode in enumerate(spec.modes):
        if mode.k_bounds is None:
            raise ValidationError(f"mode {mode.name}: simulated mode needs k_bounds")
        lo, hi = mode.k_bounds
        if not lo > 0:
            if allow_exclude and not hi > 0:
                results[i] = ModeResult(mode.name, float(hi), None, math.nan, math.nan, 0.0,
                                        excluded=True, provenance="simulated")
                continue
            if not hi > 0:
                raise UnstableMode(f"mode {mode.name}: prior bracket [{lo}, {hi}] is non-positive",
                                   mode=mode.name, spring_constant=hi)
            raise ValidationError(f"mode {mode.name}: k_bounds must be strictly positive")
        active.append(i)

    # plan with the smallest admissible theta: it maximizes Z, so the split is conservative
    theta_lo = [factor * math.sqrt(spec.modes[i].k_bounds[0] / spec.modes[i].mu) for i in active]
    budget = error_budget(spec.epsilon, T, theta_lo) if active else None
    delta_mode = spec.delta / max(len(active), 1)
    seeds = np.random.SeedSequence(seed).spawn(max(len(active), 1))
    prep = ground_preparation(eig.ground_vector)

    for slot, i in enumerate(active):
        mode = spec.modes[i]
        lo, hi = mode.k_bounds
        tol = budget.theta_tolerance[slot]
        # |d theta| <= factor |d k| / sqrt(mu k_lo) whenever |d k| <= k_lo / 2
        eps_k = min(tol * math.sqrt(mode.mu * lo) / factor, lo / 2)
        eps_expect = eps_k / 2.0
        u_k = encode_k(mode.perturbation, spec.hamiltonian, e0, spec.kappa, eps_expect / 2, eig)
        alpha = u_k.alpha
        k_lo = float(np.clip((lo - mode.static_curvature) / 2, -alpha, alpha))
        k_hi = float(np.clip((hi - mode.static_curvature) / 2, -alpha, alpha))
        inst = HadamardTestInstance(u_k, prep)
        report = estimate_expectation(inst, PriorBounds(min(k_lo, k_hi), k_hi, alpha),
                                      eps_expect / 2, delta_mode,
                                      rng_seed=np.random.default_rng(seeds[slot]),
                                      backend=spec.backend)
        raw = spring_constant(2.0 * report.value, "simulated", mode.static_curvature)
        if raw.unstable:
            if not allow_exclude:
                raise UnstableMode(f"mode {mode.name}: estimated spring constant "
                                   f"{raw.value:.6g} <= 0", mode=mode.name,
                                   spring_constant=raw.value)
            results[i] = ModeResult(mode.name, raw.value, None, report.value, raw.d2e, 0.0,
                                    excluded=True, provenance="simulated")
            continue
        # the true value lies in the bracket, so projecting onto it never adds error
        k = float(np.clip(raw.value, lo, hi))
        theta = characteristic_temperature(k, mode.mu, cfg, mode.name)
        k_err = 2.0 * report.error_bound
        theta_err = factor * k_err / math.sqrt(mode.mu * lo)
        results[i] = ModeResult(
            mode.name, k, theta, report.value, raw.d2e, 0.0, provenance="simulated",
            k_error=k_err, theta_error=theta_err,
            entropy_error=per_mode_bound(theta_err, theta, T) if theta_err <= theta / 2 else math.inf,
            details={"queries": report.queries, "alpha": alpha, "M": report.details["M"],
                     "D": report.details["D"], "raw_k": raw.value,
                     "theta_tolerance": tol, "delta": delta_mode},
        )
    return results, budget


def estimate_entropy(spec: SystemSpec, mode: str = "exact", seed=None,
                     allow_exclude: bool = False) -> EntropyReport:
    """Total entropy of the system.

    ``mode="exact"`` takes ``<K>`` from dense linear algebra. ``"simulated"``
    runs the block-encoding and amplitude-estimation pipeline per mode at
    the accuracy the error budget assigns; the reported ``error_bound`` then
    holds with probability at least ``1 - delta``.
    """
    if mode not in ("exact", "simulated"):
        raise ValueError("mode must be 'exact' or 'simulated'")
    notes = []
    eig = ground_state(to_dense(spec.hamiltonian))
    e0 = eig.ground_energy if spec.e0 is None else float(spec.e0)
    cfg = spec.thermo

    if mode == "exact":
        results = _exact_modes(spec, eig, e0, allow_exclude)
        queries: dict = {}
        delta = 0.0
    else:
        results, _ = _simulated_modes(spec, eig, e0, allow_exclude, seed)
        queries = merge_queries(*(r.details.get("queries", {}) for r in results))
        delta = spec.delta

    for r in results:
        if r.excluded:
            notes.append(f"mode {r.name} excluded: spring constant {r.k_spring:.6g} <= 0")
        else:
            r.s_vib = float(vibrational_summand(r.theta / cfg.temperature))

    s_vib = float(sum(r.s_vib for r in results))
    thetas = [r.theta for r in results if not r.excluded]
    Z = z_sum(thetas, cfg.temperature) if thetas else 0.0
    eps_prime = spec.epsilon * cfg.temperature / Z if Z > 0 else math.inf
    if cfg.temperature < max(cfg.theta_rot):
        notes.append("temperature below the largest rotational temperature")
    s_trans = translational_entropy(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        s_rot = rotational_entropy(cfg)
    total = s_vib + s_trans + s_rot + electronic_entropy()
    return EntropyReport(
        mode=mode, e0=e0, modes=results, s_vib=s_vib, s_trans=s_trans, s_rot=s_rot,
        s_el=electronic_entropy(), total=total,
        error_bound=float(sum(r.entropy_error for r in results)),
        delta=delta, queries=queries, Z=Z, epsilon_prime=eps_prime, warnings=notes,
    )


def with_analysis(mode: VibrationalMode, result: ModeResult) -> VibrationalMode:
    """Copy of ``mode`` with the fitted spring constant and theta filled in."""
    return replace(mode, k_spring=result.k_spring, theta=result.theta)
