"""JSON job files: schema, loading and fixture generation."""

from __future__ import annotations

import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from .config import check_dense
from .entropy import SystemSpec, ThermoConfig, VibrationalMode
from .errors import ValidationError
from .operators import LCUOperator, lcu_weight, pauli_decompose, shifted_hamiltonian, to_dense
from .oracle import (
    FKInstance,
    exact_k_expectation,
    feynman_kitaev_matrix,
    fk_expected_spectrum,
    fk_perturbation,
    ground_state,
)

SCHEMA_VERSION = 1

_POSITIVE = {"type": "number", "exclusiveMinimum": 0}

_TERMS = {
    "type": "object",
    "additionalProperties": False,
    "required": ["terms"],
    "properties": {
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["pauli", "coeff"],
                "properties": {
                    "pauli": {"type": "string", "pattern": "^[IXYZixyz]+$"},
                    "coeff": {"type": "number"},
                },
            },
        }
    },
}

JOB_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "vibraq job",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "hamiltonian", "kappa", "modes", "thermo", "precision",
                 "method", "seed"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "description": {"type": "string"},
        "hamiltonian": _TERMS,
        "e0": {"type": "number"},
        "kappa": {"type": "number", "minimum": 1},
        "modes": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name", "mu", "perturbation"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "mu": _POSITIVE,
                    "perturbation": _TERMS,
                    "static_curvature": {"type": "number"},
                    "k_bounds": {
                        "type": "array", "items": {"type": "number"},
                        "minItems": 2, "maxItems": 2,
                    },
                },
            },
        },
        "thermo": {
            "type": "object",
            "additionalProperties": False,
            "required": ["temperature", "pressure", "mass", "sigma_r", "theta_rot", "units"],
            "properties": {
                "temperature": _POSITIVE,
                "pressure": _POSITIVE,
                "mass": _POSITIVE,
                "sigma_r": {"type": "integer", "minimum": 1},
                "theta_rot": {"type": "array", "items": _POSITIVE, "minItems": 3, "maxItems": 3},
                "units": {"enum": ["natural", "SI"]},
            },
        },
        "precision": {
            "type": "object",
            "additionalProperties": False,
            "required": ["epsilon", "delta"],
            "properties": {
                "epsilon": _POSITIVE,
                "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
        "method": {"enum": ["exact", "simulated"]},
        "seed": {"type": "integer", "minimum": 0},
        "expected": {"type": "object"},
    },
}


def validate_job(data: dict) -> None:
    try:
        jsonschema.validate(data, JOB_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"job file invalid at {where}: {exc.message}") from None


def _operator(block: dict, qubits: int | None, what: str) -> LCUOperator:
    terms = block["terms"]
    lengths = {len(t["pauli"]) for t in terms}
    if qubits is not None and lengths - {qubits}:
        raise ValidationError(f"{what}: Pauli strings must have {qubits} letters")
    if len(lengths) > 1:
        raise ValidationError(f"{what}: Pauli strings have mixed lengths")
    if not terms and qubits is None:
        raise ValidationError(f"{what}: at least one term is required")
    return LCUOperator.from_records(terms, qubits)


def spec_from_job(data: dict) -> SystemSpec:
    """Validate a job dictionary and turn it into a :class:`SystemSpec`."""
    validate_job(data)
    h0 = _operator(data["hamiltonian"], None, "hamiltonian")
    n = h0.qubit_count
    modes = []
    names = set()
    for entry in data["modes"]:
        if entry["name"] in names:
            raise ValidationError(f"duplicate mode name {entry['name']!r}")
        names.add(entry["name"])
        bounds = entry.get("k_bounds")
        if bounds is not None and bounds[0] > bounds[1]:
            raise ValidationError(f"mode {entry['name']}: k_bounds must be ordered")
        modes.append(VibrationalMode(
            name=entry["name"],
            perturbation=_operator(entry["perturbation"], n, f"mode {entry['name']}"),
            mu=float(entry["mu"]),
            static_curvature=float(entry.get("static_curvature", 0.0)),
            k_bounds=None if bounds is None else (float(bounds[0]), float(bounds[1])),
        ))
    th = data["thermo"]
    cfg = ThermoConfig(
        temperature=float(th["temperature"]), pressure=float(th["pressure"]),
        mass=float(th["mass"]), sigma_r=int(th["sigma_r"]),
        theta_rot=tuple(float(t) for t in th["theta_rot"]), unit_system=th["units"],
    )
    check_dense(n, "job Hamiltonian")
    return SystemSpec(
        hamiltonian=h0, kappa=float(data["kappa"]), modes=tuple(modes), thermo=cfg,
        epsilon=float(data["precision"]["epsilon"]), delta=float(data["precision"]["delta"]),
        e0=data.get("e0"),
    )


def load_job(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read job file {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"job file {path} is not valid JSON: {exc}") from None
    validate_job(data)
    return data


# -- fixture generation ----------------------------------------------------------------

DEFAULT_THERMO = {"temperature": 1.0, "pressure": 1.0, "mass": 1.0, "sigma_r": 1,
                  "theta_rot": [0.5, 0.5, 0.5], "units": "natural"}
DEFAULT_PRECISION = {"epsilon": 0.05, "delta": 0.1}
KAPPA_MARGIN = 1.05


def _terms(op: LCUOperator) -> dict:
    return {"terms": op.to_records()}


def oracle_kappa(h0: LCUOperator, e0: float, margin: float = KAPPA_MARGIN) -> float:
    """Smallest valid kappa for ``E0 I - H0`` times ``margin``."""
    hp = shifted_hamiltonian(h0, e0)
    values = np.abs(np.linalg.eigvalsh(to_dense(hp))) / lcu_weight(hp)
    live = values[values > 1e-9]
    return float(margin / live.min()) if live.size else 1.0


def _stable_mode(name: str, h0: LCUOperator, v: LCUOperator, target_k: float = 1.0,
                 mu: float = 1.0, spread: float = 0.2) -> dict:
    """Mode entry whose curvature offset puts the spring constant at ``target_k``."""
    d2e = 2.0 * exact_k_expectation(h0, v)
    static = float(target_k - d2e)
    return {
        "name": name, "mu": mu, "perturbation": _terms(v), "static_curvature": static,
        "k_bounds": [target_k * (1 - spread), target_k * (1 + spread)],
    }


def _job(h0: LCUOperator, modes: list, description: str, expected: dict, seed: int = 0) -> dict:
    e0 = ground_state(to_dense(h0)).ground_energy
    return {
        "schema_version": SCHEMA_VERSION,
        "description": description,
        "hamiltonian": _terms(h0),
        "kappa": oracle_kappa(h0, e0),
        "modes": modes,
        "thermo": dict(DEFAULT_THERMO),
        "precision": dict(DEFAULT_PRECISION),
        "method": "exact",
        "seed": seed,
        "expected": expected,
    }


def two_level_job() -> dict:
    """``H0 = diag(0, 1)`` with ``V = X``: ``d2e = -2`` exactly."""
    h0 = LCUOperator.from_terms([(0.5, "I"), (-0.5, "Z")])
    v = LCUOperator.from_terms([(1.0, "X")])
    mode = {"name": "x", "mu": 1.0, "perturbation": _terms(v), "static_curvature": 3.0,
            "k_bounds": [0.8, 1.2]}
    expected = {"e0": 0.0, "k_expectation": -1.0, "d2e": -2.0, "k_spring": 1.0, "theta": 1.0}
    return _job(h0, [mode], "two-level system H0 = diag(0, 1), V = X", expected)


def fk_job(L: int, system_qubits: int, penalty: float = 1.0) -> dict:
    """Feynman-Kitaev Hamiltonian of ``L`` identity gates with an input penalty."""
    if L < 1 or system_qubits < 1:
        raise ValidationError("fk fixture needs L >= 1 and at least one system qubit")
    inst = FKInstance.identity(L, system_qubits)
    check_dense(inst.total_qubits, "Feynman-Kitaev fixture")
    h0 = pauli_decompose(feynman_kitaev_matrix(inst, input_penalty=penalty))
    v = pauli_decompose(fk_perturbation(inst))
    padded = inst.padded().L
    expected = {
        "L": L,
        "padded_L": padded,
        "input_penalty": penalty,
        "connected_spectrum": fk_expected_spectrum(padded).tolist(),
    }
    return _job(h0, [_stable_mode("clock", h0, v)],
                f"Feynman-Kitaev clock Hamiltonian, L={L}, {system_qubits} system qubit(s)",
                expected)


def random_job(seed: int, qubits: int, scale: float = 0.5) -> dict:
    """Random dense-Pauli ``H0`` and one random perturbation, both deterministic in ``seed``."""
    if qubits < 1:
        raise ValidationError("random fixture needs at least one qubit")
    check_dense(qubits, "random fixture")
    rng = np.random.default_rng(seed)
    dim = 1 << qubits

    def hermitian():
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        return scale * (a + a.conj().T) / 2

    while True:
        h0 = pauli_decompose(hermitian())
        values = np.linalg.eigvalsh(to_dense(h0))
        if values.size < 2 or values[1] - values[0] > 1e-3:
            break
    v = pauli_decompose(hermitian())
    d2e = 2.0 * exact_k_expectation(h0, v)
    expected = {"e0": float(values[0]), "d2e": d2e}
    return _job(h0, [_stable_mode("q", h0, v)],
                f"random {qubits}-qubit instance from seed {seed}", expected, seed=seed)


def round_floats(data, digits: int = 15):
    """Round floats so regenerated fixtures are byte-stable across platforms."""
    if isinstance(data, float):
        return float(f"{data:.{digits}g}") if math.isfinite(data) else data
    if isinstance(data, dict):
        return {k: round_floats(v, digits) for k, v in data.items()}
    if isinstance(data, list):
        return [round_floats(v, digits) for v in data]
    return data
