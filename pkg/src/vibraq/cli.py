"""Command-line front end.

Exit codes: 0 success, 2 invalid input (schema, parameters, degenerate
ground state, cap exceeded), 3 unstable mode without ``--allow-exclude``.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import platform
import sys
import time

import numpy as np
import scipy

from . import __version__
from .config import set_cap_qubits
from .entropy import estimate_entropy
from .errors import UnstableMode, VibraqError
from .estimation import (
    CostParams,
    HadamardTestInstance,
    PriorBounds,
    estimate_expectation,
    ground_preparation,
    query_cost,
)
from .block_encoding import encode_k
from .jobs import fk_job, load_job, random_job, round_floats, spec_from_job, two_level_job
from .oracle import finite_difference_d2, ground_state, second_derivative_sum
from .operators import lcu_weight, to_dense

EXIT_OK, EXIT_INVALID, EXIT_UNSTABLE = 0, 2, 3

COST_COLUMNS = [
    "b_norm", "kappa", "epsilon", "delta", "k_min", "k_max", "mu_min", "T",
    "Z", "epsilon_theta", "epsilon_k", "epsilon_1", "queries_U_K", "alpha",
    "queries_expectation", "queries_theta", "queries_s_vib", "queries_all_modes", "leading",
]


def _clean(value):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _metadata(seed, method, started):
    return {
        "seed": seed,
        "method": method,
        "versions": {"vibraq": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "wall_time": time.perf_counter() - started,
    }


def run_entropy(job_path, seed=None, method=None, allow_exclude=False) -> dict:
    started = time.perf_counter()
    data = load_job(job_path)
    spec = spec_from_job(data)
    seed = data["seed"] if seed is None else seed
    method = method or data["method"]
    report = estimate_entropy(spec, method, seed=seed, allow_exclude=allow_exclude)
    modes = [{
        "name": m.name, "k": m.k_spring, "theta": m.theta, "d2e": m.d2e,
        "expectation": m.expectation, "s_vib": m.s_vib, "excluded": m.excluded,
        "provenance": m.provenance, "error_bound": m.entropy_error,
        "k_error": m.k_error, "theta_error": m.theta_error,
    } for m in report.modes]
    return _clean({
        "kind": "entropy",
        "e0": report.e0,
        "modes": modes,
        "entropy": {"s_vib": report.s_vib, "s_trans": report.s_trans, "s_rot": report.s_rot,
                    "s_el": report.s_el, "total": report.total},
        "error_bound": report.error_bound,
        "delta": report.delta,
        "Z": report.Z,
        "epsilon_prime": report.epsilon_prime,
        "queries": report.queries,
        "warnings": report.warnings,
        "metadata": _metadata(seed, method, started),
    })


def run_derivative(job_path, seed=None) -> dict:
    """Per-mode ``d2e`` from the sum formula, finite differences and the simulated pipeline."""
    started = time.perf_counter()
    data = load_job(job_path)
    spec = spec_from_job(data)
    seed = data["seed"] if seed is None else seed
    h0 = to_dense(spec.hamiltonian)
    eig = ground_state(h0)
    e0 = eig.ground_energy if spec.e0 is None else spec.e0
    prep = ground_preparation(eig.ground_vector)
    seeds = np.random.SeedSequence(seed).spawn(max(len(spec.modes), 1))
    rows = []
    for mode, mode_seed in zip(spec.modes, seeds):
        exact = second_derivative_sum(spec.hamiltonian, mode.perturbation, eig)
        fd = finite_difference_d2(h0, to_dense(mode.perturbation))
        if lcu_weight(mode.perturbation) == 0.0:
            simulated, bound, queries = 0.0, 0.0, {}
        else:
            # d2e = 2 <K>, so <K> is needed to half the job epsilon
            target = spec.epsilon / 2
            u_k = encode_k(mode.perturbation, spec.hamiltonian, e0, spec.kappa, target / 2, eig)
            report = estimate_expectation(
                HadamardTestInstance(u_k, prep), PriorBounds.loose(u_k.alpha), target / 2,
                spec.delta / max(len(spec.modes), 1), rng_seed=np.random.default_rng(mode_seed),
            )
            simulated, bound, queries = 2 * report.value, 2 * report.error_bound, report.queries
        values = [exact, fd, simulated]
        rows.append({
            "name": mode.name, "sum_formula": exact, "finite_difference": fd,
            "simulated": simulated, "simulated_error_bound": bound,
            "max_deviation": max(abs(a - b) for a, b in itertools.combinations(values, 2)),
            "queries": queries,
        })
    return _clean({"kind": "derivative", "e0": e0, "modes": rows,
                   "metadata": _metadata(seed, "derivative", started)})


def cost_rows(params: dict) -> list:
    """Evaluate :func:`query_cost` over the grid spanned by list-valued parameters."""
    grid_keys = ["b_norm", "kappa", "epsilon"]
    lists = {k: params[k] if isinstance(params[k], list) else [params[k]] for k in grid_keys}
    rows = []
    for b, kappa, eps in itertools.product(*(lists[k] for k in grid_keys)):
        cp = CostParams(b_norm=float(b), kappa=float(kappa), epsilon=float(eps),
                        delta=float(params["delta"]), k_min=float(params["k_min"]),
                        k_max=float(params["k_max"]), mu_min=float(params["mu_min"]),
                        T=float(params["T"]), theta_list=tuple(float(t) for t in params["theta"]))
        row = {"b_norm": cp.b_norm, "kappa": cp.kappa, "epsilon": cp.epsilon, "delta": cp.delta,
               "k_min": cp.k_min, "k_max": cp.k_max, "mu_min": cp.mu_min, "T": cp.T}
        row.update(query_cost(cp))
        rows.append(row)
    return rows


def run_cost(params: dict) -> dict:
    return _clean({"kind": "cost", "note": "all hidden constants set to 1", "rows": cost_rows(params)})


def gen_fixture(kind: str, args: list) -> dict:
    try:
        if kind == "two-level":
            if args:
                raise ValueError
            job = two_level_job()
        elif kind == "fk":
            L, n = (int(a) for a in args)
            job = fk_job(L, n)
        elif kind == "random":
            seed, qubits = (int(a) for a in args)
            job = random_job(seed, qubits)
        else:
            raise ValueError
    except ValueError:
        raise VibraqError(
            "usage: gen-fixture two-level | fk L N | random SEED QUBITS"
        ) from None
    return round_floats(job)


# -- formatting ------------------------------------------------------------------------


def _csv(rows: list, columns: list) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _text_table(rows: list, columns: list) -> str:
    cells = [[_fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def render(result: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(result, indent=2, sort_keys=True) + "\n"
    kind = result.get("kind")
    if kind == "cost":
        rows, columns = result["rows"], COST_COLUMNS
    elif kind == "derivative":
        rows = result["modes"]
        columns = ["name", "sum_formula", "finite_difference", "simulated",
                   "simulated_error_bound", "max_deviation"]
    elif kind == "entropy":
        columns = ["name", "k", "theta", "d2e", "s_vib", "error_bound", "excluded"]
        rows = list(result["modes"])
        if fmt == "csv":
            summary = [{"name": key, "s_vib": value} for key, value in result["entropy"].items()]
            return _csv(rows, columns) + _csv(summary, ["name", "s_vib"]).replace(
                "name,s_vib", "component,value", 1)
        text = _text_table(rows, columns) if rows else "(no vibrational modes)\n"
        for key, value in result["entropy"].items():
            text += f"{key:>8} = {_fmt(value)}\n"
        text += f"error bound = {_fmt(result['error_bound'])} (delta = {_fmt(result['delta'])})\n"
        return text
    else:
        return json.dumps(result, indent=2, sort_keys=True) + "\n"
    return _csv(rows, columns) if fmt == "csv" else _text_table(rows, columns)


# -- argument parsing ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=["json", "text", "csv"], default="json")
    common.add_argument("--cap-qubits", type=int, help="dense-matrix qubit cap")

    parser = argparse.ArgumentParser(prog="vibraq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"vibraq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", parents=[common], help="estimate the total entropy of a job")
    p.add_argument("job")
    p.add_argument("--seed", type=int, help="override the job seed")
    p.add_argument("--method", choices=["exact", "simulated"], help="override the job method")
    p.add_argument("--allow-exclude", action="store_true",
                   help="drop modes with non-positive spring constants instead of failing")

    p = sub.add_parser("derivative", parents=[common],
                       help="compare second-derivative estimates per mode")
    p.add_argument("job")
    p.add_argument("--seed", type=int, help="override the job seed")

    p = sub.add_parser("cost", parents=[common], help="tabulate query-cost bounds")
    p.add_argument("--params", help="JSON file with the parameters below (flags override)")
    p.add_argument("--b-norm", type=float, nargs="+")
    p.add_argument("--kappa", type=float, nargs="+")
    p.add_argument("--epsilon", type=float, nargs="+")
    p.add_argument("--delta", type=float)
    p.add_argument("--k-min", type=float)
    p.add_argument("--k-max", type=float)
    p.add_argument("--mu-min", type=float)
    p.add_argument("--temperature", type=float, dest="T")
    p.add_argument("--theta", type=float, nargs="+")

    p = sub.add_parser("gen-fixture", parents=[common], help="write a job file")
    p.add_argument("kind", choices=["two-level", "fk", "random"])
    p.add_argument("args", nargs="*", help="fk: L N; random: SEED QUBITS")
    return parser


COST_DEFAULTS = {"b_norm": 1.0, "kappa": 2.0, "epsilon": 1e-3, "delta": 0.01, "k_min": 0.5,
                 "k_max": 2.0, "mu_min": 1.0, "T": 1.0, "theta": [1.0]}


def _cost_params(args) -> dict:
    params = dict(COST_DEFAULTS)
    if args.params:
        try:
            with open(args.params) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise VibraqError(f"cannot read cost parameters: {exc}") from None
        unknown = set(loaded) - set(COST_DEFAULTS)
        if unknown:
            raise VibraqError(f"unknown cost parameters {sorted(unknown)}")
        params.update(loaded)
    for key in COST_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return params


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cap_qubits is not None:
            set_cap_qubits(args.cap_qubits)
        if args.command == "entropy":
            result = run_entropy(args.job, args.seed, args.method, args.allow_exclude)
        elif args.command == "derivative":
            result = run_derivative(args.job, args.seed)
        elif args.command == "cost":
            result = run_cost(_cost_params(args))
        else:
            result = gen_fixture(args.kind, args.args)
        _emit(render(result, args.format), args.out)
    except UnstableMode as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (VibraqError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    finally:
        if args.cap_qubits is not None:
            set_cap_qubits(None)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
