"""JSON schemas for instances, chains, boundaries and solve reports.

Rational masses travel as strings "num/den" (or "num" when integral) so
that files round-trip without float drift.  Instance files carry the
boundary plus optional solver overrides:

    {"dim": 2, "alpha": 0.6,
     "atoms": [{"p": [0.0, 0.0], "m": "-1"}, ...],
     "config": {"value_tol": 1e-7, ...},
     "seed": 0}

Chains use {"segments": [{"a": [...], "b": [...], "m": "num/den"}]}.
Report bodies are deterministic: identical inputs serialize byte-identically
(keys sorted, no timestamps).
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .currents import Boundary, PolyhedralChain, Segment, make_boundary
from .flat import FlatWitness
from .placement import OptimizeConfig
from .solver import SolveReport, SolverConfig

SCHEMA_VERSION = "1"


def parse_rational(s: Any) -> Fraction:
    if isinstance(s, int):
        return Fraction(s)
    if isinstance(s, str):
        return Fraction(s)
    raise ValueError(f"rational masses must be strings like '3/4', got {s!r}")


def format_rational(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


# ---------------------------------------------------------------------------
# boundaries and chains
# ---------------------------------------------------------------------------

def boundary_to_obj(b: Boundary) -> dict:
    return {
        "dim": b.dim,
        "atoms": [{"p": list(p), "m": format_rational(m)} for p, m in b.atoms],
    }


def obj_to_boundary(obj: dict) -> Boundary:
    atoms = [(tuple(float(x) for x in a["p"]), parse_rational(a["m"]))
             for a in obj["atoms"]]
    b = make_boundary(atoms)
    if "dim" in obj and b.atoms and b.dim != int(obj["dim"]):
        raise ValueError("atom coordinates disagree with the declared dim")
    return b


def chain_to_obj(chain: PolyhedralChain) -> dict:
    return {
        "dim": chain.dim,
        "segments": [{"a": list(s.start), "b": list(s.end),
                      "m": format_rational(s.mult)} for s in chain.segments],
    }


def obj_to_chain(obj: dict) -> PolyhedralChain:
    segs = tuple(
        Segment(tuple(float(x) for x in s["a"]),
                tuple(float(x) for x in s["b"]),
                parse_rational(s["m"]))
        for s in obj["segments"])
    return PolyhedralChain(segs, canonical=False)


def witness_to_obj(w: FlatWitness) -> dict:
    return {
        "transport_arcs": [
            {"from": list(p), "to": list(q), "flow": format_rational(f)}
            for p, q, f in w.transport_arcs],
        "dropped": [{"p": list(p), "m": format_rational(m)}
                    for p, m in w.dropped_mass],
    }


# ---------------------------------------------------------------------------
# instance files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InstanceFile:
    boundary: Boundary
    alpha: float | None
    config: dict
    seed: int


def parse_instance(obj: dict) -> InstanceFile:
    b = obj_to_boundary(obj)
    alpha = float(obj["alpha"]) if "alpha" in obj else None
    if alpha is not None and not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    return InstanceFile(b, alpha, dict(obj.get("config", {})),
                        int(obj.get("seed", 0)))


def instance_to_obj(inst: InstanceFile) -> dict:
    obj = boundary_to_obj(inst.boundary)
    if inst.alpha is not None:
        obj["alpha"] = inst.alpha
    if inst.config:
        obj["config"] = dict(inst.config)
    if inst.seed:
        obj["seed"] = inst.seed
    return obj


def load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def dump_json(obj: dict, path: str | None) -> str:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# solver configuration: flags > file config > environment > defaults
# ---------------------------------------------------------------------------

_ENV_KEYS = {
    "value_tol": "GSTEINER_VALUE_TOL",
    "distinct_tol": "GSTEINER_DISTINCT_TOL",
    "tol_grad": "GSTEINER_TOL_GRAD",
    "tol_collapse": "GSTEINER_TOL_COLLAPSE",
    "max_terminals": "GSTEINER_MAX_TERMINALS",
}


def build_solver_config(alpha: float, file_config: dict | None = None,
                        overrides: dict | None = None) -> SolverConfig:
    merged: dict[str, Any] = {}
    for key, env in _ENV_KEYS.items():
        if env in os.environ:
            merged[key] = float(os.environ[env])
    merged.update(file_config or {})
    for key, val in (overrides or {}).items():
        if val is not None:
            merged[key] = val

    opt_keys = {"tol_grad", "tol_collapse", "eps_init", "eps_decay",
                "eps_min", "max_iters"}
    opt_kwargs = {k: (int(v) if k == "max_iters" else float(v))
                  for k, v in merged.items() if k in opt_keys}
    cfg_kwargs = {}
    for k in ("value_tol", "distinct_tol"):
        if k in merged:
            cfg_kwargs[k] = float(merged[k])
    if "max_terminals" in merged:
        cfg_kwargs["max_terminals"] = int(merged["max_terminals"])
    if "max_branch" in merged:
        cfg_kwargs["max_branch"] = int(merged["max_branch"])
    return SolverConfig(alpha=alpha, optimize=OptimizeConfig(**opt_kwargs),
                        **cfg_kwargs)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def report_to_obj(report: SolveReport) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "alpha": report.alpha,
        "boundary": boundary_to_obj(report.boundary),
        "best_value": report.best_value,
        "gap": report.gap if report.gap != float("inf") else None,
        "distinct_tol": report.distinct_tol,
        "stats": dict(report.stats),
        "minimizers": [
            {
                "value": m.value,
                "residual": m.residual,
                "n_branch": m.flowed.topology.n_branch,
                "chain": chain_to_obj(m.chain),
            }
            for m in report.minimizers
        ],
    }
