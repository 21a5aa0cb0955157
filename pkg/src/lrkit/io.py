"""Reading and writing problem instances and run configurations."""
from __future__ import annotations

import json
from typing import Optional

import jsonschema
import numpy as np

from .engine import ConfigError, RunConfig
from .model import (EQ, GE, LE, BoundedPolyhedron, KnapsackSet, SeparableMilp, Subsystem,
                    validate)


class InstanceError(ValueError):
    pass


def _ints(line: str, lineno: int, what: str) -> list[int]:
    out = []
    for tok in line.split():
        try:
            out.append(int(tok))
        except ValueError:
            raise InstanceError(f"line {lineno}: {what}: expected an integer, got {tok!r}") from None
    return out


def gap_problem(costs, weights, capacities, name: str = "") -> SeparableMilp:
    """One knapsack subsystem per machine; one 'assigned exactly once' row per job."""
    costs = np.asarray(costs, dtype=float)
    weights = np.asarray(weights, dtype=np.int64)
    capacities = np.asarray(capacities, dtype=np.int64)
    n_mach, n_jobs = costs.shape
    if weights.shape != costs.shape or capacities.shape != (n_mach,):
        raise InstanceError("cost, weight and capacity shapes disagree")
    if np.any(weights < 0):
        raise InstanceError("weights must be non-negative")
    if np.any(capacities < 0):
        raise InstanceError("capacities must be non-negative")
    subs = tuple(Subsystem(costs[i], np.zeros(0), np.eye(n_jobs), np.zeros((n_jobs, 0)),
                           KnapsackSet(weights[i], int(capacities[i])))
                 for i in range(n_mach))
    return SeparableMilp(subs, np.ones(n_jobs), EQ, name)


def parse_gap_instance(text: str, name: str = "") -> SeparableMilp:
    """Parse the OR-Library style GAP layout.

    First line: machines and jobs.  Then one cost row per machine, one weight
    row per machine and a final capacity row.  Rows may wrap across lines; the
    numbers are read as one stream but errors report the line they came from.
    """
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        for tok in line.split():
            tokens.append((tok, lineno))
    if not tokens:
        raise InstanceError("line 1: empty instance")
    pos = 0

    def take(count: int, what: str) -> list[int]:
        nonlocal pos
        vals = []
        for tok, lineno in tokens[pos:pos + count]:
            vals.extend(_ints(tok, lineno, what))
        if len(vals) < count:
            raise InstanceError(f"line {tokens[-1][1]}: {what}: expected {count} more numbers, "
                                f"found {len(vals)}")
        pos += count
        return vals

    n_mach, n_jobs = take(2, "header")
    if n_mach < 1 or n_jobs < 1:
        raise InstanceError(f"line {tokens[0][1]}: header: need at least one machine and one job")
    costs = np.array(take(n_mach * n_jobs, "costs"), dtype=float).reshape(n_mach, n_jobs)
    weights = np.array(take(n_mach * n_jobs, "weights"), dtype=np.int64).reshape(n_mach, n_jobs)
    cap_line = tokens[pos][1] if pos < len(tokens) else tokens[-1][1]
    caps = np.array(take(n_mach, "capacities"), dtype=np.int64)
    if pos != len(tokens):
        raise InstanceError(f"line {tokens[pos][1]}: trailing data after capacities")
    if np.any(weights < 0):
        raise InstanceError("weights: must be non-negative")
    if np.any(caps < 0):
        raise InstanceError(f"line {cap_line}: capacities: must be non-negative")
    return gap_problem(costs, weights, caps, name)


def format_gap_instance(costs, weights, capacities) -> str:
    costs = np.asarray(costs)
    lines = [f"{costs.shape[0]} {costs.shape[1]}"]
    lines += [" ".join(str(int(v)) for v in row) for row in costs]
    lines += [" ".join(str(int(v)) for v in row) for row in np.asarray(weights)]
    lines.append(" ".join(str(int(v)) for v in capacities))
    return "\n".join(lines) + "\n"


_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM}
_BOUND_VEC = {"type": "array", "items": {"type": ["number", "null"]}}
_MAT = {"type": "array", "items": _VEC}
_SENSE = {"enum": [EQ, LE, GE]}

PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["subsystems", "rhs"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "rhs": {"type": "array", "items": _NUM, "minItems": 1},
        "senses": {"oneOf": [{"enum": [EQ, LE]},
                             {"type": "array", "items": {"enum": [EQ, LE]}}]},
        "subsystems": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["int_cost", "int_coupling", "local_set"],
                "additionalProperties": False,
                "properties": {
                    "int_cost": _VEC,
                    "cont_cost": _VEC,
                    "int_coupling": _MAT,
                    "cont_coupling": _MAT,
                    "local_set": {
                        "oneOf": [
                            {"type": "object",
                             "required": ["type", "weights", "capacity"],
                             "additionalProperties": False,
                             "properties": {"type": {"const": "knapsack"},
                                            "weights": {"type": "array",
                                                        "items": {"type": "integer"}},
                                            "capacity": {"type": "integer"}}},
                            {"type": "object",
                             "required": ["type", "matrix", "rhs", "senses", "int_lb", "int_ub"],
                             "additionalProperties": False,
                             "properties": {"type": {"const": "polyhedron"},
                                            "matrix": _MAT, "rhs": _VEC,
                                            "senses": {"type": "array", "items": _SENSE},
                                            "int_lb": _BOUND_VEC, "int_ub": _BOUND_VEC,
                                            "cont_lb": _BOUND_VEC, "cont_ub": _BOUND_VEC}},
                        ]
                    },
                },
            },
        },
    },
}


def _path(err: jsonschema.ValidationError) -> str:
    out = "$"
    for part in err.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def _matrix(rows, n_rows: int, n_cols: int, where: str) -> np.ndarray:
    if not rows and (n_rows == 0 or n_cols == 0):
        return np.zeros((n_rows, n_cols))
    widths = sorted({len(r) for r in rows})
    if len(rows) != n_rows or widths != [n_cols]:
        raise InstanceError(f"{where}: expected {n_rows} rows of width {n_cols}, "
                            f"got {len(rows)} rows of widths {widths}")
    return np.asarray(rows, dtype=float).reshape(n_rows, n_cols)


def _bounds(vals, n: int, where: str, fill: float) -> np.ndarray:
    if vals is None:
        return np.full(n, fill)
    if len(vals) != n:
        raise InstanceError(f"{where}: expected {n} entries, got {len(vals)}")
    return np.array([fill if v is None else float(v) for v in vals])


def problem_from_dict(doc: dict) -> SeparableMilp:
    try:
        jsonschema.validate(doc, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as err:
        raise InstanceError(f"{_path(err)}: {err.message}") from None
    rhs = np.asarray(doc["rhs"], dtype=float)
    m = len(rhs)
    subs = []
    for i, sd in enumerate(doc["subsystems"]):
        where = f"subsystem {i}"
        c_int = np.asarray(sd["int_cost"], dtype=float)
        c_cont = np.asarray(sd.get("cont_cost", []), dtype=float)
        A_int = _matrix(sd["int_coupling"], m, len(c_int), f"{where} int_coupling")
        A_cont = _matrix(sd.get("cont_coupling", []), m, len(c_cont), f"{where} cont_coupling")
        ls = sd["local_set"]
        if ls["type"] == "knapsack":
            if len(ls["weights"]) != len(c_int):
                raise InstanceError(f"{where} local_set.weights: expected {len(c_int)} entries, "
                                    f"got {len(ls['weights'])}")
            if c_cont.size:
                raise InstanceError(f"{where}: knapsack subsystems have no continuous variables")
            local = KnapsackSet(np.asarray(ls["weights"], dtype=np.int64), int(ls["capacity"]))
        else:
            n_all = len(c_int) + len(c_cont)
            mat = _matrix(ls["matrix"], len(ls["rhs"]), n_all, f"{where} local_set.matrix")
            if len(ls["senses"]) != len(ls["rhs"]):
                raise InstanceError(f"{where} local_set.senses: expected {len(ls['rhs'])} entries")
            local = BoundedPolyhedron(
                mat, np.asarray(ls["rhs"], dtype=float), tuple(ls["senses"]),
                _bounds(ls["int_lb"], len(c_int), f"{where} local_set.int_lb", -np.inf),
                _bounds(ls["int_ub"], len(c_int), f"{where} local_set.int_ub", np.inf),
                _bounds(ls.get("cont_lb"), len(c_cont), f"{where} local_set.cont_lb", -np.inf),
                _bounds(ls.get("cont_ub"), len(c_cont), f"{where} local_set.cont_ub", np.inf))
        subs.append(Subsystem(c_int, c_cont, A_int, A_cont, local))
    senses = doc.get("senses", EQ)
    if not isinstance(senses, str) and len(senses) != m:
        raise InstanceError(f"$.senses: expected {m} entries, got {len(senses)}")
    problem = SeparableMilp(tuple(subs), rhs, senses if isinstance(senses, str) else tuple(senses),
                            doc.get("name", ""))
    issues = validate(problem)
    if issues:
        raise InstanceError("; ".join(issues))
    return problem


def parse_problem_json(text: str) -> SeparableMilp:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise InstanceError(f"line {err.lineno}: invalid JSON: {err.msg}") from None
    return problem_from_dict(doc)


def _num_list(arr) -> list:
    return [None if not np.isfinite(v) else float(v) for v in np.asarray(arr, dtype=float)]


def problem_to_dict(problem: SeparableMilp) -> dict:
    subs = []
    for sub in problem.subsystems:
        sd = {"int_cost": _num_list(sub.int_cost),
              "int_coupling": np.asarray(sub.int_coupling, dtype=float).tolist()}
        if sub.n_cont:
            sd["cont_cost"] = _num_list(sub.cont_cost)
            sd["cont_coupling"] = np.asarray(sub.cont_coupling, dtype=float).tolist()
        ls = sub.local_set
        if isinstance(ls, KnapsackSet):
            sd["local_set"] = {"type": "knapsack", "weights": [int(w) for w in ls.weights],
                               "capacity": int(ls.capacity)}
        else:
            sd["local_set"] = {"type": "polyhedron", "matrix": ls.matrix.tolist(),
                               "rhs": _num_list(ls.rhs), "senses": list(ls.senses),
                               "int_lb": _num_list(ls.int_lb), "int_ub": _num_list(ls.int_ub),
                               "cont_lb": _num_list(ls.cont_lb), "cont_ub": _num_list(ls.cont_ub)}
        subs.append(sd)
    doc = {"rhs": _num_list(problem.rhs), "senses": list(problem.senses), "subsystems": subs}
    if problem.name:
        doc["name"] = problem.name
    return doc


def dump_problem_json(problem: SeparableMilp, indent: Optional[int] = 1) -> str:
    return json.dumps(problem_to_dict(problem), indent=indent)


def load_problem(path: str, fmt: Optional[str] = None) -> SeparableMilp:
    if fmt is None:
        fmt = "json" if path.endswith(".json") else "gap"
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "gap":
        return parse_gap_instance(text, name=path)
    if fmt == "json":
        return parse_problem_json(text)
    raise InstanceError(f"unknown instance format {fmt!r}")


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path} line {err.lineno}: invalid JSON: {err.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return RunConfig.from_dict(data)
