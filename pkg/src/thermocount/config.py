"""Scenario documents: parsing, defaults and built-in scenarios.

A scenario is a YAML (or JSON) mapping::

    shift: {full: 2}                  # or {golden_mean: true}
                                      # or {alphabet_size: 3, transitions: [[...]]}
                                      # or {file: shift.yaml}
    f: {depth: 1, values: {"0": 1, "1": "sqrt(2)"}}
    g: {depth: 1, values: {"0": "sqrt(3)", "1": 1}}
    family: {rule: log, params: {scale: 2}, N: 64}   # truncation studies
    independence: assumed
    tasks: {count: {m: star, xi: 0.5, ...}, ...}

Numeric entries may be arithmetic expressions in ``sqrt``, ``log``, ``exp``,
``pi`` and ``e``.
"""
from __future__ import annotations

import ast
import copy
import math
import operator
import os
from dataclasses import dataclass
from typing import Optional

import yaml

from .errors import ConfigError
from .potential import Independence, Potential, PotentialPair, TruncationFamily
from .shift_core import Shift, build_shift, full_shift, golden_mean_shift

TASK_DEFAULTS: dict = {
    "pressure": {"z1": [-1.0, 0.0, 11], "z2": [-1.0, 0.0, 11]},
    "manhattan": {"samples": 201, "extend": 0.0},
    "correlation": {"m": ["star"], "samples": 201},
    "bishop-steger": {"alpha": 1.0, "beta": 1.0, "samples": 2001},
    "count": {
        "m": "star",
        "xi": 0.5,
        "t_min": 10.0,
        "t_max": 24.0,
        "t_step": 0.05,
        "cylinders": ["0"],
        "prefactor_power": 1.5,
        "samples": 201,
    },
    "verify": {"n_max": 8, "samples": 101, "random_words": 100},
    "saddle": {"case": "gaussian", "n": [64, 256, 1024], "epsilon": 1.0, "c": 0.1},
    "truncation-study": {"N": [8, 16, 32, 64], "N_grid": [16, 64, 256, 1024, 4096, 16384]},
}

GLOBAL_DEFAULTS: dict = {"threads": None, "budget": 5_000_000_000, "seed": 0}

_SAFE_FUNCS = {"sqrt": math.sqrt, "log": math.log, "exp": math.exp, "ln": math.log}
_SAFE_NAMES = {"pi": math.pi, "e": math.e}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def evaluate(expr) -> float:
    """Evaluate a number or a small arithmetic expression string."""
    if isinstance(expr, (int, float)):
        return float(expr)
    if not isinstance(expr, str):
        raise ConfigError(f"expected a number, got {expr!r}")

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name) and node.id in _SAFE_NAMES:
            return _SAFE_NAMES[node.id]
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _SAFE_FUNCS and len(node.args) == 1):
            return _SAFE_FUNCS[node.func.id](walk(node.args[0]))
        raise ConfigError(f"unsupported expression element in {expr!r}")

    try:
        return walk(ast.parse(expr, mode="eval"))
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse {expr!r}: {exc}") from exc


BUILTIN: dict = {
    "standard": {
        "shift": {"full": 2},
        "f": {"depth": 1, "values": {"0": 1, "1": "sqrt(2)"}},
        "g": {"depth": 1, "values": {"0": "sqrt(3)", "1": 1}},
    },
    "demo": {
        "shift": {"full": 3},
        "f": {"depth": 1, "values": {"0": 1, "1": "sqrt(2)", "2": "sqrt(3)"}},
        "g": {"depth": 1, "values": {"0": "pi/2", "1": 1, "2": "(1+sqrt(5))/2"}},
    },
    "rigid": {
        "shift": {"full": 2},
        "f": {"depth": 1, "values": {"0": 1, "1": "sqrt(2)"}},
        "g": {"depth": 1, "values": {"0": 1.7, "1": "1.7*sqrt(2)"}},
    },
    "golden": {
        "shift": {"golden_mean": True},
        "f": {"depth": 2, "values": {"00": 1, "01": "sqrt(2)", "10": "sqrt(3)"}},
        "g": {"depth": 2, "values": {"00": "sqrt(5)-1", "01": 1, "10": "pi/3"}},
    },
    "gauss-truncation": {
        "shift": {"full": 2},
        "f": {"depth": 1, "values": {"0": 1, "1": "sqrt(2)"}},
        "g": {"depth": 1, "values": {"0": "sqrt(3)", "1": 1}},
        "family": {"rule": "log", "params": {"scale": 2.0}, "N": 64, "N_max": 16384},
    },
}


@dataclass
class Scenario:
    raw: dict
    shift: Shift
    pair: Optional[PotentialPair]
    family: Optional[TruncationFamily]

    def task(self, name: str) -> dict:
        out = copy.deepcopy(TASK_DEFAULTS.get(name, {}))
        out.update((self.raw.get("tasks") or {}).get(name) or {})
        return out

    def resolved(self) -> dict:
        """Full configuration with every default filled in."""
        doc = copy.deepcopy(self.raw)
        tasks = doc.setdefault("tasks", {})
        for name in TASK_DEFAULTS:
            tasks[name] = self.task(name)
        for key, val in GLOBAL_DEFAULTS.items():
            doc.setdefault(key, val)
        return doc


def _load_file(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"file not found: {path}")
    with open(path) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
            raise ConfigError(f"{path}{where}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


def _build_shift(spec: dict, base_dir: str) -> Shift:
    if not isinstance(spec, dict):
        raise ConfigError("field 'shift' must be a mapping")
    if "file" in spec:
        return _build_shift(_load_file(os.path.join(base_dir, spec["file"])), base_dir)
    if "full" in spec:
        return full_shift(int(spec["full"]), spec.get("labels"))
    if spec.get("golden_mean"):
        return golden_mean_shift()
    try:
        return build_shift(int(spec["alphabet_size"]), spec["transitions"], spec.get("labels"))
    except KeyError as exc:
        raise ConfigError(f"field 'shift' is missing {exc}") from exc


def _build_potential(shift: Shift, spec: dict, name: str) -> Potential:
    if not isinstance(spec, dict) or "values" not in spec:
        raise ConfigError(f"field '{name}' needs 'depth' and 'values'")
    depth = int(spec.get("depth", 1))
    vals = spec["values"]
    try:
        if isinstance(vals, dict):
            table = {str(k): evaluate(v) for k, v in vals.items()}
        else:
            table = [evaluate(v) for v in vals]
        return Potential.from_values(shift, depth, table)
    except ValueError as exc:
        raise ConfigError(f"field '{name}': {exc}") from exc


def scenario_from_dict(doc: dict, base_dir: str = ".") -> Scenario:
    if "builtin" in doc:
        name = doc["builtin"]
        if name not in BUILTIN:
            raise ConfigError(f"unknown builtin scenario {name!r}; choose from {sorted(BUILTIN)}")
        merged = copy.deepcopy(BUILTIN[name])
        merged.update({k: v for k, v in doc.items() if k != "builtin"})
        doc = merged
    if "shift" not in doc:
        raise ConfigError("missing field 'shift'")
    shift = _build_shift(doc["shift"], base_dir)
    pair = None
    if "f" in doc and "g" in doc:
        f = _build_potential(shift, doc["f"], "f")
        g = _build_potential(shift, doc["g"], "g")
        try:
            pair = PotentialPair(f, g, Independence(doc.get("independence", "assumed")))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    family = None
    if "family" in doc:
        fam = doc["family"]
        family = TruncationFamily(fam.get("rule", "log"), fam.get("params", {}), int(fam.get("N_max", 1 << 14)))
    return Scenario(doc, shift, pair, family)


def load_scenario(path: Optional[str] = None, builtin: Optional[str] = None) -> Scenario:
    if path is not None:
        return scenario_from_dict(_load_file(path), os.path.dirname(os.path.abspath(path)))
    return scenario_from_dict({"builtin": builtin or "standard"})
