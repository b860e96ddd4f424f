"""Built-in scenario configurations.

Configurations are plain JSON-compatible dicts. Polynomial fields are
lists (one per coordinate) of ``[exponents, coefficient]`` pairs; a
``null`` box bound means unbounded.
"""
from __future__ import annotations

import copy
import math

NUMERICAL_CERT = {"K": 9.75, "M": math.sqrt(2.0), "lambda": 2.0, "delta_bar": 0.0}


def _saturating_field(u: float) -> list:
    return [
        [[[1, 0], -2.0], [[0, 1], 1.0], [[0, 0], 2.0 * u]],
        [[[1, 0], -1.0], [[0, 0], u], [[0, 1], -2.0], [[0, 3], -1.0]],
    ]


def numerical(N: int = 10_000) -> dict:
    """Two-mode nonlinear system with 55% mode and half-plane caps."""
    return {
        "name": "numerical",
        "seed": 8,
        "model": {
            "domain": {"lo": [-2.0, -1.5], "hi": [2.0, 1.5]},
            "modes": [dict(id="u1", field=_saturating_field(-1.0), **NUMERICAL_CERT),
                      dict(id="u2", field=_saturating_field(1.0), **NUMERICAL_CERT)],
        },
        "abstraction": {"eta": 0.05, "tau": 0.32, "epsilon": 0.1},
        "constraints": [
            {"name": "mode_u1", "modes": ["u1"], "R_frac": 0.55},
            {"name": "mode_u2", "modes": ["u2"], "R_frac": 0.55},
            {"name": "X1", "box": {"lo": [0.0, None], "hi": [None, None]}, "R_frac": 0.55},
            {"name": "X2", "box": {"lo": [None, None], "hi": [0.0, None]}, "R_frac": 0.55},
        ],
        "fleet": {"N": N, "init": "uniform", "repeat": N // 100},
        "synthesis": {
            "T": 10,
            "cycles": {"mode": "sample", "count": 200, "visit_complement": ["X1", "X2"],
                       "mode_fractions": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]},
            "solver": "relaxed",
            "restrict_reachable": True,
            "scale": 1,
        },
        "sim": {"horizon": 50, "bins": {"axis": 0, "lo": -2.0, "hi": 2.0, "n": 40}},
    }


def _tcl_class(name: str, a: float, b: float, theta: float, P: float, eta: float, N: int) -> dict:
    cert = {"K": a, "M": 1.0, "lambda": a, "delta_bar": 0.025}
    return {
        "name": name,
        "model": {
            "domain": {"lo": [21.3], "hi": [23.7]},
            "modes": [dict(id="off", field=[[[[1], -a], [[0], a * theta]]], **cert),
                      dict(id="on", field=[[[[1], -a], [[0], a * theta - b * P]]], **cert)],
        },
        "abstraction": {"eta": eta, "tau": 0.05, "epsilon": 0.2},
        "constraints": [
            {"name": f"{name}_deadband", "box": {"lo": [21.3], "hi": [23.7]}, "complement": True, "R": 0},
        ],
        "fleet": {"N": N, "init": "uniform"},
        "cycles": {"mode": "sample", "count": 50,
                   "mode_fractions": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]},
    }


def tcl(N: int = 200, on_bound: float = 0.30, kind: str = "max") -> dict:
    """Two TCL classes sharing an aggregate on-count bound.

    ``on_bound`` is a fraction of the whole fleet; ``kind`` is ``max`` for
    an upper bound on the on-count and ``min`` for a lower bound.
    """
    half = N // 2
    return {
        "name": "tcl" if kind == "max" else "tcl-min",
        "seed": 0,
        "classes": [
            _tcl_class("class1", 2.0, 2.0, 32.0, 5.6, 0.002, half),
            _tcl_class("class2", 2.2, 2.2, 32.0, 5.9, 0.0015, N - half),
        ],
        "joint": [{"name": f"{kind}_on", "modes": ["on"], "R_frac": on_bound, "kind": kind}],
        "synthesis": {"T": 20, "solver": "highs", "restrict_reachable": True, "scale": "auto"},
        "sim": {"horizon": 100, "bins": {"axis": 0, "lo": 21.3, "hi": 23.7, "n": 24}},
    }


PRESETS = {
    "numerical": numerical,
    "tcl": lambda: tcl(200, 0.30, "max"),
    "tcl-min": lambda: tcl(200, 0.335, "min"),
}


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name]())
