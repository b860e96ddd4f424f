"""Small graphs, models and brute-force oracles shared by the tests."""
from __future__ import annotations

import math
from functools import reduce

import numpy as np

from countsynth.cli import parse_model
from countsynth.graph import Cycle, LabeledDigraph
from countsynth.model import Mode, SwitchedModel, Box, affine_mode
from countsynth.presets import preset


def four_and_two() -> LabeledDigraph:
    """Five nodes; cycles q0 q1 q2 q3 (mode 0) and q0 q4 (mode 1 out of q0)."""
    return LabeledDigraph.from_edges(5, 2, [(0, 0, 1), (1, 0, 2), (2, 0, 3), (3, 0, 0),
                                            (0, 1, 4), (4, 0, 0)])


def ring(k: int, n_modes: int = 1) -> LabeledDigraph:
    return LabeledDigraph.from_edges(k, n_modes, [(i, 0, (i + 1) % k) for i in range(k)])


def ring_cycle(k: int) -> Cycle:
    return Cycle(tuple((i, 0) for i in range(k)))


def numerical_model() -> SwitchedModel:
    return parse_model(preset("numerical")["model"])


def tcl_model(h: int = 0) -> SwitchedModel:
    return parse_model(preset("tcl")["classes"][h]["model"])


def tcl_off_mode(a=2.0, theta=32.0) -> Mode:
    return affine_mode("off", [[-a]], [a * theta], lipschitz=a, kl_gain=1.0, kl_rate=a,
                       disturbance_bound=0.025)


def tcl_on_mode(a=2.0, b=2.0, theta=32.0, P=5.6) -> Mode:
    return affine_mode("on", [[-a]], [a * theta - b * P], lipschitz=a, kl_gain=1.0, kl_rate=a,
                       disturbance_bound=0.025)


def zero_model(lo=(0.0,), hi=(1.0,), n_modes: int = 2) -> SwitchedModel:
    n = len(lo)
    modes = [Mode(f"z{k}", [[] for _ in range(n)], 1.0, 1.5, 1.0) for k in range(n_modes)]
    return SwitchedModel(modes, Box(lo, hi))


def random_counting_instance(seed, exact: bool = True, max_nodes: int = 5, max_N: int = 5, max_T: int = 3):
    """Small counting problem on a random strongly connected graph with all simple cycles."""
    from countsynth.abstraction import DiscreteCountingSet
    from countsynth.graph import enumerate_simple_cycles
    from countsynth.synthesis import ProblemInstance

    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_nodes + 1))
    g = random_strong_graph(rng, n, extra=0.5)
    N = int(rng.integers(1, max_N + 1))
    w0 = rng.multinomial(N, np.ones(n) / n)
    X = DiscreteCountingSet.from_pairs([(q, m) for q in range(n) for m in range(2)
                                        if g.valid[q, m] and rng.random() < 0.4], n, 2,
                                       int(rng.integers(0, N + 1)), "X")
    cycles = enumerate_simple_cycles(g, n)
    return ProblemInstance(g, w0, [X], int(rng.integers(0, max_T + 1)), cycles, exact=exact)


def random_strong_graph(rng, n: int, n_modes: int = 2, extra: float = 0.3) -> LabeledDigraph:
    """Random strongly connected graph: a Hamiltonian ring plus random extra actions."""
    perm = rng.permutation(n)
    succ = np.full((n, n_modes), -1, dtype=np.int64)
    for i in range(n):
        succ[perm[i], 0] = perm[(i + 1) % n]
    for q in range(n):
        for m in range(1, n_modes):
            if rng.random() < extra:
                succ[q, m] = rng.integers(n)
    return LabeledDigraph(succ)


# ---------------------------------------------------------------- count oracles

def brute_count(pairs, alpha, X, s) -> float:
    """X-count at time s by moving every unit explicitly."""
    n = len(pairs)
    total = 0
    for i in range(n):
        # The unit at position i at time 0 sits at position (i + s) mod n at time s.
        if pairs[(i + s) % n] in X:
            total += alpha[i]
    return total


def brute_maxcnt(pairs, alpha, X) -> float:
    return max(brute_count(pairs, alpha, X, s) for s in range(len(pairs)))


def brute_joint(cycles, alphas, X) -> float:
    L = reduce(math.lcm, (len(c) for c in cycles), 1)
    return max(sum(brute_count(c.pairs, a, X, s) for c, a in zip(cycles, alphas)) for s in range(L))


def random_cycle(rng, length: int, n_states: int = 6, n_modes: int = 2) -> Cycle:
    return Cycle(tuple((int(rng.integers(n_states)), int(rng.integers(n_modes))) for _ in range(length)))


def random_pairs_set(rng, n_states: int = 6, n_modes: int = 2, p: float = 0.4) -> set:
    return {(q, m) for q in range(n_states) for m in range(n_modes) if rng.random() < p}


def toy_config(**overrides) -> dict:
    """One-dimensional two-mode scenario that the internal solver handles in about a second."""
    cfg = {
        "name": "toy", "seed": 3,
        "model": {
            "domain": {"lo": [0.0], "hi": [1.0]},
            "modes": [
                {"id": "a", "field": [[[[1], -1.0], [[0], 0.2]]], "K": 1, "M": 1, "lambda": 1, "delta_bar": 0.01},
                {"id": "b", "field": [[[[1], -1.0], [[0], 0.8]]], "K": 1, "M": 1, "lambda": 1, "delta_bar": 0.01},
            ],
        },
        "abstraction": {"eta": 0.05, "tau": 0.2},
        "constraints": [{"name": "mode_a", "modes": ["a"], "R_frac": 0.6},
                        {"name": "high", "box": {"lo": [0.7], "hi": [None]}, "R": 4}],
        "fleet": {"N": 10, "init": "uniform", "box": {"lo": [0.3], "hi": [0.6]}},
        "synthesis": {"T": 4, "cycles": {"mode": "enumerate", "max_len": 6}, "solver": "internal"},
        "sim": {"horizon": 30, "bins": {"axis": 0, "lo": 0.0, "hi": 1.0, "n": 10}},
    }
    for key, value in overrides.items():
        section, _, leaf = key.partition(".")
        if leaf:
            cfg[section][leaf] = value
        else:
            cfg[section] = value
    return cfg
