import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from builders import brute_joint, four_and_two, ring, ring_cycle
from countsynth.abstraction import DiscreteCountingSet
from countsynth.aggregate import joint_maxcnt, maxcnt
from countsynth.errors import NotSupportedError
from countsynth.graph import Cycle, LabeledDigraph
from countsynth.rounding import (apportion_weights, prefix_instance, pseudo_periodic, round_suffix,
                                 segment_count, violation_bound, worst_case_bound)
from countsynth.solver import solve_ilp
from countsynth.synthesis import ProblemInstance, build_lp, check_solution, extract_solution

FIVE = Cycle(tuple((i, 0) for i in range(5)))


def peak(alpha, b):
    """Oracle peak count: a unit at position i sits at (i + s) mod n at time s."""
    alpha = np.asarray(alpha, dtype=float)
    return max(float(alpha @ np.roll(b, -s)) for s in range(len(b)))


def arcs(n):
    """Every nonempty circular run of consecutive positions, as 0/1 vectors."""
    yield np.ones(n)
    for start in range(n):
        for k in range(1, n):
            b = np.zeros(n)
            b[[(start + i) % n for i in range(k)]] = 1
            yield b


def runs(b):
    b = np.asarray(b)
    if not b.any():
        return 0
    if b.all():
        return 1
    return int(np.sum((b == 1) & (np.roll(b, 1) == 0)))


# ---------------------------------------------------------------- apportionment

def test_apportion_examples():
    assert apportion_weights([2, 0, 5]).tolist() == [2, 0, 5]
    assert apportion_weights([1.5, 1.5]).tolist() == [2, 1]
    assert apportion_weights([0.2, 0.3, 0.5]).tolist() == [0, 0, 1]
    assert apportion_weights([]).tolist() == []
    with pytest.raises(ValueError):
        apportion_weights([-1.0, 2.0])


@given(st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_apportion_contract(k, seed):
    # Weights with an integer total, as the relaxed programs produce.
    rng = np.random.default_rng(seed)
    w = rng.random(k) * 10
    w[-1] += np.ceil(w.sum()) - w.sum()
    out = apportion_weights(w)
    assert out.sum() == round(w.sum())
    assert np.all(np.abs(out - w) <= 1 + 1e-9) and np.all(out >= 0)


# ---------------------------------------------------------------- pseudo-periodic assignment

def test_pseudo_periodic_examples():
    assert pseudo_periodic(7, 3).tolist() == [1, 0, 1, 0, 1, 0, 0]
    assert pseudo_periodic(7, 10).tolist() == [2, 1, 2, 1, 2, 1, 1]
    assert pseudo_periodic(7, 14).tolist() == [2] * 7
    assert pseudo_periodic(4, 0).tolist() == [0] * 4
    with pytest.raises(ValueError):
        pseudo_periodic(0, 3)


@given(st.integers(1, 30), st.integers(0, 200))
def test_pseudo_periodic_shape(n, N):
    a = pseudo_periodic(n, N)
    assert a.sum() == N and a.max() - a.min() <= 1
    # Runs of the larger value are isolated unless they fill more than half the cycle.
    k2 = N % n
    if 0 < k2 <= n // 2:
        hi = a == a.max()
        assert not np.any(hi & np.roll(hi, 1))


# ---------------------------------------------------------------- round_suffix

def test_round_suffix_seven_cycle():
    g = ring(7)
    g7 = LabeledDigraph.from_edges(7, 2, [(i, 0, (i + 1) % 7) for i in range(7)] + [(0, 1, 0)])
    assert round_suffix(g7, [ring_cycle(7)], [np.full(7, 3 / 7)])[0].tolist() == [1, 0, 1, 0, 1, 0, 0]
    with pytest.raises(NotSupportedError):
        round_suffix(g, [ring_cycle(7)], [np.full(7, 3 / 7)])


def four_and_three():
    """Cycles of lengths 4 and 3 through node 0, so the component is aperiodic."""
    return LabeledDigraph.from_edges(6, 2, [(0, 0, 1), (1, 0, 2), (2, 0, 3), (3, 0, 0),
                                            (0, 1, 4), (4, 0, 5), (5, 0, 0)])


def test_round_suffix_conserves_totals():
    g = four_and_three()
    c4 = Cycle(((0, 0), (1, 0), (2, 0), (3, 0)))
    c3 = Cycle(((0, 1), (4, 0), (5, 0)))
    out = round_suffix(g, [c4, c3], [np.array([0.5, 1.0, 0.7, 0.3]), np.array([0.4, 0.4, 1.7])])
    assert [a.sum() for a in out] == [3, 2]
    with pytest.raises(NotSupportedError):
        round_suffix(four_and_two(), [c4], [np.full(4, 1.0)])


def test_round_suffix_integer_average_input():
    g = four_and_three()
    c4 = Cycle(((0, 0), (1, 0), (2, 0), (3, 0)))
    assert round_suffix(g, [c4], [np.full(4, 2.0)])[0].tolist() == [2, 2, 2, 2]


def test_prefix_instance_pins_suffix():
    g = LabeledDigraph.from_edges(2, 2, [(0, 0, 1), (1, 0, 0), (0, 1, 0)])
    c = Cycle(((0, 0), (1, 0)))
    X = DiscreteCountingSet.from_pairs([(0, 0)], 2, 2, 2)
    inst = ProblemInstance(g, np.array([3, 0]), [X], 2, [c], exact=False)
    pinned = prefix_instance(inst, [c], [np.array([2, 1])])
    assert pinned.exact and pinned.fixed_alphas[0].tolist() == [2, 1]
    lp = build_lp(pinned)
    res = solve_ilp(lp)
    assert res.feasible
    sol = extract_solution(lp, res.x, pinned)
    assert sol.alphas[0].tolist() == [2, 1] and check_solution(pinned, sol) == []


# ---------------------------------------------------------------- segments and bounds

def test_segment_count_examples():
    assert segment_count(FIVE, set()) == 0
    assert segment_count(FIVE, set(FIVE.pairs)) == 1
    assert segment_count(FIVE, {(1, 0), (2, 0), (3, 0)}) == 1
    assert segment_count(FIVE, {(0, 0), (4, 0)}) == 1
    assert segment_count(FIVE, {(0, 0), (2, 0)}) == 2


def test_violation_bound_examples():
    X = {(1, 0), (2, 0)}
    assert violation_bound([FIVE], [None], X, 4) == 6
    cycles = [ring_cycle(3), Cycle(((5, 0), (6, 0)))]
    X = set(cycles[0].pairs) | set(cycles[1].pairs)
    assert violation_bound(cycles, [None, None], X, 4) == 4 + 2 * 2


def test_worst_case_bound_examples():
    c = ring_cycle(4)
    X = {(0, 0)}
    assert worst_case_bound(c, 8, X) == 2 + 1
    assert maxcnt(c, pseudo_periodic(4, 8), X) == 2
    assert worst_case_bound(c, 6, X) == pytest.approx(1.5 + 1)


@given(st.integers(0, 2 ** 32 - 1))
def test_rounded_suffix_within_violation_bound(seed):
    rng = np.random.default_rng(seed)
    J = int(rng.integers(1, 4))
    lengths = rng.integers(1, 7, J)
    states = iter(range(100))
    cycles = [Cycle(tuple((next(states), int(rng.integers(2))) for _ in range(n))) for n in lengths]
    X = {p for c in cycles for p in c.pairs if rng.random() < 0.5}
    total = int(rng.integers(1, 30))
    weights = rng.dirichlet(np.ones(int(lengths.sum()))) * total
    alphas = np.split(weights, np.cumsum(lengths)[:-1])
    R = joint_maxcnt(cycles, alphas, X)
    rounded = [pseudo_periodic(len(c), int(n))
               for c, n in zip(cycles, apportion_weights([a.sum() for a in alphas]))]
    assert brute_joint(cycles, rounded, X) <= violation_bound(cycles, alphas, X, R) + 1e-9


# ---------------------------------------------------------------- exhaustive properties

@pytest.mark.parametrize("n", range(1, 15))
def test_consecutive_sets_within_one(n):
    for N in range(0, 3 * n + 1):
        avg = np.full(n, N / n)
        a = pseudo_periodic(n, N)
        for b in arcs(n):
            assert peak(a, b) <= peak(avg, b) + 1 + 1e-9


@pytest.mark.parametrize("n", range(1, 11))
def test_segments_bound_slack(n):
    for N in range(0, 2 * n + 1):
        avg = np.full(n, N / n)
        a = pseudo_periodic(n, N)
        for bits in itertools.product((0, 1), repeat=n):
            b = np.array(bits, dtype=float)
            assert peak(a, b) <= peak(avg, b) + runs(b) + 1e-9


@pytest.mark.parametrize("n", range(1, 13))
def test_quarter_length_slack(n):
    c = ring_cycle(n)
    for N in range(0, 2 * n + 1):
        a = pseudo_periodic(n, N)
        for bits in itertools.product((0, 1), repeat=n):
            X = {(i, 0) for i in range(n) if bits[i]}
            assert maxcnt(c, a, X) <= worst_case_bound(c, N, X) + 1e-9


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 12))
def test_average_never_worse(seed, n):
    rng = np.random.default_rng(seed)
    alpha = rng.random(n) * 10
    b = (rng.random(n) < 0.5).astype(float)
    assert peak(np.full(n, alpha.sum() / n), b) <= peak(alpha, b) + 1e-9
