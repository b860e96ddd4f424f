import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from builders import four_and_two, random_counting_instance, ring, ring_cycle
from countsynth.abstraction import DiscreteCountingSet
from countsynth.errors import DivisibilityError, GraphError
from countsynth.graph import Cycle, LabeledDigraph
from countsynth.solver import SolveResult, solve_highs, solve_ilp
from countsynth.synthesis import (JointConstraint, PrefixSuffixSolution, ProblemInstance, aggregate_initial,
                                  build_lp, build_multiclass, check_solution, completeness_bounds,
                                  extract_solution, infeasibility_verdict, scale_instance, scale_joint)


def two_mode_node(N=10, R=4, T=1):
    """One node with self-loops in modes 0 and 1; at most R units in mode 0."""
    g = LabeledDigraph.from_edges(1, 2, [(0, 0, 0), (0, 1, 0)])
    X = DiscreteCountingSet.from_pairs([(0, 0)], 1, 2, R, "on")
    cycles = [Cycle(((0, 0),)), Cycle(((0, 1),))]
    return ProblemInstance(g, np.array([N]), [X], T, cycles)


def point(lp, inst, r, w, alphas):
    x = np.zeros(lp.n_vars)
    x[lp.blocks["r"]] = np.asarray(r, dtype=float).ravel()
    x[lp.blocks["w"]] = np.asarray(w, dtype=float).ravel()
    for j, a in enumerate(alphas):
        x[lp.blocks[f"alpha_{j}"]] = a
    return x


# ---------------------------------------------------------------- aggregate_initial

def test_aggregate_initial():
    assert aggregate_initial([0, 2, 2, 4], 5).tolist() == [1, 0, 2, 0, 1]
    assert aggregate_initial([], 3).tolist() == [0, 0, 0]
    with pytest.raises(IndexError):
        aggregate_initial([5], 5)


@given(st.lists(st.integers(0, 9), max_size=40))
def test_aggregate_initial_mass(states):
    assert aggregate_initial(states, 10).sum() == len(states)


# ---------------------------------------------------------------- instance validation

def test_instance_validation():
    g = ring(3)
    with pytest.raises(ValueError):
        ProblemInstance(g, np.array([1, 1]), [], 1, [])
    with pytest.raises(ValueError):
        ProblemInstance(g, np.array([1, -1, 0]), [], 1, [])
    with pytest.raises(ValueError):
        ProblemInstance(g, np.array([0.5, 0.5, 0]), [], 1, [])
    with pytest.raises(ValueError):
        ProblemInstance(g, np.array([1, 0, 0]), [], -1, [])
    with pytest.raises(GraphError):
        ProblemInstance(g, np.array([1, 0, 0]), [], 1, [Cycle(((0, 0), (2, 0)))])
    bad = DiscreteCountingSet.from_pairs([(0, 0)], 2, 1, 1)
    with pytest.raises(ValueError):
        ProblemInstance(g, np.array([1, 0, 0]), [bad], 1, [])
    relaxed = ProblemInstance(g, np.array([0.5, 0.5, 0]), [], 1, [], exact=False)
    assert relaxed.N == 1.0


# ---------------------------------------------------------------- program shape

def test_connection_only_program():
    inst = ProblemInstance(ring(3), np.array([1, 1, 1]), [], 0, [ring_cycle(3)])
    lp = build_lp(inst)
    assert lp.n_vars == 3 and lp.n_rows == 3
    assert lp.rhs.tolist() == [1, 1, 1]
    res = solve_ilp(lp)
    assert res.feasible and res.x.tolist() == [1, 1, 1]


@given(st.integers(0, 10_000))
def test_dimension_formulas(seed):
    inst = random_counting_instance(seed)
    lp = build_lp(inst)
    n, m, T = inst.n_nodes, inst.n_modes, inst.T
    lengths = [len(c) for c in inst.cycles]
    assert lp.n_vars - lp.meta["n_aux"] == sum(lengths) + T * n * m + T * n
    fam = {k: v.stop - v.start for k, v in lp.row_families.items()}
    assert fam["17a"] == T * len(inst.constraints)
    assert fam["17c"] == n and fam["17d"] == T * n and fam["17e"] == T * n
    assert lp.n_rows == sum(fam.values())
    assert lp.integer.all()


def test_suffix_rows_follow_lcm():
    g = LabeledDigraph.from_edges(5, 1, [(0, 0, 1), (1, 0, 0), (2, 0, 3), (3, 0, 4), (4, 0, 2)])
    X = DiscreteCountingSet.from_pairs([(0, 0), (2, 0)], 5, 1, 1)
    cycles = [Cycle(((0, 0), (1, 0))), Cycle(((2, 0), (3, 0), (4, 0)))]
    inst = ProblemInstance(g, np.array([1, 1, 1, 1, 1]), [X], 0, cycles, suffix_mode="exact")
    lp = build_lp(inst)
    s = lp.row_families["17b"]
    assert s.stop - s.start == 6
    coprime = build_lp(ProblemInstance(g, inst.w0, [X], 0, cycles, suffix_mode="coprime"))
    s = coprime.row_families["17b"]
    assert s.stop - s.start == 2 + 3 + 1 and coprime.meta["n_aux"] == 2


def test_invalid_actions_fixed_to_zero():
    inst = ProblemInstance(four_and_two(), np.array([2, 1, 0, 0, 3]), [], 2, [])
    lp = build_lp(inst)
    ub = lp.ub[lp.blocks["r"]].reshape(2, 5, 2)
    assert np.all(ub[:, ~four_and_two().valid] == 0)
    assert np.all(np.isinf(ub[:, four_and_two().valid]))


# ---------------------------------------------------------------- hand-solved instances

def test_two_mode_node_hand_point():
    inst = two_mode_node()
    lp = build_lp(inst)
    assert lp.is_feasible(point(lp, inst, [[[4, 6]]], [[10]], [[4], [6]]))
    assert not lp.is_feasible(point(lp, inst, [[[5, 5]]], [[10]], [[4], [6]]))
    assert not lp.is_feasible(point(lp, inst, [[[4, 6]]], [[10]], [[5], [5]]))
    res = solve_ilp(lp)
    assert res.feasible
    sol = extract_solution(lp, res.x, inst)
    assert sol.r[0, 0, 0] <= 4 and sol.alphas[0][0] <= 4 and check_solution(inst, sol) == []


def test_ring_toy():
    X = DiscreteCountingSet.from_pairs([(0, 0)], 3, 1, 1)
    inst = ProblemInstance(ring(3), np.array([1, 1, 1]), [X], 3, [ring_cycle(3)])
    lp = build_lp(inst)
    res = solve_ilp(lp)
    sol = extract_solution(lp, res.x, inst)
    assert sol.alphas[0].tolist() == [1, 1, 1]
    assert check_solution(inst, sol) == []
    crowded = ProblemInstance(ring(3), np.array([2, 1, 0]), [X], 3, [ring_cycle(3)])
    assert solve_ilp(build_lp(crowded)).status == "infeasible"


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_solutions_pass_independent_check(seed):
    inst = random_counting_instance(seed)
    lp = build_lp(inst)
    res = solve_highs(lp)
    if res.feasible:
        assert check_solution(inst, extract_solution(lp, res.x, inst)) == []


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_reachability_restriction_preserves_feasibility(seed):
    inst = random_counting_instance(seed)
    tight = ProblemInstance(inst.graph, inst.w0, inst.constraints, inst.T, inst.cycles,
                            restrict_reachable=True)
    assert solve_highs(build_lp(inst)).feasible == solve_highs(build_lp(tight)).feasible


def test_check_solution_detects_corruption():
    inst = two_mode_node()
    lp = build_lp(inst)
    sol = extract_solution(lp, solve_ilp(lp).x, inst)
    bad = PrefixSuffixSolution(sol.w0, np.array([[[6, 4]]]), np.array([[10]]), sol.cycles, sol.alphas)
    assert any("prefix" in p for p in check_solution(inst, bad))
    bad = PrefixSuffixSolution(sol.w0, sol.r, sol.w, sol.cycles, [np.array([6]), np.array([4])])
    assert any("suffix" in p for p in check_solution(inst, bad))
    bad = PrefixSuffixSolution(sol.w0, sol.r, np.array([[9]]), sol.cycles, sol.alphas)
    assert any("dynamics" in p for p in check_solution(inst, bad))


def test_solution_json_round_trip():
    inst = two_mode_node()
    lp = build_lp(inst)
    sol = extract_solution(lp, solve_ilp(lp).x, inst)
    back = PrefixSuffixSolution.from_json(sol.to_json())
    assert np.array_equal(back.r, sol.r) and np.array_equal(back.w, sol.w)
    assert back.cycles == sol.cycles and all(np.array_equal(a, b) for a, b in zip(back.alphas, sol.alphas))
    with pytest.raises(ValueError):
        PrefixSuffixSolution.from_json('{"format": "other"}')


# ---------------------------------------------------------------- several classes

def test_single_class_multiclass_matches():
    inst = two_mode_node()
    a, b = build_lp(inst), build_multiclass([inst])
    assert (a.A != b.A).nnz == 0 and a.var_names == b.var_names and a.rhs.tolist() == b.rhs.tolist()


def test_multiclass_rejects_mismatch():
    with pytest.raises(ValueError):
        build_multiclass([two_mode_node(T=1), two_mode_node(T=2)])
    a, b = two_mode_node(), two_mode_node()
    a.tau, b.tau = 0.1, 0.2
    with pytest.raises(ValueError):
        build_multiclass([a, b])
    with pytest.raises(ValueError):
        build_multiclass([])


def _free_node(N):
    g = LabeledDigraph.from_edges(1, 2, [(0, 0, 0), (0, 1, 0)])
    return ProblemInstance(g, np.array([N]), [], 1, [Cycle(((0, 0),)), Cycle(((0, 1),))])


def test_joint_constraint_couples_classes():
    on = np.array([[True, False]])
    off = ~on
    insts = [_free_node(3), _free_node(3)]
    joint = [JointConstraint([on, on], 3, "on"), JointConstraint([off, off], 3, "off")]
    lp = build_multiclass(insts, joint)
    assert lp.var_names[0].startswith("K0_") and any(v.startswith("K1_") for v in lp.var_names)
    res = solve_ilp(lp)
    assert res.feasible
    sols = [extract_solution(lp, res.x, insts, h) for h in range(2)]
    assert sum(s.r[0, 0, 0] for s in sols) <= 3 and sum(s.alphas[0][0] for s in sols) <= 3
    joint[1] = JointConstraint([off, off], 2, "off")
    assert solve_ilp(build_multiclass(insts, joint)).status == "infeasible"
    with pytest.raises(ValueError):
        build_multiclass(insts, [JointConstraint([on], 3)])


# ---------------------------------------------------------------- scaling

def test_scale_instance():
    g = LabeledDigraph.from_edges(2, 1, [(0, 0, 1), (1, 0, 0)])
    X = DiscreteCountingSet.from_pairs([(0, 0)], 2, 1, 60)
    inst = ProblemInstance(g, np.array([60, 40]), [X], 1, [Cycle(((0, 0), (1, 0)))])
    small = scale_instance(inst, 10)
    assert small.w0.tolist() == [6, 4] and small.constraints[0].bound == 6 and small.scale == 10
    assert scale_instance(inst, 1).w0.tolist() == [60, 40]
    for S in (3, 0, 2.5):
        with pytest.raises(DivisibilityError):
            scale_instance(inst, S)
    with pytest.raises(DivisibilityError):
        scale_joint([JointConstraint([None], 7)], 2)
    assert scale_joint([JointConstraint([None], 8)], 2)[0].bound == 4


def test_scaled_solution_solves_original():
    g = LabeledDigraph.from_edges(2, 1, [(0, 0, 1), (1, 0, 0)])
    X = DiscreteCountingSet.from_pairs([(0, 0)], 2, 1, 60)
    inst = ProblemInstance(g, np.array([60, 40]), [X], 1, [Cycle(((0, 0), (1, 0)))])
    # The 2-cycle alternates 6 and 4 units at node 0, so a bound of 50 is unreachable.
    tight = ProblemInstance(g, inst.w0, [X.with_bound(50)], 1, inst.cycles)
    assert solve_ilp(build_lp(scale_instance(tight, 10))).status == "infeasible"
    small = scale_instance(inst, 10)
    lp = build_lp(small)
    assert lp.n_vars == build_lp(inst).n_vars
    sol = extract_solution(lp, solve_ilp(lp).x, small).scaled(10)
    assert sol.scale == 10 and check_solution(inst, sol) == []


# ---------------------------------------------------------------- completeness and verdicts

def test_completeness_bounds():
    b = completeness_bounds(3, 2, 2, 0.5)
    assert b["prefix_horizon"] == math.comb(4, 2) == 6
    assert b["cycle_length"] == 3 * 6
    assert b["relaxed_horizon"] == pytest.approx((2 ** 2 + 1) * 2 / 0.5)
    assert completeness_bounds(1, 1, 0, 1.0)["prefix_horizon"] == 1
    assert completeness_bounds(5, 3, 1, 0.0)["relaxed_horizon"] == math.inf


def test_verdict_solution():
    assert infeasibility_verdict(two_mode_node(), SolveResult("feasible")).label == "solution"


def test_verdict_dead_initial_state():
    inst = two_mode_node(R=0)
    inst.constraints.append(DiscreteCountingSet.from_pairs([(0, 1)], 1, 2, 0, "off"))
    v = infeasibility_verdict(inst, SolveResult("infeasible"))
    assert v.label == "no discrete solution"
    inst.contracted = True
    assert infeasibility_verdict(inst, SolveResult("infeasible")).label == "no continuous solution"


def test_verdict_inconclusive():
    inst = two_mode_node(R=4)
    assert infeasibility_verdict(inst, SolveResult("infeasible")).label == "inconclusive"
    assert infeasibility_verdict(inst, SolveResult("iteration-limit")).label == "inconclusive"


def test_verdict_at_converse_bounds():
    g = LabeledDigraph.from_edges(1, 1, [(0, 0, 0)])
    inst = ProblemInstance(g, np.array([1]), [], 1, [Cycle(((0, 0),))], cycle_coverage=("all", 1))
    assert infeasibility_verdict(inst, SolveResult("infeasible")).label == "no discrete solution"
    inst.T = 0
    assert infeasibility_verdict(inst, SolveResult("infeasible")).label == "inconclusive"
