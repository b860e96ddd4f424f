"""Counting-constraint synthesis for large fleets of identical switched systems.

Pipeline: a grid abstraction of each switched model (:mod:`.abstraction`),
its labeled graph (:mod:`.graph`), aggregate count algebra
(:mod:`.aggregate`), the prefix-suffix feasibility program
(:mod:`.synthesis`) solved by :mod:`.solver`, optional rounding
(:mod:`.rounding`), per-subsystem switching (:mod:`.control`) and
continuous co-simulation (:mod:`.sim`).
"""
from .abstraction import (Abstraction, ContinuousCountingSet, DiscreteCountingSet, Grid,
                          build_abstraction, check_epsilon, contract_set, expand_set,
                          min_bisim_epsilon, quantize)
from .aggregate import joint_maxcnt, maxcnt, steer
from .control import assign_inputs, open_loop_plans, verify_discrete
from .errors import *  # noqa: F401,F403
from .graph import Cycle, LabeledDigraph, enumerate_simple_cycles, sample_cycles, scc
from .model import Box, Mode, SwitchedModel, affine_mode, flow
from .rounding import pseudo_periodic, round_suffix
from .sim import simulate_fleet, verify_continuous
from .solver import solve, solve_highs, solve_ilp, solve_lp
from .synthesis import (JointConstraint, PrefixSuffixSolution, ProblemInstance, build_lp,
                        build_multiclass, check_solution, extract_solution)

__version__ = "0.1.0"
