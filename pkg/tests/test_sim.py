import csv

import numpy as np
import pytest

from builders import numerical_model, tcl_model, zero_model
from countsynth.abstraction import ContinuousCountingSet, DiscreteCountingSet, build_abstraction, min_bisim_epsilon
from countsynth.control import Plan, count_pairs
from countsynth.graph import Cycle
from countsynth.model import Box
from countsynth.sim import (density_histogram, draw_disturbances, simulate_fleet, verify_continuous,
                            write_counts_csv, write_density_csv, write_deviations_csv)

IDLE = Cycle(((0, 0),))


def word_plans(words):
    """Plans whose whole horizon lies in the prefix."""
    return [Plan(n, tuple(int(m) for m in w), 0, IDLE, 0) for n, w in enumerate(words)]


def alive_layers(ab, H):
    """``alive[k]``: states with a run of ``k`` steps that stays on the grid."""
    alive = [np.ones(ab.n_states, dtype=bool)]
    for _ in range(H):
        alive.append(np.any((ab.succ >= 0) & alive[-1][np.maximum(ab.succ, 0)], axis=1))
    return alive


def valid_walks(ab, starts, H, rng):
    """Random mode words of length ``H`` whose abstract trajectories stay on the grid."""
    alive = alive_layers(ab, H)
    words = []
    for q in starts:
        assert alive[H][q]
        w = []
        for k in range(H, 0, -1):
            ok = np.flatnonzero((ab.succ[q] >= 0) & alive[k - 1][np.maximum(ab.succ[q], 0)])
            m = int(rng.choice(ok))
            w.append(m)
            q = ab.succ[q, m]
        words.append(w)
    return words


@pytest.fixture(scope="module")
def tcl_abstraction():
    return build_abstraction(tcl_model(0), 0.05, 0.002)


# ---------------------------------------------------------------- disturbances

def test_disturbances_within_bound_and_seeded():
    model = tcl_model(0)
    d = draw_disturbances(model, 500, seed=3)
    assert d.shape == (500, 1) and np.all(np.abs(d) <= 0.025)
    assert np.array_equal(d, draw_disturbances(model, 500, seed=3))
    assert not np.array_equal(d, draw_disturbances(model, 500, seed=4))


# ---------------------------------------------------------------- fleet traces

def test_zero_field_fleet_is_static():
    model = zero_model()
    ab = build_abstraction(model, 0.1, 0.1)
    x0 = ab.points()[[0, 3, 7]]
    trace = simulate_fleet(model, word_plans([[0, 1, 0], [1, 1, 1], [0, 0, 1]]), x0, None, 3, 0.1, ab)
    assert np.all(trace.x == x0[None])
    assert np.all(trace.abstract == np.array([0, 3, 7])[None])
    assert trace.deviation.max() == 0.0 and trace.outside.max() == 0


def test_numerical_deviation_from_grid_points(numerical_abstraction):
    model = numerical_model()
    ab = numerical_abstraction
    rng = np.random.default_rng(5)
    starts = rng.choice(ab.n_states, 60, replace=False)
    H = 15
    trace = simulate_fleet(model, word_plans(valid_walks(ab, starts, H, rng)), ab.points()[starts], None, H,
                           ab.tau, ab)
    assert np.all(trace.abstract >= 0)
    assert trace.deviation.max() <= min_bisim_epsilon(model, ab.tau, 0.05)


def test_tcl_deviation_with_disturbances(tcl_abstraction):
    model = tcl_model(0)
    ab = tcl_abstraction
    rng = np.random.default_rng(6)
    # Both equilibria lie above the domain, so runs on the grid are short.
    N, H = 200, 4
    starts = rng.choice(np.flatnonzero(alive_layers(ab, H)[H]), N)
    x0 = ab.points()[starts] + rng.uniform(-0.001, 0.001, (N, 1))
    assert np.array_equal(ab.grid.state_of(x0), starts)
    d = draw_disturbances(model, N, seed=6)
    trace = simulate_fleet(model, word_plans(valid_walks(ab, starts, H, rng)), x0, d, H, ab.tau, ab)
    assert trace.deviation.max() <= 0.2
    assert trace.deviation.max() <= ab.epsilon


def test_abstract_exit_makes_deviation_infinite(tcl_abstraction):
    model = tcl_model(0)
    ab = tcl_abstraction
    q = int(np.flatnonzero((ab.succ < 0).any(axis=1))[0])
    m = int(np.flatnonzero(ab.succ[q] < 0)[0])
    trace = simulate_fleet(model, word_plans([[m]]), ab.points()[[q]], None, 1, ab.tau, ab)
    assert trace.abstract[1, 0] == -1 and np.isinf(trace.deviation[1])


def test_domain_exit_flagged():
    model = tcl_model(0)
    ab = build_abstraction(model, 0.05, 0.01)
    # Mode "off" drifts up toward 32 degrees, past the upper end of the domain at 23.7.
    trace = simulate_fleet(model, word_plans([[0] * 60]), [[23.6]], None, 60, ab.tau, ab, margin=0.0)
    assert trace.outside[0] == 0 and trace.outside[-1] == 1


def test_simulation_reproducible(tcl_abstraction):
    model = tcl_model(0)
    ab = tcl_abstraction
    rng = np.random.default_rng(9)
    starts = rng.choice(np.flatnonzero(alive_layers(ab, 4)[4]), 30)
    x0 = ab.points()[starts]
    words = valid_walks(ab, starts, 4, rng)
    runs = [simulate_fleet(model, word_plans(words), x0, draw_disturbances(model, 30, 1), 4, ab.tau, ab)
            for _ in range(2)]
    assert runs[0].x.tobytes() == runs[1].x.tobytes()
    assert runs[0].deviation.tobytes() == runs[1].deviation.tobytes()


# ---------------------------------------------------------------- counting

def test_mode_only_sets_match_discrete_counts(numerical_abstraction):
    model = numerical_model()
    ab = numerical_abstraction
    rng = np.random.default_rng(11)
    starts = rng.choice(ab.n_states, 40, replace=False)
    trace = simulate_fleet(model, word_plans(valid_walks(ab, starts, 10, rng)), ab.points()[starts], None, 10,
                           ab.tau, ab)
    cont = [ContinuousCountingSet(22, modes={0}), ContinuousCountingSet(22, modes={1})]
    disc = [DiscreteCountingSet.from_product(None, [k], ab.n_states, 2, 22) for k in (0, 1)]
    report = verify_continuous(trace, cont)
    assert np.array_equal(report.counts, count_pairs(trace.abstract[:-1], trace.modes, disc))
    assert np.all(report.counts.sum(axis=1) == 40)


def test_verify_continuous_flags_first_violation():
    model = zero_model()
    ab = build_abstraction(model, 0.1, 0.1)
    x0 = ab.points()[[2, 8]]
    trace = simulate_fleet(model, word_plans([[0, 1, 1], [0, 0, 1]]), x0, None, 3, 0.1, ab)
    sets = [ContinuousCountingSet(1, modes={1}), ContinuousCountingSet(0, box=Box((0.7,), (1.0,)))]
    report = verify_continuous(trace, sets)
    assert report.counts.tolist() == [[0, 1], [1, 1], [2, 1]]
    assert report.first_violation == (0, 1) and not report.ok
    assert verify_continuous(trace, sets, bounds=[2, 1]).ok


def test_density_histogram_rows():
    model = tcl_model(0)
    ab = build_abstraction(model, 0.05, 0.01)
    x0 = np.array([[21.4], [22.0], [22.6], [30.0]])
    trace = simulate_fleet(model, word_plans([[0, 1]] * 4), x0, None, 2, ab.tau, ab)
    bins = np.linspace(21.5, 23.5, 5)
    hist = density_histogram(trace, bins)
    assert hist.shape == (3, 4) and np.all(hist.sum(axis=1) == 4)
    assert hist[0].tolist() == [1, 1, 1, 1]
    single = density_histogram(simulate_fleet(model, word_plans([[0]]), [[22.0]], None, 1, ab.tau, ab), bins)
    assert np.all((single > 0).sum(axis=1) == 1)


# ---------------------------------------------------------------- CSV

def test_csv_outputs(tmp_path):
    counts = np.array([[1, 2], [3, 4]])
    p = write_counts_csv(tmp_path / "counts.csv", counts, [2, 4.5], ["a", "b"])
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["step", "constraint", "count", "bound"]
    assert rows[1:] == [["0", "a", "1", "2"], ["0", "b", "2", "4.5"], ["1", "a", "3", "2"], ["1", "b", "4", "4.5"]]
    p = write_density_csv(tmp_path / "density.csv", np.array([[1, 0]]), [0.0, 0.5, 1.0])
    assert list(csv.reader(p.open())) == [["step", "bin_lo", "bin_hi", "count"], ["0", "0", "0.5", "1"],
                                          ["0", "0.5", "1", "0"]]
    p = write_deviations_csv(tmp_path / "dev.csv", [0.0, 0.125])
    assert list(csv.reader(p.open())) == [["step", "max_deviation"], ["0", "0.0"], ["1", "0.125"]]
