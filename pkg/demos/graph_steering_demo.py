"""Periods, cyclic classes and exact steering of histograms inside a component."""
import numpy as np

from countsynth.aggregate import compatible_rotations, primitivity_horizon, steer, step
from countsynth.errors import ParityError
from countsynth.graph import LabeledDigraph, enumerate_simple_cycles, period, periodic_classes, scc


def replay(g, w, inputs):
    for r in inputs:
        w = step(w, r, g)
    return w


def main():
    # A 4-cycle and a 2-cycle through node 0: period 2.
    g = LabeledDigraph.from_edges(5, 2, [(0, 0, 1), (1, 0, 2), (2, 0, 3), (3, 0, 0), (0, 1, 4), (4, 0, 0)])
    [comp] = scc(g)
    print("period", period(g, comp), "classes", periodic_classes(g, comp))
    print("simple cycles:", [c.pairs for c in enumerate_simple_cycles(g, 5)])
    w_from, w_to = [2, 3, 0, 0, 0], [1, 0, 2, 2, 0]
    print("compatible rotations:", compatible_rotations(g, range(5), w_from, w_to))
    inputs = steer(g, range(5), w_from, w_to)
    print(f"steered in {len(inputs)} steps to {replay(g, np.array(w_from), inputs).tolist()}")
    try:
        steer(g, range(5), w_from, w_to, horizon=6)
    except ParityError as exc:
        print("even horizon rejected:", exc)

    # Adding a 3-cycle through node 0 makes the component aperiodic.
    h = LabeledDigraph.from_edges(6, 2, [(0, 0, 1), (1, 0, 2), (2, 0, 3), (3, 0, 0), (0, 1, 4), (4, 0, 5),
                                         (5, 0, 0), (5, 1, 4)])
    T = primitivity_horizon(h)
    inputs = steer(h, range(6), [6, 0, 0, 0, 0, 0], [1, 1, 1, 1, 1, 1])
    print(f"aperiodic: primitivity horizon {T}, steered in {len(inputs)} steps to "
          f"{replay(h, np.array([6, 0, 0, 0, 0, 0]), inputs).tolist()}")


if __name__ == "__main__":
    main()
