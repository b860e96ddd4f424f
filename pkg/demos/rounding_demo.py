"""Rounding a relaxed suffix to integers and the bounds that hold afterwards."""
import numpy as np

from countsynth.aggregate import joint_maxcnt, maxcnt
from countsynth.graph import Cycle, LabeledDigraph
from countsynth.rounding import pseudo_periodic, round_suffix, segment_count, violation_bound, worst_case_bound


def main():
    print("3 units on a 7-cycle:", pseudo_periodic(7, 3).tolist())

    g = LabeledDigraph.from_edges(6, 2, [(0, 0, 1), (1, 0, 2), (2, 0, 3), (3, 0, 0), (0, 1, 4), (4, 0, 5),
                                         (5, 0, 0)])
    c4 = Cycle(((0, 0), (1, 0), (2, 0), (3, 0)))
    c3 = Cycle(((0, 1), (4, 0), (5, 0)))
    relaxed = [np.array([0.5, 1.2, 0.7, 0.3]), np.array([0.4, 0.4, 2.5])]
    X = {(1, 0), (2, 0), (4, 0)}
    rounded = round_suffix(g, [c4, c3], relaxed)
    R = joint_maxcnt([c4, c3], relaxed, X)
    print("rounded:", [a.tolist() for a in rounded])
    print(f"relaxed peak {R:.3f}, rounded peak {joint_maxcnt([c4, c3], rounded, X)}, "
          f"bound R + J + sum p = {violation_bound([c4, c3], relaxed, X, R):.3f}")
    for c, a in zip([c4, c3], rounded):
        print(f"  cycle of length {len(c)}: peak {maxcnt(c, a, X)}, segments {segment_count(c, X)}, "
              f"worst case {worst_case_bound(c, int(a.sum()), X):.2f}")


if __name__ == "__main__":
    main()
