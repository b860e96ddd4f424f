"""Counting on cycles: circulant counts, joint periods and co-prime splitting."""
import math
from functools import reduce

import numpy as np

from countsynth.aggregate import (circulant_matrix, coprime_partition, joint_counts, maxcnt, partition_rows,
                                  suffix_peak)
from countsynth.graph import Cycle


def main():
    # Five-node cycle, units spread [6, 5, 4, 3, 2], counted on the middle three nodes.
    cycle = Cycle(tuple((i, 0) for i in range(5)))
    X = {(1, 0), (2, 0), (3, 0)}
    alpha = np.array([6, 5, 4, 3, 2])
    B = circulant_matrix(cycle, X)
    print("circulant rows:\n", B)
    print("counts over one period:", (B @ alpha).tolist(), "peak:", maxcnt(cycle, alpha, X))

    # Two cycles of co-prime length circulate independently; their peaks add up.
    c2 = Cycle(((1, 0), (7, 0)))
    a2 = np.array([3, 1])
    joint = joint_counts([cycle, c2], [alpha, a2], X)
    print(f"joint period {len(joint)}: peak {joint.max()} = {maxcnt(cycle, alpha, X)} + {maxcnt(c2, a2, X)}")
    print("suffix_peak agrees:", suffix_peak([cycle, c2], [alpha, a2], X))

    # Lengths 2..20 have a joint period of 232,792,560; co-prime groups need far fewer rows.
    lengths = list(range(2, 21))
    groups = coprime_partition(lengths)
    print(f"lcm(2..20) = {reduce(math.lcm, lengths):,}; grouped rows = {partition_rows(lengths, groups):,}")
    print("groups:", [[lengths[i] for i in g] for g in groups])


if __name__ == "__main__":
    main()
