"""The numerical preset's relaxed program has the same shape for every fleet size,
and solutions of a scaled-down fleet rescale to the full one."""
from dataclasses import replace

from countsynth.cli import build_instances, normalize, prepare
from countsynth.presets import numerical
from countsynth.solver import solve_highs
from countsynth.synthesis import build_lp, scale_instance


def main():
    insts = {}
    for N in (100, 10_000, 1_000_000):
        [inst], _, _ = build_instances(prepare(normalize(numerical(N))))
        insts[N] = replace(inst, exact=False)
        lp = build_lp(insts[N])
        print(f"N = {N:>9,}: {lp.n_vars:,} columns, {lp.n_rows:,} rows, {lp.A.nnz:,} nonzeros")

    big = build_lp(insts[10_000])
    for S in (10, 100):
        small = build_lp(scale_instance(insts[10_000], S))
        x = solve_highs(small, integer=False).x
        print(f"S = {S}: scaled-up point violates the full program by {big.max_violation(x * S):.1e}")


if __name__ == "__main__":
    main()
