#!/usr/bin/env python3
"""Training-overhead comparison as a function of the sampling step size.

All numbers come from the closed-form counters.  The step size is the
final sampled spacing in multiples of the element pitch d:

    step = full_range / (2**layers * s_x)

so sweeping the layer count at a fixed range sweeps the step.  Layered
overheads are compared against the flat-search baselines of matching
accuracy; the last column is their ratio.
"""

import argparse
import csv

from risbeam.training import (
    es_overhead_hybrid,
    es_overhead_nn,
    hierarchical_overhead,
    two_stage_overhead,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--range-d", type=float, default=4000.0,
                    help="full sampling range in multiples of d")
    ap.add_argument("--s", type=int, default=2, help="samples per direction")
    ap.add_argument("--m", type=int, default=120, help="RIS elements")
    ap.add_argument("--max-layers", type=int, default=12)
    ap.add_argument("--out", default="overhead.csv")
    args = ap.parse_args()

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layers", "step_d", "hierarchical", "flat_nn",
                         "hier_ratio", "two_stage", "flat_hybrid",
                         "two_stage_ratio"])
        for layers in range(1, args.max_layers + 1):
            step = args.range_d / (2 ** layers * args.s)
            hier = hierarchical_overhead(layers, args.s, args.s)
            flat_nn = es_overhead_nn(layers, args.s, args.s)
            two = two_stage_overhead(args.m, layers, args.s, args.s)
            flat_hy = es_overhead_hybrid(args.m, layers, args.s, args.s)
            writer.writerow([layers, f"{step:.6g}", hier, flat_nn,
                             f"{hier / flat_nn:.6g}", two, flat_hy,
                             f"{two / flat_hy:.6g}"])
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
