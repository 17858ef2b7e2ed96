#!/usr/bin/env python3
"""Hierarchical-training rate versus layer count, with flat-search marks.

For the all-spherical channel, sweeps the number of refinement layers and
also evaluates exhaustive search over 8- and 16-point-per-direction flat
grids on the same ranges, which the layered scheme should match at 2 and
3 layers respectively.
"""

import argparse
import csv
from dataclasses import replace

import numpy as np

from risbeam import harness
from risbeam.channel import cascade, synthesize_channel
from risbeam.codebook import build_nn_codebook
from risbeam.optimizer import _initial_precoder, default_stream_count
from risbeam.training import TrainingBudget, exhaustive_search, hierarchical_nn


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scale", choices=("desk", "paper"), default="desk")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--max-layers", type=int, default=8)
    ap.add_argument("--out", default="rate_vs_layers.csv")
    args = ap.parse_args()

    cfg = harness.parse_config("", scale=args.scale)
    half = cfg.range_halfwidth_wl * 299792458.0 / cfg.carrier_hz

    rows = []
    for seed in range(args.seeds):
        rng = harness.rng_for(seed, 0)
        off = rng.uniform(-0.15 * half, 0.15 * half, 2)
        geometry = harness.geometry_from(cfg, ue_offset=tuple(off))
        real = synthesize_channel("NN", geometry, rng, gain_mode=cfg.gain_mode)
        gb, gu = harness.grids_from(cfg, geometry)
        w = _initial_precoder(cascade(real, np.ones(geometry.m)),
                              default_stream_count("NN", geometry), cfg.p_max_w)
        for layers in range(1, args.max_layers + 1):
            rep = hierarchical_nn(real, w, cfg.noise_w, gb, gu,
                                  TrainingBudget(layers, cfg.s_x, cfg.s_y),
                                  geometry)
            rows.append((f"layered-L{layers}", seed, layers, rep.best_rate,
                         rep.evaluations))
        for pts in (8, 16):
            book = build_nn_codebook(replace(gb, s_x=pts, s_y=pts),
                                     replace(gu, s_x=pts, s_y=pts), geometry)
            rep = exhaustive_search(real, w, cfg.noise_w, book)
            rows.append((f"flat-{pts}", seed, 0, rep.best_rate,
                         rep.evaluations))

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "seed", "layers", "rate_bps_hz",
                         "evaluations"])
        for variant, seed, layers, rate, evals in rows:
            writer.writerow([variant, seed, layers, f"{rate:.12g}", evals])
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
