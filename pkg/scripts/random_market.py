"""Uniformity checks on a pure random-walk market: chi-square p-values of the
extrema surfaces and the spread of centred-extremum probabilities."""
import argparse

import numpy as np

from fxfix.centered import aggregate
from fxfix.extrema import build_surface
from fxfix.ingestion import Dataset
from fxfix.simulator import random_walk_scenario, simulate_bars


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--days", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    sc = random_walk_scenario(seed=args.seed)
    dates, bars = simulate_bars(sc, args.days)
    ds = Dataset(sc.pair, dates, bars)
    for side in ("int1", "int2"):
        for kind in ("max", "min", "delta"):
            s = build_surface(ds, side, kind, delta_ts=(1, 4, 10, 30))
            ps = ", ".join(f"dt={d}: {s.uniformity_pvalue(d):.3f}" for d in s.delta_ts)
            print(f"{side} {kind:5s} chi-square p  {ps}")
    h = aggregate(ds)
    p = h.prob_any[20:1420]
    print(f"centred prob: mean {p.mean():.4f}, min {p.min():.4f}, max {p.max():.4f}, 16:00 {h.prob_any[960]:.4f}")


if __name__ == "__main__":
    main()
