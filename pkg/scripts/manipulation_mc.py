"""Monte Carlo of end-of-interval manipulation: fix with and without the
extra trades on the same simulated days."""
import argparse
import dataclasses

import numpy as np
from scipy import stats

from fxfix.cli import day_fix
from fxfix.core import PairConfig
from fxfix.simulator import gen_day, random_walk_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--days", type=int, default=500)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--size", type=int, default=3, help="manipulating trades per interval")
    ap.add_argument("--direction", type=int, choices=(1, -1), default=1)
    ap.add_argument("--lead-ms", type=int, default=100)
    args = ap.parse_args()

    base = random_walk_scenario(seed=args.seed)
    man = dataclasses.replace(
        base,
        manipulation="end-of-interval",
        manipulation_size=args.size,
        manipulation_direction=args.direction,
        manipulation_lead_ms=args.lead_ms,
    )
    pair = PairConfig()
    diffs, fallback = [], 0
    for d in range(args.days):
        a = day_fix(gen_day(base, d), pair)
        b = day_fix(gen_day(man, d), pair)
        fallback += a.used_quote_fallback
        diffs.append(float(b.mid - a.mid))
    diffs = np.array(diffs)
    moved = diffs[diffs != 0]
    hits = int(np.sum(np.sign(moved) == args.direction))
    p = stats.binomtest(hits, moved.size, 0.5, alternative="greater").pvalue if moved.size else 1.0
    print(f"days={args.days} mean shift={diffs.mean():.3e} sd={diffs.std(ddof=1):.3e} one-sided sign-test p={p:.3g}")
    print(f"share shifted in order direction: {np.mean(np.sign(diffs) == args.direction):.3f}")
    print(f"baseline days on the quote fallback: {fallback}")


if __name__ == "__main__":
    main()
