"""Signature of fix-window order compression: volatility spikes, the int1
extrema surface around 16:00 and the centred-extremum rate, for a grid of
impact sizes."""
import argparse

import numpy as np

from fxfix.centered import aggregate
from fxfix.extrema import build_surface
from fxfix.ingestion import Dataset
from fxfix.simulator import compression_scenario, simulate_bars
from fxfix.vol import detect_spikes, minute_returns, vol_profile


def study(days: int, seed: int, impact: float, reversion: float) -> None:
    sc = compression_scenario(seed=seed, impact=impact, reversion_fraction=reversion)
    dates, bars = simulate_bars(sc, days)
    ds = Dataset(sc.pair, dates, bars)
    spikes = detect_spikes(vol_profile(minute_returns(ds)))
    print(f"impact={impact:g} reversion={reversion:g}: top spikes {[(m, round(z, 1)) for m, z in spikes[:4]]}")
    s = build_surface(ds, "int1", "max", delta_ts=(1, 2, 3, 4, 6, 10, 20))
    for d in s.delta_ts:
        row = s.row(d)
        print(f"  dt={d:2d} p(15)={s.prob(15, d):.3f} p(16)={s.prob(16, d):.3f} p(17)={s.prob(17, d):.3f} median={np.median(row):.3f}")
    h = aggregate(ds)
    base = np.median(h.prob_any[20:1420])
    print(f"  centred prob 16:00 {h.prob_any[960]:.4f} vs base {base:.4f} (ratio {h.prob_any[960] / base:.2f})")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--days", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--impact", type=float, nargs="+", default=[2e-6, 3.5e-6, 5e-6])
    ap.add_argument("--reversion", type=float, default=0.5)
    args = ap.parse_args()
    for impact in args.impact:
        study(args.days, args.seed, impact, args.reversion)


if __name__ == "__main__":
    main()
