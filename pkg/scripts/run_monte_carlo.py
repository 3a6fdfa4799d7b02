"""Run the in-sample and forecasting Monte Carlo studies and save their summaries.

Usage: python scripts/run_monte_carlo.py [--reps 100] [--workers 1] [--out results/mc] [--nest-start]
"""
import argparse
import json
import logging
import time
from pathlib import Path

from ddms import experiments


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("results/mc"))
    p.add_argument("--which", choices=["insample", "forecast", "both"], default="both")
    p.add_argument("--nest-start", dest="nest_start", action=argparse.BooleanOptionalAction, default=False,
                   help="also start the A-O search at the logit estimate")
    args = p.parse_args()
    logging.basicConfig(level=logging.WARNING)
    args.out.mkdir(parents=True, exist_ok=True)

    runs = []
    if args.which in ("insample", "both"):
        runs.append(("insample", experiments.mc_insample, "table1", (4, 8, 12)))
    if args.which in ("forecast", "both"):
        runs.append(("forecast", experiments.mc_forecast, "table3-15", (5, 15, 25)))
    for name, func, preset, taus in runs:
        t0 = time.time()
        rep = func(preset, workers=args.workers, n_reps=args.reps, seed=args.seed, taus=taus,
                   nest_start=args.nest_start)
        rep.frame().to_csv(args.out / f"{name}_rows.csv", index=False)
        with open(args.out / f"{name}_summary.json", "w") as fh:
            json.dump({**rep.to_dict(), "seconds": time.time() - t0}, fh, indent=2, default=float)
        print(f"{name}: {time.time() - t0:.0f}s")
        print(json.dumps(rep.summary, indent=1, default=float))


if __name__ == "__main__":
    main()
