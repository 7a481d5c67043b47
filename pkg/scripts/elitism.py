"""Compare the tail exponent with and without elitism, and with a two-generation age limit.

Prints gamma at the last checkpoint for each configuration, the
fitness-balance generation of every elitist run, and the tail-mass check.

    python3 scripts/elitism.py [--workers K] [--seed S]
"""

import argparse
import logging
from pathlib import Path

from etvlab.experiment import load_config, run_experiment

HERE = Path(__file__).parent / "configs"
CONFIGS = ("no_elitism.cfg", "elitism.cfg", "elitism_m2.cfg")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    summary = []
    for name in CONFIGS:
        cfg = load_config(HERE / name, seed=args.seed)
        res = run_experiment(cfg, workers=args.workers).results
        t = max(res.fits)
        cf = res.fits[t]
        gamma = cf.fit.gamma if cf.fit is not None else float("nan")
        summary.append((name, t, cf.max_etv_mean, cf.fit, gamma))
        if res.anomaly is not None:
            a = res.anomaly
            gens = [g for g in a.balance_generations if g is not None]
            print(f"{name}: balance in {a.balanced_runs}/{len(a.balance_generations)} runs"
                  + (f" (first at {min(gens)}, last at {max(gens)})" if gens else ""))
            print(f"{name}: tail mass observed {a.tail_observed:.3g} vs fitted {a.tail_predicted:.3g}"
                  f" -> ratio {a.tail_ratio:.3g}{' FLAGGED' if a.tail_flagged else ''}")
            print(f"{name}: longest clones-only streak "
                  f"{max(o.longest_clone_streak for o in res.outcomes)} generations")
    print(f"\n{'config':<16} {'t':>4} {'maxETV':>8} {'q':>7} {'x0':>8} {'gamma':>8}")
    for name, t, m, fit, gamma in summary:
        q, x0 = (fit.q, fit.x0) if fit is not None else (float("nan"),) * 2
        print(f"{name:<16} {t:>4} {m:>8.2f} {q:>7.3f} {x0:>8.4f} {gamma:>8.4f}")


if __name__ == "__main__":
    main()
