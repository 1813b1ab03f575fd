#!/usr/bin/env python3
"""Truncation-bias curve: window hit frequency over a doubling k-schedule.

The window event grows with k, so the per-trial indicators are nested; the
curve shows how fast the finite-window estimate climbs toward its limit
(all the way to 1 in the subcritical phase).
"""

import argparse
import sys

from ballistic.estimators import estimate_qk_schedule, theory_q
from ballistic.model import ModelParams


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=float, required=True)
    ap.add_argument("--k-schedule", default="100,200,400,800,1600,3200,6400")
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    ks = [int(x) for x in args.k_schedule.split(",")]
    curve = estimate_qk_schedule(ModelParams(args.p), ks, args.trials,
                                 args.seed, args.workers)
    print("k,qk,stderr,q_theory")
    for k, v, se in zip(curve.ks, curve.values, curve.stderrs):
        print(f"{k},{v:.6f},{se:.6f},{theory_q(args.p):.6f}")
    print(f"# monotone_violations: {curve.monotone_violations}",
          file=sys.stderr)
    return 0 if curve.monotone_violations == 0 else 2


if __name__ == "__main__":
    sys.exit(main())
