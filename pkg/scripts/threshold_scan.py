#!/usr/bin/env python3
"""Exact window polynomials and their threshold upper bounds.

Prints the exact expected-count and hit polynomials for k up to --kmax and
the certified root intervals in (1/4, 1/3].
"""

import argparse
import sys
from fractions import Fraction

from ballistic.exactpoly import expected_Nk_poly, pc_upper_bound_scan, qk_poly


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--kmax", type=int, default=4)
    ap.add_argument("--tol", default="1/1000000")
    args = ap.parse_args()

    for k in range(1, args.kmax + 1):
        print(f"E[N_{k}] = {expected_Nk_poly(k).as_string()}")
        print(f"q_{k}    = {qk_poly(k).as_string()}")
    print()
    print("k,root_lo,root_hi,width")
    for k, lo, hi in pc_upper_bound_scan(args.kmax, Fraction(args.tol)):
        print(f"{k},{float(lo):.8f},{float(hi):.8f},{float(hi - lo):.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
