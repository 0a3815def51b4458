#!/usr/bin/env python3
"""Tabulate competing multi-arm strategies against the joint design.

Builds each comparator from two-arm sequential building blocks (solved at the
appropriate per-pair error/power targets, or pinned to explicit boundaries via
--pin) and prints familywise error, least-favourable power, maximum and
expected sample sizes under 0..K-1 relevant arms.
"""

import argparse
import math

from mamsap import ComparatorSpec, comparator_report
from mamsap.comparators import COMPARATOR_KINDS


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--arms", type=int, default=4)
    ap.add_argument("--stages", type=int, default=3)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--beta", type=float, default=0.10)
    ap.add_argument("--theta-prime", type=float, default=math.log(1.5))
    ap.add_argument("--kinds", nargs="*", default=list(COMPARATOR_KINDS))
    ap.add_argument(
        "--pin", nargs=3, action="append", default=[],
        metavar=("KIND", "SCALE", "GROUP_SIZE"),
        help="evaluate KIND at a fixed boundary scale and per-arm group size "
             "instead of solving its two-arm block",
    )
    args = ap.parse_args()

    pins = {kind: (float(scale), int(n)) for kind, scale, n in args.pin}
    header = f"{'comparator':28s} {'FWER':>7s} {'power':>7s} {'max N':>7s} " + \
        " ".join(f"{'E(N|t%d)' % i:>9s}" for i in range(args.arms))
    print(header)
    for kind in args.kinds:
        scale, group = pins.get(kind, (None, None))
        spec = ComparatorSpec(kind, pairwise_scale=scale, pairwise_group_size=group)
        rep = comparator_report(
            spec, args.arms, args.stages, args.alpha, args.beta, args.theta_prime
        )
        ens = " ".join(
            f"{rep.expected_n[f'theta_{i}'][0]:9.1f}" for i in range(args.arms)
        )
        print(
            f"{kind:28s} {rep.fwer.value:7.4f} {rep.power_lfc.value:7.4f} "
            f"{rep.max_n:7d} {ens}"
        )
        extras = {k: v for k, v in rep.notes.items() if k.startswith("power_arm")}
        if extras:
            print(" " * 4 + "  ".join(f"{k}={v:.3f}" for k, v in sorted(extras.items())))


if __name__ == "__main__":
    main()
