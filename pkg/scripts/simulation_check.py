#!/usr/bin/env python3
"""Cross-validate quadrature against brute-force trial simulation.

Evaluates FWER, least-favourable power, and expected sample size for a solved
design both analytically and by Monte Carlo, and prints the z-statistic of
each disagreement.
"""

import argparse
import math

from mamsap import (
    EffectConfiguration,
    design_trial,
    expected_sample_size,
    fwer_global,
    power_lfc,
    simulate,
)


def zstat(a: float, b: float, se: float) -> float:
    return (a - b) / se if se > 0 else float("inf")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--arms", type=int, default=3)
    ap.add_argument("--stages", type=int, default=2)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--beta", type=float, default=0.10)
    ap.add_argument("--theta-prime", type=float, default=math.log(1.5))
    ap.add_argument("--nonbinding", action="store_true")
    ap.add_argument("--reps", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    design = design_trial(
        args.arms, args.stages, args.alpha, args.beta, args.theta_prime,
        binding=not args.nonbinding, seed=args.seed,
    )
    k = args.arms
    print(f"design: n={design.layout.size(1, 1)} outer={design.boundaries.outer}")

    fwer = fwer_global(design, target_se=1e-4, seed=args.seed)
    sim0 = simulate(design, EffectConfiguration.global_null(k), args.reps, seed=args.seed)
    se = math.hypot(fwer.std_error, sim0.error_rate_se)
    print(f"FWER  quad {fwer.value:.5f}  sim {sim0.error_rate:.5f}  "
          f"z={zstat(sim0.error_rate, fwer.value, se):+.2f}")

    power = power_lfc(design, args.theta_prime, target_se=1e-4, seed=args.seed)
    lfc = EffectConfiguration.lfc(k, 1, args.theta_prime)
    sim1 = simulate(design, lfc, args.reps, seed=args.seed + 1)
    p_sim = sim1.sole_survivor_probability(1)
    se = math.hypot(power.std_error, math.sqrt(p_sim * (1 - p_sim) / args.reps))
    print(f"power quad {power.value:.5f}  sim {p_sim:.5f}  "
          f"z={zstat(p_sim, power.value, se):+.2f}")

    for label, effects, sim in (
        ("E(N|null)", EffectConfiguration.global_null(k), sim0),
        ("E(N|lfc) ", lfc, sim1),
    ):
        ess, ess_se = expected_sample_size(design, effects, target_se=0.25, seed=args.seed)
        se = math.hypot(ess_se, sim.se_sample_size)
        print(f"{label} quad {ess:8.2f}  sim {sim.mean_sample_size:8.2f}  "
              f"z={zstat(sim.mean_sample_size, ess, se):+.2f}")


if __name__ == "__main__":
    main()
