"""Monte Carlo simulation of a trial, vectorized across replications.

Only sufficient statistics are drawn: each arm's per-stage group mean.  The
decision rules applied per stage are the same as the analytic machinery —
outer crossings drop the inferior arm of the pair, then (for binding designs)
the trial stops if every statistic among the still-standing arms lies inside
the inner boundary, or if at most one arm remains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import EffectConfiguration, Pair, TrialDesign, hypothesis_family


@dataclass
class SimulationResult:
    """Tallies over replications of one design under one effect configuration."""

    n_reps: int
    false_rejections: int  # replications with >= 1 null-pair outer crossing
    survivor_counts: dict[frozenset[int], int]
    stop_stage_counts: dict[int, int]
    mean_sample_size: float
    se_sample_size: float
    null_pairs: tuple[Pair, ...] = ()
    seed: int = 0

    @property
    def error_rate(self) -> float:
        return self.false_rejections / self.n_reps

    @property
    def error_rate_se(self) -> float:
        p = self.error_rate
        return float(np.sqrt(p * (1.0 - p) / self.n_reps))

    def selection_probability(self, arms: frozenset[int]) -> float:
        return self.survivor_counts.get(arms, 0) / self.n_reps

    def sole_survivor_probability(self, arm: int) -> float:
        return self.selection_probability(frozenset({arm}))


def simulate(
    design: TrialDesign,
    effects: EffectConfiguration,
    replications: int,
    seed: int = 0,
    null_pairs: Optional[tuple[Pair, ...]] = None,
    batch: int = 200_000,
) -> SimulationResult:
    """Run ``replications`` trials and tally outcomes.

    ``null_pairs`` defaults to the equal-effect pairs of ``effects``; a
    false rejection is an outer crossing of any of them while tested.
    """
    layout = design.layout
    K, J = layout.n_arms, layout.n_stages
    pairs = hypothesis_family(K)
    if null_pairs is None:
        null_pairs = tuple(
            p for p in pairs if effects.difference(p) == 0.0
        )
    null_idx = np.array([pairs.index(p) for p in null_pairs], dtype=int)
    pk = np.array([p.k - 1 for p in pairs])
    pk_star = np.array([p.k_star - 1 for p in pairs])
    psi = np.asarray(effects.psi)
    sizes = np.array([[layout.size(k, j) for j in range(1, J + 1)] for k in range(1, K + 1)])
    increments = np.diff(np.concatenate([np.zeros((K, 1), dtype=int), sizes], axis=1), axis=1)

    rng = np.random.default_rng(seed)
    survivor_counts: dict[frozenset[int], int] = {}
    stop_stage_counts: dict[int, int] = {}
    false_rej_total = 0
    n_sum = 0.0
    n_sq_sum = 0.0

    done = 0
    while done < replications:
        R = min(batch, replications - done)
        active = np.ones((R, K), dtype=bool)
        running = np.ones(R, dtype=bool)
        cum_sum = np.zeros((R, K))
        last_stage = np.zeros((R, K), dtype=int)
        stop_stage = np.full(R, J, dtype=int)
        false_rej = np.zeros(R, dtype=bool)

        for j in range(1, J + 1):
            m = increments[:, j - 1]
            draws = rng.standard_normal((R, K)) * np.sqrt(m) + m * psi
            recruiting = active & running[:, None]
            cum_sum += np.where(recruiting, draws, 0.0)
            last_stage[recruiting] = j
            n_j = sizes[:, j - 1]
            means = cum_sum / n_j  # only meaningful where recruited through j
            info = 1.0 / (1.0 / n_j[pk] + 1.0 / n_j[pk_star])
            z = (means[:, pk] - means[:, pk_star]) * np.sqrt(info)
            tested = running[:, None] & active[:, pk] & active[:, pk_star]

            u = design.boundaries.outer[j - 1]
            us = design.boundaries.inner[j - 1]
            false_rej |= np.any(tested[:, null_idx] & (np.abs(z[:, null_idx]) >= u), axis=1)

            hi = tested & (z >= u)
            lo = tested & (z <= -u)
            drop = np.zeros((R, K), dtype=bool)
            for pi in range(len(pairs)):
                drop[:, pk_star[pi]] |= hi[:, pi]
                drop[:, pk[pi]] |= lo[:, pi]
            active &= ~drop

            if j == J:
                stop_stage[running] = J
                running[:] = False
                break
            n_remaining = active.sum(axis=1)
            stop_now = running & (n_remaining <= 1)
            if design.binding:
                remaining_pair = active[:, pk] & active[:, pk_star]
                similar = np.all(~remaining_pair | (np.abs(z) < us), axis=1)
                stop_now |= running & (n_remaining >= 2) & similar
            stop_stage[stop_now] = j
            running &= ~stop_now

        sample_n = sizes[np.arange(K)[None, :], np.maximum(last_stage, 1) - 1]
        sample_n = np.where(last_stage > 0, sample_n, 0).sum(axis=1)

        false_rej_total += int(false_rej.sum())
        n_sum += float(sample_n.sum())
        n_sq_sum += float((sample_n.astype(float) ** 2).sum())
        bits = active @ (1 << np.arange(K))
        for b, c in zip(*np.unique(bits, return_counts=True)):
            key = frozenset(k + 1 for k in range(K) if b & (1 << k))
            survivor_counts[key] = survivor_counts.get(key, 0) + int(c)
        for s, c in zip(*np.unique(stop_stage, return_counts=True)):
            stop_stage_counts[int(s)] = stop_stage_counts.get(int(s), 0) + int(c)
        done += R

    mean_n = n_sum / replications
    var_n = max(n_sq_sum / replications - mean_n**2, 0.0)
    return SimulationResult(
        n_reps=replications,
        false_rejections=false_rej_total,
        survivor_counts=survivor_counts,
        stop_stage_counts=stop_stage_counts,
        mean_sample_size=mean_n,
        se_sample_size=float(np.sqrt(var_n / replications)),
        null_pairs=null_pairs,
        seed=seed,
    )


def simulate_type_i_profile(
    design: TrialDesign,
    blocks: tuple[frozenset[int], ...],
    shift: float,
    replications: int,
    seed: int = 0,
) -> SimulationResult:
    """Error-rate simulation under a block-equal effect configuration.

    Arms in the same block share an effect; blocks are separated by ``shift``
    per block index.  Null pairs are exactly the within-block ones.
    """
    psi = [0.0] * design.layout.n_arms
    for i, block in enumerate(blocks):
        for arm in block:
            psi[arm - 1] = i * shift
    effects = EffectConfiguration(tuple(psi))
    return simulate(design, effects, replications, seed)
