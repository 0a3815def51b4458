import math

import pytest

from mamsap import (
    EffectConfiguration,
    Pair,
    simulate,
    simulate_type_i_profile,
)


def test_determinism(small_design):
    a = simulate(small_design, EffectConfiguration.global_null(3), 50_000, seed=42)
    b = simulate(small_design, EffectConfiguration.global_null(3), 50_000, seed=42)
    assert a.false_rejections == b.false_rejections
    assert a.survivor_counts == b.survivor_counts
    assert a.mean_sample_size == b.mean_sample_size
    c = simulate(small_design, EffectConfiguration.global_null(3), 50_000, seed=43)
    assert c.false_rejections != a.false_rejections


def test_counts_are_consistent(small_design):
    res = simulate(small_design, EffectConfiguration.global_null(3), 100_000, seed=1)
    assert res.n_reps == 100_000
    assert sum(res.survivor_counts.values()) == res.n_reps
    assert sum(res.stop_stage_counts.values()) == res.n_reps
    assert set(res.stop_stage_counts) <= {1, 2}
    layout = small_design.layout
    min_n = sum(layout.size(k, 1) for k in range(1, 4))
    assert min_n <= res.mean_sample_size <= layout.max_sample_size
    assert res.null_pairs == tuple(layout.pairs)  # all pairs null here


def test_exchangeability_under_global_null(small_design):
    """Arms are exchangeable under the global null: per-arm selection
    probabilities must agree within binomial noise."""
    res = simulate(small_design, EffectConfiguration.global_null(3), 300_000, seed=2)
    probs = [res.sole_survivor_probability(k) for k in (1, 2, 3)]
    se = 2 * math.sqrt(probs[0] * (1 - probs[0]) / res.n_reps)
    for p in probs[1:]:
        assert p == pytest.approx(probs[0], abs=4 * se)


def test_relevant_arm_usually_wins(small_design):
    res = simulate(small_design, EffectConfiguration.lfc(3, 1, 0.8), 100_000, seed=3)
    assert res.selection_probability(frozenset({1})) > 0.3
    assert res.selection_probability(frozenset({1})) > res.selection_probability(
        frozenset({2})
    )


def test_null_pairs_follow_effects(small_design):
    effects = EffectConfiguration.lfc(3, 1, 0.5)  # only (2,3) is a true null
    res = simulate(small_design, effects, 10_000, seed=4)
    assert res.null_pairs == (Pair(2, 3),)


def test_type_i_profile_runs(small_design):
    res = simulate_type_i_profile(
        small_design, (frozenset({1, 2}), frozenset({3})), shift=5.0,
        replications=50_000, seed=5,
    )
    # only the within-block pair (1,2) is a true null
    assert res.null_pairs == (Pair(1, 2),)
    assert 0.0 <= res.error_rate <= 1.0
