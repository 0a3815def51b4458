"""Randomized property checks of the design engine's structural guarantees."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from mamsap import (
    BoundarySet,
    EffectConfiguration,
    TrialDesign,
    TrialLayout,
    build_model,
    fwer_binding_global,
    fwer_nonbinding_global,
    simulate,
    simulate_type_i_profile,
)
from mamsap.characteristics import combine_std_errors


def _random_design(rng, binding=True):
    k = int(rng.integers(2, 4))
    j = int(rng.integers(2, 4))
    n = int(rng.integers(5, 40))
    layout = TrialLayout.equal_allocation(k, j, n)
    # decreasing outer boundaries, inner below outer, closing final stage
    outer = np.sort(rng.uniform(1.8, 3.5, size=j))[::-1]
    inner = np.concatenate([
        np.sort(rng.uniform(0.0, 1.0, size=j - 1)) * outer[:-1], [outer[-1]]
    ])
    bounds = BoundarySet(tuple(outer), tuple(inner))
    return TrialDesign(layout, bounds, binding)


def test_binding_never_exceeds_nonbinding():
    """Honoring the similarity stop removes rejection paths, so the binding
    error rate is bounded by the non-binding one on any design."""
    rng = np.random.default_rng(314159)
    for trial in range(20):
        design = _random_design(rng)
        b = fwer_binding_global(design, target_se=2e-4, seed=trial)
        nb = fwer_nonbinding_global(design, target_se=2e-4, seed=trial)
        noise = 3 * combine_std_errors([b.std_error, nb.std_error])
        assert b.value <= nb.value + noise, (design.boundaries, b.value, nb.value)


def test_nonbinding_fwer_maximal_under_global_null():
    """For non-binding rules the global null maximizes the familywise error:
    any partition of the arms into equal-effect blocks (separated by a large
    shift) must not error more often, checked by simulation."""
    rng = np.random.default_rng(271828)
    layout = TrialLayout.equal_allocation(4, 2, 15)
    design = TrialDesign(
        layout, BoundarySet((2.9, 2.4), (0.0, 2.4)), binding=False
    )
    reps = 150_000
    global_sim = simulate(
        design, EffectConfiguration.global_null(4), reps, seed=999
    )
    g = global_sim.error_rate
    g_se = global_sim.error_rate_se
    arms = list(range(1, 5))
    for trial in range(20):
        n_blocks = int(rng.integers(2, 4))
        labels = rng.integers(0, n_blocks, size=4)
        while len(set(labels.tolist())) < 2:
            labels = rng.integers(0, n_blocks, size=4)
        blocks = tuple(
            frozenset(a for a, l in zip(arms, labels) if l == lab)
            for lab in sorted(set(labels.tolist()))
        )
        res = simulate_type_i_profile(
            design, blocks, shift=6.0, replications=reps, seed=1000 + trial
        )
        if not res.null_pairs:
            continue  # all-singleton partition carries no true nulls
        assert res.error_rate <= g + 3 * math.hypot(g_se, res.error_rate_se), (
            blocks, res.error_rate, g,
        )


@given(
    k=st.integers(2, 5),
    j=st.integers(1, 4),
    n=st.integers(1, 50),
)
@settings(max_examples=25, deadline=None)
def test_model_rank_property(k, j, n):
    layout = TrialLayout.equal_allocation(k, j, n)
    model = build_model(layout)
    assert np.linalg.matrix_rank(model.corr, tol=1e-8) == (k - 1) * j
    assert np.allclose(model.corr, model.corr.T)
    assert np.allclose(np.diag(model.corr), 1.0)


@given(st.data())
@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_unequal_allocation_model_is_valid(data):
    """Arbitrary strictly-increasing allocations still give a PSD correlation."""
    k = data.draw(st.integers(2, 4))
    j = data.draw(st.integers(1, 3))
    rows = []
    for _ in range(k):
        sizes = data.draw(
            st.lists(st.integers(1, 30), min_size=j, max_size=j)
        )
        rows.append(tuple(np.cumsum(sizes).tolist()))
    layout = TrialLayout(k, j, tuple(rows))
    model = build_model(layout)
    eig = np.linalg.eigvalsh(model.corr)
    assert eig.min() > -1e-9
