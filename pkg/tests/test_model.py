import math

import pytest
from hypothesis import given, strategies as st

from mamsap.model import (
    BoundarySet,
    Code,
    EffectConfiguration,
    Pair,
    StopReason,
    TrialLayout,
    active_set_transition,
    code_interval,
    hypothesis_family,
    pairs_within,
)


def test_hypothesis_family_counts_and_order():
    for k in range(2, 7):
        fam = hypothesis_family(k)
        assert len(fam) == k * (k - 1) // 2
        assert all(p.k < p.k_star for p in fam)
        assert len(set(fam)) == len(fam)


def test_pairs_within_subset():
    assert pairs_within([2, 4]) == [Pair(2, 4)]
    assert pairs_within([1, 3, 4]) == [Pair(1, 3), Pair(1, 4), Pair(3, 4)]


def test_layout_sizes_and_fractions():
    layout = TrialLayout.equal_allocation(4, 3, 81)
    assert layout.size(1, 1) == 81
    assert layout.size(3, 2) == 162
    assert layout.max_sample_size == 4 * 3 * 81
    fr = layout.information_fractions
    assert fr == pytest.approx((1 / 3, 2 / 3, 1.0))
    assert layout.n_hypotheses == 6


def test_layout_validation():
    with pytest.raises(ValueError):
        TrialLayout(2, 2, ((10, 5), (10, 20)))  # non-increasing cumulative sizes


def test_boundary_validation():
    with pytest.raises(ValueError):
        BoundarySet((2.0, 2.5), (2.2, 2.5))  # inner above outer at stage 1
    with pytest.raises(ValueError):
        BoundarySet((3.0, 2.0), (0.0, 1.0))  # final inner must equal final outer
    with pytest.raises(ValueError):
        BoundarySet((3.0, -2.0), (0.0, -2.0))


def test_code_intervals_partition_line():
    """The per-stage code intervals tile the real line without overlap."""
    u, us = 2.5, 1.2
    codes = [Code.A1, Code.A2, Code.A3, Code.A4, Code.A5]
    ivals = sorted(code_interval(c, u, us) for c in codes)
    assert ivals[0][0] == -math.inf and ivals[-1][1] == math.inf
    for (a_lo, a_hi), (b_lo, b_hi) in zip(ivals, ivals[1:]):
        assert a_hi == b_lo
        assert a_lo < a_hi


def test_code_interval_degenerate_inner():
    lo, hi = code_interval(Code.A8, 2.5, 0.0)
    assert (lo, hi) == (-2.5, 2.5)
    lo, hi = code_interval(Code.A7, 2.5, 1.2)
    assert (lo, hi) == (-2.5, 2.5)


def test_effect_configurations():
    eff = EffectConfiguration.lfc(4, 1, 0.4)
    assert eff.psi == (0.4, 0.0, 0.0, 0.0)
    assert eff.difference(Pair(1, 2)) == pytest.approx(0.4)
    assert eff.difference(Pair(2, 3)) == 0.0
    sub = EffectConfiguration.relevant_subset(4, {2, 4}, 0.4)
    assert sub.psi == (0.0, 0.4, 0.0, 0.4)
    pat = EffectConfiguration.theta_pattern(4, 2, 0.4)
    assert pat.psi == (0.4, 0.4, 0.0, 0.0)
    assert EffectConfiguration.global_null(3).psi == (0.0, 0.0, 0.0)


def test_transition_drop_and_continue():
    # arm 1 loses to arm 3 decisively: arm 1 is dropped, the trial goes on
    codes = {Pair(1, 2): Code.A2, Pair(1, 3): Code.A1, Pair(2, 3): Code.A4}
    tr = active_set_transition({1, 2, 3}, codes, binding=True)
    assert tr.dropped == frozenset({1})
    assert tr.stop_reason is StopReason.CONTINUE


def test_transition_similarity_checked_after_drops():
    # Arm 3 is dropped this stage; similarity is then assessed among {1, 2}
    # only, so the trial stops for similarity even though pairs involving the
    # dropped arm were decisive.
    codes = {Pair(1, 2): Code.A3, Pair(1, 3): Code.A5, Pair(2, 3): Code.A5}
    tr = active_set_transition({1, 2, 3}, codes, binding=True)
    assert tr.dropped == frozenset({3})
    assert tr.stop_reason is StopReason.SIMILARITY_STOP

    # same pattern but the surviving pair is not similar: no stop
    codes2 = {Pair(1, 2): Code.A4, Pair(1, 3): Code.A5, Pair(2, 3): Code.A5}
    tr2 = active_set_transition({1, 2, 3}, codes2, binding=True)
    assert tr2.dropped == frozenset({3})
    assert tr2.stop_reason is StopReason.CONTINUE


def test_transition_single_survivor_beats_similarity():
    codes = {Pair(1, 2): Code.A5, Pair(1, 3): Code.A4, Pair(2, 3): Code.A1}
    tr = active_set_transition({1, 2, 3}, codes, binding=True)
    assert tr.dropped == frozenset({2})
    # only arms {1, 3} remain; if instead two drop at once:
    codes2 = {Pair(1, 2): Code.A5, Pair(1, 3): Code.A4, Pair(2, 3): Code.A2}
    tr2 = active_set_transition({1, 2, 3}, codes2, binding=True)
    assert tr2.dropped == frozenset({2})

    codes3 = {Pair(1, 2): Code.A5, Pair(1, 3): Code.A5, Pair(2, 3): Code.A3}
    tr3 = active_set_transition({1, 2, 3}, codes3, binding=True)
    assert tr3.dropped == frozenset({2, 3})
    assert tr3.stop_reason is StopReason.SINGLE_SURVIVOR


def test_transition_nonbinding_ignores_similarity():
    codes = {Pair(1, 2): Code.A3}
    tr = active_set_transition({1, 2}, codes, binding=False)
    assert tr.stop_reason is StopReason.CONTINUE
    tr_b = active_set_transition({1, 2}, codes, binding=True)
    assert tr_b.stop_reason is StopReason.SIMILARITY_STOP


@given(
    u=st.floats(0.5, 5.0),
    frac=st.floats(0.0, 1.0),
    z=st.floats(-8.0, 8.0),
)
def test_code_interval_classifies_every_z(u, frac, z):
    us = u * frac
    hits = [
        c
        for c in (Code.A1, Code.A2, Code.A3, Code.A4, Code.A5)
        if code_interval(c, u, us)[0] <= z < code_interval(c, u, us)[1]
    ]
    assert len(hits) == 1
