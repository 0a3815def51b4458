import math

import pytest

from mamsap import (
    BoundarySet,
    ComparatorSpec,
    TrialDesign,
    TrialLayout,
    evaluate_two_arm_block,
    pairwise_targets,
)
from mamsap.comparators import (
    COMPARATOR_KINDS,
    separate_trials_report,
    sequential_separate_report,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        ComparatorSpec("not_a_kind")
    with pytest.raises(ValueError):
        ComparatorSpec("separate_trials", pairwise_scale=1.1)  # missing group size
    ComparatorSpec("separate_trials", pairwise_scale=1.1, pairwise_group_size=50)


def test_pairwise_targets():
    alpha, beta = 0.05, 0.10
    assert pairwise_targets("separate_trials", 4, alpha, beta) == (0.05, 0.90)
    assert pairwise_targets("whitehead_unadjusted", 4, alpha, beta) == (0.05, 0.90)
    a, p = pairwise_targets("fwer_adjusted_separate", 4, alpha, beta)
    assert a == pytest.approx(1 - 0.95 ** (1 / 6))
    assert p == pytest.approx(0.9 ** (1 / 3))
    a, p = pairwise_targets("bonferroni_whitehead", 4, alpha, beta)
    assert a == pytest.approx(0.05 / 6)
    assert p == pytest.approx(1 - 0.10 / 3)
    a, p = pairwise_targets("fwer_adjusted_sequential", 4, alpha, beta)
    assert a == pytest.approx(1 - 0.95 ** (1 / 3))
    assert p == pytest.approx(0.9 ** (1 / 3))
    with pytest.raises(ValueError):
        pairwise_targets("bogus", 4, alpha, beta)


@pytest.fixture(scope="module")
def tiny_block():
    """A cheap two-arm block (not solved, just evaluated)."""
    layout = TrialLayout.equal_allocation(2, 2, 20)
    design = TrialDesign(layout, BoundarySet((2.5, 2.0), (0.0, 2.0)), binding=True)
    return evaluate_two_arm_block(design, 0.45)


def test_two_arm_block_partition(tiny_block):
    total = (
        tiny_block.power_win.value
        + tiny_block.power_lose.value
        + tiny_block.prob_similar.value
    )
    assert total == pytest.approx(1.0, abs=1e-3)
    assert tiny_block.power_win.value > tiny_block.power_lose.value
    assert tiny_block.group_size == 20
    assert tiny_block.max_n == 80
    lo = 2 * 20
    assert lo <= tiny_block.ess_null[0] <= tiny_block.max_n
    assert lo <= tiny_block.ess_alt[0] <= tiny_block.max_n


def test_separate_trials_analytics(tiny_block):
    report = separate_trials_report(4, tiny_block, 0.05, 0.45)
    assert report.fwer.value == pytest.approx(1 - 0.95**6)
    assert report.fwer.std_error == 0.0
    assert report.power_lfc.value == pytest.approx(tiny_block.power_win.value**3)
    assert report.max_n == 6 * tiny_block.max_n
    # theta_0: all six trials run under the null difference
    assert report.expected_n["theta_0"][0] == pytest.approx(
        6 * tiny_block.ess_null[0]
    )
    # theta_1: three trials involve the relevant arm
    assert report.expected_n["theta_1"][0] == pytest.approx(
        3 * tiny_block.ess_alt[0] + 3 * tiny_block.ess_null[0]
    )
    assert report.notes["caveat_contradictory"] == 1.0


def test_sequential_analytics(tiny_block):
    report = sequential_separate_report(4, tiny_block, 0.05, 0.45)
    assert report.fwer.value == pytest.approx(1 - 0.95**3)
    p = tiny_block.power_win.value
    # arm 1 must win all three trials; the last arm only its own
    assert report.notes["power_arm_1"] == pytest.approx(p**3)
    assert report.notes["power_arm_4"] == pytest.approx(p)
    assert report.power_lfc.value == pytest.approx(p**3)
    assert report.max_n == 3 * tiny_block.max_n
    # theta_0: all three sequential trials see a null difference
    assert report.expected_n["theta_0"][0] == pytest.approx(
        3 * tiny_block.ess_null[0]
    )
    # under every pattern the expected size stays within the trivial bounds
    for label in ("theta_1", "theta_2", "theta_3"):
        val = report.expected_n[label][0]
        assert 3 * 2 * 20 <= val <= report.max_n


def test_kinds_complete():
    assert len(COMPARATOR_KINDS) == 6
    for kind in COMPARATOR_KINDS:
        ComparatorSpec(kind)
