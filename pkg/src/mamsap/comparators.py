"""Alternative designs evaluated side by side with the all-pairwise trial.

Each comparator composes two-arm group-sequential building blocks:

* separate trials -- one independent two-arm trial per comparison, with an
  optional multiplicity adjustment of its level and power;
* pairwise-solved boundaries evaluated jointly -- the multi-arm trial run
  with boundaries solved for a single comparison (unadjusted, or Bonferroni
  adjusted);
* sequential separate trials -- two-arm trials run one after another, the
  winner (or, on a similarity stop, the incumbent) carrying forward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from . import characteristics as ch
from .characteristics import OperatingReport, combine_std_errors
from .enumeration import build_all_outcomes, terminal_profile
from .model import EffectConfiguration, TrialDesign, TrialLayout
from .quadrature import ProbabilityEstimate
from .solver import BoundaryFamily, assemble_design, design_trial

COMPARATOR_KINDS = (
    "separate_trials",
    "fwer_adjusted_separate",
    "whitehead_unadjusted",
    "bonferroni_whitehead",
    "sequential_separate",
    "fwer_adjusted_sequential",
)


@dataclass(frozen=True)
class ComparatorSpec:
    """A comparator request: the kind plus optional per-kind target overrides.

    ``pairwise_scale`` and ``pairwise_group_size`` pin the two-arm building
    block to an externally specified design (boundary-family scale and group
    size) instead of solving it from the level/power targets -- useful for
    evaluating a published pairwise design as-is.
    """

    kind: str
    pairwise_alpha: Optional[float] = None
    pairwise_power: Optional[float] = None
    pairwise_scale: Optional[float] = None
    pairwise_group_size: Optional[int] = None

    def __post_init__(self):
        if self.kind not in COMPARATOR_KINDS:
            raise ValueError(f"unknown comparator kind {self.kind!r}")
        if (self.pairwise_scale is None) != (self.pairwise_group_size is None):
            raise ValueError(
                "pairwise_scale and pairwise_group_size must be given together"
            )


def _n_pairs(n_arms: int) -> int:
    return n_arms * (n_arms - 1) // 2


def pairwise_targets(
    kind: str, n_arms: int, alpha: float, beta: float
) -> tuple[float, float]:
    """(two-sided level, power) for the two-arm building block of ``kind``."""
    eta = _n_pairs(n_arms)
    wins = n_arms - 1
    if kind in ("separate_trials", "whitehead_unadjusted", "sequential_separate"):
        return alpha, 1.0 - beta
    if kind == "fwer_adjusted_separate":
        return 1.0 - (1.0 - alpha) ** (1.0 / eta), (1.0 - beta) ** (1.0 / wins)
    if kind == "bonferroni_whitehead":
        return alpha / eta, 1.0 - beta / wins
    if kind == "fwer_adjusted_sequential":
        return 1.0 - (1.0 - alpha) ** (1.0 / wins), (1.0 - beta) ** (1.0 / wins)
    raise ValueError(f"unknown comparator kind {kind!r}")


@dataclass
class TwoArmBlock:
    """A solved two-arm trial and its reusable summary quantities."""

    design: TrialDesign
    power_win: ProbabilityEstimate  # better arm selected alone, under the drift
    power_lose: ProbabilityEstimate  # worse arm selected alone, under the drift
    prob_similar: ProbabilityEstimate  # both arms survive, under the drift
    ess_null: tuple[float, float]
    ess_alt: tuple[float, float]

    @property
    def group_size(self) -> int:
        return self.design.layout.size(1, 1)

    @property
    def max_n(self) -> int:
        return self.design.layout.max_sample_size


def solve_two_arm_block(
    n_stages: int,
    pairwise_alpha: float,
    pairwise_power: float,
    theta_prime: float,
    binding: bool = True,
    family: Optional[BoundaryFamily] = None,
    target_se: float = ch._SOLVER_SE,
    seed: int = 0,
    n_hint: Optional[int] = None,
) -> TwoArmBlock:
    design = design_trial(
        2, n_stages, pairwise_alpha, 1.0 - pairwise_power, theta_prime,
        binding, family, target_se, seed, n_hint,
    )
    return evaluate_two_arm_block(design, theta_prime, seed)


def evaluate_two_arm_block(
    design: TrialDesign, theta_prime: float, seed: int = 0
) -> TwoArmBlock:
    """Summarize a given two-arm design into the reusable block quantities."""
    effects = EffectConfiguration.lfc(2, 1, theta_prime)
    outcomes = build_all_outcomes(design)
    ests = ch.family_probabilities(
        design, outcomes, effects, target_se=1e-4, seed=seed + 1
    )
    sel: dict[frozenset[int], list[ProbabilityEstimate]] = {}
    for config, est in zip(outcomes.configs, ests):
        sel.setdefault(terminal_profile(config, design.layout).survivors, []).append(est)

    def total(key: frozenset[int]) -> ProbabilityEstimate:
        group = sel.get(key, [])
        return ProbabilityEstimate(
            float(sum(e.value for e in group)),
            combine_std_errors(e.std_error for e in group),
            sum(e.evaluations for e in group),
        )

    return TwoArmBlock(
        design=design,
        power_win=total(frozenset({1})),
        power_lose=total(frozenset({2})),
        prob_similar=total(frozenset({1, 2})),
        ess_null=ch.expected_sample_size(
            design, EffectConfiguration.global_null(2), target_se=0.05,
            seed=seed + 2, all_outcomes=outcomes,
        ),
        ess_alt=ch.expected_sample_size(
            design, effects, target_se=0.05, seed=seed + 3, all_outcomes=outcomes
        ),
    )


def _theta_patterns(n_arms: int, theta_prime: float) -> dict[str, EffectConfiguration]:
    return {
        f"theta_{i}": EffectConfiguration.theta_pattern(n_arms, i, theta_prime)
        for i in range(n_arms)
    }


def separate_trials_report(
    n_arms: int,
    block: TwoArmBlock,
    pairwise_alpha: float,
    theta_prime: float,
) -> OperatingReport:
    """All comparisons run as independent two-arm trials.

    The familywise error and least-favourable power are exact products of
    two-arm quantities; expected size sums each trial's own expected size
    under the effect difference its pair sees.
    """
    eta = _n_pairs(n_arms)
    wins = n_arms - 1
    fwer = 1.0 - (1.0 - pairwise_alpha) ** eta
    p = block.power_win
    report = OperatingReport(
        fwer=ProbabilityEstimate(fwer, 0.0, 0),
        power_lfc=ProbabilityEstimate(
            p.value**wins, wins * p.value ** (wins - 1) * p.std_error, p.evaluations
        ),
        max_n=eta * block.max_n,
        boundaries=block.design.boundaries,
        group_size=block.group_size,
    )
    for i in range(n_arms):
        n_alt = i * (n_arms - i)  # pairs with exactly one relevant arm
        n_null = eta - n_alt
        report.expected_n[f"theta_{i}"] = (
            n_alt * block.ess_alt[0] + n_null * block.ess_null[0],
            combine_std_errors(
                [block.ess_alt[1], block.ess_null[1]], [n_alt, n_null]
            ),
        )
    report.notes["pairwise_alpha"] = pairwise_alpha
    report.notes["pairwise_power"] = p.value
    report.notes["caveat_contradictory"] = 1.0  # separate trials can disagree
    return report


def joint_evaluation_report(
    n_arms: int,
    block: TwoArmBlock,
    theta_prime: float,
    binding: bool = True,
    target_se: float = ch._REPORT_SE,
    seed: int = 0,
) -> OperatingReport:
    """The pairwise-solved boundaries run as one joint all-pairwise trial."""
    layout = TrialLayout.equal_allocation(
        n_arms, block.design.layout.n_stages, block.group_size
    )
    design = TrialDesign(layout, block.design.boundaries, binding)
    report = ch.evaluate_design(
        design, theta_prime, _theta_patterns(n_arms, theta_prime),
        target_se=target_se, seed=seed,
    )
    return report


def sequential_separate_report(
    n_arms: int,
    block: TwoArmBlock,
    pairwise_alpha: float,
    theta_prime: float,
) -> OperatingReport:
    """Two-arm trials run in sequence; similarity keeps the incumbent arm.

    Arm k joins at trial k-1 against the carrier of the earlier trials, so the
    later an arm joins, the fewer comparisons it must win: the chance arm k is
    selected throughout under its own least-favourable drift is the two-arm
    power raised to the number of trials it sits in.
    """
    wins_total = n_arms - 1
    fwer = 1.0 - (1.0 - pairwise_alpha) ** wins_total
    p = block.power_win

    report = OperatingReport(
        fwer=ProbabilityEstimate(fwer, 0.0, 0),
        max_n=wins_total * block.max_n,
        boundaries=block.design.boundaries,
        group_size=block.group_size,
    )
    for arm in range(1, n_arms + 1):
        wins = wins_total if arm == 1 else n_arms - arm + 1
        report.notes[f"power_arm_{arm}"] = p.value**wins
    report.power_lfc = ProbabilityEstimate(
        p.value**wins_total,
        wins_total * p.value ** (wins_total - 1) * p.std_error,
        p.evaluations,
    )

    # Expected size: every trial runs; only the incumbent's effect class is
    # random, so propagate P(incumbent is a best arm) down the sequence.
    p_win = p.value
    p_keep = p.value + block.prob_similar.value  # incumbent survives challenge
    for label, effects in _theta_patterns(n_arms, theta_prime).items():
        best = max(effects.psi)
        relevant = [v == best and best > min(effects.psi) for v in effects.psi]
        rel = 1.0 if relevant[0] else 0.0
        total, var_w = 0.0, [0.0, 0.0]  # weights on (alt, null) two-arm ESS
        for trial in range(1, n_arms):
            ch_rel = relevant[trial]  # challenger is arm trial+1
            p_alt = rel * (0.0 if ch_rel else 1.0) + (1.0 - rel) * (1.0 if ch_rel else 0.0)
            total += p_alt * block.ess_alt[0] + (1.0 - p_alt) * block.ess_null[0]
            var_w[0] += p_alt
            var_w[1] += 1.0 - p_alt
            if ch_rel:
                rel = rel + (1.0 - rel) * p_win
            else:
                rel = rel * p_keep
        report.expected_n[label] = (
            total,
            combine_std_errors([block.ess_alt[1], block.ess_null[1]], var_w),
        )
    report.notes["pairwise_alpha"] = pairwise_alpha
    return report


def comparator_report(
    spec: ComparatorSpec,
    n_arms: int,
    n_stages: int,
    alpha: float,
    beta: float,
    theta_prime: float,
    binding: bool = True,
    family: Optional[BoundaryFamily] = None,
    target_se: float = ch._REPORT_SE,
    solver_se: float = ch._SOLVER_SE,
    seed: int = 0,
    n_hint: Optional[int] = None,
    block: Optional[TwoArmBlock] = None,
) -> OperatingReport:
    """Build (or reuse) the two-arm block for ``spec`` and produce its report."""
    a_pair, p_pair = pairwise_targets(spec.kind, n_arms, alpha, beta)
    if spec.pairwise_alpha is not None:
        a_pair = spec.pairwise_alpha
    if spec.pairwise_power is not None:
        p_pair = spec.pairwise_power
    if block is None:
        if spec.pairwise_scale is not None:
            layout = TrialLayout.equal_allocation(
                2, n_stages, spec.pairwise_group_size
            )
            pinned = assemble_design(
                layout, family or BoundaryFamily(), spec.pairwise_scale, binding
            )
            block = evaluate_two_arm_block(pinned, theta_prime, seed)
        else:
            block = solve_two_arm_block(
                n_stages, a_pair, p_pair, theta_prime, binding, family,
                solver_se, seed, n_hint,
            )
    if spec.kind in ("separate_trials", "fwer_adjusted_separate"):
        return separate_trials_report(n_arms, block, a_pair, theta_prime)
    if spec.kind in ("whitehead_unadjusted", "bonferroni_whitehead"):
        return joint_evaluation_report(
            n_arms, block, theta_prime, binding, target_se, seed
        )
    return sequential_separate_report(n_arms, block, a_pair, theta_prime)
