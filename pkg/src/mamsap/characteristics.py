"""Operating characteristics: error rates, power, sample size, breakdowns.

Every quantity is a sum of multivariate-normal rectangle probabilities over
the joint law of the pairwise statistics.  Rectangles arising from the same
outcome family are grouped by their coordinate sets so factorizations are
shared, and per-rectangle precision is budgeted so family sums meet their
target standard error.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .correlation import Coordinate, JointGaussianModel, build_model
from .enumeration import (
    ConfigurationFamily,
    Feasibility,
    TerminalProfile,
    _effective_boundaries,
    build_all_outcomes,
    build_multi_relevant,
    terminal_profile,
)
from .model import (
    BoundarySet,
    Code,
    EffectConfiguration,
    OutcomeConfiguration,
    Pair,
    TrialDesign,
    TrialLayout,
    code_interval,
    hypothesis_family,
    pairs_within,
)
from .quadrature import ProbabilityEstimate, Rectangle, factor_model, rect_prob, rect_prob_batch

_REPORT_SE = 1e-4
_SOLVER_SE = 1e-5


def _task_seed(seed: int, *branch: int) -> int:
    """Stable per-task RNG seed, independent of evaluation order."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=branch)
    return int(ss.generate_state(1)[0])


def combine_std_errors(ses: Iterable[float], weights: Optional[Iterable[float]] = None) -> float:
    ses = np.asarray(list(ses), dtype=float)
    if weights is None:
        return float(np.sqrt(np.sum(ses**2)))
    w = np.asarray(list(weights), dtype=float)
    return float(np.sqrt(np.sum((w * ses) ** 2)))


@dataclass(frozen=True)
class PartitionHypothesisSet:
    """A partition of the arms into equal-effect blocks and its implied nulls."""

    blocks: tuple[frozenset[int], ...]

    def __post_init__(self):
        arms = sorted(a for b in self.blocks for a in b)
        if arms != sorted(set(arms)):
            raise ValueError("blocks must be disjoint")

    @property
    def indices(self) -> list[Pair]:
        """All within-block pairs: the true-null set the partition implies."""
        out = []
        for block in self.blocks:
            out.extend(pairs_within(block))
        return sorted(out)

    def effects(self, shift: float, n_arms: int) -> EffectConfiguration:
        """Block-wise effects separated by ``shift`` per block index."""
        psi = [0.0] * n_arms
        for i, block in enumerate(self.blocks):
            for arm in block:
                psi[arm - 1] = i * shift
        return EffectConfiguration(tuple(psi))


def _set_partitions(arms: Sequence[int]):
    """All set partitions of ``arms`` (Bell(K) of them)."""
    if not arms:
        yield []
        return
    first, rest = arms[0], arms[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [first]] + part[i + 1 :]
        yield part + [[first]]


def null_partition_family(n_arms: int) -> list[PartitionHypothesisSet]:
    """Every partition generating a non-trivial true-null set (Bell(K)-2)."""
    arms = list(range(1, n_arms + 1))
    out = []
    for part in _set_partitions(arms):
        if len(part) in (1, len(arms)):
            continue  # global null / no true nulls
        out.append(PartitionHypothesisSet(tuple(frozenset(b) for b in part)))
    return out


def two_block_partitions(n_arms: int, representatives_only: bool = False) -> list[PartitionHypothesisSet]:
    """The S' family: two-block partitions, Stirling(K,2) of them.

    With equal allocation only block sizes matter, so ``representatives_only``
    keeps one partition per size split (ceil((K-1)/2) of them).
    """
    arms = list(range(1, n_arms + 1))
    out = []
    seen_sizes = set()
    for r in range(1, n_arms // 2 + 1):
        for combo in itertools.combinations(arms, r):
            block_a = frozenset(combo)
            block_b = frozenset(arms) - block_a
            if len(block_a) == len(block_b) and 1 not in block_a:
                continue  # equal splits appear twice; keep the one holding arm 1
            sizes = (len(block_a), len(block_b))
            if representatives_only:
                if sizes in seen_sizes:
                    continue
                seen_sizes.add(sizes)
            out.append(PartitionHypothesisSet((block_a, block_b)))
    return out


def config_rectangle(
    design: TrialDesign, config: OutcomeConfiguration, honor_inner: bool = True
) -> tuple[tuple[Coordinate, ...], Rectangle]:
    """Integration coordinates and bounds for one outcome configuration.

    A6 cells are removed (marginalized); the remaining cells map to the
    interval their region code stands for at that stage.
    """
    boundaries = _effective_boundaries(design, honor_inner)
    pairs = hypothesis_family(design.layout.n_arms)
    coords, lower, upper = [], [], []
    for stage in range(1, design.layout.n_stages + 1):
        u = boundaries.outer[stage - 1]
        us = boundaries.inner[stage - 1]
        for pair in pairs:
            code = config.codes[pair][stage - 1]
            if code == Code.A6:
                continue
            lo, hi = code_interval(code, u, us)
            coords.append((pair, stage))
            lower.append(lo)
            upper.append(hi)
    return tuple(coords), Rectangle(tuple(lower), tuple(upper))


def family_probabilities(
    design: TrialDesign,
    family: ConfigurationFamily,
    effects: EffectConfiguration,
    target_se: float = _REPORT_SE,
    seed: int = 0,
    honor_inner: bool = True,
    weights: Optional[np.ndarray] = None,
    start_points: int = 128,
    max_points: int = 1 << 17,
) -> list[ProbabilityEstimate]:
    """Rectangle probability of every configuration in a family.

    Configurations sharing a coordinate set share one factorization and are
    evaluated as a batch.  ``target_se`` budgets the (optionally weighted)
    family sum: after a cheap base pass, only the rectangles dominating the
    combined error are refined at larger lattice sizes.
    """
    items = [config_rectangle(design, c, honor_inner) for c in family.configs]
    return evaluate_rectangles(
        design.layout, effects, items, target_se, seed, weights,
        start_points, max_points,
    )


def evaluate_rectangles(
    layout: TrialLayout,
    effects: Optional[EffectConfiguration],
    items: Sequence[tuple[tuple[Coordinate, ...], Rectangle]],
    target_se: float = _REPORT_SE,
    seed: int = 0,
    weights: Optional[np.ndarray] = None,
    start_points: int = 128,
    max_points: int = 1 << 17,
) -> list[ProbabilityEstimate]:
    """Estimate many rectangle probabilities under one effect configuration.

    Rectangles sharing a coordinate set share one factorization; the budget
    targets the (optionally weighted) sum of all estimates.
    """
    n = len(items)
    if n == 0:
        return []
    groups: dict[tuple[Coordinate, ...], list[tuple[int, Rectangle]]] = {}
    for i, (coords, rect) in enumerate(items):
        groups.setdefault(coords, []).append((i, rect))
    group_data = []
    member_group = np.empty(n, dtype=int)
    for gi, (coords, members) in enumerate(sorted(groups.items())):
        model = build_model(layout, effects, restriction=coords)
        fm = factor_model(model)
        idx = np.array([i for i, _ in members])
        member_group[idx] = gi
        lower = np.array([r.lower for _, r in members])
        upper = np.array([r.upper for _, r in members])
        group_data.append((fm, idx, lower, upper))

    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    values = np.zeros(n)
    ses = np.zeros(n)
    evals = np.zeros(n, dtype=np.int64)

    def run(gi: int, mask: np.ndarray, n_points: int, tag: int) -> None:
        fm, idx, lower, upper = group_data[gi]
        pos = np.flatnonzero(mask[idx])
        if pos.size == 0:
            return
        ests = rect_prob_batch(
            fm, lower[pos], upper[pos],
            target_se=0.0, seed=_task_seed(seed, gi, tag),
            start_points=n_points, max_points=n_points, n_shifts=8,
        )
        for p, est in zip(pos, ests):
            i = idx[p]
            values[i], ses[i] = est.value, est.std_error
            evals[i] += est.evaluations

    # Pilot pass: estimates used only to plan per-rectangle budgets.  The
    # final estimates below come from fresh, independent lattices, so the
    # data-dependent plan cannot bias them (refining exactly the rectangles
    # whose pilot pass happened to catch mass would otherwise skew the
    # family sum low).
    everything = np.ones(n, dtype=bool)
    for gi in range(len(group_data)):
        run(gi, everything, start_points, 0)
    pilot_se = ses.copy()

    plan = np.full(n, start_points)
    for _ in range(16):
        pred = w * pilot_se * (start_points / plan) ** 0.75
        if float(np.sqrt(np.sum(pred**2))) <= target_se:
            break
        grow = (plan < max_points) & (pred > 0.25 * pred.max())
        if not grow.any():
            break
        plan[grow] = np.minimum(plan[grow] * 4, max_points)

    values[:] = 0.0
    ses[:] = 0.0
    for level in np.unique(plan):
        mask = plan == level
        for gi in range(len(group_data)):
            run(gi, mask, int(level), 1 + int(level).bit_length())

    return [
        ProbabilityEstimate(float(v), float(s), int(c))
        for v, s, c in zip(values, ses, evals)
    ]


@dataclass(frozen=True)
class StrongControlCertificate:
    """Per-partition non-binding bounds versus the global-null binding FWER."""

    global_fwer: ProbabilityEstimate
    partition_probs: dict[PartitionHypothesisSet, ProbabilityEstimate]
    verdict: str  # PASS | FAIL | INCONCLUSIVE

    def worst_fwer(self) -> float:
        return max(1.0 - e.value for e in self.partition_probs.values())


@dataclass
class OperatingReport:
    """The full characteristic set of a design."""

    fwer: ProbabilityEstimate
    power_lfc: Optional[ProbabilityEstimate] = None
    expected_n: dict[str, tuple[float, float]] = field(default_factory=dict)
    max_n: int = 0
    breakdown: dict[str, dict[tuple[str, int], tuple[float, float]]] = field(default_factory=dict)
    strong_control: Optional[StrongControlCertificate] = None
    boundaries: Optional[BoundarySet] = None
    group_size: Optional[int] = None
    notes: dict[str, float] = field(default_factory=dict)


def _outer_rectangle_prob(
    design: TrialDesign,
    pairs: Sequence[Pair],
    target_se: float,
    seed: int,
    effects: Optional[EffectConfiguration] = None,
) -> ProbabilityEstimate:
    """P(all listed statistics stay within the outer boundaries at all stages)."""
    layout = design.layout
    coords = [(p, j) for j in range(1, layout.n_stages + 1) for p in pairs]
    lower = tuple(-design.boundaries.outer[j - 1] for _, j in coords)
    upper = tuple(design.boundaries.outer[j - 1] for _, j in coords)
    model = build_model(layout, effects, restriction=coords)
    return rect_prob(model, Rectangle(lower, upper), target_se=target_se, seed=seed)


def fwer_nonbinding_global(
    design: TrialDesign, target_se: float = _REPORT_SE, seed: int = 0
) -> ProbabilityEstimate:
    """FWER under the global null ignoring the similarity stopping rules.

    One minus the probability that every statistic stays inside the outer
    boundaries at every stage; by construction this dominates the FWER under
    any other configuration of true nulls.
    """
    est = _outer_rectangle_prob(
        design, hypothesis_family(design.layout.n_arms), target_se, _task_seed(seed, 0)
    )
    return ProbabilityEstimate(1.0 - est.value, est.std_error, est.evaluations)


def fwer_binding_global(
    design: TrialDesign, target_se: float = _REPORT_SE, seed: int = 0
) -> ProbabilityEstimate:
    """FWER under the global null with the similarity stop enforced.

    The no-rejection event decomposes by the stage the trial stops at; its
    probability is an inclusion-exclusion sum of 2^J - 1 rectangles whose
    per-stage half-widths are either the outer or the inner boundary.
    """
    layout = design.layout
    pairs = hypothesis_family(layout.n_arms)
    n_stages = layout.n_stages
    outer = design.boundaries.outer
    inner = design.boundaries.inner

    total = 0.0
    ses = []
    evals = 0
    term = 0
    for j in range(1, n_stages + 1):
        for q_prev in itertools.product((0, 1), repeat=j - 1):
            q = q_prev + (1,)
            half = [inner[i] if q[i] else outer[i] for i in range(j)]
            if any(h == 0.0 for h in half):
                continue  # empty similarity region: zero-probability term
            sign = (-1) ** (sum(q) - 1)
            coords = [(p, stage) for stage in range(1, j + 1) for p in pairs]
            lower = tuple(-half[stage - 1] for _, stage in coords)
            upper = tuple(half[stage - 1] for _, stage in coords)
            model = build_model(layout, restriction=coords)
            est = rect_prob(
                model,
                Rectangle(lower, upper),
                target_se=target_se,
                seed=_task_seed(seed, 1, term),
            )
            term += 1
            total += sign * est.value
            ses.append(est.std_error)
            evals += est.evaluations
    return ProbabilityEstimate(
        min(max(1.0 - total, 0.0), 1.0), combine_std_errors(ses), evals
    )


def fwer_global(design: TrialDesign, target_se: float = _REPORT_SE, seed: int = 0) -> ProbabilityEstimate:
    """Global-null FWER under the design's own binding flag."""
    if design.binding:
        return fwer_binding_global(design, target_se, seed)
    return fwer_nonbinding_global(design, target_se, seed)


def strong_control_certificate(
    design: TrialDesign,
    target_se: float = _REPORT_SE,
    seed: int = 0,
    representatives_only: Optional[bool] = None,
    global_fwer: Optional[ProbabilityEstimate] = None,
) -> StrongControlCertificate:
    """Certify strong FWER control of a binding design.

    Each two-block partition of the arms yields a possible true-null set; the
    certificate compares the non-binding no-rejection probability restricted
    to those nulls against the global-null binding FWER.  PASS requires every
    comparison to clear by more than three combined standard errors.
    """
    layout = design.layout
    if representatives_only is None:
        sizes = {
            tuple(layout.group_sizes[k]) for k in range(layout.n_arms)
        }
        representatives_only = len(sizes) == 1
    if global_fwer is None:
        global_fwer = fwer_binding_global(design, target_se, _task_seed(seed, 2))

    partitions = two_block_partitions(layout.n_arms, representatives_only)
    probs: dict[PartitionHypothesisSet, ProbabilityEstimate] = {}
    verdict = "PASS"
    for pi, part in enumerate(partitions):
        indices = part.indices
        if not indices:
            continue
        est = _outer_rectangle_prob(design, indices, target_se, _task_seed(seed, 3, pi))
        probs[part] = est
        margin = (1.0 - est.value) - global_fwer.value
        noise = 3.0 * combine_std_errors([est.std_error, global_fwer.std_error])
        if margin > noise:
            verdict = "FAIL"
        elif margin > -noise and verdict != "FAIL":
            verdict = "INCONCLUSIVE"
    if not probs:
        verdict = "PASS"  # K=2: no non-trivial partitions, vacuous
    return StrongControlCertificate(global_fwer, probs, verdict)


def power_lfc(
    design: TrialDesign,
    theta_prime: float,
    relevant_arm: int = 1,
    target_se: float = _REPORT_SE,
    seed: int = 0,
    honor_inner: bool = True,
    feasibility: Feasibility = "exact",
    all_outcomes: Optional[ConfigurationFamily] = None,
) -> ProbabilityEstimate:
    """Probability the relevant arm alone survives under the LFC drift."""
    family = build_multi_relevant(
        design, {relevant_arm}, feasibility, honor_inner, all_outcomes
    )
    effects = EffectConfiguration.lfc(design.layout.n_arms, relevant_arm, theta_prime)
    ests = family_probabilities(
        design, family, effects, target_se, _task_seed(seed, 4), honor_inner
    )
    return ProbabilityEstimate(
        float(sum(e.value for e in ests)),
        combine_std_errors(e.std_error for e in ests),
        sum(e.evaluations for e in ests),
    )


def expected_sample_size(
    design: TrialDesign,
    effects: EffectConfiguration,
    target_se: float = 0.5,
    seed: int = 0,
    honor_inner: bool = True,
    feasibility: Feasibility = "exact",
    all_outcomes: Optional[ConfigurationFamily] = None,
) -> tuple[float, float]:
    """E(N | effects): everyone recruited at stage 1 plus, for each later
    stage, that stage's increments weighted by recruitment probabilities.

    Each recruitment event is a union of disjoint history prefixes (code
    grids truncated before the stage), far fewer and fatter than the full
    terminal outcomes, so the quadrature budget goes much further than
    summing size-weighted probabilities over every outcome would.
    ``target_se`` is on the patient scale.  Returns (value, std_error).
    """
    if all_outcomes is None:
        all_outcomes = build_all_outcomes(design, feasibility, honor_inner)
    layout = design.layout
    boundaries = _effective_boundaries(design, honor_inner)
    pairs = hypothesis_family(layout.n_arms)

    total = float(sum(layout.size(k, 1) for k in range(1, layout.n_arms + 1)))
    items: list[tuple[tuple[Coordinate, ...], Rectangle]] = []
    weights: list[float] = []
    seen: set[tuple] = set()
    for config in all_outcomes.configs:
        profile = terminal_profile(config, layout)
        grid = config.grid()
        for stage in range(2, layout.n_stages + 1):
            recruited = [
                k for k in range(1, layout.n_arms + 1)
                if profile.last_stage[k] >= stage
            ]
            if not recruited:
                break
            prefix = tuple(row[: stage - 1] for row in grid)
            key = (stage, prefix)
            if key in seen:
                continue
            seen.add(key)
            coords, lower, upper = [], [], []
            for j in range(1, stage):
                u = boundaries.outer[j - 1]
                us = boundaries.inner[j - 1]
                for pair, row in zip(pairs, prefix):
                    if row[j - 1] == Code.A6:
                        continue
                    lo, hi = code_interval(row[j - 1], u, us)
                    coords.append((pair, j))
                    lower.append(lo)
                    upper.append(hi)
            items.append((tuple(coords), Rectangle(tuple(lower), tuple(upper))))
            weights.append(
                float(
                    sum(
                        layout.size(k, stage) - layout.size(k, stage - 1)
                        for k in recruited
                    )
                )
            )
    w = np.asarray(weights)
    ests = evaluate_rectangles(
        design.layout, effects, items, target_se, _task_seed(seed, 5), weights=w
    )
    values = np.array([e.value for e in ests])
    ses = np.array([e.std_error for e in ests])
    return total + float(np.dot(w, values)), combine_std_errors(ses, w)


def outcome_breakdown(
    design: TrialDesign,
    effects: EffectConfiguration,
    relevant_set: Iterable[int],
    target_se: float = _REPORT_SE,
    seed: int = 0,
    honor_inner: bool = True,
    feasibility: Feasibility = "exact",
    all_outcomes: Optional[ConfigurationFamily] = None,
) -> dict[tuple[str, int], tuple[float, float]]:
    """Distribution of the terminal surviving set, classified as in the paper.

    Outcomes ending with i* arms outside ``relevant_set`` still in the trial
    are keyed ("null", i*); outcomes ending with only relevant arms are keyed
    ("relevant", i).  Values are (probability, std_error).
    """
    relevant = frozenset(relevant_set)
    if all_outcomes is None:
        all_outcomes = build_all_outcomes(design, feasibility, honor_inner)
    ests = family_probabilities(
        design, all_outcomes, effects, target_se, _task_seed(seed, 6), honor_inner
    )
    cells: dict[tuple[str, int], list[ProbabilityEstimate]] = {}
    for config, est in zip(all_outcomes.configs, ests):
        survivors = terminal_profile(config, design.layout).survivors
        n_null = len(survivors - relevant)
        n_rel = len(survivors & relevant)
        key = ("null", n_null) if n_null else ("relevant", n_rel)
        cells.setdefault(key, []).append(est)
    return {
        key: (
            float(sum(e.value for e in group)),
            combine_std_errors(e.std_error for e in group),
        )
        for key, group in sorted(cells.items())
    }


def evaluate_design(
    design: TrialDesign,
    theta_prime: float,
    effect_patterns: Optional[dict[str, EffectConfiguration]] = None,
    target_se: float = _REPORT_SE,
    ess_target_se: float = 0.5,
    seed: int = 0,
    honor_inner: bool = True,
    feasibility: Feasibility = "exact",
    with_breakdown: bool = False,
    with_certificate: bool = False,
) -> OperatingReport:
    """Full operating report: FWER, LFC power, expected sizes, breakdowns."""
    layout = design.layout
    if effect_patterns is None:
        effect_patterns = {
            f"theta_{i}": EffectConfiguration.theta_pattern(layout.n_arms, i, theta_prime)
            for i in range(layout.n_arms)
        }
    family = build_all_outcomes(design, feasibility, honor_inner)
    report = OperatingReport(
        fwer=fwer_global(design, target_se, seed),
        power_lfc=power_lfc(
            design, theta_prime, 1, target_se, seed, honor_inner, feasibility, family
        ),
        max_n=layout.max_sample_size,
        boundaries=design.boundaries,
        group_size=layout.size(1, 1),
    )
    for si, (label, effects) in enumerate(effect_patterns.items()):
        report.expected_n[label] = expected_sample_size(
            design, effects, ess_target_se, _task_seed(seed, 7, si), honor_inner,
            feasibility, family,
        )
    if with_breakdown:
        for si, (label, effects) in enumerate(effect_patterns.items()):
            base = min(effects.psi)
            relevant = {k + 1 for k, v in enumerate(effects.psi) if v > base}
            report.breakdown[label] = outcome_breakdown(
                design, effects, relevant, target_se, _task_seed(seed, 8, si),
                honor_inner, feasibility, family,
            )
    if with_certificate and design.binding:
        report.strong_control = strong_control_certificate(design, target_se, seed)
    return report
