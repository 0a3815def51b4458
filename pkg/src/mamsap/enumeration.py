"""Constructive enumeration of terminal trial outcomes.

Builds the family of all terminal trajectories (for expected sample size),
the subfamily where one prespecified arm alone survives (for power under the
least favourable configuration) and the generalization to an arbitrary
surviving set, without ever materializing the raw 5^(eta*J) code space.

Per-stage code patterns are screened for geometric feasibility: a pattern is
kept only if a real score per active arm exists placing every standardized
difference inside its coded interval.  Two screens are available: an exact
one via difference-constraint graphs, and the relaxed one-pass interval
propagation that only conditions on lower-numbered arms.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Literal, Optional, Sequence

import numpy as np

from .model import (
    BoundarySet,
    Code,
    OutcomeConfiguration,
    Pair,
    StopReason,
    TrialDesign,
    TrialLayout,
    active_set_transition,
    code_interval,
    pairs_within,
)

Feasibility = Literal["exact", "relaxed"]

_ZERO_CYCLE_TOL = 1e-9


class EnumerationSizeError(RuntimeError):
    """Raised when a layout exceeds the configured enumeration guard."""


@dataclass(frozen=True)
class TerminalProfile:
    """Summary of one terminal trajectory."""

    survivors: frozenset[int]
    stop_stage: int
    last_stage: dict[int, int]  # per-arm last recruited stage

    def sample_size(self, layout: TrialLayout) -> int:
        return sum(layout.size(k, j) for k, j in self.last_stage.items())


@dataclass(frozen=True)
class ConfigurationFamily:
    """A family of outcome configurations with its provenance."""

    configs: tuple[OutcomeConfiguration, ...]
    kind: str  # all_outcomes | lfc_power | multi_relevant
    relevant: Optional[frozenset[int]] = None

    def __len__(self) -> int:
        return len(self.configs)

    def dump_csv(self, path) -> None:
        """One row per configuration, one column per (pair, stage) cell."""
        pairs = sorted(self.configs[0].codes) if self.configs else []
        n_stages = self.configs[0].n_stages if self.configs else 0
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"{p.k}v{p.k_star}@{j}" for p in pairs for j in range(1, n_stages + 1)])
            for cfg in self.configs:
                writer.writerow([cfg.codes[p][j].name for p in pairs for j in range(n_stages)])


def _score_scale(layout: TrialLayout, pair: Pair, stage: int) -> float:
    """sqrt(V): converts a z-scale bound to a bound on the score difference."""
    return math.sqrt(1.0 / layout.size(pair.k, stage) + 1.0 / layout.size(pair.k_star, stage))


def _feasible_exact(
    intervals: dict[Pair, tuple[float, float]],
    scales: dict[Pair, float],
    active: Sequence[int],
) -> bool:
    """Difference-constraint feasibility via Floyd-Warshall.

    Constraints are strict, so any cycle of finite total weight <= 0 is
    infeasible.
    """
    arms = list(active)
    pos = {a: i for i, a in enumerate(arms)}
    n = len(arms)
    w = np.full((n, n), math.inf)
    for pair, (lo, hi) in intervals.items():
        s = scales[pair]
        i, j = pos[pair.k], pos[pair.k_star]
        # m_k - m_k* < hi*s  and  m_k* - m_k < -lo*s
        if not math.isinf(hi):
            w[j, i] = min(w[j, i], hi * s)
        if not math.isinf(lo):
            w[i, j] = min(w[i, j], -lo * s)
    d = w.copy()
    for m in range(n):
        d = np.minimum(d, d[:, m, None] + d[None, m, :])
    return bool(np.all(np.diag(d) > _ZERO_CYCLE_TOL))


def _feasible_relaxed(
    intervals: dict[Pair, tuple[float, float]],
    scales: dict[Pair, float],
    active: Sequence[int],
) -> bool:
    """One-pass interval propagation conditioning only on lower-numbered arms.

    For every pair (k, k*) the reachable range of its statistic is bounded
    through each common lower-numbered arm; the pattern survives if every
    coded interval intersects the propagated range.
    """
    arms = sorted(active)
    for pair, (lo, hi) in intervals.items():
        s = scales[pair]
        z_max = math.inf
        z_min = -math.inf
        for kdot in arms:
            if kdot >= pair.k:
                break
            p_low = Pair(kdot, pair.k)
            p_high = Pair(kdot, pair.k_star)
            lo1, hi1 = intervals[p_high]
            lo2, hi2 = intervals[p_low]
            s1, s2 = scales[p_high], scales[p_low]
            hi_cand = (hi1 * s1 - lo2 * s2) / s if not (math.isinf(hi1) or math.isinf(lo2)) else math.inf
            lo_cand = (lo1 * s1 - hi2 * s2) / s if not (math.isinf(lo1) or math.isinf(hi2)) else -math.inf
            z_max = min(z_max, hi_cand)
            z_min = max(z_min, lo_cand)
        if not (z_min < hi and lo < z_max):
            return False
    return True


def _stage_alphabet(boundaries: BoundarySet, stage: int) -> list[Code]:
    """Live codes at a stage, excluding empty intervals."""
    u = boundaries.outer[stage - 1]
    us = boundaries.inner[stage - 1]
    if stage == boundaries.n_stages:
        candidates = [Code.A1, Code.A3, Code.A5]
    elif us == 0.0:
        candidates = [Code.A1, Code.A8, Code.A5]
    else:
        candidates = [Code.A1, Code.A2, Code.A3, Code.A4, Code.A5]
    out = []
    for c in candidates:
        lo, hi = code_interval(c, u, us)
        if lo < hi:
            out.append(c)
    return out


@dataclass(frozen=True)
class _StageOutcome:
    pattern: tuple[tuple[Pair, Code], ...]  # post-replacement codes, sorted by pair
    survivors: frozenset[int]
    stop: StopReason
    terminal: bool


def feasible_stage_patterns(
    layout: TrialLayout,
    stage: int,
    active: Iterable[int],
    boundaries: BoundarySet,
    feasibility: Feasibility = "exact",
) -> list[dict[Pair, Code]]:
    """All geometrically feasible raw code assignments for one analysis."""
    active = sorted(set(active))
    if len(active) < 2:
        raise ValueError("need at least 2 active arms")
    pairs = pairs_within(active)
    u = boundaries.outer[stage - 1]
    us = boundaries.inner[stage - 1]
    alphabet = _stage_alphabet(boundaries, stage)
    scales = {p: _score_scale(layout, p, stage) for p in pairs}
    check = _feasible_exact if feasibility == "exact" else _feasible_relaxed
    out = []
    for combo in itertools.product(alphabet, repeat=len(pairs)):
        codes = dict(zip(pairs, combo))
        intervals = {p: code_interval(c, u, us) for p, c in codes.items()}
        if check(intervals, scales, active):
            out.append(codes)
    return out


def _stage_outcomes(
    layout: TrialLayout,
    stage: int,
    active: frozenset[int],
    boundaries: BoundarySet,
    feasibility: Feasibility,
    honor_inner: bool,
) -> list[_StageOutcome]:
    """Deduplicated post-replacement patterns with their stage consequence."""
    final = stage == boundaries.n_stages
    seen: dict[tuple, _StageOutcome] = {}
    for codes in feasible_stage_patterns(layout, stage, active, boundaries, feasibility):
        transition = active_set_transition(active, codes, binding=honor_inner)
        dropped = transition.dropped
        post = dict(codes)
        if dropped:
            for pair, code in post.items():
                if code in (Code.A2, Code.A3, Code.A4, Code.A8) and (
                    pair.k in dropped or pair.k_star in dropped
                ):
                    post[pair] = Code.A7
        survivors = active - dropped
        terminal = (
            final
            or transition.stop_reason == StopReason.SIMILARITY_STOP
            or len(survivors) <= 1
        )
        key = tuple(sorted(post.items()))
        if key not in seen:
            seen[key] = _StageOutcome(
                pattern=key,
                survivors=frozenset(survivors),
                stop=transition.stop_reason,
                terminal=terminal,
            )
    return list(seen.values())


def _effective_boundaries(design: TrialDesign, honor_inner: bool) -> BoundarySet:
    """With inner rules ignored, interim similarity regions collapse to u* = 0."""
    if honor_inner:
        return design.boundaries
    inner = [0.0] * design.layout.n_stages
    inner[-1] = design.boundaries.inner[-1]
    return BoundarySet(design.boundaries.outer, tuple(inner))


def build_all_outcomes(
    design: TrialDesign,
    feasibility: Feasibility = "exact",
    honor_inner: bool = True,
    size_guard: int = 40,
) -> ConfigurationFamily:
    """Every terminal trial trajectory, exactly once (the Omega_E family).

    Built stage by stage over active arm sets; trajectories stopping early are
    padded with A6 codes.  ``honor_inner`` controls whether the similarity
    stop is applied (non-binding designs may ignore it).
    """
    layout = design.layout
    if layout.n_hypotheses * layout.n_stages > size_guard:
        raise EnumerationSizeError(
            f"enumeration guard: eta*J = {layout.n_hypotheses * layout.n_stages} "
            f"exceeds {size_guard}"
        )
    boundaries = _effective_boundaries(design, honor_inner)
    all_pairs = layout.pairs
    n_stages = layout.n_stages
    cache: dict[tuple[int, frozenset[int]], list[_StageOutcome]] = {}

    def outcomes_for(stage: int, active: frozenset[int]) -> list[_StageOutcome]:
        key = (stage, active)
        if key not in cache:
            cache[key] = _stage_outcomes(
                layout, stage, active, boundaries, feasibility, honor_inner=True
            )
        return cache[key]

    configs: list[OutcomeConfiguration] = []

    def extend(stage: int, active: frozenset[int], rows: dict[Pair, list[Code]]):
        for outcome in outcomes_for(stage, active):
            new_rows = {p: list(r) for p, r in rows.items()}
            stage_codes = dict(outcome.pattern)
            for pair in all_pairs:
                new_rows[pair].append(stage_codes.get(pair, Code.A6))
            if outcome.terminal:
                for pair in all_pairs:
                    new_rows[pair].extend([Code.A6] * (n_stages - stage))
                configs.append(
                    OutcomeConfiguration({p: tuple(r) for p, r in new_rows.items()})
                )
            else:
                extend(stage + 1, outcome.survivors, new_rows)

    extend(1, frozenset(range(1, layout.n_arms + 1)), {p: [] for p in all_pairs})
    configs.sort(key=lambda c: c.grid())
    return ConfigurationFamily(tuple(configs), kind="all_outcomes")


def terminal_profile(config: OutcomeConfiguration, layout: TrialLayout) -> TerminalProfile:
    """Replay a configuration through the decision rules.

    Returns the surviving arms, the stage the trial stopped at, and the last
    recruited stage per arm (the first all-A6 stage minus one, or the final
    stage if the arm was never masked).
    """
    n_stages = config.n_stages
    arms = list(range(1, layout.n_arms + 1))
    active = set(arms)
    last_stage = {k: None for k in arms}
    stopped = False
    stop_stage = n_stages
    for stage in range(1, n_stages + 1):
        live = pairs_within(active) if not stopped else []
        for pair in config.codes:
            if pair not in live and config.codes[pair][stage - 1] != Code.A6:
                raise ValueError(
                    f"inconsistent configuration: pair {pair} live at stage {stage}"
                )
        if stopped:
            continue
        codes = {p: config.codes[p][stage - 1] for p in live}
        if any(c == Code.A6 for c in codes.values()):
            raise ValueError("inconsistent configuration: A6 inside the active set")
        transition = active_set_transition(active, codes, binding=True)
        for k in transition.dropped:
            last_stage[k] = stage
        active -= transition.dropped
        if (
            transition.stop_reason == StopReason.SIMILARITY_STOP
            or len(active) <= 1
            or stage == n_stages
        ):
            stopped = True
            stop_stage = stage
    for k in active:
        last_stage[k] = stop_stage
    if any(v is None for v in last_stage.values()):
        raise ValueError("inconsistent configuration: arm neither dropped nor stopped")
    return TerminalProfile(
        survivors=frozenset(active), stop_stage=stop_stage, last_stage=last_stage
    )


def _never_dropped(config: OutcomeConfiguration, arm: int) -> bool:
    for pair, row in config.codes.items():
        for code in row:
            if code == Code.A1 and pair.k == arm:
                return False
            if code == Code.A5 and pair.k_star == arm:
                return False
    return True


def build_multi_relevant(
    design: TrialDesign,
    relevant_set: Iterable[int],
    feasibility: Feasibility = "exact",
    honor_inner: bool = True,
    all_outcomes: Optional[ConfigurationFamily] = None,
) -> ConfigurationFamily:
    """Outcomes in which exactly ``relevant_set`` survives the trial.

    Relevant arms are never dropped, every other arm is found inferior by the
    end, the trial never stops for similarity while a non-relevant arm
    remains, and a similarity stop happens only among the relevant arms.
    """
    relevant = frozenset(relevant_set)
    arms = set(range(1, design.layout.n_arms + 1))
    if not relevant or not relevant <= arms:
        raise ValueError("relevant_set must be a non-empty subset of the arms")
    if all_outcomes is None:
        all_outcomes = build_all_outcomes(design, feasibility, honor_inner)
    keep = []
    for config in all_outcomes.configs:
        profile = terminal_profile(config, design.layout)
        if profile.survivors != relevant:
            continue
        if not all(_never_dropped(config, k) for k in relevant):
            continue
        keep.append(config)
    kind = "lfc_power" if len(relevant) == 1 else "multi_relevant"
    return ConfigurationFamily(tuple(keep), kind=kind, relevant=relevant)


def build_lfc_power(
    design: TrialDesign,
    relevant_arm: int,
    feasibility: Feasibility = "exact",
    honor_inner: bool = True,
    all_outcomes: Optional[ConfigurationFamily] = None,
) -> ConfigurationFamily:
    """Outcomes in which ``relevant_arm`` alone survives (the Omega_p family)."""
    return build_multi_relevant(
        design, {relevant_arm}, feasibility, honor_inner, all_outcomes
    )
