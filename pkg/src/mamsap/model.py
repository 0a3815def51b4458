"""Core domain types and decision-rule semantics for all-pairwise trials.

A trial compares every pair of the K arms at up to J analyses.  At each
analysis the statistic for a pair falling outside the outer boundaries drops
the inferior arm; all remaining statistics falling inside the inner
boundaries stops the whole trial with a conclusion of similarity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence


class Pair(NamedTuple):
    """An ordered pairwise-comparison index (k, k_star) with k < k_star."""

    k: int
    k_star: int

    def involves(self, arm: int) -> bool:
        return arm == self.k or arm == self.k_star

    def other(self, arm: int) -> int:
        if arm == self.k:
            return self.k_star
        if arm == self.k_star:
            return self.k
        raise ValueError(f"arm {arm} not in pair {self}")


def hypothesis_family(n_arms: int) -> list[Pair]:
    """All pairwise null-hypothesis indices in lexicographic order.

    For ``n_arms = K`` there are K(K-1)/2 of them:
    (1,2), (1,3), ..., (K-1,K).
    """
    if n_arms < 2:
        raise ValueError("need at least 2 arms")
    return [Pair(k, ks) for k in range(1, n_arms) for ks in range(k + 1, n_arms + 1)]


def pairs_within(arms: Iterable[int]) -> list[Pair]:
    """Lexicographic pairs drawn from an arbitrary arm subset."""
    arms = sorted(set(arms))
    return [Pair(a, b) for i, a in enumerate(arms) for b in arms[i + 1 :]]


@dataclass(frozen=True)
class TrialLayout:
    """Arm/stage structure and cumulative per-arm group sizes.

    Attributes:
        n_arms: number of treatment arms K (>= 2).
        n_stages: maximum number of analyses J (>= 1).
        group_sizes: ``group_sizes[k-1][j-1]`` is the cumulative number of
            patients on arm k through stage j.  Strictly increasing in j.
    """

    n_arms: int
    n_stages: int
    group_sizes: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n_arms < 2:
            raise ValueError("need at least 2 arms")
        if self.n_stages < 1:
            raise ValueError("need at least 1 stage")
        if len(self.group_sizes) != self.n_arms:
            raise ValueError("group_sizes must have one row per arm")
        for row in self.group_sizes:
            if len(row) != self.n_stages:
                raise ValueError("group_sizes rows must have one entry per stage")
            if any(n <= 0 for n in row):
                raise ValueError("group sizes must be positive")
            if any(b <= a for a, b in zip(row, row[1:])):
                raise ValueError("cumulative group sizes must be strictly increasing")

    @classmethod
    def equal_allocation(cls, n_arms: int, n_stages: int, per_stage: int) -> "TrialLayout":
        """Layout with the same per-stage group size on every arm."""
        row = tuple(per_stage * j for j in range(1, n_stages + 1))
        return cls(n_arms, n_stages, tuple(row for _ in range(n_arms)))

    def size(self, arm: int, stage: int) -> int:
        """Cumulative patients on ``arm`` through ``stage`` (both 1-based)."""
        return self.group_sizes[arm - 1][stage - 1]

    def allocation_ratio(self, arm: int, stage: int) -> Fraction:
        """n_{k,j} relative to n_{1,1}."""
        return Fraction(self.size(arm, stage), self.size(1, 1))

    @property
    def n_hypotheses(self) -> int:
        return self.n_arms * (self.n_arms - 1) // 2

    @property
    def pairs(self) -> list[Pair]:
        return hypothesis_family(self.n_arms)

    @property
    def max_sample_size(self) -> int:
        return sum(self.size(k, self.n_stages) for k in range(1, self.n_arms + 1))

    @property
    def information_fractions(self) -> tuple[float, ...]:
        """Per-stage information fractions t_j = n_{1,j} / n_{1,J}."""
        final = self.size(1, self.n_stages)
        return tuple(self.size(1, j) / final for j in range(1, self.n_stages + 1))


@dataclass(frozen=True)
class BoundarySet:
    """Symmetric outer (drop) and inner (similarity) boundaries on the z scale.

    ``outer[j-1]`` is u_j, ``inner[j-1]`` is u*_j.  Stages with no similarity
    test carry u*_j = 0; the final stage closes with u*_J = u_J.
    """

    outer: tuple[float, ...]
    inner: tuple[float, ...]

    def __post_init__(self):
        if len(self.outer) != len(self.inner):
            raise ValueError("outer and inner must have equal length")
        if not self.outer:
            raise ValueError("need at least one stage")
        for j, (u, us) in enumerate(zip(self.outer, self.inner), start=1):
            if us < 0 or u < 0:
                raise ValueError(f"negative boundary at stage {j}")
            if us > u + 1e-12:
                raise ValueError(f"inner boundary exceeds outer at stage {j}")
        if not (
            math.isinf(self.outer[-1])
            and math.isinf(self.inner[-1])
            or abs(self.outer[-1] - self.inner[-1]) <= 1e-9
        ):
            raise ValueError("final stage must close: u*_J = u_J")

    @property
    def n_stages(self) -> int:
        return len(self.outer)

    def has_inner_test(self, stage: int) -> bool:
        return self.inner[stage - 1] > 0.0


@dataclass(frozen=True)
class EffectConfiguration:
    """Standardized treatment effects, one per arm (unit observation variance)."""

    psi: tuple[float, ...]

    @classmethod
    def global_null(cls, n_arms: int, base: float = 0.0) -> "EffectConfiguration":
        return cls(tuple(base for _ in range(n_arms)))

    @classmethod
    def lfc(cls, n_arms: int, relevant_arm: int, effect: float, base: float = 0.0) -> "EffectConfiguration":
        """Least favourable configuration: one arm ahead of the rest by ``effect``."""
        if not 1 <= relevant_arm <= n_arms:
            raise ValueError("relevant arm out of range")
        return cls(tuple(base + (effect if k == relevant_arm else 0.0) for k in range(1, n_arms + 1)))

    @classmethod
    def relevant_subset(cls, n_arms: int, relevant: Iterable[int], effect: float, base: float = 0.0) -> "EffectConfiguration":
        """Every arm in ``relevant`` ahead of the rest by ``effect``."""
        relevant = set(relevant)
        if not relevant <= set(range(1, n_arms + 1)):
            raise ValueError("relevant arms out of range")
        return cls(tuple(base + (effect if k in relevant else 0.0) for k in range(1, n_arms + 1)))

    @classmethod
    def theta_pattern(cls, n_arms: int, n_relevant: int, effect: float, base: float = 0.0) -> "EffectConfiguration":
        """The canonical patterns with the first ``n_relevant`` arms ahead."""
        return cls.relevant_subset(n_arms, range(1, n_relevant + 1), effect, base)

    @property
    def n_arms(self) -> int:
        return len(self.psi)

    def difference(self, pair: Pair) -> float:
        return self.psi[pair.k - 1] - self.psi[pair.k_star - 1]


@dataclass(frozen=True)
class TrialDesign:
    """A fully specified design: layout, boundaries and the binding flag."""

    layout: TrialLayout
    boundaries: BoundarySet
    binding: bool = True

    def __post_init__(self):
        if self.boundaries.n_stages != self.layout.n_stages:
            raise ValueError("boundary vectors must have one entry per stage")


class Code(IntEnum):
    """Interval classes a statistic can occupy at an analysis.

    A1..A5 are the five live regions between/outside the boundaries. A6 marks
    a statistic no longer tested, A7 a non-significant statistic of an arm
    dropped this stage, and A8 replaces A2/A3/A4 when u*_j = 0.
    """

    A1 = 1  # (-inf, -u_j): first arm of the pair dropped
    A2 = 2  # (-u_j, -u*_j)
    A3 = 3  # (-u*_j, u*_j): similar
    A4 = 4  # (u*_j, u_j)
    A5 = 5  # (u_j, inf): second arm of the pair dropped
    A6 = 6  # (-inf, inf): no longer tested
    A7 = 7  # (-u_j, u_j): arm dropped this stage, statistic not significant
    A8 = 8  # (-u_j, u_j): no inner test this stage


def code_interval(code: Code, outer: float, inner: float) -> tuple[float, float]:
    """The (lower, upper) z-scale interval a code stands for at one stage."""
    u, us = outer, inner
    table = {
        Code.A1: (-math.inf, -u),
        Code.A2: (-u, -us),
        Code.A3: (-us, us),
        Code.A4: (us, u),
        Code.A5: (u, math.inf),
        Code.A6: (-math.inf, math.inf),
        Code.A7: (-u, u),
        Code.A8: (-u, u),
    }
    return table[code]


class StopReason(IntEnum):
    CONTINUE = 0
    SIMILARITY_STOP = 1
    SINGLE_SURVIVOR = 2


class Transition(NamedTuple):
    dropped: frozenset[int]
    stop_reason: StopReason


def active_set_transition(
    active: Iterable[int],
    stage_codes: Mapping[Pair, Code],
    binding: bool = True,
) -> Transition:
    """Apply one analysis' decision rules to the currently active arms.

    An arm is dropped iff some statistic declares it significantly inferior
    (A1 for the first position of its pair, A5 for the second) to any arm
    active at the start of the stage.  The similarity test then applies to
    the arms remaining after the drops: if at least two remain and every
    statistic among them is similar (A3), a binding design stops the whole
    trial at this analysis.

    Args:
        active: arms active at the start of the stage (>= 2 of them).
        stage_codes: region code for every pair within ``active``.
        binding: whether the similarity stop is enforced.

    Returns:
        The dropped arm set and the stop reason for the stage.
    """
    active = frozenset(active)
    if len(active) < 2:
        raise ValueError("need at least 2 active arms")
    expected = set(pairs_within(active))
    if set(stage_codes) != expected:
        raise ValueError("stage codes must cover exactly the pairs within the active set")

    dropped = set()
    for pair, code in stage_codes.items():
        if code == Code.A1:
            dropped.add(pair.k)
        elif code == Code.A5:
            dropped.add(pair.k_star)
        elif code not in (Code.A2, Code.A3, Code.A4, Code.A7, Code.A8):
            raise ValueError(f"code {code!r} is not a live decision code")

    remaining = active - dropped
    if len(remaining) <= 1:
        return Transition(frozenset(dropped), StopReason.SINGLE_SURVIVOR)
    if binding and all(
        stage_codes[pair] == Code.A3 for pair in pairs_within(remaining)
    ):
        return Transition(frozenset(dropped), StopReason.SIMILARITY_STOP)
    return Transition(frozenset(dropped), StopReason.CONTINUE)


@dataclass(frozen=True)
class OutcomeConfiguration:
    """One terminal trial trajectory: a region code per pair per stage.

    ``codes[pair]`` is the length-J tuple of codes for that pair.  Once a
    code is A6 it stays A6 for all later stages.
    """

    codes: Mapping[Pair, tuple[Code, ...]] = field(hash=False)

    def __post_init__(self):
        object.__setattr__(self, "codes", dict(self.codes))
        stages = {len(v) for v in self.codes.values()}
        if len(stages) != 1:
            raise ValueError("all pairs must carry the same number of stages")
        for pair, row in self.codes.items():
            seen_a6 = False
            for code in row:
                if seen_a6 and code != Code.A6:
                    raise ValueError(f"A6 must be absorbing (pair {pair})")
                seen_a6 = seen_a6 or code == Code.A6

    @property
    def n_stages(self) -> int:
        return len(next(iter(self.codes.values())))

    def grid(self) -> tuple[tuple[Code, ...], ...]:
        """Codes as rows ordered by pair, for hashing/canonical ordering."""
        return tuple(self.codes[p] for p in sorted(self.codes))

    def __hash__(self):
        return hash(self.grid())

    def __eq__(self, other):
        if not isinstance(other, OutcomeConfiguration):
            return NotImplemented
        return sorted(self.codes) == sorted(other.codes) and self.grid() == other.grid()
