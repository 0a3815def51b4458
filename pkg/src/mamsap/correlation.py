"""Joint Gaussian law of all pairwise statistics across stages.

Each statistic is the difference of cumulative arm means scaled by the square
root of its information, so the joint distribution of the eta*J statistics is
multivariate normal with a rank-deficient correlation matrix of rank
(K-1)*J for full layouts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import EffectConfiguration, Pair, TrialLayout, hypothesis_family

Coordinate = tuple[Pair, int]  # (pair, stage), stage 1-based


def information(layout: TrialLayout, pair: Pair, stage: int) -> float:
    """Information of a pairwise comparison: (1/n_k + 1/n_k*)^-1."""
    return 1.0 / (1.0 / layout.size(pair.k, stage) + 1.0 / layout.size(pair.k_star, stage))


def drift(layout: TrialLayout, effects: EffectConfiguration, pair: Pair, stage: int) -> float:
    """Mean of the pairwise statistic: effect difference times sqrt(information)."""
    return effects.difference(pair) * np.sqrt(information(layout, pair, stage))


def correlation(
    layout: TrialLayout,
    pair1: Pair,
    stage1: int,
    pair2: Pair,
    stage2: int,
) -> float:
    """Correlation between two pairwise statistics (possibly across stages).

    Derived from the covariance of the underlying cumulative arm means: two
    cumulative means of the same arm at stages j1 <= j2 have covariance
    1/n_{k,j2}; means of distinct arms are independent.
    """
    stage = max(stage1, stage2)

    def cov_mean(a: int, b: int) -> float:
        return 1.0 / layout.size(a, stage) if a == b else 0.0

    cov = (
        cov_mean(pair1.k, pair2.k)
        + cov_mean(pair1.k_star, pair2.k_star)
        - cov_mean(pair1.k, pair2.k_star)
        - cov_mean(pair1.k_star, pair2.k)
    )
    i1 = information(layout, pair1, stage1)
    i2 = information(layout, pair2, stage2)
    return float(np.sqrt(i1 * i2) * cov)


@dataclass(frozen=True)
class JointGaussianModel:
    """Drift vector and correlation matrix over a set of (pair, stage) coordinates."""

    coordinates: tuple[Coordinate, ...]
    drift: np.ndarray
    corr: np.ndarray

    @property
    def dims(self) -> int:
        return len(self.coordinates)

    def index(self, pair: Pair, stage: int) -> int:
        return self.coordinates.index((pair, stage))

    def rank(self, tol: float = 1e-10) -> int:
        """Numerical rank relative to the largest eigenvalue."""
        eig = np.linalg.eigvalsh(self.corr)
        return int(np.sum(eig > tol * eig.max()))

    def restrict(self, coordinates: Sequence[Coordinate]) -> "JointGaussianModel":
        idx = [self.coordinates.index(c) for c in coordinates]
        return JointGaussianModel(
            coordinates=tuple(coordinates),
            drift=self.drift[idx],
            corr=self.corr[np.ix_(idx, idx)],
        )


def all_coordinates(layout: TrialLayout) -> list[Coordinate]:
    """Canonical coordinate order: stage-major, pairs lexicographic within."""
    pairs = hypothesis_family(layout.n_arms)
    return [(p, j) for j in range(1, layout.n_stages + 1) for p in pairs]


def build_model(
    layout: TrialLayout,
    effects: Optional[EffectConfiguration] = None,
    restriction: Optional[Sequence[Coordinate]] = None,
) -> JointGaussianModel:
    """Joint Gaussian model over all coordinates or a restricted subset.

    Args:
        layout: the trial layout.
        effects: per-arm standardized effects; defaults to the global null.
        restriction: optional coordinate subset, in the order given.
    """
    if effects is None:
        effects = EffectConfiguration.global_null(layout.n_arms)
    if effects.n_arms != layout.n_arms:
        raise ValueError("effects length must match the number of arms")
    if restriction is not None and len(restriction) == 0:
        raise ValueError("restriction must not be empty")

    coords = list(restriction) if restriction is not None else all_coordinates(layout)
    d = len(coords)
    mu = np.array([drift(layout, effects, p, j) for p, j in coords])
    corr = np.empty((d, d))
    for i, (p1, j1) in enumerate(coords):
        corr[i, i] = 1.0
        for m in range(i + 1, d):
            p2, j2 = coords[m]
            corr[i, m] = corr[m, i] = correlation(layout, p1, j1, p2, j2)
    return JointGaussianModel(coordinates=tuple(coords), drift=mu, corr=corr)
