"""Rectangle probabilities for (possibly singular) multivariate normals.

The estimator is a randomized quasi-Monte Carlo rule: a Kronecker lattice
(sqrt-prime generating vector) with independent uniform shifts, pushed
through the sequential conditional (separation-of-variables) transform on a
pivoted Cholesky factor.  Coordinates beyond the numerical rank are exact
linear functions of the sampled ones; their interval constraints enter the
integrand as acceptance indicators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .correlation import JointGaussianModel

_DEFAULT_SHIFTS = 12
_DEFAULT_START_POINTS = 512
_DEFAULT_MAX_POINTS = 1 << 17
_DEPENDENT_TOL = 1e-9

# sqrt of the first primes, fractional parts; generating vector of the lattice
_PRIMES = np.array([
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67,
    71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149,
    151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229,
    233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307, 311, 313,
    317, 331, 337, 347, 349, 353, 359, 367, 373, 379, 383, 389, 397, 401, 409,
], dtype=float)


class QuadratureError(RuntimeError):
    """Raised when the requested precision is unreachable within budget."""

    def __init__(self, message: str, estimate: "ProbabilityEstimate"):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class Rectangle:
    """Coordinate-wise integration bounds; -inf/+inf allowed."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("bound vectors must have equal length")
        for lo, hi in zip(self.lower, self.upper):
            if not lo < hi:
                raise ValueError(f"need lower < upper, got ({lo}, {hi})")

    @property
    def dims(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class ProbabilityEstimate:
    """A probability with its randomization standard error."""

    value: float
    std_error: float
    evaluations: int

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be non-negative")

    def agrees_with(self, other: float, n_sigma: float = 3.0, slack: float = 0.0) -> bool:
        return abs(self.value - other) <= n_sigma * self.std_error + slack


def pivoted_cholesky(corr: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray, int]:
    """Cholesky factor with diagonal pivoting, stopping at the numerical rank.

    Returns (perm, L, rank) with ``corr[perm][:, perm] ~= L @ L.T`` where L has
    ``rank`` nonzero columns.  Pivots are chosen by largest remaining
    conditional variance; the threshold is relative to the largest pivot.
    """
    d = corr.shape[0]
    a = corr.copy()
    L = np.zeros((d, d))
    perm = np.arange(d)
    rank = d
    for i in range(d):
        res = np.diag(a)[i:] - np.einsum("ij,ij->i", L[i:, :i], L[i:, :i])
        q = i + int(np.argmax(res))
        piv = res[q - i]
        if piv <= tol * max(1.0, L[0, 0] ** 2):
            rank = i
            break
        if q != i:
            perm[[i, q]] = perm[[q, i]]
            a[[i, q], :] = a[[q, i], :]
            a[:, [i, q]] = a[:, [q, i]]
            L[[i, q], :i] = L[[q, i], :i]
        L[i, i] = math.sqrt(piv)
        if i + 1 < d:
            L[i + 1 :, i] = (a[i + 1 :, i] - L[i + 1 :, :i] @ L[i, :i]) / L[i, i]
    return perm, L[:, :rank], rank


@dataclass(frozen=True)
class FactoredModel:
    """A model prepared for integration: permutation, factor and rank."""

    model: JointGaussianModel
    perm: np.ndarray
    chol: np.ndarray  # (dims, rank), rows in pivoted order
    rank: int

    @property
    def dims(self) -> int:
        return self.model.dims


def factor_model(model: JointGaussianModel, tol: float = 1e-10) -> FactoredModel:
    perm, chol, rank = pivoted_cholesky(model.corr, tol)
    return FactoredModel(model=model, perm=perm, chol=chol, rank=rank)


def _lattice_uniforms(dim_index: int, n_points: int, shifts: np.ndarray) -> np.ndarray:
    """Shifted Kronecker-lattice coordinates for one dimension: (S, N)."""
    if dim_index >= len(_PRIMES):
        raise ValueError("lattice generating vector exhausted; dimension too high")
    gen = math.sqrt(_PRIMES[dim_index])
    pts = np.arange(1, n_points + 1) * gen
    return np.mod(pts[None, :] + shifts[:, dim_index, None], 1.0)


def _estimate_batch(
    fm: FactoredModel,
    lower: np.ndarray,
    upper: np.ndarray,
    n_points: int,
    shifts: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """One randomized-lattice pass over a batch of rectangles.

    Args:
        lower/upper: (B, dims) bound arrays in model coordinate order.
        shifts: (S, rank) uniform shifts.

    Returns:
        (values, std_errors), each of shape (B,).
    """
    B = lower.shape[0]
    S = shifts.shape[0]
    L = fm.chol
    r = fm.rank
    mu = fm.model.drift[fm.perm]
    lo = lower[:, fm.perm] - mu  # center at zero drift
    hi = upper[:, fm.perm] - mu

    if r == 0:
        # fully deterministic model: probability is the indicator at the mean
        ok = np.all((lo <= _DEPENDENT_TOL) & (hi >= -_DEPENDENT_TOL), axis=1)
        return ok.astype(float), np.zeros(B)

    f = np.ones((B, S, n_points))
    y = np.empty((r, B, S, n_points))
    for t in range(r):
        s = np.einsum("j,jbsn->bsn", L[t, :t], y[:t]) if t else 0.0
        a_t = (lo[:, t, None, None] - s) / L[t, t]
        b_t = (hi[:, t, None, None] - s) / L[t, t]
        d_t = ndtr(a_t)
        e_t = ndtr(b_t)
        width = e_t - d_t
        f *= width
        w = _lattice_uniforms(t, n_points, shifts)  # (S, N)
        p = d_t + w[None, :, :] * width
        np.clip(p, 1e-15, 1.0 - 1e-15, out=p)
        y[t] = ndtri(p)

    # dependent coordinates: exact linear images of the sampled ones
    for i in range(r, fm.dims):
        z = np.einsum("j,jbsn->bsn", L[i, :r], y)
        inside = (z > lo[:, i, None, None] - _DEPENDENT_TOL) & (
            z < hi[:, i, None, None] + _DEPENDENT_TOL
        )
        f *= inside

    per_shift = f.mean(axis=2)  # (B, S)
    values = per_shift.mean(axis=1)
    ses = per_shift.std(axis=1, ddof=1) / math.sqrt(S)
    return values, ses


def rect_prob_batch(
    fm: FactoredModel,
    lower: np.ndarray,
    upper: np.ndarray,
    target_se: float = 1e-4,
    seed: int = 0,
    start_points: int = _DEFAULT_START_POINTS,
    max_points: int = _DEFAULT_MAX_POINTS,
    n_shifts: int = _DEFAULT_SHIFTS,
) -> list[ProbabilityEstimate]:
    """Estimate P(lower < Z < upper) for a batch of rectangles.

    All rectangles share the factored model; bounds are given per rectangle in
    model coordinate order.  Rectangles failing the per-rectangle target are
    re-run at larger lattice sizes until ``max_points``; the achieved error is
    always reported.
    """
    lower = np.atleast_2d(np.asarray(lower, dtype=float))
    upper = np.atleast_2d(np.asarray(upper, dtype=float))
    B = lower.shape[0]
    if lower.shape != (B, fm.dims) or upper.shape != (B, fm.dims):
        raise ValueError("bounds shape must be (batch, dims)")

    values = np.zeros(B)
    ses = np.zeros(B)
    evals = np.zeros(B, dtype=np.int64)
    pending = np.arange(B)
    n = start_points
    rng = np.random.default_rng(seed)
    while pending.size:
        shifts = rng.random((n_shifts, max(fm.rank, 1)))
        # bound the per-pass working-set size to keep memory flat
        chunk = max(1, int(4_000_000 // (n * n_shifts)))
        for lo_ in range(0, pending.size, chunk):
            idx = pending[lo_ : lo_ + chunk]
            v, s = _estimate_batch(fm, lower[idx], upper[idx], n, shifts)
            values[idx] = v
            ses[idx] = s
            evals[idx] += n * n_shifts
        pending = pending[ses[pending] > target_se]
        if n >= max_points:
            break
        n = min(n * 4, max_points)
    return [
        ProbabilityEstimate(float(np.clip(v, 0.0, 1.0)), float(s), int(c))
        for v, s, c in zip(values, ses, evals)
    ]


def reduce_rectangle(
    model: JointGaussianModel, rect: Rectangle
) -> tuple[Optional[JointGaussianModel], Rectangle]:
    """Drop coordinates with (-inf, inf) bounds; the probability is unchanged.

    Returns (None, empty rectangle) when every coordinate is unconstrained.
    """
    if rect.dims != model.dims:
        raise ValueError("rectangle does not match model dimension")
    keep = [
        i
        for i, (lo, hi) in enumerate(zip(rect.lower, rect.upper))
        if not (math.isinf(lo) and math.isinf(hi))
    ]
    if not keep:
        return None, Rectangle((), ())
    sub = model.restrict([model.coordinates[i] for i in keep])
    return sub, Rectangle(
        tuple(rect.lower[i] for i in keep), tuple(rect.upper[i] for i in keep)
    )


def rect_prob(
    model: JointGaussianModel,
    rect: Rectangle,
    target_se: float = 1e-4,
    seed: int = 0,
    max_points: int = _DEFAULT_MAX_POINTS,
    n_shifts: int = _DEFAULT_SHIFTS,
    strict: bool = False,
) -> ProbabilityEstimate:
    """Estimate a single rectangle probability under ``model``.

    Unconstrained coordinates are marginalized away first, and the
    one-dimensional case is evaluated by the exact normal CDF.  With
    ``strict`` the call raises :class:`QuadratureError` if the target
    standard error is not met within the evaluation budget.
    """
    sub, sub_rect = reduce_rectangle(model, rect)
    if sub is None:
        return ProbabilityEstimate(1.0, 0.0, 0)
    if sub.dims == 1:
        lo = (sub_rect.lower[0] - sub.drift[0])
        hi = (sub_rect.upper[0] - sub.drift[0])
        value = float(ndtr(hi) - ndtr(lo))
        return ProbabilityEstimate(max(value, 0.0), 0.0, 0)
    fm = factor_model(sub)
    est = rect_prob_batch(
        fm,
        np.array([sub_rect.lower]),
        np.array([sub_rect.upper]),
        target_se=target_se,
        seed=seed,
        max_points=max_points,
        n_shifts=n_shifts,
    )[0]
    if strict and est.std_error > target_se:
        raise QuadratureError(
            f"target std error {target_se:g} unreachable within "
            f"{est.evaluations} evaluations (achieved {est.std_error:g})",
            est,
        )
    return est
