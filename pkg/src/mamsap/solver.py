"""Boundary-scale and group-size solving.

A design is assembled from a boundary *family* (a parametric shape in one
scale parameter) plus a layout.  The scale is solved so the global-null FWER
hits alpha; the per-arm-per-stage group size is then the smallest integer
giving the target power under the least favourable configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from . import characteristics as ch
from .characteristics import _SOLVER_SE
from .model import BoundarySet, TrialDesign, TrialLayout

_SCALE_BRACKET = (0.1, 10.0)
_SCALE_XTOL = 5e-4


@dataclass(frozen=True)
class BoundaryFamily:
    """A one-parameter boundary shape u_j(C), u*_j(C) over information fractions.

    kind:
      * "double_triangular": u_j = C (t_j^{-1/2} + t_j^{1/2}),
        u*_j = max(0, C (3 sqrt(t_j) - 1/sqrt(t_j))); triangular continuation
        regions on the score scale for both the outer and the inner test.
      * "flat": u_j = C at every stage, inner test only at the final stage.
      * "outer_only": double-triangular outer boundaries with the inner test
        suppressed until the final stage (early stopping by drops only).
    """

    kind: str = "double_triangular"
    custom: Optional[Callable[[float, tuple[float, ...]], BoundarySet]] = None

    def boundaries(self, scale: float, fractions: tuple[float, ...]) -> BoundarySet:
        if self.custom is not None:
            return self.custom(scale, fractions)
        t = np.asarray(fractions)
        if self.kind == "double_triangular":
            outer = scale * (t**-0.5 + t**0.5)
            inner = np.maximum(0.0, scale * (3.0 * np.sqrt(t) - t**-0.5))
            inner[-1] = outer[-1]
        elif self.kind == "flat":
            outer = np.full(len(t), scale)
            inner = np.zeros(len(t))
            inner[-1] = outer[-1]
        elif self.kind == "outer_only":
            outer = scale * (t**-0.5 + t**0.5)
            inner = np.zeros(len(t))
            inner[-1] = outer[-1]
        else:
            raise ValueError(f"unknown boundary family {self.kind!r}")
        return BoundarySet(tuple(float(u) for u in outer), tuple(float(u) for u in inner))


def assemble_design(
    layout: TrialLayout, family: BoundaryFamily, scale: float, binding: bool
) -> TrialDesign:
    return TrialDesign(
        layout, family.boundaries(scale, layout.information_fractions), binding
    )


def solve_boundary_scale(
    layout: TrialLayout,
    family: BoundaryFamily,
    alpha: float,
    binding: bool,
    target_se: float = _SOLVER_SE,
    seed: int = 0,
    bracket: tuple[float, float] = _SCALE_BRACKET,
) -> float:
    """Scale C with global-null FWER(C) = alpha.

    FWER is monotone decreasing in C for these families; the root is found by
    Brent's method on a fixed-seed quadrature evaluation, so the objective is
    a deterministic smooth function of C.
    """

    def objective(scale: float) -> float:
        design = assemble_design(layout, family, scale, binding)
        return ch.fwer_global(design, target_se=target_se, seed=seed).value - alpha

    lo, hi = bracket
    f_lo, f_hi = objective(lo), objective(hi)
    if f_lo < 0 or f_hi > 0:
        raise ValueError(
            f"FWER bracket failed: f({lo})={f_lo + alpha:.4f}, f({hi})={f_hi + alpha:.4f}"
        )
    return float(brentq(objective, lo, hi, xtol=_SCALE_XTOL))


def solve_group_size(
    layout_for: Callable[[int], TrialLayout],
    family: BoundaryFamily,
    alpha: float,
    beta: float,
    theta_prime: float,
    binding: bool,
    target_se: float = _SOLVER_SE,
    seed: int = 0,
    n_hint: Optional[int] = None,
) -> tuple[int, float]:
    """Smallest per-arm-per-stage group size n with LFC power >= 1 - beta.

    ``layout_for(n)`` builds the layout at group size n.  The boundary scale
    depends on the layout only through its information fractions, so it is
    solved once per distinct fraction vector (once total for proportional
    layouts).  Returns (n, scale).
    """
    scale_cache: dict[tuple[float, ...], float] = {}

    def scale_for(layout: TrialLayout) -> float:
        key = layout.information_fractions
        if key not in scale_cache:
            scale_cache[key] = solve_boundary_scale(
                layout, family, alpha, binding, target_se, seed
            )
        return scale_cache[key]

    def power(n: int) -> float:
        layout = layout_for(n)
        design = assemble_design(layout, family, scale_for(layout), binding)
        return ch.power_lfc(
            design, theta_prime, target_se=max(target_se, 3e-4), seed=seed
        ).value

    target = 1.0 - beta
    # crude normal-theory starting point, then geometric bracketing
    n = n_hint or max(2, int(4 * ((1.96 + 1.28) / theta_prime) ** 2 / layout_for(1).n_stages))
    lo, hi = None, None
    while True:
        p = power(n)
        if p >= target:
            hi = n
            if lo is not None:
                break
            n = max(1, n // 2)
        else:
            lo = n
            if hi is not None:
                break
            n *= 2
        if n > 100000:
            raise ValueError("group size search diverged")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if power(mid) >= target:
            hi = mid
        else:
            lo = mid
    layout = layout_for(hi)
    return hi, scale_for(layout)


def design_trial(
    n_arms: int,
    n_stages: int,
    alpha: float,
    beta: float,
    theta_prime: float,
    binding: bool,
    family: Optional[BoundaryFamily] = None,
    target_se: float = _SOLVER_SE,
    seed: int = 0,
    n_hint: Optional[int] = None,
) -> TrialDesign:
    """Solve boundaries and group size for an equal-allocation trial."""
    family = family or BoundaryFamily()
    n, scale = solve_group_size(
        lambda g: TrialLayout.equal_allocation(n_arms, n_stages, g),
        family,
        alpha,
        beta,
        theta_prime,
        binding,
        target_se,
        seed,
        n_hint,
    )
    return assemble_design(
        TrialLayout.equal_allocation(n_arms, n_stages, n), family, scale, binding
    )


def calibrate_theta_prime(
    pairwise_n: int,
    n_stages: int,
    alpha: float,
    beta: float,
    binding: bool = True,
    family: Optional[BoundaryFamily] = None,
    target_se: float = _SOLVER_SE,
    seed: int = 0,
) -> float:
    """Standardized effect at which a two-arm trial needs exactly ``pairwise_n``.

    Root of power(theta; n = pairwise_n) = 1 - beta for the two-arm design at
    level alpha, so the returned effect makes ``pairwise_n`` the minimal
    per-arm-per-stage group size.
    """
    family = family or BoundaryFamily()
    layout = TrialLayout.equal_allocation(2, n_stages, pairwise_n)
    scale = solve_boundary_scale(layout, family, alpha, binding, target_se, seed)
    design = assemble_design(layout, family, scale, binding)

    def gap(theta: float) -> float:
        return (
            ch.power_lfc(design, theta, target_se=1e-4, seed=seed).value
            - (1.0 - beta)
        )

    lo, hi = 0.01, 1.0
    while gap(hi) < 0:
        hi *= 2
        if hi > 50:
            raise ValueError("calibration bracket failed")
    return float(brentq(gap, lo, hi, xtol=1e-4))


def pairwise_reference_scale(
    n_stages: int,
    alpha: float,
    family: Optional[BoundaryFamily] = None,
    target_se: float = _SOLVER_SE,
    seed: int = 0,
) -> float:
    """Boundary scale for a single two-arm comparison at two-sided level alpha."""
    family = family or BoundaryFamily()
    layout = TrialLayout.equal_allocation(2, n_stages, 10)
    return solve_boundary_scale(layout, family, alpha, binding=False,
                                target_se=target_se, seed=seed)
