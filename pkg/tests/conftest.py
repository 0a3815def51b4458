"""Shared fixtures: reference designs and cached heavyweight computations."""

import math

import pytest

from mamsap import (
    BoundarySet,
    TrialDesign,
    TrialLayout,
    build_all_outcomes,
)

THETA = math.log(1.5)  # clinically relevant standardized effect (odds ratio 1.5)

# Published reference boundaries for the 4-arm, 3-stage example trial.
BINDING_OUTER = (3.166, 2.798, 2.742)
BINDING_INNER = (0.0, 1.679, 2.742)
NONBINDING_OUTER = (3.181, 2.811, 2.755)
NONBINDING_INNER = (0.0, 1.687, 2.755)


@pytest.fixture(scope="session")
def binding_design() -> TrialDesign:
    layout = TrialLayout.equal_allocation(4, 3, 81)
    return TrialDesign(layout, BoundarySet(BINDING_OUTER, BINDING_INNER), binding=True)


@pytest.fixture(scope="session")
def nonbinding_design() -> TrialDesign:
    layout = TrialLayout.equal_allocation(4, 3, 82)
    return TrialDesign(
        layout, BoundarySet(NONBINDING_OUTER, NONBINDING_INNER), binding=False
    )


@pytest.fixture(scope="session")
def small_design() -> TrialDesign:
    """A cheap 3-arm, 2-stage design for exact/oracle comparisons."""
    layout = TrialLayout.equal_allocation(3, 2, 10)
    return TrialDesign(
        layout, BoundarySet((2.6, 2.2), (1.2, 2.2)), binding=True
    )


@pytest.fixture(scope="session")
def binding_outcomes(binding_design):
    return build_all_outcomes(binding_design)


@pytest.fixture(scope="session")
def nonbinding_outcomes(nonbinding_design):
    return build_all_outcomes(nonbinding_design, honor_inner=False)
