"""Design engine for multi-arm multi-stage all-pairwise clinical trials.

Every pair of arms is compared at every analysis; outer boundary crossings
drop inferior arms, inner ("similarity") boundaries can stop the whole trial
early.  The package solves boundary scales and group sizes, computes exact
operating characteristics by quasi-Monte Carlo integration over the joint
law of the pairwise statistics, certifies strong familywise error control,
evaluates competing designs, and cross-checks everything by simulation.
"""

from .characteristics import (
    OperatingReport,
    PartitionHypothesisSet,
    StrongControlCertificate,
    evaluate_design,
    expected_sample_size,
    fwer_binding_global,
    fwer_global,
    fwer_nonbinding_global,
    null_partition_family,
    outcome_breakdown,
    power_lfc,
    strong_control_certificate,
    two_block_partitions,
)
from .comparators import (
    COMPARATOR_KINDS,
    ComparatorSpec,
    TwoArmBlock,
    comparator_report,
    pairwise_targets,
    evaluate_two_arm_block,
    solve_two_arm_block,
)
from .config import ConfigError, RunConfig, load_config, load_design
from .correlation import JointGaussianModel, build_model, correlation, information
from .enumeration import (
    ConfigurationFamily,
    EnumerationSizeError,
    TerminalProfile,
    build_all_outcomes,
    build_lfc_power,
    build_multi_relevant,
    terminal_profile,
)
from .model import (
    BoundarySet,
    Code,
    EffectConfiguration,
    OutcomeConfiguration,
    Pair,
    StopReason,
    TrialDesign,
    TrialLayout,
    code_interval,
    hypothesis_family,
)
from .quadrature import (
    ProbabilityEstimate,
    QuadratureError,
    Rectangle,
    factor_model,
    rect_prob,
    rect_prob_batch,
)
from .simulator import SimulationResult, simulate, simulate_type_i_profile
from .solver import (
    BoundaryFamily,
    assemble_design,
    calibrate_theta_prime,
    design_trial,
    solve_boundary_scale,
    solve_group_size,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
