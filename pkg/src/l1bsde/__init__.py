"""Exact lattice laboratory for backward equations under drift-kernel uncertainty.

Everything runs on a full binary tree (or its regime-labelled extension), so
the inequalities and representation properties the solvers are checked against
hold exactly, up to stated float tolerances.
"""

from .lattice import (
    CapExceededError,
    DriftControl,
    PathLattice,
    TerminalClaim,
    TiltedMeasure,
    TimeGrid,
    VolatilityRegime,
    build_lattice,
    claim_from_spec,
    constant_control,
    paste_controls,
    tilt,
)
from .nonlinexp import (
    SupExpectationResult,
    TailReport,
    brute_force_sup_expectation,
    check_uniform_integrability,
    sup_expectation,
    tail_functional,
)
from .norms import (
    NodeProcess,
    NormReport,
    d_norm,
    doob_inequality_check,
    h_beta_norm,
    norm_report,
    running_sup_bound_check,
    s_beta_norm,
)
from .bsde import (
    BsdeSolution,
    Driver,
    TruncationLevel,
    apriori_estimate_check,
    comparison_check,
    solve_bsde,
    stability_check,
    tower_property_check,
    truncation_scheme,
)
from .rbsde import (
    ObstaclePath,
    RbsdeSolution,
    obstacle_truncation_scheme,
    rbsde_comparison_check,
    rbsde_stability_check,
    snell_oracle,
    solve_rbsde,
    zk_estimate_check,
)
from .twobsde import (
    JointLattice,
    TwoBsdeSolution,
    UncertaintySet,
    check_minimality,
    comparison_2bsde,
    dpp_check,
    representation_check,
    solve_2bsde,
    supersolution_check,
    v_integrability_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
