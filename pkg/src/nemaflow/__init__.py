"""Staggered-grid solver and diagnostics for a coupled velocity-director model.

The package simulates an incompressible flow carrying a three-component
director field inside a no-slip box, audits the discrete energy balance,
certifies structural assumptions on the bulk potential, and measures
trajectory-space distances used to study long-time attraction.
"""

from .errors import (
    BoundaryDataError,
    CflViolationError,
    ConfigError,
    InfeasibleError,
    LatticeError,
    NonFiniteError,
    ShapeError,
    SimulationError,
    SolverConvergenceError,
    StepAborted,
    WindowError,
)
from .fields import (
    NEUMANN,
    BoundarySpec,
    DirectorField,
    DirichletTrace,
    Grid,
    State,
    VelocityField,
    integrate_scalar,
    l2_norm,
    linf_norm,
    lp_norm,
    read_snapshot,
    velocity_inner,
    write_snapshot,
)
from .operators import (
    LaplacianSpec,
    director_grad_energy,
    director_laplacian,
    divergence,
    dual_norm_vdiv,
    grad_director,
    laplacian_spec,
    leray_project,
    scalar_lambda1,
    sobolev_norm,
    stokes_lambda1,
    velocity_grad_energy,
    velocity_laplacian,
)
from .potential import (
    AssumptionReport,
    CoercivityConstants,
    Potential,
    ball_sample,
    check_assumption,
    custom,
    double_well,
    estimate_prelim_constants,
    parse_potential,
    quadratic,
    quartic,
    verify_constants,
    zero_potential,
)
from .dynamics import (
    ForcingSignal,
    ModelParams,
    StepReport,
    cfl_limits,
    constant_forcing,
    periodic_forcing,
    run,
    step,
    tabulated_forcing,
    vortex_forcing,
    zero_forcing,
)
from .config import (
    RunConfig,
    build_grid,
    build_model,
    initial_state,
    parse_bc,
    parse_forcing,
    random_smooth_state,
)
from .trajectory import (
    TbNormSpec,
    Trajectory,
    attraction_curve,
    forcing_series,
    hausdorff_semidist,
    hull_sample,
    load_trajectory,
    rho_metric,
    rho_p_norm,
    rho_terms,
    save_archive,
    save_trajectory,
    section,
    tb_norm,
    translate,
    y_distance,
)
from .energy import (
    AUDIT_COLUMNS,
    EnergyAudit,
    EnergyBreakdown,
    EnvelopeCheck,
    audit_energy,
    boundary_rate,
    decay_rate,
    dissipation,
    dissipative_envelope,
    energy,
    fit_decay_rate,
    write_audit_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AUDIT_COLUMNS",
    "AssumptionReport",
    "BoundaryDataError",
    "BoundarySpec",
    "CflViolationError",
    "CoercivityConstants",
    "ConfigError",
    "DirectorField",
    "DirichletTrace",
    "EnergyAudit",
    "EnergyBreakdown",
    "EnvelopeCheck",
    "ForcingSignal",
    "Grid",
    "InfeasibleError",
    "LaplacianSpec",
    "LatticeError",
    "ModelParams",
    "NEUMANN",
    "NonFiniteError",
    "Potential",
    "RunConfig",
    "ShapeError",
    "SimulationError",
    "SolverConvergenceError",
    "State",
    "StepAborted",
    "StepReport",
    "TbNormSpec",
    "Trajectory",
    "VelocityField",
    "WindowError",
    "attraction_curve",
    "audit_energy",
    "ball_sample",
    "boundary_rate",
    "build_grid",
    "build_model",
    "cfl_limits",
    "check_assumption",
    "constant_forcing",
    "custom",
    "decay_rate",
    "director_grad_energy",
    "director_laplacian",
    "dissipation",
    "dissipative_envelope",
    "divergence",
    "double_well",
    "dual_norm_vdiv",
    "energy",
    "estimate_prelim_constants",
    "fit_decay_rate",
    "forcing_series",
    "grad_director",
    "hausdorff_semidist",
    "hull_sample",
    "initial_state",
    "integrate_scalar",
    "l2_norm",
    "laplacian_spec",
    "leray_project",
    "linf_norm",
    "load_trajectory",
    "lp_norm",
    "parse_bc",
    "parse_forcing",
    "parse_potential",
    "periodic_forcing",
    "quadratic",
    "quartic",
    "random_smooth_state",
    "read_snapshot",
    "rho_metric",
    "rho_p_norm",
    "rho_terms",
    "run",
    "save_archive",
    "save_trajectory",
    "scalar_lambda1",
    "section",
    "sobolev_norm",
    "stokes_lambda1",
    "step",
    "tabulated_forcing",
    "tb_norm",
    "translate",
    "velocity_grad_energy",
    "velocity_inner",
    "velocity_laplacian",
    "verify_constants",
    "vortex_forcing",
    "write_audit_csv",
    "write_snapshot",
    "y_distance",
    "zero_forcing",
    "zero_potential",
]
