"""Interacting-particle dynamics, their linearization, and everything the
comparison between the two needs: equilibrium solvers, density evolution,
divergence metrics, decay envelopes, drift estimation, and the diffusive
long-time limit."""

from .errors import (
    BlowUpError,
    BracketError,
    ConfigError,
    DomainError,
    EstimationError,
    InsufficientSampleError,
    InvariantViolation,
    IterationError,
    MeanFieldError,
    UnsupportedDomainError,
)
from .grids import DensityGrid, Line, Torus, line_nodes, torus_nodes
from .potentials import Bistable, Cosine, ModelSpec, Quadratic, Tabulated, Zero
from .simulate import (
    EnsembleResult,
    GaussianInit,
    PointMass,
    SimConfig,
    TrajectoryRecord,
    UniformTorus,
    run_ensemble,
    simulate_coupled_pair,
)
from .equilibrium import (
    BesselSolution,
    EquilibriumResult,
    solve_bessel_selfconsistency,
    solve_kirkwood_monroe,
    uniqueness_guarantees,
)
from .fokker_planck import PairSeries, evolve, evolve_pair_and_track, step_fp
from .metrics import (
    DistanceReport,
    distance_report,
    kde_density,
    lp_distance,
    relative_entropy,
    relative_fisher,
    wasserstein2_1d,
    wasserstein2_empirical,
)
from .bounds import (
    BoundCurve,
    BoundParams,
    coupling_envelope,
    rho_lambda,
    rho_lambda_curve,
    sigma_xi,
    sigma_xi_curve,
    torus_constants,
)
from .inference import (
    EstimatePair,
    EstimateTrace,
    LikelihoodConfig,
    argmax_loglik,
    build_family_spec,
    closed_form_estimators,
    estimate_over_horizons,
    loglik,
    loglik_linearized,
    loglik_nonlinear,
)
from .homogenization import (
    CellSolution,
    CltReport,
    clt_diagnostic,
    effective_diffusion,
    rescaled_path,
    solve_cell_problem,
    wrap_density,
)

__version__ = "0.1.0"
