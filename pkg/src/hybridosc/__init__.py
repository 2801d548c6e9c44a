"""Gaussian-ensemble dynamics of a harmonically coupled classical-quantum pair.

The configuration-space ensemble is parameterized by an inverse
covariance K, a phase curvature L and means (alpha, beta); these evolve
under a closed matrix ODE system with a sector projector selecting which
coordinate carries the quantum momentum floor.  The package provides the
ODE engine, all derived observables, independent oracles (analytic
quantum evolution, symplectic classical moment propagation, a split-step
grid solver of the underlying nonlinear wave equation), and a CLI that
reproduces the reference scenarios as data files.
"""

from .core import (
    GaussianEnsembleState,
    MeanMotionConstants,
    ModelParams,
    SectorKind,
    SymMat2,
    build_C,
    build_E,
    build_U,
)
from .dynamics import (
    IntegratorConfig,
    Trajectory,
    analytic_mean,
    default_output_times,
    fit_mean_constants,
    integrate,
    rhs_K,
    rhs_L,
    rhs_mean,
)
from .errors import (
    BoundaryLeak,
    ConfigParse,
    GridTooSmall,
    HybridOscError,
    NormDrift,
    PhaseUnwrapFailure,
    PositiveDefinitenessLost,
    PreconditionViolated,
    SingularMatrix,
    StepSizeUnderflow,
)
from .observables import (
    EllipseSpec,
    EnergyReport,
    ProductMoments,
    cm_coupling_energy,
    cm_transform,
    energies,
    error_ellipse,
    momentum_covariance,
    position_covariance,
    product_moments,
    sample_record,
    transform_covariance,
)
from .oracles import (
    ConsistencyReport,
    PhaseSpaceMoments,
    classical_flow,
    classical_moment_propagate,
    hybrid_consistency_check,
    moments_from_state,
    quantum_analytic_covariance,
)
from .pde import (
    GridMoments,
    GridSpec,
    WaveField,
    dump_density,
    extract_moments,
    init_wavefield,
    load_density,
    propagate_pde,
)
from .scenarios import Scenario, builtin_scenarios, get_scenario, load_scenario, parse_scenario

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
