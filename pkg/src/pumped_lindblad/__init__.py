"""Effective Lindbladian of a pumped N-level impurity in a thermal
fermionic reservoir: construction from microscopic data, master-equation
integration, and Fourier-space (Floquet) spectral verification."""

from .errors import (
    AbscissaTooLowError,
    ClusterAmbiguityError,
    ConfigError,
    ContourHitsSpectrumError,
    DegenerateKernelError,
    DimensionMismatchError,
    DisagreementBetweenRulesError,
    EigensolverFailureError,
    IdempotencyFailureError,
    InvalidDensityMatrixError,
    InvalidFormFactorError,
    NearSingularPairError,
    NonHermitianError,
    NonOrthogonalFamilyError,
    NonPositiveKernelError,
    NotABohrFrequencyError,
    PositivityBreachError,
    ProjectionPairTooFarError,
    PumpedLindbladError,
    PumpSupportViolationError,
    QuadratureNonConvergenceError,
    ScalarHamiltonianError,
    StepSizeUnderflowError,
)
from .evolution import (
    GeneratorBundle,
    Trajectory,
    averaged_generator,
    evolve,
    generator_at,
    monodromy_interval,
    populations,
    propagator,
    stationary_state,
    trajectory_to_csv,
)
from .floquet import (
    BromwichResult,
    FloquetOperator,
    FloquetSpectrum,
    KatoBlock,
    MonodromyReport,
    RieszProjection,
    bromwich_expm,
    build_howland,
    eigenprojection_direct,
    floquet_spectrum,
    kato_block,
    monodromy,
    pair_transform,
    resonance_report,
    riesz_projection,
)
from .lindblad import (
    AssumptionReport,
    LindbladData,
    algebra_dimension,
    check_assumptions,
    choi_matrix,
    commutant_dimension,
    dissipator,
    jump_operators,
    lamb_shift,
    reservoir_lindbladian,
    resolvent_oracle,
)
from .operator_core import (
    AtomSpec,
    BohrIndex,
    PumpOperator,
    Superoperator,
    atomic_lindbladian,
    block_diag_projection,
    bohr_spectrum,
    decompose_atom,
    gibbs_state,
    hs_inner,
    multiplication_superops,
    spectral_projection,
    unvec,
    validate_pump,
    validate_state,
    vec,
)
from .reservoir import (
    AnalyticityReport,
    FormFactor,
    ReservoirSpec,
    check_strip_analyticity,
    glued_g,
    glued_g_continued,
    glued_g_sharp,
    pv_coefficient,
    rate_coefficient,
    spectral_density,
)

__version__ = "0.1.0"
