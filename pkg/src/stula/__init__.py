"""Split tamed Langevin sampling with grid references, metrics and spectral tools."""

from ._accel import BACKEND, NUMBA_ENABLED
from .errors import (
    BoxTooSmallError,
    ConfigError,
    DivergenceError,
    InvalidInputError,
    InvalidParameterError,
    MissingMetadataError,
    NonFiniteError,
    NumericalFailureError,
    SchemaError,
    StepsizeError,
    StulaError,
)
from .isoperimetry import (
    check_C_assumptions,
    discretize_generator,
    find_critical_points,
    kramers_gap,
    log_gap_slope,
    morse_report,
    seed_grid,
    spectral_gap,
    spectrum,
)
from .metrics import (
    excess_risk,
    excess_risk_quadrature,
    histogram,
    kl_divergence,
    moment_summary,
    sliced_w2,
    tv_distance,
    w2_1d,
)
from .potentials import (
    CATALOG,
    PotentialSpec,
    evaluate,
    get_potential,
    hessian_at,
    regularize,
    verify_convexity_at_infinity,
    verify_dissipativity,
    verify_growth,
    verify_local_lipschitz,
)
from .reference import GridDensity, auto_box, grid_reference
from .samplers import (
    ChainConfig,
    InitialLaw,
    SampleBatch,
    check_drift_bounds,
    lambda_max,
    run_chains,
    second_moment_bound,
    step,
    tamed_drift,
)

__version__ = "0.1.0"
