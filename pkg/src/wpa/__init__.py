"""Free-particle wave-packet evolution: Faddeeva-function closed forms,
contour quadrature, long-time decay exponents and dwell times."""

from .asymptotics import DensityTrace, ExponentEstimate, TimeGrid, build_trace, fit_exponent, log_derivative_curve
from .complexfn import erfc, w, w_derivative, w_series
from .dwell import (
    DIVERGENT,
    DwellReport,
    SpatialInterval,
    classical_dwell,
    dwell_report,
    dwell_time_momentum_form,
    dwell_time_time_integral,
    prob_in_interval,
    projector_matrix_element,
)
from .errors import (
    DegenerateInputError,
    DomainError,
    InsufficientSpanError,
    NonConvergenceError,
    NotApplicableError,
    PreconditionError,
    UnsupportedVariantError,
    WPAError,
)
from .propagator import (
    DEFAULT_CONFIG,
    TRACE_CONFIG,
    QuadratureConfig,
    asymptotic_prediction,
    evolve,
    evolve_closed_form,
    evolve_quadrature,
    log_derivative,
    propagator_kernel,
    steepest_descent_terms,
)
from .states import (
    ATOMIC_UNITS,
    Gaussian,
    LinearGaussian,
    LorentzianSquared,
    TaylorStub,
    TruncatedGaussian,
    UnitSystem,
    WavePacket,
    momentum_amplitude,
    normalization_constant,
    parse_state,
    position_wavefunction_initial,
    taylor_coefficients,
)

__version__ = "0.1.0"
