"""Stochastic integration for second-order processes via spectral diagonalization.

The covariance kernel E(X_s X_t) of a zero-mean process defines a
compact selfadjoint integral operator; its eigenpairs (lambda_k, phi_k)
turn stochastic integrals int f dX into deterministic Stieltjes
integrals against the eigenfunctions:

    E |int f dX|^2  =  sum_k lambda_k |int f dphi_k|^2.

The library discretizes the operator (Nystrom on a quadrature rule),
evaluates both sides of that identity, simulates paths from the
expansion X = sum_k sqrt(lambda_k) phi_k Z_k with seeded reproducible
streams, and checks that the eigenbasis beats every competing
orthonormal family on trace partial sums and entropy numbers.
"""

from .errors import (
    ArgumentError,
    BoundaryConditionError,
    ConfigError,
    ConvergenceError,
    DomainError,
    EmptySpectrumError,
    InsufficientSampleError,
    InvalidBasisError,
    InvalidKernelError,
    KLSpecError,
    NumericError,
    UndefinedEntropyError,
)
from .functions import (
    ComplexFunction,
    Constant,
    PiecewiseConstant,
    PiecewiseLinear,
    Polynomial,
    SampledFunction,
    Sine,
)
from .kernels import (
    BrownianMotion,
    FractionalBrownian,
    Interval,
    Kernel,
    OrnsteinUhlenbeck,
    Partition,
    PSDWarning,
    TabulatedKernel,
    eval_kernel,
    increment_covariance,
    kernel_matrix,
)
from .montecarlo import (
    BLOCK_SIZE,
    MomentEstimate,
    PathEnsemble,
    RandomSource,
    empirical_integral_variance,
    extract_coefficients,
    iter_path_blocks,
    partition_node_indices,
    simulate_paths,
    streamed_integral_variance,
    streamed_integral_variances,
    truncation_error,
)
from .optimality import (
    DominanceReport,
    ONBSpec,
    check_trace_dominance,
    diagonal_compressions,
    entropy_numbers,
    entropy_partial_sums,
    fourier_cosine_onb,
    haar_onb,
    kl_onb,
    legendre_onb,
    recursive_rayleigh,
)
from .quadrature import (
    QuadratureRule,
    gauss_legendre_rule,
    make_rule,
    rule_for_grid,
    trapezoid_rule,
)
from .spectral import (
    AnalyticSineForm,
    KLBasis,
    basis_from_json,
    basis_to_json,
    closed_form_brownian_basis,
    eigen_residuals,
    increment_cross_moment,
    mercer_reconstruct,
    nystrom_decompose,
    weighted_gram,
)
from .stieltjes import (
    AprioriBound,
    apriori_bound,
    riemann_stieltjes_sum,
    stieltjes_by_parts,
    stieltjes_integral,
    variance_discrete,
    variance_discrete_eigen,
    variance_spectral,
)

__version__ = "0.1.0"
