"""injlab: injective norms of Gaussian random tensors.

Analytic constants, multistart injective-norm estimation, block-hollow
random-matrix spectra, and Monte Carlo critical-point bounds, all driven
by keyed deterministic random streams.
"""

__version__ = "0.1.0"

from .constants import (  # noqa: F401
    ConstantsReport,
    Field,
    beta_k,
    constants_report,
    gamma_asymptotic_3term,
    gamma_envelope,
    lambert_w_minus1,
    log_prefactor,
    mu_p,
    mu_p_cdf,
    omega,
    sigma_p,
    solve_e0,
    solve_gamma,
    solve_subag,
)
from .kac_rice import (  # noqa: F401
    AuditReport,
    IntervalSet,
    KacRiceEstimate,
    LandscapePoint,
    covariance_audit,
    det_moment_mc,
    kr_bound,
    landscape_at_north_pole,
    laplace_rate,
)
from .rmt import (  # noqa: F401
    EnsembleKind,
    EnsembleMatrix,
    SpectrumSummary,
    eigenvalues,
    esd_w1,
    log_abs_det,
    sample_bhgoe,
    sample_tbhgoe,
    spectral_gap_ok,
    stieltjes_empirical,
    stieltjes_mp,
)
from .rng import normals, rng_stream, uniforms  # noqa: F401
from .tensors import (  # noqa: F401
    FactorTuple,
    GaussianTensor,
    InjNormEstimate,
    als_update,
    dist_sep,
    estimate_injective_norm,
    gauge_fix,
    gme,
    hs_norm,
    multilinear_value,
    sample_tensor,
)
