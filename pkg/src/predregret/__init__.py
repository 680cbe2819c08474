"""Predictive relative-entropy regret, Jeffreys and minimax priors, and the
asymptotic predictive loss of a prior relative to Jeffreys' prior."""

from .asymptotics import (
    LossSurface,
    a_functional,
    asymptotic_regret,
    expected_loss,
    invariance_check,
    loss_surface,
    mbar_scalar,
    predictive_information,
    predictive_loss,
)
from .errors import (
    ConfigurationError,
    DomainError,
    InvalidHClassError,
    NonConvergenceError,
    NumericalDegeneracyError,
    NumericalFailureError,
    PredRegretError,
    UnsupportedDimensionError,
    UnsupportedPairError,
)
from .exact import (
    ConvergenceTable,
    DiscretePrior,
    PredictiveKernel,
    RegretPoint,
    ScoringReport,
    c_n,
    clarke_barron_residual,
    convergence_table,
    identity_residuals,
    joint_regret,
    m_schedule,
    mc_regret,
    mixture_regret,
    posterior_predictive,
    posterior_predictive_regret,
    predictive_loss_finite,
    prior_predictive_regret,
    scoring_rule_check,
)
from .minimax import (
    EqualizerReport,
    MinimaxCertificate,
    UClassReport,
    equalizer_scan,
    information_limit_check,
    minimax_verify,
    u_class_diagnostic,
)
from .models import (
    MODEL_NAMES,
    ModelFamily,
    ReparamMap,
    alpha_tensors,
    arcsine_map,
    fisher_info,
    get_model,
    identity_map,
    log_density,
    log_scale_map,
    reparameterize,
)
from .priors import (
    CompactPriorSequence,
    HClassDensity,
    PriorSpec,
    beta_prior,
    exp_tilt,
    flat,
    h_class_alpha,
    jeffreys,
    mvn_power,
    normal_prior,
    parse_prior,
    power_sigma,
    rho_derivatives,
    tau_k,
    transform_prior,
)

__version__ = "0.1.0"

_MODULES = {"asymptotics", "cli", "errors", "exact", "minimax", "models", "numerics", "priors"}
__all__ = sorted(name for name in dir() if not name.startswith("_") and name not in _MODULES)
