"""Estimators and exact risk for two-trait group testing."""

from ._core import (
    BudgetExceeded,
    ContractError,
    ConvergenceError,
    DegenerateStateError,
    DomainError,
    __version__,
    boundary_probability,
    burrows,
    covariance,
    exact_risk,
    first_order_bias,
    in_closure_region,
    log_likelihood,
    mle,
    monte_carlo_risk,
    p_from_theta,
    rmm,
    theta_from_p,
)

__all__ = [
    "BudgetExceeded",
    "ContractError",
    "ConvergenceError",
    "DegenerateStateError",
    "DomainError",
    "__version__",
    "boundary_probability",
    "burrows",
    "covariance",
    "estimate",
    "exact_risk",
    "first_order_bias",
    "in_closure_region",
    "log_likelihood",
    "mle",
    "monte_carlo_risk",
    "p_from_theta",
    "rmm",
    "theta_from_p",
]


def estimate(counts, k, estimator="mle"):
    """Point estimate (p10, p01, p11) from pool counts (x00, x10, x01, x11)."""
    if estimator == "mle":
        return mle(counts, k)["estimate"]
    if estimator == "rmm":
        return rmm(counts, k)
    if estimator == "burrows":
        return burrows(counts, k)
    raise ValueError(f"unknown estimator {estimator!r}; valid: mle, rmm, burrows")
