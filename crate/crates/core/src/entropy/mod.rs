//! Divergences between a martingale and Brownian motion: pointwise
//! integrands, path estimators and deterministic-profile quadrature.

pub mod deterministic;
pub mod estimate;
pub mod integrand;
pub mod quadrature;

pub use deterministic::{
    deterministic_divergence, DeterministicVolatility, SingularityHint, VolatilityRegistry,
};
pub use estimate::{
    entropy_log_moment_estimate, estimate, p_difference_quotient, p_divergence_estimate,
    path_value, reciprocal_entropy_estimate, specific_entropy_estimate, DivergenceEstimate,
};
pub use integrand::{
    integrand_log_moment, integrand_reciprocal, integrand_specific, Flavor, Integrand,
    IntegrandRegistry, LogMoment, PQuotient, Power, Reciprocal, Specific, VarianceSample,
};
