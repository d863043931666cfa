//! Monte Carlo estimators over path ensembles.

use serde::Serialize;

use super::integrand::{Flavor, Integrand, LogMoment, PQuotient, Power, Reciprocal, Specific};
use crate::error::{Error, Result};
use crate::stats::MeanVar;
use crate::wf::{PathEnsemble, SamplePath};

/// A Monte Carlo point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceEstimate {
    pub value: f64,
    /// Sample standard deviation of the per-path values over √n_paths.
    pub std_error: f64,
    pub n_paths: usize,
    pub time_cutoff_eps: f64,
    pub flavor: Flavor,
}

impl DivergenceEstimate {
    /// Aggregate per-path values (already scaled) into an estimate. Any
    /// infinite value makes the whole estimate infinite.
    pub fn from_values(values: &[f64], eps: f64, flavor: Flavor) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::usage("cannot estimate from an empty ensemble"));
        }
        check_cutoff(eps)?;
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Numerical("path functional produced NaN".into()));
        }
        if let Some(&inf) = values.iter().find(|v| v.is_infinite()) {
            return Ok(Self {
                value: inf,
                std_error: f64::INFINITY,
                n_paths: values.len(),
                time_cutoff_eps: eps,
                flavor,
            });
        }
        let acc: MeanVar = values.iter().copied().collect();
        Ok(Self {
            value: acc.mean(),
            std_error: acc.std_error(),
            n_paths: values.len(),
            time_cutoff_eps: eps,
            flavor,
        })
    }

    /// |self − other| measured in combined standard errors.
    pub fn z_distance(&self, other: &DivergenceEstimate) -> f64 {
        (self.value - other.value).abs() / self.std_error.hypot(other.std_error)
    }
}

pub(crate) fn check_cutoff(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::usage(format!(
            "time cutoff eps must lie in [0,1), got {eps}"
        )));
    }
    Ok(())
}

/// Scaled time integral of `g(Σ)` along one path over `[t0, 1 − eps]`.
pub fn path_value(path: &SamplePath, integrand: &dyn Integrand, eps: f64) -> f64 {
    integrand.prefactor() * path.integrate(1.0 - eps, |s| integrand.eval(s))
}

/// Estimate of `prefactor · E[∫ g(Σ) dt]` for any registered integrand.
pub fn estimate(
    ens: &PathEnsemble,
    integrand: &dyn Integrand,
    eps: f64,
) -> Result<DivergenceEstimate> {
    if ens.is_empty() {
        return Err(Error::usage("cannot estimate from an empty ensemble"));
    }
    check_cutoff(eps)?;
    let values: Vec<f64> = ens
        .paths
        .iter()
        .map(|p| path_value(p, integrand, eps))
        .collect();
    DivergenceEstimate::from_values(&values, eps, integrand.flavor())
}

/// ½ E[∫(Σ log Σ + 1 − Σ) dt].
pub fn reciprocal_entropy_estimate(ens: &PathEnsemble, eps: f64) -> Result<DivergenceEstimate> {
    estimate(ens, &Reciprocal, eps)
}

/// ½ E[∫ Σ log Σ dt], the quantity the win-martingale value function equals.
pub fn entropy_log_moment_estimate(ens: &PathEnsemble, eps: f64) -> Result<DivergenceEstimate> {
    estimate(ens, &LogMoment, eps)
}

/// ½ E[∫(Σ − log Σ − 1) dt]; infinite once a path spends time at Σ = 0.
pub fn specific_entropy_estimate(ens: &PathEnsemble, eps: f64) -> Result<DivergenceEstimate> {
    estimate(ens, &Specific, eps)
}

/// E[∫ Σ^{p/2} dt].
pub fn p_divergence_estimate(ens: &PathEnsemble, p: f64, eps: f64) -> Result<DivergenceEstimate> {
    estimate(ens, &Power::p_wasserstein(p)?, eps)
}

/// (MT_p − MT_2)/(p − 2) along the ensemble. The difference is taken path
/// by path before averaging, so both terms share their random numbers.
pub fn p_difference_quotient(ens: &PathEnsemble, p: f64, eps: f64) -> Result<DivergenceEstimate> {
    estimate(ens, &PQuotient::new(p)?, eps)
}
