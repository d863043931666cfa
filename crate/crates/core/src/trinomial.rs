//! Relative entropy of i.i.d. trinomial martingales with increments
//! `{−σ̄√h, 0, +σ̄√h}` and its scaling limit.

use serde::Serialize;

use crate::entropy::{integrand_reciprocal, VarianceSample};
use crate::error::{Error, Result};
use crate::stats::CompensatedSum;

/// Trinomial tree with `N = 1/h` steps, up/down probability `σ²/(2σ̄²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrinomialSpec {
    h: f64,
    n_steps: u64,
    sigma_bar: f64,
    sigma: f64,
    sigma0: f64,
}

impl TrinomialSpec {
    pub fn new(h: f64, sigma_bar: f64, sigma: f64, sigma0: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::domain(format!("h must lie in (0, 1], got {h}")));
        }
        let n = (1.0 / h).round();
        if ((n * h) - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "1/h must be an integer, got h = {h}"
            )));
        }
        if !(sigma > 0.0 && sigma0 > 0.0) {
            return Err(Error::domain("sigma and sigma0 must be positive"));
        }
        if !(sigma_bar > sigma.max(sigma0)) || !sigma_bar.is_finite() {
            return Err(Error::domain(format!(
                "sigma_bar {sigma_bar} must exceed max(sigma, sigma0)"
            )));
        }
        Ok(Self {
            h,
            n_steps: n as u64,
            sigma_bar,
            sigma,
            sigma0,
        })
    }

    /// Spec with `h = 1`.
    pub fn unit(sigma_bar: f64, sigma: f64, sigma0: f64) -> Result<Self> {
        Self::new(1.0, sigma_bar, sigma, sigma0)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_steps(&self) -> u64 {
        self.n_steps
    }

    pub fn sigma_bar(&self) -> f64 {
        self.sigma_bar
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// Up (= down) probabilities under σ and σ₀.
    pub fn probabilities(&self) -> (f64, f64) {
        let s2 = self.sigma_bar * self.sigma_bar;
        (
            self.sigma * self.sigma / (2.0 * s2),
            self.sigma0 * self.sigma0 / (2.0 * s2),
        )
    }
}

/// `a log(a/b)` with `0 log(0/b) = 0` and `a log(a/0) = +∞`.
fn kl_term(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a * (a / b).ln()
    }
}

/// KL divergence of the one-step law under σ from the one under σ₀.
pub fn one_step_kl(spec: &TrinomialSpec) -> f64 {
    let (p, p0) = spec.probabilities();
    2.0 * kl_term(p, p0) + kl_term(1.0 - 2.0 * p, 1.0 - 2.0 * p0)
}

/// `(σ̄√h)² · N · KL = σ̄² · KL`, independent of h.
pub fn scaled_path_entropy(spec: &TrinomialSpec) -> f64 {
    spec.sigma_bar * spec.sigma_bar * spec.h * spec.n_steps as f64 * one_step_kl(spec)
}

/// The same quantity by summing the per-step KL over all N steps.
pub fn scaled_path_entropy_summed(spec: &TrinomialSpec) -> f64 {
    let kl = one_step_kl(spec);
    let total: CompensatedSum = (0..spec.n_steps).map(|_| kl).collect();
    spec.sigma_bar * spec.sigma_bar * spec.h * total.value()
}

/// `σ² log(σ²/σ₀²) + (σ̄² − σ²) log((σ̄² − σ²)/(σ̄² − σ₀²))`.
pub fn scaled_path_entropy_closed_form(spec: &TrinomialSpec) -> f64 {
    let (s2, z2, b2) = (
        spec.sigma.powi(2),
        spec.sigma0.powi(2),
        spec.sigma_bar.powi(2),
    );
    s2 * (s2 / z2).ln() + (b2 - s2) * ((b2 - s2) / (b2 - z2)).ln()
}

/// Distance from the σ₀ = 1 trinomial entropy to its limit σ² log σ² − σ² + 1.
pub fn scaling_limit_gap(sigma: f64, sigma_bar: f64) -> Result<f64> {
    if !(sigma_bar > 1.0) {
        return Err(Error::domain(format!(
            "sigma_bar must exceed 1, got {sigma_bar}"
        )));
    }
    let spec = TrinomialSpec::unit(sigma_bar, sigma, 1.0)?;
    Ok(
        (scaled_path_entropy(&spec) - integrand_reciprocal(VarianceSample::new(sigma * sigma)?))
            .abs(),
    )
}

/// `Σ (r log r − r + 1) · p` over partition cells given densities `r = dq/dp`
/// and cell masses `p`.
pub fn extended_entropy(ratio: &[f64], mass: &[f64]) -> Result<f64> {
    if ratio.len() != mass.len() {
        return Err(Error::usage("ratio and mass must have equal length"));
    }
    if let Some(r) = ratio.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::domain(format!(
            "density must be nonnegative, got {r}"
        )));
    }
    if let Some(m) = mass.iter().find(|m| !(**m >= 0.0)) {
        return Err(Error::domain(format!(
            "cell mass must be nonnegative, got {m}"
        )));
    }
    let mut total = CompensatedSum::new();
    for (&r, &m) in ratio.iter().zip(mass) {
        total.add(integrand_reciprocal(VarianceSample::new(r)?) * m);
    }
    Ok(total.value())
}
