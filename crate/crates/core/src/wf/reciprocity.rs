//! The reversed-roles identity for h(W‖Q) with Q the law of dX = σ(X) dB:
//!
//! ```text
//! ½E_W[∫₀¹ (1/σ(Y)² − log(1/σ(Y)²) − 1) dt] = ½E_Q[∫₀^τ (1 + Σ log Σ − Σ) ds],
//! ```
//!
//! where τ is the first time ⟨X⟩ reaches 1.

use rayon::prelude::*;
use serde::Serialize;

use super::{simulate_path, StateVolatility, StepPolicy};
use crate::entropy::{
    integrand_specific, DivergenceEstimate, Flavor, Integrand, Reciprocal, VarianceSample,
};
use crate::error::{Error, Result};
use crate::rng::{path_rng, sub_seed};
use crate::stats::CompensatedSum;

pub const DEFAULT_RECIPROCITY_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reciprocity {
    /// Brownian-side estimate of h(W‖Q).
    pub lhs: DivergenceEstimate,
    /// Q-side estimate with the time change τ = ⟨X⟩⁻¹(1).
    pub rhs: DivergenceEstimate,
}

impl Reciprocity {
    /// |lhs − rhs| in combined standard errors.
    pub fn z(&self) -> f64 {
        let d = (self.lhs.value - self.rhs.value).abs();
        let se = self.lhs.std_error.hypot(self.rhs.std_error);
        if se > 0.0 {
            d / se
        } else if d <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// [`reciprocity_check_with`] at the default step size.
pub fn reciprocity_check(
    vol: &StateVolatility,
    x0: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Reciprocity> {
    reciprocity_check_with(vol, x0, n_paths, seed, DEFAULT_RECIPROCITY_DT)
}

/// Estimate both sides of the identity with `n_paths` paths each; the two
/// sides use independent sub-seeds of `seed`.
pub fn reciprocity_check_with(
    vol: &StateVolatility,
    x0: f64,
    n_paths: usize,
    seed: u64,
    dt: f64,
) -> Result<Reciprocity> {
    if n_paths == 0 {
        return Err(Error::usage("n_paths must be positive"));
    }
    if !x0.is_finite() {
        return Err(Error::domain(format!("x0 must be finite, got {x0}")));
    }
    let brownian = StateVolatility::constant(1.0)?;
    let unit_grid = StepPolicy::fixed(dt).grid(0.0, 1.0)?;
    let lhs_seed = sub_seed(seed, 1);
    let lhs_values: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(lhs_seed, i as u64);
            let path = simulate_path(&brownian, x0, &unit_grid, &mut rng, 0.0, |_| false);
            let mut acc = CompensatedSum::new();
            for k in 0..path.n_steps() {
                let s = vol.sigma(path.states[k]).powi(2);
                let g = VarianceSample::new(1.0 / s).map_or(f64::NAN, integrand_specific);
                acc.add(g * (path.times[k + 1] - path.times[k]));
            }
            0.5 * acc.value()
        })
        .collect();

    // σ² ≥ σ_min² on every step, so ⟨X⟩ reaches 1 by 1/σ_min²; one extra
    // step absorbs rounding in the accumulated sum.
    let horizon = vol.min_horizon() + dt;
    let grid = StepPolicy::fixed(dt).grid(0.0, horizon)?;
    let rhs_seed = sub_seed(seed, 2);
    let rhs_values: Vec<Result<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(rhs_seed, i as u64);
            let path = simulate_path(vol, x0, &grid, &mut rng, 0.0, |v| {
                v.quadratic_variation >= 1.0
            });
            let tau = path.qv_hitting_time(1.0).ok_or_else(|| {
                Error::Simulation(format!("path {i} did not reach <X> = 1 by t = {horizon}"))
            })?;
            Ok(Reciprocal.prefactor() * path.integrate(tau, |s| Reciprocal.eval(s)))
        })
        .collect();
    let rhs_values: Vec<f64> = rhs_values.into_iter().collect::<Result<_>>()?;

    Ok(Reciprocity {
        lhs: DivergenceEstimate::from_values(&lhs_values, 0.0, Flavor::Specific)?,
        rhs: DivergenceEstimate::from_values(&rhs_values, 0.0, Flavor::Reciprocal)?,
    })
}
