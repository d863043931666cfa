//! Divergences of deterministic volatility profiles, computed by quadrature.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::integrand::Integrand;
use super::quadrature::integrate;
use crate::error::{Error, Result};

const REL_TOL: f64 = 1e-8;
const ABS_TOL: f64 = 1e-13;
const MAX_INTERVALS: usize = 4000;

/// Behaviour of σ²(t) as t → 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularityHint {
    /// Bounded near zero; integrate in t directly.
    Regular,
    /// Blows up like a power of t times logarithms; integrate after the
    /// substitution t = exp(1 − 1/w), which maps (0, 1] onto (0, 1].
    Logarithmic,
}

/// A map t ↦ σ²(t) on (0, 1], given through ln σ² as a function of ln t so
/// that profiles can be evaluated arbitrarily close to t = 0.
#[derive(Clone)]
pub struct DeterministicVolatility {
    name: String,
    ln_sigma_sq: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    hint: SingularityHint,
}

impl std::fmt::Debug for DeterministicVolatility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DeterministicVolatility")
            .field("name", &self.name)
            .field("hint", &self.hint)
            .finish()
    }
}

impl DeterministicVolatility {
    pub fn from_log<F>(name: &str, ln_sigma_sq: F, hint: SingularityHint) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            ln_sigma_sq: Arc::new(ln_sigma_sq),
            hint,
        }
    }

    /// σ² ≡ c.
    pub fn constant(c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::domain(format!(
                "constant variance must be finite and nonnegative, got {c}"
            )));
        }
        let l = c.ln();
        Ok(Self::from_log(
            &format!("const({c})"),
            move |_| l,
            SingularityHint::Regular,
        ))
    }

    /// σ²(t) = 1/(t·ln(e/t)³): Σ log Σ is integrable near 0 but no power
    /// Σ^{1+ε} is.
    pub fn log_cubed_counterexample() -> Self {
        Self::from_log(
            "log-cubed",
            |ln_t: f64| -ln_t - 3.0 * (1.0 - ln_t).ln(),
            SingularityHint::Logarithmic,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn hint(&self) -> SingularityHint {
        self.hint
    }

    pub fn ln_sigma_sq_at_ln_t(&self, ln_t: f64) -> f64 {
        (self.ln_sigma_sq)(ln_t)
    }

    pub fn sigma_sq(&self, t: f64) -> f64 {
        self.ln_sigma_sq_at_ln_t(t.ln()).exp()
    }
}

/// ∫_δ^1 g(σ²(t)) dt for the chosen integrand (no ½ prefactor).
///
/// `delta = 0` integrates over all of (0, 1]; it is only meaningful for
/// profiles with a [`SingularityHint::Logarithmic`] hint. Divergent integrals
/// come back as `+∞`.
pub fn deterministic_divergence(
    vol: &DeterministicVolatility,
    integrand: &dyn Integrand,
    delta: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::usage(format!(
            "lower cutoff must lie in [0,1), got {delta}"
        )));
    }
    let bad = std::cell::Cell::new(None);
    let check = |ln_s: f64, at: f64| {
        if ln_s.is_nan() {
            bad.set(Some(at));
        }
        ln_s
    };
    let q = match vol.hint {
        SingularityHint::Regular => {
            if delta == 0.0 {
                return Err(Error::usage(
                    "delta = 0 needs a logarithmic singularity hint",
                ));
            }
            integrate(
                |t: f64| {
                    let ln_t = t.ln();
                    let l = check(vol.ln_sigma_sq_at_ln_t(ln_t), t);
                    integrand.eval_scaled(l, 0.0)
                },
                delta,
                1.0,
                REL_TOL,
                ABS_TOL,
                MAX_INTERVALS,
            )
        }
        SingularityHint::Logarithmic => {
            let w_min = if delta == 0.0 {
                0.0
            } else {
                1.0 / (1.0 - delta.ln())
            };
            integrate(
                |w: f64| {
                    let ln_t = 1.0 - 1.0 / w;
                    let l = check(vol.ln_sigma_sq_at_ln_t(ln_t), ln_t.exp());
                    // dt = t / w² dw
                    integrand.eval_scaled(l, ln_t - 2.0 * w.ln())
                },
                w_min,
                1.0,
                REL_TOL,
                ABS_TOL,
                MAX_INTERVALS,
            )
        }
    };
    if let Some(t) = bad.get() {
        return Err(Error::domain(format!(
            "volatility '{}' is not evaluable at t = {t}",
            vol.name
        )));
    }
    match q {
        Ok(q) if q.value.is_nan() => Err(Error::Numerical("quadrature produced NaN".into())),
        Ok(q) if q.value.is_infinite() => Ok(f64::INFINITY),
        Ok(q) => Ok(q.value),
        // Non-convergence with a blowing-up integrand is divergence.
        Err(Error::Numerical(_)) if delta == 0.0 => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

type Builder = fn() -> DeterministicVolatility;

/// Name → deterministic volatility profile.
pub struct VolatilityRegistry {
    builders: BTreeMap<&'static str, Builder>,
}

impl VolatilityRegistry {
    pub fn get(&self, name: &str) -> Result<DeterministicVolatility> {
        self.builders
            .get(name)
            .map(|b| b())
            .ok_or_else(|| Error::usage(format!("unknown volatility profile '{name}'")))
    }

    pub fn register(&mut self, name: &'static str, builder: Builder) {
        self.builders.insert(name, builder);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.builders.keys().copied()
    }
}

impl Default for VolatilityRegistry {
    fn default() -> Self {
        let mut r = Self {
            builders: BTreeMap::new(),
        };
        r.register("unit", || {
            DeterministicVolatility::constant(1.0).expect("valid")
        });
        r.register(
            "log-cubed",
            DeterministicVolatility::log_cubed_counterexample,
        );
        r
    }
}
