//! Pointwise divergence integrands and the registry that selects them by name.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Instantaneous quadratic-variation density Σ at one instant.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct VarianceSample(f64);

impl VarianceSample {
    pub fn new(sigma_sq: f64) -> Result<Self> {
        if sigma_sq.is_nan() || sigma_sq < 0.0 {
            return Err(Error::domain(format!(
                "instantaneous variance must be a nonnegative number, got {sigma_sq}"
            )));
        }
        Ok(Self(sigma_sq))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Which functional an estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Flavor {
    /// Σ log Σ + 1 − Σ
    Reciprocal,
    /// Σ − log Σ − 1
    Specific,
    /// Σ log Σ
    LogMoment,
    /// Σ^{p/2}
    PWasserstein { p: f64 },
    /// Σ^q
    Moment { q: f64 },
    /// (Σ^{p/2} − Σ)/(p − 2)
    PQuotient { p: f64 },
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flavor::Reciprocal => write!(f, "reciprocal"),
            Flavor::Specific => write!(f, "specific"),
            Flavor::LogMoment => write!(f, "log-moment"),
            Flavor::PWasserstein { p } => write!(f, "p-wasserstein(p={p})"),
            Flavor::Moment { q } => write!(f, "moment(q={q})"),
            Flavor::PQuotient { p } => write!(f, "p-quotient(p={p})"),
        }
    }
}

/// A pointwise functional of the instantaneous variance.
///
/// `eval` receives an already validated Σ ≥ 0. `eval_scaled` evaluates
/// `g(Σ) · s` from `ln Σ` and `ln s`; quadrature under a logarithmic change
/// of variables uses it so that neither Σ nor the Jacobian has to be formed
/// explicitly when one of them overflows.
pub trait Integrand: Send + Sync {
    fn name(&self) -> &'static str;

    fn flavor(&self) -> Flavor;

    fn eval(&self, sigma_sq: f64) -> f64;

    fn eval_scaled(&self, ln_sigma_sq: f64, ln_scale: f64) -> f64 {
        self.eval(ln_sigma_sq.exp()) * ln_scale.exp()
    }

    /// Factor applied to the mean of the path integrals (½ for the entropies).
    fn prefactor(&self) -> f64 {
        1.0
    }
}

/// Σ log Σ + 1 − Σ with 0·log 0 = 0.
pub fn integrand_reciprocal(s: VarianceSample) -> f64 {
    let x = s.get();
    if x == 0.0 {
        1.0
    } else {
        // Non-negativity is exact in real arithmetic; rounding near Σ = 1 can
        // produce -1e-17.
        (x * x.ln() + 1.0 - x).max(0.0)
    }
}

/// Σ − log Σ − 1, infinite at Σ = 0.
pub fn integrand_specific(s: VarianceSample) -> f64 {
    let x = s.get();
    if x == 0.0 {
        f64::INFINITY
    } else {
        (x - x.ln() - 1.0).max(0.0)
    }
}

/// Σ log Σ with 0·log 0 = 0.
pub fn integrand_log_moment(s: VarianceSample) -> f64 {
    let x = s.get();
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Reciprocal;

impl Integrand for Reciprocal {
    fn name(&self) -> &'static str {
        "reciprocal"
    }
    fn flavor(&self) -> Flavor {
        Flavor::Reciprocal
    }
    fn eval(&self, sigma_sq: f64) -> f64 {
        integrand_reciprocal(VarianceSample(sigma_sq))
    }
    fn eval_scaled(&self, l: f64, ls: f64) -> f64 {
        let s = ls.exp();
        if l == f64::NEG_INFINITY {
            return s;
        }
        let ms = (l + ls).exp();
        ms * l + s - ms
    }
    fn prefactor(&self) -> f64 {
        0.5
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Specific;

impl Integrand for Specific {
    fn name(&self) -> &'static str {
        "specific"
    }
    fn flavor(&self) -> Flavor {
        Flavor::Specific
    }
    fn eval(&self, sigma_sq: f64) -> f64 {
        integrand_specific(VarianceSample(sigma_sq))
    }
    fn eval_scaled(&self, l: f64, ls: f64) -> f64 {
        if l == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        let s = ls.exp();
        (l + ls).exp() - l * s - s
    }
    fn prefactor(&self) -> f64 {
        0.5
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LogMoment;

impl Integrand for LogMoment {
    fn name(&self) -> &'static str {
        "log-moment"
    }
    fn flavor(&self) -> Flavor {
        Flavor::LogMoment
    }
    fn eval(&self, sigma_sq: f64) -> f64 {
        integrand_log_moment(VarianceSample(sigma_sq))
    }
    fn eval_scaled(&self, l: f64, ls: f64) -> f64 {
        if l == f64::NEG_INFINITY {
            return 0.0;
        }
        (l + ls).exp() * l
    }
    fn prefactor(&self) -> f64 {
        0.5
    }
}

/// Σ^k; serves both the p-Wasserstein divergence (k = p/2) and plain moments.
#[derive(Debug, Clone, Copy)]
pub struct Power {
    exponent: f64,
    flavor: Flavor,
}

impl Power {
    pub fn p_wasserstein(p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::usage(format!("p must be positive, got {p}")));
        }
        Ok(Self {
            exponent: p / 2.0,
            flavor: Flavor::PWasserstein { p },
        })
    }

    pub fn moment(q: f64) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::usage(format!("q must be positive, got {q}")));
        }
        Ok(Self {
            exponent: q,
            flavor: Flavor::Moment { q },
        })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }
}

impl Integrand for Power {
    fn name(&self) -> &'static str {
        match self.flavor {
            Flavor::PWasserstein { .. } => "p-wasserstein",
            _ => "moment",
        }
    }
    fn flavor(&self) -> Flavor {
        self.flavor
    }
    fn eval(&self, sigma_sq: f64) -> f64 {
        sigma_sq.powf(self.exponent)
    }
    fn eval_scaled(&self, l: f64, ls: f64) -> f64 {
        if l == f64::NEG_INFINITY {
            return 0.0;
        }
        (self.exponent * l + ls).exp()
    }
}

/// (Σ^{p/2} − Σ)/(p − 2): the integrand of the p-difference quotient.
#[derive(Debug, Clone, Copy)]
pub struct PQuotient {
    p: f64,
}

impl PQuotient {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 2.0) || !p.is_finite() {
            return Err(Error::usage(format!(
                "difference quotient needs p > 2, got {p}"
            )));
        }
        Ok(Self { p })
    }
}

impl Integrand for PQuotient {
    fn name(&self) -> &'static str {
        "p-quotient"
    }
    fn flavor(&self) -> Flavor {
        Flavor::PQuotient { p: self.p }
    }
    fn eval(&self, sigma_sq: f64) -> f64 {
        if sigma_sq == 0.0 {
            return 0.0;
        }
        // Σ(Σ^{(p-2)/2} − 1)/(p−2) = Σ·expm1(½(p−2)lnΣ)/(p−2), stable as p → 2.
        let h = self.p - 2.0;
        sigma_sq * (0.5 * h * sigma_sq.ln()).exp_m1() / h
    }
}

type Builder = fn(Option<f64>) -> Result<Box<dyn Integrand>>;

/// Name → integrand constructor. The optional parameter is `p` for
/// `p-wasserstein`/`p-quotient` and `q` for `moment`.
pub struct IntegrandRegistry {
    builders: BTreeMap<&'static str, Builder>,
}

fn require(param: Option<f64>, name: &str) -> Result<f64> {
    param.ok_or_else(|| Error::usage(format!("integrand '{name}' needs a numeric parameter")))
}

impl IntegrandRegistry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, builder: Builder) {
        self.builders.insert(name, builder);
    }

    pub fn build(&self, name: &str, param: Option<f64>) -> Result<Box<dyn Integrand>> {
        let builder = self.builders.get(name).ok_or_else(|| {
            Error::usage(format!(
                "unknown integrand '{name}' (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        builder(param)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.builders.keys().copied()
    }
}

impl Default for IntegrandRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("reciprocal", |_| Ok(Box::new(Reciprocal)));
        r.register("specific", |_| Ok(Box::new(Specific)));
        r.register("log-moment", |_| Ok(Box::new(LogMoment)));
        r.register("p-wasserstein", |p| {
            Ok(Box::new(Power::p_wasserstein(require(
                p,
                "p-wasserstein",
            )?)?))
        });
        r.register("moment", |q| {
            Ok(Box::new(Power::moment(require(q, "moment")?)?))
        });
        r.register("p-quotient", |p| {
            Ok(Box::new(PQuotient::new(require(p, "p-quotient")?)?))
        });
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn vs(x: f64) -> VarianceSample {
        VarianceSample::new(x).unwrap()
    }

    #[test]
    fn reciprocal_examples() {
        assert_eq!(integrand_reciprocal(vs(1.0)), 0.0);
        assert_eq!(integrand_reciprocal(vs(0.0)), 1.0);
        assert!((integrand_reciprocal(vs(E)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn specific_examples() {
        assert_eq!(integrand_specific(vs(1.0)), 0.0);
        assert_eq!(integrand_specific(vs(0.0)), f64::INFINITY);
        assert!((integrand_specific(vs(E)) - (E - 2.0)).abs() < 1e-15);
        assert!((integrand_specific(vs(E)) - 0.7182818).abs() < 1e-7);
    }

    #[test]
    fn invalid_samples_rejected() {
        assert!(matches!(
            VarianceSample::new(-1e-300),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            VarianceSample::new(f64::NAN),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn registry_builds_by_name() {
        let reg = IntegrandRegistry::default();
        assert_eq!(
            reg.build("reciprocal", None).unwrap().flavor(),
            Flavor::Reciprocal
        );
        let p = reg.build("p-wasserstein", Some(3.0)).unwrap();
        assert_eq!(p.eval(4.0), 8.0);
        assert!(reg.build("p-wasserstein", None).is_err());
        assert!(reg.build("p-quotient", Some(2.0)).is_err());
        assert!(reg.build("hellinger", None).is_err());
        assert_eq!(reg.names().count(), 6);
    }

    #[test]
    fn scaled_evaluation_matches_direct() {
        let reg = IntegrandRegistry::default();
        for name in ["reciprocal", "specific", "log-moment", "p-wasserstein"] {
            let g = reg.build(name, Some(2.2)).unwrap();
            for &(s, w) in &[(0.3, 2.0), (1.7, 0.25), (40.0, 1e-3)] {
                let direct = g.eval(s) * w;
                let scaled = g.eval_scaled(f64::ln(s), f64::ln(w));
                assert!(
                    (direct - scaled).abs() <= 1e-12 * (1.0 + direct.abs()),
                    "{name}"
                );
            }
        }
    }

    #[test]
    fn quotient_matches_naive_formula() {
        let q = PQuotient::new(3.0).unwrap();
        assert!((q.eval(4.0) - 4.0).abs() < 1e-12);
        assert_eq!(q.eval(1.0), 0.0);
    }

    proptest! {
        #![proptest_config(crate::test_support::fixed(2000))]

        #[test]
        fn integrands_nonnegative_zero_only_at_one(s in 0.0f64..50.0) {
            let r = integrand_reciprocal(vs(s));
            let sp = integrand_specific(vs(s));
            prop_assert!(r >= 0.0 && sp >= 0.0);
            if (s - 1.0).abs() > 1e-3 {
                prop_assert!(r > 0.0 && sp > 0.0);
            }
        }

        #[test]
        fn convexity_lower_bound(s in 0.0f64..50.0, p in 2.0001f64..6.0) {
            let lhs = (s.powf(p / 2.0) - s) / (p - 2.0);
            let rhs = 0.5 * integrand_log_moment(vs(s));
            prop_assert!(lhs >= rhs - 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn quotient_nondecreasing_in_p(s in 0.0f64..50.0, p in 2.0001f64..5.0, dp in 0.0f64..1.0) {
            let a = PQuotient::new(p).unwrap().eval(s);
            let b = PQuotient::new(p + dp).unwrap().eval(s);
            prop_assert!(b >= a - 1e-10 * (1.0 + a.abs()));
        }
    }
}
