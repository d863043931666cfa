//! Diffusion models `dX = √Σ(t, X) dB`, selectable by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A driftless scalar diffusion, described by its instantaneous variance.
pub trait DiffusionModel: Send + Sync {
    fn name(&self) -> &str;

    /// Σ(t, x); may be negative outside the state space (the simulator
    /// truncates at zero).
    fn variance(&self, t: f64, x: f64) -> f64;

    /// Closed state interval whose endpoints absorb, if bounded.
    fn boundaries(&self) -> Option<(f64, f64)> {
        None
    }

    /// Latest time up to which the coefficient is defined.
    fn time_limit(&self) -> f64 {
        f64::INFINITY
    }
}

/// `dM = √(M(1−M)/(1−t)) dB`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScaledWrightFisher;

impl DiffusionModel for ScaledWrightFisher {
    fn name(&self) -> &str {
        "scaled-wf"
    }
    fn variance(&self, t: f64, x: f64) -> f64 {
        x * (1.0 - x) / (1.0 - t)
    }
    fn boundaries(&self) -> Option<(f64, f64)> {
        Some((0.0, 1.0))
    }
    fn time_limit(&self) -> f64 {
        1.0
    }
}

/// `dM = √(M(1−M)) dB`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardWrightFisher;

impl DiffusionModel for StandardWrightFisher {
    fn name(&self) -> &str {
        "standard-wf"
    }
    fn variance(&self, _t: f64, x: f64) -> f64 {
        x * (1.0 - x)
    }
    fn boundaries(&self) -> Option<(f64, f64)> {
        Some((0.0, 1.0))
    }
}

/// Time-homogeneous `dX = σ(X) dB` with σ bounded in `[sigma_min, sigma_max]`.
#[derive(Clone)]
pub struct StateVolatility {
    name: String,
    sigma: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    sigma_min: f64,
    sigma_max: f64,
}

impl std::fmt::Debug for StateVolatility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StateVolatility")
            .field("name", &self.name)
            .field("sigma_min", &self.sigma_min)
            .field("sigma_max", &self.sigma_max)
            .finish()
    }
}

impl StateVolatility {
    pub fn new<F>(name: &str, sigma: F, sigma_min: f64, sigma_max: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(sigma_min > 0.0) {
            return Err(Error::usage(format!(
                "sigma_min must be positive, got {sigma_min}"
            )));
        }
        if !(sigma_max >= sigma_min) || !sigma_max.is_finite() {
            return Err(Error::usage(
                "sigma_max must be finite and at least sigma_min",
            ));
        }
        Ok(Self {
            name: name.to_string(),
            sigma: Arc::new(sigma),
            sigma_min,
            sigma_max,
        })
    }

    /// σ ≡ c.
    pub fn constant(c: f64) -> Result<Self> {
        Self::new(&format!("const({c})"), move |_| c, c, c)
    }

    /// σ(x) = 1 + ½ sin x.
    pub fn sine() -> Self {
        Self::new("sine", |x: f64| 1.0 + 0.5 * x.sin(), 0.5, 1.5).expect("valid bounds")
    }

    pub fn sigma(&self, x: f64) -> f64 {
        (self.sigma)(x)
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Horizon after which ⟨X⟩ ≥ 1 on every path.
    pub fn min_horizon(&self) -> f64 {
        1.0 / (self.sigma_min * self.sigma_min)
    }
}

impl DiffusionModel for StateVolatility {
    fn name(&self) -> &str {
        &self.name
    }
    fn variance(&self, _t: f64, x: f64) -> f64 {
        let s = self.sigma(x);
        s * s
    }
}

type Builder = fn() -> Arc<dyn DiffusionModel>;

/// Name → model.
pub struct ModelRegistry {
    builders: BTreeMap<&'static str, Builder>,
}

impl ModelRegistry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, builder: Builder) {
        self.builders.insert(name, builder);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn DiffusionModel>> {
        self.builders.get(name).map(|b| b()).ok_or_else(|| {
            Error::usage(format!(
                "unknown model '{name}' (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.builders.keys().copied()
    }
}

impl Default for ModelRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("scaled-wf", || Arc::new(ScaledWrightFisher));
        r.register("standard-wf", || Arc::new(StandardWrightFisher));
        r.register("brownian", || {
            Arc::new(StateVolatility::constant(1.0).expect("valid"))
        });
        r.register("sine", || Arc::new(StateVolatility::sine()));
        r.register("const-sqrt-e", || {
            Arc::new(StateVolatility::constant(std::f64::consts::E.sqrt()).expect("valid"))
        });
        r
    }
}
