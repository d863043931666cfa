//! Simulated trajectories and ensembles.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::CompensatedSum;

/// Absolute slack when locating a time on a path's grid.
const TIME_SLACK: f64 = 1e-12;

/// One trajectory on its own (possibly non-uniform) time grid.
///
/// `step_variance[k]` is the Σ used on `[times[k], times[k+1])`, so it has one
/// entry fewer than `times`. Absorbed paths are stored up to the absorption
/// node followed by a single node at the horizon, with Σ = 0 on that last
/// segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub step_variance: Vec<f64>,
    pub absorption_time: Option<f64>,
}

impl SamplePath {
    /// A path that sits at `x` with zero variance on `[t0, end]`.
    pub fn constant(t0: f64, end: f64, x: f64, absorbed: bool) -> Self {
        if end > t0 {
            Self {
                times: vec![t0, end],
                states: vec![x, x],
                step_variance: vec![0.0],
                absorption_time: absorbed.then_some(t0),
            }
        } else {
            Self {
                times: vec![t0],
                states: vec![x],
                step_variance: vec![],
                absorption_time: absorbed.then_some(t0),
            }
        }
    }

    /// Path with prescribed piecewise-constant Σ; states are left at zero.
    pub fn from_variance(times: Vec<f64>, step_variance: Vec<f64>) -> Result<Self> {
        if times.len() != step_variance.len() + 1 {
            return Err(Error::usage("need exactly one variance per step"));
        }
        let states = vec![0.0; times.len()];
        let p = Self {
            times,
            states,
            step_variance,
            absorption_time: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("path has at least one node")
    }

    pub fn terminal_state(&self) -> f64 {
        *self.states.last().expect("path has at least one node")
    }

    pub fn n_steps(&self) -> usize {
        self.step_variance.len()
    }

    pub fn is_absorbed(&self) -> bool {
        self.absorption_time.is_some()
    }

    /// Index of the last node with `times[i] <= t` (within a small slack).
    pub fn node_at(&self, t: f64) -> Option<usize> {
        if t < self.t0() - TIME_SLACK || t > self.end_time() + TIME_SLACK {
            return None;
        }
        let i = self.times.partition_point(|&s| s <= t + TIME_SLACK);
        Some(i.saturating_sub(1))
    }

    /// State at time `t` (value at the last grid node not after `t`).
    pub fn state_at(&self, t: f64) -> Option<f64> {
        self.node_at(t).map(|i| self.states[i])
    }

    /// Σ in force at time `t`; zero at the final node.
    pub fn sigma_at(&self, t: f64) -> Option<f64> {
        self.node_at(t)
            .map(|i| self.step_variance.get(i).copied().unwrap_or(0.0))
    }

    /// Left-endpoint Riemann sum of `g(Σ)` over `[t0, upper]`, using the
    /// path's own steps and clipping the step that straddles `upper`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, upper: f64, g: F) -> f64 {
        let mut acc = CompensatedSum::new();
        for (k, &s) in self.step_variance.iter().enumerate() {
            let a = self.times[k];
            if a >= upper {
                break;
            }
            let b = self.times[k + 1].min(upper);
            let dt = b - a;
            if dt > 0.0 {
                acc.add(g(s) * dt);
            }
        }
        acc.value()
    }

    /// First time the accumulated ∫Σ dt reaches `level`, interpolated within
    /// the crossing step (Σ is constant on each step).
    pub fn qv_hitting_time(&self, level: f64) -> Option<f64> {
        let mut qv = 0.0;
        for (k, &s) in self.step_variance.iter().enumerate() {
            let dt = self.times[k + 1] - self.times[k];
            if s > 0.0 && qv + s * dt >= level {
                return Some(self.times[k] + ((level - qv) / s).max(0.0));
            }
            qv += s * dt;
        }
        None
    }

    /// Realised quadratic variation ∫Σ dt up to `upper`.
    pub fn quadratic_variation(&self, upper: f64) -> f64 {
        self.integrate(upper, |s| s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() || self.states.len() != self.times.len() {
            return Err(Error::Format(
                "times and states must be non-empty and of equal length".into(),
            ));
        }
        if self.step_variance.len() + 1 != self.times.len() {
            return Err(Error::Format(
                "step_variance must have one entry per step".into(),
            ));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Format("times must be strictly increasing".into()));
        }
        if self.step_variance.iter().any(|s| s.is_nan() || *s < 0.0) {
            return Err(Error::Format("step variance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A seeded collection of paths together with what produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEnsemble {
    pub paths: Vec<SamplePath>,
    pub master_seed: u64,
    pub scheme: String,
    pub x0: f64,
    pub t0: f64,
    /// Distance of the horizon from t = 1 (for win-martingale runs).
    pub eps: f64,
    pub horizon: f64,
}

impl PathEnsemble {
    /// Ensemble of prescribed paths (no simulation provenance).
    pub fn from_paths(paths: Vec<SamplePath>, scheme: &str) -> Self {
        let t0 = paths.first().map_or(0.0, |p| p.t0());
        let horizon = paths.first().map_or(0.0, |p| p.end_time());
        let x0 = paths.first().map_or(0.0, |p| p.states[0]);
        Self {
            paths,
            master_seed: 0,
            scheme: scheme.to_string(),
            x0,
            t0,
            eps: 1.0 - horizon,
            horizon,
        }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn absorbed_fraction(&self) -> f64 {
        if self.paths.is_empty() {
            return 0.0;
        }
        self.paths.iter().filter(|p| p.is_absorbed()).count() as f64 / self.paths.len() as f64
    }
}

/// Time-step rule `dt(t) = min(base_dt, c·(1 − t))` (adaptive) or `base_dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepPolicy {
    pub base_dt: f64,
    pub adaptive: bool,
    pub shrink: f64,
}

impl StepPolicy {
    pub const DEFAULT_SHRINK: f64 = 0.1;

    pub fn fixed(dt: f64) -> Self {
        Self {
            base_dt: dt,
            adaptive: false,
            shrink: Self::DEFAULT_SHRINK,
        }
    }

    pub fn adaptive(base_dt: f64) -> Self {
        Self {
            base_dt,
            adaptive: true,
            shrink: Self::DEFAULT_SHRINK,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_dt > 0.0) || !self.base_dt.is_finite() {
            return Err(Error::usage(format!(
                "base_dt must be positive, got {}",
                self.base_dt
            )));
        }
        if self.adaptive && !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::usage(format!(
                "shrink constant must lie in (0,1), got {}",
                self.shrink
            )));
        }
        Ok(())
    }

    pub fn dt_at(&self, t: f64) -> f64 {
        if self.adaptive {
            self.base_dt.min(self.shrink * (1.0 - t))
        } else {
            self.base_dt
        }
    }

    /// Grid from `t0` to `end` inclusive. Nodes of the uniform phase are
    /// computed as `t0 + k·base_dt` so that round checkpoints land on nodes.
    pub fn grid(&self, t0: f64, end: f64) -> Result<Vec<f64>> {
        self.validate()?;
        if !(end >= t0) {
            return Err(Error::usage(format!("grid end {end} precedes start {t0}")));
        }
        let mut times = vec![t0];
        if end == t0 {
            return Ok(times);
        }
        let mut k: u64 = 0;
        let mut t = t0;
        // Relative slack so that `end` itself is not followed by a sliver step.
        let slack = 1e-9 * self.base_dt;
        loop {
            let dt = self.dt_at(t);
            let uniform = !self.adaptive || dt == self.base_dt;
            let next = if uniform {
                t0 + (k + 1) as f64 * self.base_dt
            } else {
                t + dt
            };
            if next >= end - slack {
                times.push(end);
                break;
            }
            times.push(next);
            t = next;
            k += 1;
        }
        Ok(times)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrate_clips_at_upper() {
        let p = SamplePath::from_variance(vec![0.0, 0.5, 1.0], vec![2.0, 4.0]).unwrap();
        assert_eq!(p.integrate(1.0, |s| s), 3.0);
        assert_eq!(p.integrate(0.75, |s| s), 2.0);
        assert_eq!(p.integrate(0.25, |s| s), 0.5);
    }

    #[test]
    fn qv_hitting_time_interpolates() {
        let p = SamplePath::from_variance(vec![0.0, 0.5, 1.0], vec![2.0, 4.0]).unwrap();
        assert_eq!(p.qv_hitting_time(0.5), Some(0.25));
        assert_eq!(p.qv_hitting_time(2.0), Some(0.75));
        assert_eq!(p.qv_hitting_time(3.5), None);
    }

    #[test]
    fn lookup_on_grid() {
        let p = SamplePath::from_variance(vec![0.0, 0.5, 1.0], vec![2.0, 4.0]).unwrap();
        assert_eq!(p.sigma_at(0.5), Some(4.0));
        assert_eq!(p.sigma_at(0.49), Some(2.0));
        assert_eq!(p.sigma_at(1.0), Some(0.0));
        assert_eq!(p.sigma_at(1.5), None);
    }

    #[test]
    fn fixed_grid_hits_round_times() {
        let g = StepPolicy::fixed(1e-3).grid(0.0, 0.9).unwrap();
        assert_eq!(g.len(), 901);
        assert_eq!(g[250], 0.25);
        assert_eq!(*g.last().unwrap(), 0.9);
    }

    #[test]
    fn adaptive_grid_shrinks_towards_one() {
        let pol = StepPolicy::adaptive(1e-2);
        let g = pol.grid(0.0, 1.0 - 1e-4).unwrap();
        assert_eq!(*g.last().unwrap(), 1.0 - 1e-4);
        for w in g.windows(2) {
            let dt = w[1] - w[0];
            assert!(dt <= pol.dt_at(w[0]) * (1.0 + 1e-12) + 1e-15);
            assert!(dt > 0.0);
        }
        assert!(g.len() < 250);
    }

    #[test]
    fn bad_policy_rejected() {
        assert!(StepPolicy::fixed(0.0).grid(0.0, 1.0).is_err());
        assert!(StepPolicy::fixed(0.1).grid(0.5, 0.1).is_err());
    }
}
