//! Euler–Maruyama simulation with full truncation, clamping and absorption.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::model::{DiffusionModel, ScaledWrightFisher, StandardWrightFisher, StateVolatility};
use super::path::{PathEnsemble, SamplePath, StepPolicy};
use crate::error::{Error, Result};
use crate::rng::{path_rng, PathRng};

/// States this close to an absorbing boundary are snapped onto it.
pub const DEFAULT_ABSORB_TOL: f64 = 1e-6;

/// Parameters of a scaled Wright–Fisher run on `[t0, 1 − eps]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WfRun {
    pub x0: f64,
    pub t0: f64,
    pub eps: f64,
    pub policy: StepPolicy,
    pub n_paths: usize,
    pub seed: u64,
    pub absorb_tol: f64,
}

impl WfRun {
    pub fn new(x0: f64, t0: f64, eps: f64, policy: StepPolicy, n_paths: usize, seed: u64) -> Self {
        Self {
            x0,
            t0,
            eps,
            policy,
            n_paths,
            seed,
            absorb_tol: DEFAULT_ABSORB_TOL,
        }
    }

    pub fn horizon(&self) -> f64 {
        1.0 - self.eps
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_state(self.x0)?;
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::domain(format!(
                "eps must lie in (0,1), got {}",
                self.eps
            )));
        }
        if !(self.t0 >= 0.0 && self.t0 < self.horizon()) {
            return Err(Error::domain(format!(
                "t0 must lie in [0, 1 - eps), got t0 = {} with eps = {}",
                self.t0, self.eps
            )));
        }
        if !(self.absorb_tol >= 0.0 && self.absorb_tol < 0.5) {
            return Err(Error::usage("absorb_tol must lie in [0, 0.5)"));
        }
        self.policy.validate()
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        self.policy.grid(self.t0, self.horizon())
    }
}

fn check_unit_state(x0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(Error::domain(format!(
            "initial state must lie in [0,1], got {x0}"
        )));
    }
    Ok(())
}

/// What the simulator sees after each step; returning `true` ends the path.
pub struct StepView {
    pub time: f64,
    pub state: f64,
    pub quadratic_variation: f64,
}

fn snap(x: f64, lo: f64, hi: f64, tol: f64) -> (f64, bool) {
    let x = x.clamp(lo, hi);
    if x - lo <= tol {
        (lo, true)
    } else if hi - x <= tol {
        (hi, true)
    } else {
        (x, false)
    }
}

/// Simulate one path of `model` on `grid`.
pub fn simulate_path<S>(
    model: &dyn DiffusionModel,
    x0: f64,
    grid: &[f64],
    rng: &mut PathRng,
    absorb_tol: f64,
    mut stop: S,
) -> SamplePath
where
    S: FnMut(&StepView) -> bool,
{
    let t0 = grid[0];
    let end = *grid.last().expect("non-empty grid");
    let bounds = model.boundaries();

    let mut x = x0;
    if let Some((lo, hi)) = bounds {
        let (xs, absorbed) = snap(x0, lo, hi, absorb_tol);
        if absorbed {
            return SamplePath::constant(t0, end, xs, true);
        }
        x = xs;
    }

    let mut times = Vec::with_capacity(grid.len());
    let mut states = Vec::with_capacity(grid.len());
    let mut sig = Vec::with_capacity(grid.len());
    times.push(t0);
    states.push(x);
    let mut qv = 0.0;
    let mut absorption_time = None;

    for k in 0..grid.len() - 1 {
        let t = grid[k];
        let dt = grid[k + 1] - t;
        let s = model.variance(t, x).max(0.0);
        let z: f64 = StandardNormal.sample(rng);
        let mut next = x + (s * dt).sqrt() * z;
        let mut absorbed = false;
        if let Some((lo, hi)) = bounds {
            (next, absorbed) = snap(next, lo, hi, absorb_tol);
        }
        qv += s * dt;
        sig.push(s);
        times.push(grid[k + 1]);
        states.push(next);
        x = next;
        if absorbed {
            absorption_time = Some(grid[k + 1]);
            if grid[k + 1] < end {
                sig.push(0.0);
                times.push(end);
                states.push(next);
            }
            break;
        }
        let view = StepView {
            time: grid[k + 1],
            state: x,
            quadratic_variation: qv,
        };
        if stop(&view) {
            break;
        }
    }

    SamplePath {
        times,
        states,
        step_variance: sig,
        absorption_time,
    }
}

/// Simulate `n_paths` paths in parallel and map each one through `f` as soon
/// as it is complete. Output order follows the path index.
pub fn map_paths<T, F>(
    model: &dyn DiffusionModel,
    x0: f64,
    grid: &[f64],
    n_paths: usize,
    seed: u64,
    absorb_tol: f64,
    f: F,
) -> Vec<T>
where
    T: Send,
    F: Fn(SamplePath) -> T + Sync + Send,
{
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i as u64);
            f(simulate_path(model, x0, grid, &mut rng, absorb_tol, |_| {
                false
            }))
        })
        .collect()
}

fn ensemble(
    model: &dyn DiffusionModel,
    x0: f64,
    grid: &[f64],
    n_paths: usize,
    seed: u64,
    absorb_tol: f64,
) -> PathEnsemble {
    let paths = map_paths(model, x0, grid, n_paths, seed, absorb_tol, |p| p);
    let t0 = grid[0];
    let horizon = *grid.last().expect("non-empty grid");
    PathEnsemble {
        paths,
        master_seed: seed,
        scheme: format!("euler-truncated/{}", model.name()),
        x0,
        t0,
        eps: 1.0 - horizon,
        horizon,
    }
}

/// Scaled neutral Wright–Fisher ensemble on `[t0, 1 − eps]`.
pub fn simulate_scaled_wf(run: &WfRun) -> Result<PathEnsemble> {
    run.validate()?;
    let grid = run.grid()?;
    let mut ens = ensemble(
        &ScaledWrightFisher,
        run.x0,
        &grid,
        run.n_paths,
        run.seed,
        run.absorb_tol,
    );
    ens.eps = run.eps;
    Ok(ens)
}

/// Streaming variant of [`simulate_scaled_wf`]: paths are reduced by `f`
/// and dropped, so memory stays proportional to `n_paths` outputs.
pub fn map_scaled_wf<T, F>(run: &WfRun, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(SamplePath) -> T + Sync + Send,
{
    run.validate()?;
    let grid = run.grid()?;
    Ok(map_paths(
        &ScaledWrightFisher,
        run.x0,
        &grid,
        run.n_paths,
        run.seed,
        run.absorb_tol,
        f,
    ))
}

fn standard_grid(x0: f64, horizon: f64, dt: f64) -> Result<Vec<f64>> {
    check_unit_state(x0)?;
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::domain(format!(
            "horizon must be nonnegative, got {horizon}"
        )));
    }
    StepPolicy::fixed(dt).grid(0.0, horizon)
}

/// Standard neutral Wright–Fisher ensemble on `[0, horizon]` with fixed `dt`.
pub fn simulate_standard_wf(
    x0: f64,
    horizon: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    let grid = standard_grid(x0, horizon, dt)?;
    Ok(ensemble(
        &StandardWrightFisher,
        x0,
        &grid,
        n_paths,
        seed,
        DEFAULT_ABSORB_TOL,
    ))
}

/// Streaming variant of [`simulate_standard_wf`].
pub fn map_standard_wf<T, F>(
    x0: f64,
    horizon: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(SamplePath) -> T + Sync + Send,
{
    let grid = standard_grid(x0, horizon, dt)?;
    Ok(map_paths(
        &StandardWrightFisher,
        x0,
        &grid,
        n_paths,
        seed,
        DEFAULT_ABSORB_TOL,
        f,
    ))
}

/// Paths of `dX = σ(X) dB` on `[0, horizon]`, recording Σ = σ(X)².
pub fn simulate_generic_sde(
    vol: &StateVolatility,
    x0: f64,
    horizon: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if horizon < vol.min_horizon() {
        return Err(Error::usage(format!(
            "horizon {horizon} is shorter than 1/sigma_min^2 = {}",
            vol.min_horizon()
        )));
    }
    let grid = StepPolicy::fixed(dt).grid(0.0, horizon)?;
    Ok(ensemble(vol, x0, &grid, n_paths, seed, 0.0))
}

/// s(t) = 1 − e^{−t}, mapping standard Wright–Fisher time onto `[0, 1)`.
pub fn time_change_map(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time change needs t >= 0, got {t}")));
    }
    Ok(-(-t).exp_m1())
}
