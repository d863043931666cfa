use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::matrix::{rate_against_identity, SpdMatrix, MAX_DIM};
use crate::entropy::{DivergenceEstimate, Flavor};
use crate::error::{Error, Result};
use crate::rng::{path_rng, PathRng};
use crate::stats::CompensatedSum;
use crate::wf::{StepPolicy, DEFAULT_ABSORB_TOL};

/// Violations of the simplex smaller than this are clamped away; larger
/// ones trigger step halving.
const CLAMP_TOL: f64 = 1e-8;
/// Maximum Brownian-bridge halvings of one step before the state is
/// projected back onto the simplex.
const MAX_HALVINGS: u32 = 20;

/// A point `x ∈ [0,1]^d` with `Σ x_i ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexState(Vec<f64>);

impl SimplexState {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() > MAX_DIM {
            return Err(Error::domain(format!(
                "dimension must lie in 1..={MAX_DIM}, got {}",
                x.len()
            )));
        }
        if x.iter().any(|v| !(*v >= 0.0)) || x.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::domain(format!(
                "{x:?} is not in the sub-probability simplex"
            )));
        }
        Ok(Self(x))
    }

    /// Interior point (1/(d+1), …, 1/(d+1)).
    pub fn barycenter(d: usize) -> Result<Self> {
        Self::new(vec![1.0 / (d as f64 + 1.0); d])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0) && self.0.iter().sum::<f64>() < 1.0
    }
}

/// Max-norm distance to the nearest vertex {0, e_1, …, e_d}.
pub fn vertex_distance(x: &[f64]) -> f64 {
    let to_origin = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let to_unit = (0..x.len())
        .map(|k| {
            x.iter().enumerate().fold(0.0, |m: f64, (i, v)| {
                m.max((v - f64::from(u8::from(i == k))).abs())
            })
        })
        .fold(f64::INFINITY, f64::min);
    to_origin.min(to_unit)
}

fn violation(x: &[f64]) -> f64 {
    let neg = x.iter().fold(0.0, |m: f64, &v| m.max(-v));
    neg.max(x.iter().sum::<f64>() - 1.0)
}

fn project(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.max(0.0);
    }
    let s: f64 = x.iter().sum();
    if s > 1.0 {
        for v in x.iter_mut() {
            *v /= s;
        }
    }
}

/// Snap coordinates within `tol` of a face onto it. Returns true at a vertex.
fn snap(x: &mut [f64], tol: f64) -> bool {
    for v in x.iter_mut() {
        if *v <= tol {
            *v = 0.0;
        }
    }
    let s: f64 = x.iter().sum();
    if s > 0.0 && 1.0 - s <= tol {
        for v in x.iter_mut() {
            *v /= s;
        }
    }
    let nonzero = x.iter().filter(|&&v| v > 0.0).count();
    nonzero == 0 || (nonzero == 1 && x.iter().any(|&v| v == 1.0))
}

/// Instantaneous covariance of a simplex-valued martingale.
pub trait SimplexCovariance: Send + Sync {
    fn name(&self) -> String;
    fn covariance(&self, t: f64, x: &[f64]) -> DMatrix<f64>;
}

/// (x_i δ_ij − x_i x_j)/(1 − t).
#[derive(Debug, Clone, Copy, Default)]
pub struct SimplexWrightFisher;

fn wf_covariance(t: f64, x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    let scale = 1.0 / (1.0 - t);
    DMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j { x[i] } else { 0.0 };
        (delta - x[i] * x[j]) * scale
    })
}

impl SimplexCovariance for SimplexWrightFisher {
    fn name(&self) -> String {
        "simplex-wf".into()
    }

    fn covariance(&self, t: f64, x: &[f64]) -> DMatrix<f64> {
        wf_covariance(t, x)
    }
}

/// Σ_WF + Σ_j θ_j g_j(x)·diag(x_i(1−x_i))/(1−t).
pub struct PerturbedWrightFisher {
    pub theta: Vec<f64>,
    pub shapes: Vec<super::ShapeFunction>,
}

impl SimplexCovariance for PerturbedWrightFisher {
    fn name(&self) -> String {
        let parts: Vec<String> = self
            .shapes
            .iter()
            .zip(&self.theta)
            .map(|(g, th)| format!("{}={th}", g.name()))
            .collect();
        format!("perturbed-wf[{}]", parts.join(","))
    }

    fn covariance(&self, t: f64, x: &[f64]) -> DMatrix<f64> {
        let mut c = wf_covariance(t, x);
        let w: f64 = self
            .shapes
            .iter()
            .zip(&self.theta)
            .map(|(g, th)| th * g.eval(x))
            .sum();
        if w != 0.0 {
            let scale = w / (1.0 - t);
            for i in 0..x.len() {
                c[(i, i)] += scale * x[i] * (1.0 - x[i]);
            }
        }
        c
    }
}

/// One simulated path: `sigma[k]` is the covariance used on the step
/// `times[k] → times[k+1]`, `spectra[k]` its clamped eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixPath {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub sigma: Vec<SpdMatrix>,
    pub spectra: Vec<Vec<f64>>,
    pub absorption_time: Option<f64>,
    /// Steps whose state had to be projected after exhausting halvings.
    pub forced_projections: u32,
    /// Largest simplex violation seen before clamping.
    pub max_violation: f64,
}

impl MatrixPath {
    pub fn terminal_state(&self) -> &[f64] {
        self.states.last().expect("non-empty path")
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("non-empty path")
    }

    /// The d = 1 path as a scalar sample path.
    pub fn to_scalar(&self) -> Result<crate::wf::SamplePath> {
        if self.states[0].len() != 1 {
            return Err(Error::usage(
                "only one-dimensional matrix paths convert to scalar paths",
            ));
        }
        Ok(crate::wf::SamplePath {
            times: self.times.clone(),
            states: self.states.iter().map(|s| s[0]).collect(),
            step_variance: self.sigma.iter().map(|m| m.matrix()[(0, 0)]).collect(),
            absorption_time: self.absorption_time,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixPathEnsemble {
    pub d: usize,
    pub paths: Vec<MatrixPath>,
    pub master_seed: u64,
    pub scheme: String,
    pub x0: Vec<f64>,
    pub eps: f64,
}

/// Parameters of a simplex simulation on `[0, 1 − eps]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexRun {
    pub x0: SimplexState,
    pub policy: StepPolicy,
    pub eps: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub absorb_tol: f64,
}

impl SimplexRun {
    pub fn new(x0: SimplexState, policy: StepPolicy, eps: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            x0,
            policy,
            eps,
            n_paths,
            seed,
            absorb_tol: DEFAULT_ABSORB_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x0.is_interior() {
            return Err(Error::domain(format!(
                "x0 {:?} must be interior",
                self.x0.coords()
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::domain(format!(
                "eps must lie in (0,1), got {}",
                self.eps
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::usage("n_paths must be positive"));
        }
        self.policy.validate()
    }

    fn grid(&self) -> Result<Vec<f64>> {
        self.policy.grid(0.0, 1.0 - self.eps)
    }
}

/// Eigen-decompose `c`; `None` if it is not PSD within tolerance or not finite.
fn psd_root(c: &DMatrix<f64>) -> Option<(DMatrix<f64>, Vec<f64>)> {
    if c.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let e = SymmetricEigen::new((c + c.transpose()) * 0.5);
    let scale = e.eigenvalues.amax().max(1.0);
    if e.eigenvalues.min() < -1e-10 * scale {
        return None;
    }
    let vals: Vec<f64> = e.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let root_diag = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|l| l.sqrt()),
    ));
    Some((
        &e.eigenvectors * root_diag * e.eigenvectors.transpose(),
        vals,
    ))
}

struct Stepper<'a> {
    model: &'a dyn SimplexCovariance,
    rng: &'a mut PathRng,
    absorb_tol: f64,
    path: MatrixPath,
}

impl Stepper<'_> {
    /// Advance from the path's last state over `[t, t + h]` with Brownian
    /// increment `db`, halving via the Brownian bridge when the step leaves
    /// the simplex.
    fn advance(&mut self, t: f64, h: f64, db: &DVector<f64>, depth: u32) -> Result<bool> {
        let x = self.path.states.last().expect("non-empty").clone();
        let c = self.model.covariance(t, &x);
        // Halving cannot repair an indefinite covariance: the state is unchanged.
        let (root, vals) = psd_root(&c).ok_or_else(|| {
            Error::Numerical(format!(
                "covariance at t = {t}, x = {x:?} is not positive semidefinite"
            ))
        })?;
        let y = DVector::from_column_slice(&x) + root * db;
        let viol = violation(y.as_slice());
        if viol > CLAMP_TOL && depth < MAX_HALVINGS {
            let d = x.len();
            let z =
                DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut *self.rng)));
            let mid = db * 0.5 + z * (0.5 * h.sqrt());
            if self.advance(t, 0.5 * h, &mid, depth + 1)? {
                return Ok(true);
            }
            return self.advance(t + 0.5 * h, 0.5 * h, &(db - mid), depth + 1);
        }
        let mut y = y.as_slice().to_vec();
        self.path.max_violation = self.path.max_violation.max(viol);
        if viol > CLAMP_TOL {
            self.path.forced_projections += 1;
        }
        project(&mut y);
        let at_vertex = snap(&mut y, self.absorb_tol);
        self.path
            .sigma
            .push(SpdMatrix::from_checked((&c + c.transpose()) * 0.5));
        self.path.spectra.push(vals);
        self.path.times.push(t + h);
        self.path.states.push(y);
        Ok(at_vertex)
    }
}

fn simulate_one(
    model: &dyn SimplexCovariance,
    run: &SimplexRun,
    grid: &[f64],
    index: usize,
) -> Result<MatrixPath> {
    let d = run.x0.dim();
    let mut rng = path_rng(run.seed, index as u64);
    let mut x0 = run.x0.coords().to_vec();
    let start_vertex = snap(&mut x0, run.absorb_tol);
    let end = *grid.last().expect("non-empty grid");
    let mut st = Stepper {
        model,
        rng: &mut rng,
        absorb_tol: run.absorb_tol,
        path: MatrixPath {
            times: vec![grid[0]],
            states: vec![x0],
            sigma: Vec::new(),
            spectra: Vec::new(),
            absorption_time: None,
            forced_projections: 0,
            max_violation: 0.0,
        },
    };
    if start_vertex {
        st.path.absorption_time = Some(grid[0]);
    } else {
        for k in 0..grid.len() - 1 {
            let h = grid[k + 1] - grid[k];
            let z = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut *st.rng)));
            let db = z * h.sqrt();
            if st.advance(grid[k], h, &db, 0)? {
                st.path.absorption_time = Some(*st.path.times.last().expect("non-empty"));
                break;
            }
        }
    }
    let mut path = st.path;
    // Absorbed paths carry one frozen step to the horizon.
    if path.end_time() < end {
        let last = path.terminal_state().to_vec();
        path.sigma
            .push(SpdMatrix::from_checked(DMatrix::zeros(d, d)));
        path.spectra.push(vec![0.0; d]);
        path.times.push(end);
        path.states.push(last);
    }
    Ok(path)
}

/// Simulate paths in parallel and reduce each through `f` as it completes.
pub fn map_simplex<T, F>(model: &dyn SimplexCovariance, run: &SimplexRun, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(MatrixPath) -> T + Sync + Send,
{
    run.validate()?;
    let grid = run.grid()?;
    (0..run.n_paths)
        .into_par_iter()
        .map(|i| simulate_one(model, run, &grid, i).map(&f))
        .collect()
}

/// Multidimensional neutral Wright–Fisher ensemble from an interior point.
pub fn simulate_simplex_wf(run: &SimplexRun) -> Result<MatrixPathEnsemble> {
    let paths = map_simplex(&SimplexWrightFisher, run, |p| p)?;
    Ok(MatrixPathEnsemble {
        d: run.x0.dim(),
        paths,
        master_seed: run.seed,
        scheme: format!("euler-bridge-halving/{}", SimplexWrightFisher.name()),
        x0: run.x0.coords().to_vec(),
        eps: run.eps,
    })
}

/// ½∫(tr(Σ log Σ) + d − tr Σ) dt along one path up to `1 − eps`.
pub fn md_path_value(path: &MatrixPath, eps: f64) -> f64 {
    let upper = 1.0 - eps;
    let mut acc = CompensatedSum::new();
    for (k, vals) in path.spectra.iter().enumerate() {
        let a = path.times[k];
        if a >= upper {
            break;
        }
        let dt = path.times[k + 1].min(upper) - a;
        if dt > 0.0 {
            acc.add(rate_against_identity(vals.iter().copied()) * dt);
        }
    }
    0.5 * acc.value()
}

/// ½E[∫(tr(Σ log Σ) + d − tr Σ) dt] up to `1 − eps`.
pub fn md_reciprocal_entropy(ens: &MatrixPathEnsemble, eps: f64) -> Result<DivergenceEstimate> {
    if ens.paths.is_empty() {
        return Err(Error::usage("cannot estimate from an empty ensemble"));
    }
    let values: Vec<f64> = ens.paths.iter().map(|p| md_path_value(p, eps)).collect();
    DivergenceEstimate::from_values(&values, eps, Flavor::Reciprocal)
}
