use rayon::prelude::*;
use serde::Serialize;

use crate::closed_form::{value_function, SpaceTimePoint};
use crate::error::{Error, Result};
use crate::grid::{uniform_nodes, GridFunction};

/// Rows below this size are swept serially; rayon's per-step overhead
/// dominates otherwise.
const PAR_MIN_NODES: usize = 4096;

/// Discretisation of the control problem on `[t0, 1 − eps] × [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpSpec {
    pub n_x: usize,
    pub n_t: usize,
    pub eps: f64,
    pub penalty_k: f64,
    pub t0: f64,
    /// Explicit control cap; `None` uses the CFL bound Δx²/Δt.
    pub sigma_max: Option<f64>,
    /// Number of stored time slices of value and policy (plus the terminal row).
    pub n_slices: usize,
}

impl DpSpec {
    /// Defaults for a given `n_x` and `eps`: penalty −½log eps, t0 = 0 and
    /// `n_t` chosen so the CFL cap is about 2/(e·eps), twice the control the
    /// penalty induces at the terminal time.
    pub fn with_defaults(n_x: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::usage(format!("eps must lie in (0, 0.5), got {eps}")));
        }
        let dx = 1.0 / n_x.max(1) as f64;
        let cap = 2.0 / (std::f64::consts::E * eps);
        let n_slices = 64;
        let n_t = ((1.0 - eps) * cap / (dx * dx)).ceil() as usize;
        let n_t = n_t.div_ceil(n_slices) * n_slices;
        let spec = Self {
            n_x,
            n_t,
            eps,
            penalty_k: -0.5 * eps.ln(),
            t0: 0.0,
            sigma_max: None,
            n_slices,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `levels` specs starting at `n_x`, doubling `n_x` and quadrupling `n_t`
    /// so that the cap stays fixed.
    pub fn refinement_ladder(n_x: usize, eps: f64, levels: usize) -> Result<Vec<Self>> {
        let base = Self::with_defaults(n_x, eps)?;
        Ok((0..levels)
            .map(|l| Self {
                n_x: n_x << l,
                n_t: base.n_t << (2 * l),
                ..base
            })
            .collect())
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n_x as f64
    }

    pub fn dt(&self) -> f64 {
        (1.0 - self.eps - self.t0) / self.n_t as f64
    }

    pub fn cfl_cap(&self) -> f64 {
        self.dx() * self.dx() / self.dt()
    }

    pub fn cap(&self) -> f64 {
        self.sigma_max.unwrap_or_else(|| self.cfl_cap())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x < 4 || self.n_t < 1 {
            return Err(Error::usage(format!(
                "grid too small: n_x = {}, n_t = {}",
                self.n_x, self.n_t
            )));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::usage(format!(
                "eps must lie in (0, 0.5), got {}",
                self.eps
            )));
        }
        if !(self.penalty_k >= 0.0 && self.penalty_k.is_finite()) {
            return Err(Error::usage(format!(
                "penalty_k must be finite and nonnegative, got {}",
                self.penalty_k
            )));
        }
        if !(self.t0 < 1.0 - self.eps) || !self.t0.is_finite() {
            return Err(Error::usage(format!(
                "t0 must be below 1 - eps, got {}",
                self.t0
            )));
        }
        if let Some(cap) = self.sigma_max {
            let cfl = self.cfl_cap();
            if !(cap > 0.0) || cap > cfl * (1.0 + 1e-12) {
                return Err(Error::usage(format!(
                    "sigma_max {cap} violates the CFL bound {cfl}"
                )));
            }
        }
        if self.n_slices == 0 {
            return Err(Error::usage("n_slices must be positive"));
        }
        Ok(())
    }
}

/// Σ on stored time slices; `grid.t` holds the slice times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlPolicy {
    pub grid: GridFunction,
    pub sigma_max: f64,
}

impl ControlPolicy {
    /// True where the stored control sits strictly below the cap.
    pub fn clamp_inactive(&self, j: usize, i: usize) -> bool {
        self.grid.at(j, i) < self.sigma_max * (1.0 - 1e-12)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpSolution {
    pub spec: DpSpec,
    /// Value at t0.
    pub value: GridFunction,
    /// Value on the policy slices plus the terminal time.
    pub value_slices: GridFunction,
    pub policy: ControlPolicy,
    /// Node updates where the cap was active.
    pub clamped_updates: u64,
}

/// One backward step for node `i`: returns `(V(t, x_i), Σ̂)`.
#[inline]
fn node_update(
    vm: f64,
    v0: f64,
    vp: f64,
    inv_dx2: f64,
    half_dt: f64,
    cap: f64,
    ln_cap: f64,
) -> (f64, f64, bool) {
    let d = (vp - 2.0 * v0 + vm) * inv_dx2;
    let a = -d - 1.0;
    if a >= ln_cap {
        (v0 + half_dt * cap * (ln_cap + d), cap, true)
    } else {
        // At the interior minimiser Σ log Σ = Σ(−D − 1), so the cost collapses.
        let s = a.exp();
        (v0 - half_dt * s, s, false)
    }
}

/// Apply one backward step to `next` (values at t + Δt), writing values and
/// controls at t. Boundary entries are pinned to 0. Returns the number of
/// clamped nodes.
pub fn dp_step(
    next: &[f64],
    dx: f64,
    dt: f64,
    cap: f64,
    out: &mut [f64],
    sigma: &mut [f64],
) -> usize {
    let n = next.len();
    let inv_dx2 = 1.0 / (dx * dx);
    let half_dt = 0.5 * dt;
    let ln_cap = cap.ln();
    out[0] = 0.0;
    out[n - 1] = 0.0;
    sigma[0] = 0.0;
    sigma[n - 1] = 0.0;
    let body = |(i, (o, s)): (usize, (&mut f64, &mut f64))| {
        let i = i + 1;
        let (v, sg, clamped) = node_update(
            next[i - 1],
            next[i],
            next[i + 1],
            inv_dx2,
            half_dt,
            cap,
            ln_cap,
        );
        *o = v;
        *s = sg;
        usize::from(clamped)
    };
    let outs = &mut out[1..n - 1];
    let sigs = &mut sigma[1..n - 1];
    if n >= PAR_MIN_NODES {
        outs.par_iter_mut()
            .zip(sigs.par_iter_mut())
            .enumerate()
            .map(body)
            .sum()
    } else {
        outs.iter_mut()
            .zip(sigs.iter_mut())
            .enumerate()
            .map(body)
            .sum()
    }
}

/// Smallest divisor of `n_t` giving at most `n_slices` slices, so slice
/// times stay uniform up to and including the terminal time.
fn slice_stride(n_t: usize, n_slices: usize) -> usize {
    (n_t.div_ceil(n_slices).max(1)..=n_t)
        .find(|d| n_t % d == 0)
        .unwrap_or(n_t)
}

/// Backward induction from `penalty_k · x(1−x)` at `1 − eps`.
pub fn solve_dp(spec: &DpSpec) -> Result<DpSolution> {
    spec.validate()?;
    let n = spec.n_x + 1;
    let xs = uniform_nodes(0.0, 1.0, spec.n_x);
    let (dx, dt, cap) = (spec.dx(), spec.dt(), spec.cap());
    let stride = slice_stride(spec.n_t, spec.n_slices);

    let mut next: Vec<f64> = xs.iter().map(|&x| spec.penalty_k * x * (1.0 - x)).collect();
    next[0] = 0.0;
    next[n - 1] = 0.0;
    let mut cur = vec![0.0; n];
    let mut sigma = vec![0.0; n];

    // Slices are collected backwards and reversed at the end.
    let mut slice_t = vec![1.0 - spec.eps];
    let mut slice_v = vec![next.clone()];
    let mut slice_s: Vec<Vec<f64>> = Vec::new();
    let mut policy_t = Vec::new();
    let mut clamped = 0u64;

    for j in (0..spec.n_t).rev() {
        clamped += dp_step(&next, dx, dt, cap, &mut cur, &mut sigma) as u64;
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value at step {j}")));
        }
        if j % stride == 0 {
            let t = spec.t0 + j as f64 * dt;
            policy_t.push(t);
            slice_t.push(t);
            slice_v.push(cur.clone());
            slice_s.push(sigma.clone());
        }
        std::mem::swap(&mut cur, &mut next);
    }
    if clamped > 0 {
        log::warn!("control cap {cap:.4e} active on {clamped} node updates");
    }

    slice_t.reverse();
    slice_v.reverse();
    policy_t.reverse();
    slice_s.reverse();
    let value = GridFunction::new(xs.clone(), None, next)?;
    let value_slices = GridFunction::new(xs.clone(), Some(slice_t), slice_v.concat())?;
    let policy = ControlPolicy {
        grid: GridFunction::new(xs, Some(policy_t), slice_s.concat())?,
        sigma_max: cap,
    };
    Ok(DpSolution {
        spec: *spec,
        value,
        value_slices,
        policy,
        clamped_updates: clamped,
    })
}

/// One level of a refinement study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinementRow {
    pub n_x: usize,
    pub n_t: usize,
    /// Max gap on the coarser level's nodes to the previous level.
    pub gap_to_previous: Option<f64>,
    /// Max gap to the closed-form value at t0.
    pub gap_to_closed_form: f64,
    /// Value exactly zero at both boundary nodes.
    pub boundary_zero: bool,
}

/// Solve each spec and compare successive solutions; each `n_x` must be a
/// multiple of its predecessor's.
pub fn dp_refinement_study(specs: &[DpSpec]) -> Result<Vec<RefinementRow>> {
    let mut rows: Vec<RefinementRow> = Vec::with_capacity(specs.len());
    let mut prev: Option<(usize, Vec<f64>)> = None;
    for spec in specs {
        let sol = solve_dp(spec)?;
        let v = &sol.value.values;
        let gap_to_previous = match &prev {
            None => None,
            Some((pn, pv)) => {
                if spec.n_x % pn != 0 {
                    return Err(Error::usage(
                        "each n_x must be a multiple of the previous one",
                    ));
                }
                let r = spec.n_x / pn;
                Some(
                    pv.iter()
                        .enumerate()
                        .map(|(i, &a)| (a - v[i * r]).abs())
                        .fold(0.0, f64::max),
                )
            }
        };
        let gap_to_closed_form = sol
            .value
            .iter()
            .map(|(_, x, val)| {
                let p = SpaceTimePoint::new(spec.t0, x).expect("grid node lies in [0,1]");
                (val - value_function(p)).abs()
            })
            .fold(0.0, f64::max);
        rows.push(RefinementRow {
            n_x: spec.n_x,
            n_t: spec.n_t,
            gap_to_previous,
            gap_to_closed_form,
            boundary_zero: v[0] == 0.0 && v[spec.n_x] == 0.0,
        });
        prev = Some((spec.n_x, v.clone()));
    }
    Ok(rows)
}
