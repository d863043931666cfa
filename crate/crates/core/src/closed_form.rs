//! The closed-form value function of the win-martingale entropy problem,
//! its optimal volatility, and finite-difference checks of the HJB equation
//!
//! ```text
//! ∂_t v = ½ exp(−∂_x² v − 1),   v(t, 0) = v(t, 1) = 0,   v(1, x) = +∞.
//! ```

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{uniform_nodes, GridFunction};

/// A point `(t, x)` with `t < 1` and `x ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceTimePoint {
    t: f64,
    x: f64,
}

impl SpaceTimePoint {
    pub fn new(t: f64, x: f64) -> Result<Self> {
        if !(t < 1.0) || t.is_nan() {
            return Err(Error::domain(format!("time must be < 1, got {t}")));
        }
        check_unit(x)?;
        Ok(Self { t, x })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

fn check_unit(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("state must lie in [0,1], got {x}")));
    }
    Ok(())
}

/// ¼ y² log y² with the limit 0 at y = 0.
fn quarter_sq_log_sq(y: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        0.5 * y * y * y.ln()
    }
}

/// f(x) = −(¼x² log x² + ¼(1−x)² log(1−x)² + x(1−x)), the time-zero profile.
pub fn stationary_profile(x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(profile(x))
}

fn profile(x: f64) -> f64 {
    -(quarter_sq_log_sq(x) + quarter_sq_log_sq(1.0 - x) + x * (1.0 - x))
}

/// v̄(t, x) = f(x) − ½ log(1 − t) x(1 − x).
pub fn value_function(p: SpaceTimePoint) -> f64 {
    value_unchecked(p.t, p.x)
}

fn value_unchecked(t: f64, x: f64) -> f64 {
    profile(x) - 0.5 * (-t).ln_1p() * x * (1.0 - x)
}

/// Σ*(t, x) = x(1 − x)/(1 − t).
pub fn optimal_volatility(p: SpaceTimePoint) -> f64 {
    p.x * (1.0 - p.x) / (1.0 - p.t)
}

/// |[v̄(t,x) + ½log(1−t)x(1−x)] − [v̄(s,x) + ½log(1−s)x(1−x)]|.
pub fn time_shift_check(x: f64, t: f64, s: f64) -> Result<f64> {
    let a = SpaceTimePoint::new(t, x)?;
    let b = SpaceTimePoint::new(s, x)?;
    let shifted = |p: SpaceTimePoint| value_function(p) + 0.5 * (-p.t).ln_1p() * p.x * (1.0 - p.x);
    Ok((shifted(a) - shifted(b)).abs())
}

/// Central second difference of v̄ in x with spacing `h`.
pub fn fd_second_derivative_x(t: f64, x: f64, h: f64) -> f64 {
    (value_unchecked(t, x + h) - 2.0 * value_unchecked(t, x) + value_unchecked(t, x - h)) / (h * h)
}

/// exp(−D_xx v̄ − 1): the first-order-condition control read off the
/// discretised value function.
pub fn fd_optimal_volatility(t: f64, x: f64, h: f64) -> f64 {
    (-fd_second_derivative_x(t, x, h) - 1.0).exp()
}

/// Residual `D_t v̄ − ½exp(−D_xx v̄ − 1)` on the interior nodes of a uniform
/// `n_t × n_x` partition of `[t0, 1 − eps] × [0, 1]`, with central second
/// order differences of the exact v̄.
pub fn hjb_residual(t0: f64, eps: f64, n_x: usize, n_t: usize) -> Result<GridFunction> {
    if n_x < 4 || n_t < 4 {
        return Err(Error::usage(format!(
            "grid sizes must be at least 4, got n_x = {n_x}, n_t = {n_t}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::usage(format!("eps must lie in (0,1), got {eps}")));
    }
    if !(t0 >= 0.0 && t0 < 1.0 - eps) {
        return Err(Error::usage(format!(
            "t0 must lie in [0, 1 - eps), got {t0}"
        )));
    }
    let xs = uniform_nodes(0.0, 1.0, n_x);
    let ts = uniform_nodes(t0, 1.0 - eps, n_t);
    let hx = 1.0 / n_x as f64;
    let ht = (1.0 - eps - t0) / n_t as f64;
    let x_in: Vec<f64> = xs[1..n_x].to_vec();
    let t_in: Vec<f64> = ts[1..n_t].to_vec();

    let values: Vec<f64> = t_in
        .par_iter()
        .enumerate()
        .flat_map_iter(|(jj, _)| {
            let xs = &xs;
            let j = jj + 1;
            let (tm, tc, tp) = (ts[j - 1], ts[j], ts[j + 1]);
            (1..n_x).map(move |i| {
                let (xm, xc, xp) = (xs[i - 1], xs[i], xs[i + 1]);
                let dt = (value_unchecked(tp, xc) - value_unchecked(tm, xc)) / (2.0 * ht);
                let dxx = (value_unchecked(tc, xp) - 2.0 * value_unchecked(tc, xc)
                    + value_unchecked(tc, xm))
                    / (hx * hx);
                dt - 0.5 * (-dxx - 1.0).exp()
            })
        })
        .collect();
    GridFunction::new(x_in, Some(t_in), values)
}

/// One row of a residual refinement study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualLevel {
    pub n_x: usize,
    pub n_t: usize,
    pub max_abs: f64,
    /// log₂ of the ratio to the previous level's max residual.
    pub order: Option<f64>,
}

/// max|R| on successively doubled grids starting at `(n_x, n_t)`.
pub fn hjb_refinement(
    t0: f64,
    eps: f64,
    n_x: usize,
    n_t: usize,
    levels: usize,
) -> Result<Vec<ResidualLevel>> {
    let mut out: Vec<ResidualLevel> = Vec::with_capacity(levels);
    for l in 0..levels {
        let (nx, nt) = (n_x << l, n_t << l);
        let max_abs = hjb_residual(t0, eps, nx, nt)?.max_abs();
        let order = out.last().map(|prev| (prev.max_abs / max_abs).log2());
        out.push(ResidualLevel {
            n_x: nx,
            n_t: nt,
            max_abs,
            order,
        });
    }
    Ok(out)
}
