use serde::Serialize;

use super::tridiag::solve_tridiagonal;
use crate::error::{Error, Result};
use crate::grid::{uniform_nodes, GridFunction};

/// Grid for `w'' = −log(x(1−x)) − 1` on `[0, 1]` with `w(0) = w(1) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarySolveSpec {
    pub n_x: usize,
}

impl StationarySolveSpec {
    pub fn new(n_x: usize) -> Result<Self> {
        if n_x < 8 {
            return Err(Error::usage(format!("n_x must be at least 8, got {n_x}")));
        }
        Ok(Self { n_x })
    }
}

/// Second-difference solve of the stationary equation; the right-hand side
/// is only evaluated at interior nodes.
pub fn solve_stationary(spec: StationarySolveSpec) -> Result<GridFunction> {
    let spec = StationarySolveSpec::new(spec.n_x)?;
    let n = spec.n_x;
    let h = 1.0 / n as f64;
    let xs = uniform_nodes(0.0, 1.0, n);
    let m = n - 1;
    let sub = vec![1.0; m];
    let sup = vec![1.0; m];
    let diag = vec![-2.0; m];
    let rhs: Vec<f64> = xs[1..n]
        .iter()
        .map(|&x| (-(x * (1.0 - x)).ln() - 1.0) * h * h)
        .collect();
    let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    values.extend(inner);
    values.push(0.0);
    GridFunction::new(xs, None, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::stationary_profile;

    #[test]
    fn matches_profile() {
        let g = solve_stationary(StationarySolveSpec { n_x: 1000 }).unwrap();
        let err = g
            .iter()
            .map(|(_, x, v)| (v - stationary_profile(x).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
        assert!((g.at(0, 500) + 0.0767132).abs() < 1e-4);
    }

    #[test]
    fn symmetric_and_pinned() {
        let g = solve_stationary(StationarySolveSpec { n_x: 64 }).unwrap();
        assert_eq!(g.at(0, 0), 0.0);
        assert_eq!(g.at(0, 64), 0.0);
        for i in 0..=64 {
            assert!((g.at(0, i) - g.at(0, 64 - i)).abs() < 1e-15);
        }
    }

    #[test]
    fn small_grid_rejected() {
        assert!(solve_stationary(StationarySolveSpec { n_x: 7 }).is_err());
    }
}
