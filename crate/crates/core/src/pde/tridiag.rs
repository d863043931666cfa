use crate::error::{Error, Result};

/// Thomas algorithm for `sub[i] u[i-1] + diag[i] u[i] + sup[i] u[i+1] = rhs[i]`.
/// `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::usage("tridiagonal bands must have equal length"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    for i in 0..n {
        if i > 0 {
            denom = diag[i] - sub[i] * c[i - 1];
        }
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Numerical(format!(
                "singular tridiagonal system at row {i}"
            )));
        }
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = if i == 0 {
            rhs[0] / denom
        } else {
            (rhs[i] - sub[i] * d[i - 1]) / denom
        };
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singular_detected() {
        assert!(solve_tridiagonal(&[0.0, 1.0], &[1.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]).is_err());
    }

    proptest! {
        #![proptest_config(crate::test_support::fixed(1000))]

        #[test]
        fn residual_vanishes(n in 1usize..40, seed in proptest::collection::vec(-1.0f64..1.0, 160)) {
            // Diagonally dominant system with random bands.
            let sub: Vec<f64> = (0..n).map(|i| seed[i]).collect();
            let sup: Vec<f64> = (0..n).map(|i| seed[40 + i]).collect();
            let diag: Vec<f64> = (0..n).map(|i| 2.5 + seed[80 + i]).collect();
            let rhs: Vec<f64> = (0..n).map(|i| seed[120 + i]).collect();
            let u = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
            for i in 0..n {
                let mut r = diag[i] * u[i] - rhs[i];
                if i > 0 { r += sub[i] * u[i - 1]; }
                if i + 1 < n { r += sup[i] * u[i + 1]; }
                prop_assert!(r.abs() < 1e-12);
            }
        }
    }
}
