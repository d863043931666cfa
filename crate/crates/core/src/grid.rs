//! Scalar functions sampled on uniform space (and optionally time) grids.

use serde::Serialize;

use crate::error::{Error, Result};

/// Values on a uniform x grid, optionally crossed with a uniform t grid.
/// With a t grid, `values` is row-major: `values[j * nx + i]` sits at
/// `(t[j], x[i])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    pub x: Vec<f64>,
    pub t: Option<Vec<f64>>,
    pub values: Vec<f64>,
}

fn check_uniform(nodes: &[f64], what: &str) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::Format(format!("{what} grid is empty")));
    }
    if nodes.len() < 3 {
        return Ok(());
    }
    let h = nodes[1] - nodes[0];
    for w in nodes.windows(2) {
        let d = w[1] - w[0];
        if !(d > 0.0) || (d - h).abs() > 1e-9 * h.abs().max(1e-300) + 1e-14 {
            return Err(Error::Format(format!(
                "{what} grid is not strictly increasing and uniform"
            )));
        }
    }
    Ok(())
}

/// `n + 1` equally spaced nodes on `[a, b]`, computed without accumulation.
pub fn uniform_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|i| if i == n { b } else { a + i as f64 * h })
        .collect()
}

impl GridFunction {
    pub fn new(x: Vec<f64>, t: Option<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        let g = Self { x, t, values };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        check_uniform(&self.x, "x")?;
        let rows = match &self.t {
            Some(t) => {
                check_uniform(t, "t")?;
                t.len()
            }
            None => 1,
        };
        if self.values.len() != rows * self.x.len() {
            return Err(Error::Format(
                "value count does not match grid shape".into(),
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("grid values must be finite".into()));
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn nt(&self) -> usize {
        self.t.as_ref().map_or(1, Vec::len)
    }

    pub fn at(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.nx() + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let nx = self.nx();
        &self.values[j * nx..(j + 1) * nx]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Iterate `(t, x, value)`; `t` is NaN for space-only grids.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let nx = self.nx();
        self.values.iter().enumerate().map(move |(k, &v)| {
            let t = self.t.as_ref().map_or(f64::NAN, |t| t[k / nx]);
            (t, self.x[k % nx], v)
        })
    }
}
