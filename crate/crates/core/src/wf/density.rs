//! Eigenfunction series for the standard neutral Wright–Fisher diffusion
//! `dM = √(M(1−M)) dB` killed at {0, 1}.
//!
//! Mode k ≥ 1 has rate λ_k = k(k+1)/2 (the eigenvalues of the generator
//! ½x(1−x)∂²), coefficient k(k+1)(2k+1)/(y(1−y)) and spatial factor
//! φ_k(x)φ_k(y) with φ_k(x) = x(1−x)·P̂_{k−1}(1−2x), where P̂ is the (1,1)
//! Jacobi polynomial normalised to P̂(1) = 1.

use serde::Serialize;

use crate::entropy::quadrature::integrate;
use crate::error::{Error, Result};

/// Largest number of series terms any routine will use.
pub const MAX_TERMS: usize = 10_000;

/// P^{(1,1)}_n(z) / P^{(1,1)}_n(1) by the three-term recurrence
/// n(n+2)P_n = (2n+1)(n+1) z P_{n−1} − n(n+1) P_{n−2}.
pub fn jacobi_p11(n: usize, z: f64) -> Result<f64> {
    if !(z.abs() <= 1.0) {
        return Err(Error::domain(format!("jacobi_p11 needs |z| <= 1, got {z}")));
    }
    Ok(jacobi_unchecked(n, z))
}

fn jacobi_unchecked(n: usize, z: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut pm, mut p) = (1.0, 2.0 * z);
    for k in 2..=n {
        let kf = k as f64;
        let next =
            ((2.0 * kf + 1.0) * (kf + 1.0) * z * p - kf * (kf + 1.0) * pm) / (kf * (kf + 2.0));
        pm = p;
        p = next;
    }
    p / (n as f64 + 1.0)
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("series needs finite t > 0, got {t}")));
    }
    Ok(())
}

fn check_interior(x: f64, what: &str) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain(format!("{what} must lie in (0,1), got {x}")));
    }
    Ok(())
}

fn check_terms(n: usize) -> Result<()> {
    if n == 0 || n > MAX_TERMS {
        return Err(Error::usage(format!(
            "n_terms must lie in 1..={MAX_TERMS}, got {n}"
        )));
    }
    Ok(())
}

fn mode_weight(k: usize) -> f64 {
    let k = k as f64;
    k * (k + 1.0) * (2.0 * k + 1.0)
}

/// Magnitude bound e^{−λ_k t}·k(k+1)(2k+1) for mode k.
pub fn mode_bound(t: f64, k: usize) -> f64 {
    let kf = k as f64;
    (-0.5 * kf * (kf + 1.0) * t).exp() * mode_weight(k)
}

/// Σ_{k > n_terms} of [`mode_bound`]: bounds the truncation error of the
/// series at any interior (x, y).
pub fn density_tail_bound(t: f64, n_terms: usize) -> Result<f64> {
    check_time(t)?;
    let mut sum = 0.0;
    let mut k = n_terms + 1;
    loop {
        let b = mode_bound(t, k);
        sum += b;
        // Past the peak the bounds decay faster than geometrically.
        if (k as f64) * t > 2.0 && b <= 1e-17 * sum.max(f64::MIN_POSITIVE) {
            break;
        }
        if b == 0.0 && (k as f64) * t > 2.0 {
            break;
        }
        k += 1;
    }
    Ok(sum)
}

/// Smallest `n_terms` whose tail bound is below `tol`.
pub fn density_terms_for_tolerance(t: f64, tol: f64) -> Result<usize> {
    check_time(t)?;
    if !(tol > 0.0) {
        return Err(Error::usage(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    (1..=MAX_TERMS)
        .find(|&n| density_tail_bound(t, n).is_ok_and(|b| b < tol))
        .ok_or_else(|| Error::Numerical(format!("more than {MAX_TERMS} terms needed at t = {t}")))
}

fn series(t: f64, x: f64, y: f64, n_terms: usize) -> f64 {
    let (zx, zy) = (1.0 - 2.0 * x, 1.0 - 2.0 * y);
    let hx = x * (1.0 - x);
    // φ_k(y)/(y(1−y)) = P̂_{k−1}(1−2y): no division needed.
    (1..=n_terms)
        .map(|k| {
            let kf = k as f64;
            (-0.5 * kf * (kf + 1.0) * t).exp()
                * mode_weight(k)
                * hx
                * jacobi_unchecked(k - 1, zx)
                * jacobi_unchecked(k - 1, zy)
        })
        .sum()
}

/// Truncated series for the transition density of surviving paths, floored
/// at 0.
pub fn transition_density(t: f64, x: f64, y: f64, n_terms: usize) -> Result<f64> {
    check_time(t)?;
    check_interior(x, "x")?;
    check_interior(y, "y")?;
    check_terms(n_terms)?;
    Ok(series(t, x, y, n_terms).max(0.0))
}

/// ∫₀¹ ρ(t, x, y) dy by adaptive quadrature: the survival probability.
pub fn density_mass(t: f64, x: f64, n_terms: usize) -> Result<f64> {
    check_time(t)?;
    check_interior(x, "x")?;
    check_terms(n_terms)?;
    let q = integrate(
        |y| series(t, x, y, n_terms).max(0.0),
        0.0,
        1.0,
        1e-10,
        1e-14,
        2000,
    )?;
    Ok(q.value)
}

/// Probability mass of each bin `[edges[i], edges[i+1]]` under ρ(t, x, ·).
pub fn binned_density(t: f64, x: f64, edges: &[f64], n_terms: usize) -> Result<Vec<f64>> {
    check_time(t)?;
    check_interior(x, "x")?;
    check_terms(n_terms)?;
    if edges.len() < 2
        || edges.windows(2).any(|w| !(w[1] > w[0]))
        || edges[0] < 0.0
        || edges[edges.len() - 1] > 1.0
    {
        return Err(Error::usage("bin edges must be increasing within [0,1]"));
    }
    edges
        .windows(2)
        .map(|w| {
            integrate(
                |y| series(t, x, y, n_terms).max(0.0),
                w[0],
                w[1],
                1e-10,
                1e-15,
                2000,
            )
            .map(|q| q.value)
        })
        .collect()
}

/// Σ_{n=1}^{n_terms} e^{−n(n+1)t} n(n+1)(2n+1), the series bounding
/// E[√(M̃_t(1−M̃_t))].
pub fn moment_series_bound(t: f64, n_terms: usize) -> Result<f64> {
    check_time(t)?;
    check_terms(n_terms)?;
    Ok((1..=n_terms)
        .map(|n| {
            let nf = n as f64;
            (-nf * (nf + 1.0) * t).exp() * mode_weight(n)
        })
        .sum())
}

/// Per-bin comparison of simulated survivors against the series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityBin {
    pub lo: f64,
    pub hi: f64,
    /// Mass-normalised series probability.
    pub expected: f64,
    /// Fraction of survivors in the bin.
    pub observed: f64,
    /// Binomial standard error √(p(1−p)/n_survivors).
    pub std_error: f64,
}

impl DensityBin {
    pub fn z(&self) -> f64 {
        if self.std_error == 0.0 {
            if self.observed == self.expected {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.observed - self.expected) / self.std_error
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityComparison {
    pub t: f64,
    pub x0: f64,
    pub n_terms: usize,
    /// Tail bound of the truncated series.
    pub tail_bound: f64,
    /// Series mass ∫ρ dy (survival probability).
    pub series_mass: f64,
    pub n_paths: usize,
    pub survivors: usize,
    pub bins: Vec<DensityBin>,
}

impl DensityComparison {
    pub fn max_abs_z(&self) -> f64 {
        self.bins.iter().map(|b| b.z().abs()).fold(0.0, f64::max)
    }

    pub fn survival_fraction(&self) -> f64 {
        self.survivors as f64 / self.n_paths as f64
    }
}

/// Histogram `survivors` (interior terminal states at time `t`) into
/// `n_bins` equal bins and compare with the mass-normalised series.
pub fn compare_density(
    t: f64,
    x0: f64,
    survivors: &[f64],
    n_paths: usize,
    n_bins: usize,
    tol: f64,
) -> Result<DensityComparison> {
    if n_bins == 0 {
        return Err(Error::usage("n_bins must be positive"));
    }
    if survivors.is_empty() {
        return Err(Error::Simulation("no surviving paths to histogram".into()));
    }
    let n_terms = density_terms_for_tolerance(t, tol)?;
    let tail_bound = density_tail_bound(t, n_terms)?;
    let edges: Vec<f64> = (0..=n_bins).map(|i| i as f64 / n_bins as f64).collect();
    let probs = binned_density(t, x0, &edges, n_terms)?;
    let total: f64 = probs.iter().sum();
    let mut counts = vec![0usize; n_bins];
    for &y in survivors {
        let b = ((y * n_bins as f64) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let n = survivors.len() as f64;
    let bins = edges
        .windows(2)
        .zip(probs.iter().zip(&counts))
        .map(|(w, (&p, &c))| {
            let expected = p / total;
            DensityBin {
                lo: w[0],
                hi: w[1],
                expected,
                observed: c as f64 / n,
                std_error: (expected * (1.0 - expected) / n).sqrt(),
            }
        })
        .collect();
    Ok(DensityComparison {
        t,
        x0,
        n_terms,
        tail_bound,
        series_mass: total,
        n_paths,
        survivors: survivors.len(),
        bins,
    })
}

/// Simulate the standard diffusion from `x0` to `t` and compare its
/// survivor histogram with the series.
pub fn density_vs_monte_carlo(
    t: f64,
    x0: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
    n_bins: usize,
) -> Result<DensityComparison> {
    check_time(t)?;
    check_interior(x0, "x0")?;
    let terminal = super::map_standard_wf(x0, t, dt, n_paths, seed, |p| {
        (!p.is_absorbed()).then(|| p.terminal_state())
    })?;
    let survivors: Vec<f64> = terminal.into_iter().flatten().collect();
    compare_density(t, x0, &survivors, n_paths, n_bins, 1e-12)
}
