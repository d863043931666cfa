//! Martingale and moment diagnostics for simulated ensembles.

use serde::Serialize;

use super::{map_scaled_wf, PathEnsemble, SamplePath, WfRun};
use crate::entropy::{estimate, DivergenceEstimate, Power};
use crate::error::{Error, Result};
use crate::stats::MeanVar;

/// Ensemble mean of a path statistic at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointStat {
    pub t: f64,
    pub mean: f64,
    pub std_error: f64,
    pub reference: f64,
    pub z: f64,
}

fn z_score(mean: f64, se: f64, reference: f64) -> f64 {
    let d = mean - reference;
    if se > 0.0 {
        d / se
    } else if d.abs() <= 1e-14 * reference.abs().max(1.0) {
        0.0
    } else {
        d.signum() * f64::INFINITY
    }
}

fn check_checkpoints(checkpoints: &[f64], t0: f64, horizon: f64) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::usage("at least one checkpoint is required"));
    }
    for &t in checkpoints {
        if !(t >= t0 && t < horizon) {
            return Err(Error::usage(format!(
                "checkpoint {t} outside the simulated window [{t0}, {horizon})"
            )));
        }
    }
    Ok(())
}

/// Reduce per-path rows (one value per checkpoint) to checkpoint statistics.
pub fn checkpoint_stats(
    rows: &[Vec<f64>],
    checkpoints: &[f64],
    reference: f64,
) -> Vec<CheckpointStat> {
    checkpoints
        .iter()
        .enumerate()
        .map(|(c, &t)| {
            let acc: MeanVar = rows.iter().map(|r| r[c]).collect();
            let (mean, se) = (acc.mean(), acc.std_error());
            CheckpointStat {
                t,
                mean,
                std_error: se,
                reference,
                z: z_score(mean, se, reference),
            }
        })
        .collect()
}

/// Σ in force at each checkpoint (0 once absorbed).
pub fn sigma_at_checkpoints(path: &SamplePath, checkpoints: &[f64]) -> Vec<f64> {
    checkpoints
        .iter()
        .map(|&t| path.sigma_at(t).unwrap_or(0.0))
        .collect()
}

/// State at each checkpoint.
pub fn state_at_checkpoints(path: &SamplePath, checkpoints: &[f64]) -> Vec<f64> {
    checkpoints
        .iter()
        .map(|&t| path.state_at(t).unwrap_or(f64::NAN))
        .collect()
}

/// Compare the ensemble mean of Σ_t with x0(1−x0)/(1−t0), which the scaled
/// Wright–Fisher diffusion keeps constant.
pub fn sigma_martingale_check(
    ens: &PathEnsemble,
    checkpoints: &[f64],
) -> Result<Vec<CheckpointStat>> {
    if ens.is_empty() {
        return Err(Error::usage("empty ensemble"));
    }
    check_checkpoints(checkpoints, ens.t0, ens.horizon)?;
    let rows: Vec<Vec<f64>> = ens
        .paths
        .iter()
        .map(|p| sigma_at_checkpoints(p, checkpoints))
        .collect();
    let reference = ens.x0 * (1.0 - ens.x0) / (1.0 - ens.t0);
    Ok(checkpoint_stats(&rows, checkpoints, reference))
}

/// Streaming form of [`sigma_martingale_check`]: paths are simulated,
/// reduced to their checkpoint values and dropped.
pub fn sigma_martingale_check_run(run: &WfRun, checkpoints: &[f64]) -> Result<Vec<CheckpointStat>> {
    if run.n_paths == 0 {
        return Err(Error::usage("n_paths must be positive"));
    }
    check_checkpoints(checkpoints, run.t0, run.horizon())?;
    let rows = map_scaled_wf(run, |p| sigma_at_checkpoints(&p, checkpoints))?;
    let reference = run.x0 * (1.0 - run.x0) / (1.0 - run.t0);
    Ok(checkpoint_stats(&rows, checkpoints, reference))
}

/// Compare the ensemble mean of X_t with x0.
pub fn martingale_check(ens: &PathEnsemble, checkpoints: &[f64]) -> Result<Vec<CheckpointStat>> {
    if ens.is_empty() {
        return Err(Error::usage("empty ensemble"));
    }
    check_checkpoints(checkpoints, ens.t0, ens.horizon + 1e-12)?;
    let rows: Vec<Vec<f64>> = ens
        .paths
        .iter()
        .map(|p| state_at_checkpoints(p, checkpoints))
        .collect();
    Ok(checkpoint_stats(&rows, checkpoints, ens.x0))
}

/// E[∫ Σ^q dt] up to 1 − eps.
pub fn p_moment_estimate(ens: &PathEnsemble, q: f64, eps: f64) -> Result<DivergenceEstimate> {
    estimate(ens, &Power::moment(q)?, eps)
}
