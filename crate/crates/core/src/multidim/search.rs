use rayon::prelude::*;
use serde::Serialize;

use super::simplex::{
    map_simplex, md_path_value, vertex_distance, PerturbedWrightFisher, SimplexRun, SimplexState,
};
use crate::error::{Error, Result};
use crate::stats::{combined_std_error, MeanVar};
use crate::wf::StepPolicy;

/// Vertex proximity (max-norm) counted as terminating at a vertex.
pub const VERTEX_RADIUS: f64 = 1e-2;
/// Fraction of paths that must end near a vertex for a candidate to count.
pub const VERTEX_FRACTION: f64 = 0.95;
/// Largest fraction of paths allowed to need a forced projection back onto
/// the simplex.
pub const PROJECTED_FRACTION: f64 = 0.01;
/// Improvements must exceed this many combined standard errors.
pub const SIGNIFICANCE: f64 = 3.0;

/// Scalar weight `g(x)` multiplying a diagonal perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeFunction {
    /// 1
    Constant,
    /// Σ x_i
    Mass,
    /// 1 − Σ x_i
    Slack,
}

impl ShapeFunction {
    pub const ALL: [ShapeFunction; 3] = [
        ShapeFunction::Constant,
        ShapeFunction::Mass,
        ShapeFunction::Slack,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeFunction::Constant => "constant",
            ShapeFunction::Mass => "mass",
            ShapeFunction::Slack => "slack",
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            ShapeFunction::Constant => 1.0,
            ShapeFunction::Mass => x.iter().sum(),
            ShapeFunction::Slack => 1.0 - x.iter().sum::<f64>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOptions {
    pub x0: Vec<f64>,
    pub n_paths: usize,
    pub eps: f64,
    pub dt: f64,
    /// Maximum number of candidate evaluations, baseline included.
    pub budget: usize,
    pub seed: u64,
    pub initial_step: f64,
    pub shapes: Vec<ShapeFunction>,
}

impl SearchOptions {
    pub fn new(x0: Vec<f64>, n_paths: usize, eps: f64, dt: f64, budget: usize, seed: u64) -> Self {
        Self {
            x0,
            n_paths,
            eps,
            dt,
            budget,
            seed,
            initial_step: 0.2,
            shapes: ShapeFunction::ALL.to_vec(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::usage("search budget must be positive"));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::usage(format!(
                "initial step must be positive, got {}",
                self.initial_step
            )));
        }
        if self.shapes.is_empty() {
            return Err(Error::usage("at least one shape function is required"));
        }
        Ok(())
    }
}

/// One evaluated perturbation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub theta: Vec<f64>,
    /// False if the covariance became indefinite or paths failed to reach
    /// the vertices; value fields are then absent.
    pub feasible: bool,
    pub reason: Option<String>,
    pub value: Option<f64>,
    pub std_error: Option<f64>,
    pub vertex_fraction: Option<f64>,
    /// Fraction of paths that left the simplex beyond repair by step halving.
    pub projected_fraction: Option<f64>,
    pub forced_projections: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub options: SearchOptions,
    pub baseline: Candidate,
    pub best: Candidate,
    /// Baseline minus best value, positive when the best is lower.
    pub improvement: f64,
    pub combined_std_error: f64,
    /// Improvement above the significance threshold.
    pub significant: bool,
    pub evaluations: usize,
    pub history: Vec<Candidate>,
}

fn evaluate(opts: &SearchOptions, theta: &[f64]) -> Result<Candidate> {
    let model = PerturbedWrightFisher {
        theta: theta.to_vec(),
        shapes: opts.shapes.clone(),
    };
    let run = SimplexRun::new(
        SimplexState::new(opts.x0.clone())?,
        StepPolicy::fixed(opts.dt),
        opts.eps,
        opts.n_paths,
        opts.seed,
    );
    let eps = opts.eps;
    let infeasible = |reason: String| Candidate {
        theta: theta.to_vec(),
        feasible: false,
        reason: Some(reason),
        value: None,
        std_error: None,
        vertex_fraction: None,
        projected_fraction: None,
        forced_projections: 0,
    };
    let outcomes = match map_simplex(&model, &run, |p| {
        (
            md_path_value(&p, eps),
            vertex_distance(p.terminal_state()) <= VERTEX_RADIUS,
            p.forced_projections,
        )
    }) {
        Ok(o) => o,
        Err(Error::Numerical(msg)) => return Ok(infeasible(msg)),
        Err(e) => return Err(e),
    };
    let acc: MeanVar = outcomes.iter().map(|o| o.0).collect();
    let near = outcomes.iter().filter(|o| o.1).count() as f64 / outcomes.len() as f64;
    let forced = outcomes.iter().map(|o| u64::from(o.2)).sum();
    let projected = outcomes.iter().filter(|o| o.2 > 0).count() as f64 / outcomes.len() as f64;
    let reason = if near < VERTEX_FRACTION {
        Some(format!(
            "only {near} of paths end within {VERTEX_RADIUS} of a vertex"
        ))
    } else if projected > PROJECTED_FRACTION {
        Some(format!(
            "{projected} of paths had to be projected back onto the simplex"
        ))
    } else {
        None
    };
    Ok(Candidate {
        theta: theta.to_vec(),
        feasible: reason.is_none(),
        reason,
        value: Some(acc.mean()),
        std_error: Some(acc.std_error()),
        vertex_fraction: Some(near),
        projected_fraction: Some(projected),
        forced_projections: forced,
    })
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    match (a.feasible, a.value, b.value) {
        (true, Some(va), Some(vb)) => va < vb,
        _ => false,
    }
}

/// Coordinate descent over the perturbation weights θ from θ = 0, with
/// common random numbers across candidates. Each sweep tries ±step along
/// every coordinate; the step halves when no move improves.
pub fn perturbation_search(opts: &SearchOptions) -> Result<SearchReport> {
    opts.validate()?;
    let baseline = evaluate(opts, &vec![0.0; opts.shapes.len()])?;
    let mut history = vec![baseline.clone()];
    let mut best = baseline.clone();
    let mut step = opts.initial_step;
    let mut evaluations = 1;
    while evaluations < opts.budget && step > 1e-6 {
        let mut moves = Vec::new();
        for j in 0..opts.shapes.len() {
            for sign in [1.0, -1.0] {
                let mut th = best.theta.clone();
                th[j] += sign * step;
                moves.push(th);
            }
        }
        moves.truncate(opts.budget - evaluations);
        let tried: Vec<Candidate> = moves
            .par_iter()
            .map(|th| evaluate(opts, th))
            .collect::<Result<_>>()?;
        evaluations += tried.len();
        let winner = tried
            .iter()
            .filter(|c| better(c, &best))
            .min_by(|a, b| a.value.partial_cmp(&b.value).expect("finite"));
        match winner {
            Some(c) => best = c.clone(),
            None => step *= 0.5,
        }
        history.extend(tried);
    }
    let (vb, sb) = (
        baseline.value.unwrap_or(f64::NAN),
        baseline.std_error.unwrap_or(f64::NAN),
    );
    let (v, s) = (
        best.value.unwrap_or(f64::NAN),
        best.std_error.unwrap_or(f64::NAN),
    );
    let improvement = vb - v;
    let se = combined_std_error(sb, s);
    Ok(SearchReport {
        options: opts.clone(),
        significant: improvement > SIGNIFICANCE * se,
        baseline,
        best,
        improvement,
        combined_std_error: se,
        evaluations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multidim::{md_reciprocal_entropy, simulate_simplex_wf};

    #[test]
    fn zero_perturbation_reproduces_baseline() {
        let opts = SearchOptions::new(vec![0.3, 0.3], 200, 1e-2, 5e-3, 1, 5);
        let report = perturbation_search(&opts).unwrap();
        let run = SimplexRun::new(
            SimplexState::new(vec![0.3, 0.3]).unwrap(),
            StepPolicy::fixed(5e-3),
            1e-2,
            200,
            5,
        );
        let direct = md_reciprocal_entropy(&simulate_simplex_wf(&run).unwrap(), 1e-2).unwrap();
        assert_eq!(report.baseline.value, Some(direct.value));
        assert_eq!(report.evaluations, 1);
        assert_eq!(report.best, report.baseline);
        assert!(!report.significant);
    }

    #[test]
    fn one_dimensional_search_finds_nothing_significant() {
        let opts = SearchOptions::new(vec![0.5], 400, 1e-2, 5e-3, 13, 11);
        let report = perturbation_search(&opts).unwrap();
        assert!(report.evaluations <= 13);
        assert!(!report.significant, "{:?}", report.best);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"baseline\""));
    }

    #[test]
    fn large_negative_weights_are_infeasible() {
        let opts = SearchOptions::new(vec![0.3, 0.3], 50, 1e-2, 5e-3, 1, 5);
        let c = evaluate(&opts, &[-5.0, 0.0, 0.0]).unwrap();
        assert!(!c.feasible);
    }

    #[test]
    fn outward_perturbations_are_infeasible() {
        // A positive constant weight adds variance across the face Σx = 1.
        let opts = SearchOptions::new(vec![0.3, 0.3], 100, 1e-2, 5e-3, 1, 5);
        let c = evaluate(&opts, &[0.2, 0.0, 0.0]).unwrap();
        assert!(!c.feasible, "{c:?}");
        assert!(c.projected_fraction.unwrap() > PROJECTED_FRACTION);
        let c = evaluate(&opts, &[0.0, 0.0, 0.2]).unwrap();
        assert!(c.feasible, "{c:?}");
    }

    #[test]
    fn shapes_evaluate() {
        let x = [0.2, 0.3];
        assert_eq!(ShapeFunction::Constant.eval(&x), 1.0);
        assert_eq!(ShapeFunction::Mass.eval(&x), 0.5);
        assert_eq!(ShapeFunction::Slack.eval(&x), 0.5);
    }
}
