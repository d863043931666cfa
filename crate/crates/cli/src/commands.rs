//! The command registry: every subcommand is a named strategy with its own
//! parameter list and a single library entry point.

use winmart::closed_form::{
    hjb_refinement, hjb_residual, optimal_volatility, value_function, SpaceTimePoint,
};
use winmart::entropy::deterministic_divergence;
use winmart::entropy::{
    integrand_reciprocal, path_value, DivergenceEstimate, Integrand, IntegrandRegistry,
    VarianceSample, VolatilityRegistry,
};
use winmart::multidim::{
    map_simplex, md_path_value, perturbation_search, vertex_distance, SearchOptions, SimplexRun,
    SimplexState, SimplexWrightFisher, VERTEX_RADIUS,
};
use winmart::pde::{dp_refinement_study, solve_dp, solve_stationary, DpSpec, StationarySolveSpec};
use winmart::stats::MeanVar;
use winmart::trinomial::{one_step_kl, scaled_path_entropy, TrinomialSpec};
use winmart::wf::{
    density_mass, density_tail_bound, density_terms_for_tolerance, density_vs_monte_carlo,
    map_scaled_wf, moment_series_bound, reciprocity_check_with, sigma_martingale_check_run,
    simulate_scaled_wf, simulate_standard_wf, transition_density, StateVolatility, StepPolicy,
    WfRun,
};
use winmart::{Error, Result};

use crate::output::{Artifact, Cell, Outcome, Table};
use crate::params::{optional, param, Kind, ParamSpec, Params};

pub trait Command: Send + Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    fn params(&self) -> Vec<ParamSpec>;
    fn run(&self, p: &Params) -> Result<Outcome>;
}

struct Simple {
    name: &'static str,
    about: &'static str,
    params: fn() -> Vec<ParamSpec>,
    run: fn(&Params) -> Result<Outcome>,
}

impl Command for Simple {
    fn name(&self) -> &'static str {
        self.name
    }
    fn about(&self) -> &'static str {
        self.about
    }
    fn params(&self) -> Vec<ParamSpec> {
        (self.params)()
    }
    fn run(&self, p: &Params) -> Result<Outcome> {
        (self.run)(p)
    }
}

pub struct Registry {
    commands: Vec<Box<dyn Command>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            commands: Vec::new(),
        }
    }

    pub fn register(&mut self, cmd: Box<dyn Command>) {
        assert!(
            self.commands.iter().all(|c| c.name() != cmd.name()),
            "duplicate command {}",
            cmd.name()
        );
        self.commands.push(cmd);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Command> {
        self.commands
            .iter()
            .find(|c| c.name() == name)
            .map(|c| c.as_ref())
            .ok_or_else(|| Error::Usage(format!("unknown command '{name}'")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Command> {
        self.commands.iter().map(|c| c.as_ref())
    }
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Self::empty();
        let mut add = |name, about, params, run| {
            r.register(Box::new(Simple {
                name,
                about,
                params,
                run,
            }))
        };
        add(
            "value",
            "Closed-form value function v(t, x)",
            point_params,
            value,
        );
        add(
            "sigma-star",
            "Optimal volatility x(1-x)/(1-t)",
            point_params,
            sigma_star,
        );
        add(
            "hjb-residual",
            "Finite-difference HJB residual of the closed form",
            hjb_params,
            hjb,
        );
        add(
            "stationary-solve",
            "Two-point solve for the stationary profile",
            stationary_params,
            stationary,
        );
        add(
            "dp-solve",
            "Explicit dynamic-programming solve of the control problem",
            dp_params,
            dp_solve,
        );
        add(
            "dp-refine",
            "Grid refinement study of the DP solver",
            dp_refine_params,
            dp_refine,
        );
        add(
            "simulate",
            "Simulate a Wright-Fisher ensemble",
            simulate_params,
            simulate,
        );
        add(
            "entropy",
            "Monte Carlo divergence along the scaled Wright-Fisher diffusion",
            entropy_params,
            entropy,
        );
        add(
            "p-divergence",
            "Monte Carlo specific p-Wasserstein divergence",
            p_divergence_params,
            p_divergence,
        );
        add(
            "p-derivative",
            "Difference quotients in p at p = 2",
            p_derivative_params,
            p_derivative,
        );
        add(
            "sigma-martingale",
            "Mean instantaneous variance at checkpoints",
            sigma_martingale_params,
            sigma_martingale,
        );
        add(
            "moment",
            "E[int Sigma^q dt] at one or more time cutoffs",
            moment_params,
            moment,
        );
        add(
            "density",
            "Transition density series of the standard diffusion",
            density_params,
            density,
        );
        add(
            "density-vs-mc",
            "Series density against a Monte Carlo histogram",
            density_mc_params,
            density_mc,
        );
        add(
            "trinomial",
            "Trinomial-tree entropy and its scaling limit",
            trinomial_params,
            trinomial,
        );
        add(
            "counterexample",
            "Divergences of a deterministic volatility profile",
            counterexample_params,
            counterexample,
        );
        add(
            "reciprocity",
            "Both sides of the reversed-roles identity",
            reciprocity_params,
            reciprocity,
        );
        add(
            "md-entropy",
            "Matrix entropy of the simplex Wright-Fisher diffusion",
            md_entropy_params,
            md_entropy,
        );
        add(
            "md-search",
            "Search over perturbed simplex volatilities",
            md_search_params,
            md_search,
        );
        r
    }
}

// Shared parameter groups.

fn sim_params(paths: &'static str) -> Vec<ParamSpec> {
    vec![
        param("x0", Kind::Real, "0.5", "initial state"),
        param("t0", Kind::Real, "0", "initial time"),
        param("eps", Kind::Real, "1e-2", "simulate up to time 1 - eps"),
        param("dt", Kind::Real, "1e-3", "base time step"),
        param(
            "adaptive",
            Kind::Flag,
            "true",
            "shrink steps as min(dt, 0.1(1-t)) near t = 1",
        ),
        param("paths", Kind::Count, paths, "number of paths"),
        param("seed", Kind::Seed, "2024", "master seed"),
    ]
}

fn with(mut base: Vec<ParamSpec>, extra: &[ParamSpec]) -> Vec<ParamSpec> {
    base.extend_from_slice(extra);
    base
}

fn policy(p: &Params) -> Result<StepPolicy> {
    let dt = p.real("dt")?;
    Ok(if p.flag("adaptive")? {
        StepPolicy::adaptive(dt)
    } else {
        StepPolicy::fixed(dt)
    })
}

fn wf_run(p: &Params) -> Result<WfRun> {
    Ok(WfRun::new(
        p.real("x0")?,
        p.real("t0")?,
        p.real("eps")?,
        policy(p)?,
        p.count("paths")?,
        p.seed("seed")?,
    ))
}

/// Evaluate several `(integrand, cutoff)` functionals on one streamed ensemble.
fn stream_estimates(
    run: &WfRun,
    evals: &[(&dyn Integrand, f64)],
) -> Result<Vec<DivergenceEstimate>> {
    if let Some((_, c)) = evals.iter().find(|(_, c)| *c < run.eps) {
        return Err(Error::Usage(format!(
            "cutoff {c} is below the simulated eps {}",
            run.eps
        )));
    }
    let rows = map_scaled_wf(run, |path| {
        evals
            .iter()
            .map(|(g, c)| path_value(&path, *g, *c))
            .collect::<Vec<f64>>()
    })?;
    evals
        .iter()
        .enumerate()
        .map(|(k, (g, c))| {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            DivergenceEstimate::from_values(&col, *c, g.flavor())
        })
        .collect()
}

const ESTIMATE_COLUMNS: [&str; 6] = [
    "quantity",
    "parameter",
    "cutoff",
    "value",
    "std_error",
    "n_paths",
];

fn estimate_row(quantity: &str, parameter: Option<f64>, e: &DivergenceEstimate) -> Vec<Cell> {
    vec![
        quantity.into(),
        parameter.into(),
        e.time_cutoff_eps.into(),
        e.value.into(),
        e.std_error.into(),
        e.n_paths.into(),
    ]
}

fn pm(e: &DivergenceEstimate) -> String {
    format!("{} +- {}", e.value, e.std_error)
}

// Closed form.

fn point_params() -> Vec<ParamSpec> {
    vec![
        param("t", Kind::Real, "0", "time, below 1"),
        optional("x", Kind::Real, "state in [0,1] (required)"),
    ]
}

fn point(p: &Params) -> Result<SpaceTimePoint> {
    SpaceTimePoint::new(p.real("t")?, p.real("x")?)
}

fn value(p: &Params) -> Result<Outcome> {
    let pt = point(p)?;
    let v = value_function(pt);
    let mut t = Table::new(&["t", "x", "value"]);
    t.push(vec![pt.t().into(), pt.x().into(), v.into()]);
    Ok(Outcome::table(t).line("value", v))
}

fn sigma_star(p: &Params) -> Result<Outcome> {
    let pt = point(p)?;
    let s = optimal_volatility(pt);
    let mut t = Table::new(&["t", "x", "sigma_star"]);
    t.push(vec![pt.t().into(), pt.x().into(), s.into()]);
    Ok(Outcome::table(t).line("sigma_star", s))
}

fn hjb_params() -> Vec<ParamSpec> {
    vec![
        param("t0", Kind::Real, "0", "first time node"),
        param("eps", Kind::Real, "0.1", "last time node is 1 - eps"),
        param("n-x", Kind::Count, "64", "space intervals"),
        param("n-t", Kind::Count, "64", "time intervals"),
        param(
            "levels",
            Kind::Count,
            "1",
            "grid doublings to tabulate; 1 writes the residual grid",
        ),
    ]
}

fn hjb(p: &Params) -> Result<Outcome> {
    let (t0, eps, nx, nt, levels) = (
        p.real("t0")?,
        p.real("eps")?,
        p.count("n-x")?,
        p.count("n-t")?,
        p.count("levels")?,
    );
    if levels <= 1 {
        let g = hjb_residual(t0, eps, nx, nt)?;
        let mut t = Table::new(&["t", "x", "residual"]);
        for (tt, x, r) in g.iter() {
            t.push(vec![tt.into(), x.into(), r.into()]);
        }
        return Ok(Outcome::table(t).line("max_abs_residual", g.max_abs()));
    }
    let rows = hjb_refinement(t0, eps, nx, nt, levels)?;
    let mut t = Table::new(&["n_x", "n_t", "max_abs_residual", "order"]);
    let mut out = Outcome::table(Table::new(&[]));
    for r in &rows {
        t.push(vec![
            r.n_x.into(),
            r.n_t.into(),
            r.max_abs.into(),
            r.order.into(),
        ]);
        out = out.line(&format!("max_abs_residual[{}x{}]", r.n_x, r.n_t), r.max_abs);
        if let Some(o) = r.order {
            out = out.line(&format!("order[{}x{}]", r.n_x, r.n_t), o);
        }
    }
    out.artifact = Artifact::Table(t);
    Ok(out)
}

fn stationary_params() -> Vec<ParamSpec> {
    vec![param("n-x", Kind::Count, "1000", "space intervals")]
}

fn stationary(p: &Params) -> Result<Outcome> {
    let g = solve_stationary(StationarySolveSpec::new(p.count("n-x")?)?)?;
    let mut t = Table::new(&["x", "value", "exact", "error"]);
    let mut max_err: f64 = 0.0;
    let mut mid = None;
    for (_, x, v) in g.iter() {
        let exact = winmart::closed_form::stationary_profile(x)?;
        max_err = max_err.max((v - exact).abs());
        if x == 0.5 {
            mid = Some(v);
        }
        t.push(vec![x.into(), v.into(), exact.into(), (v - exact).into()]);
    }
    let mut out = Outcome::table(t).line("max_abs_error", max_err);
    if let Some(m) = mid {
        out = out.line("value_at_0.5", m);
    }
    Ok(out)
}

// Dynamic programming.

fn dp_params() -> Vec<ParamSpec> {
    vec![
        param("n-x", Kind::Count, "200", "space intervals"),
        param("eps", Kind::Real, "1e-2", "terminal time is 1 - eps"),
        optional(
            "n-t",
            Kind::Count,
            "time steps (default: CFL cap of about 2/(e eps))",
        ),
        optional(
            "penalty-k",
            Kind::Real,
            "terminal penalty K in K x(1-x) (default: -log(eps)/2)",
        ),
        param("t0", Kind::Real, "0", "initial time"),
        optional(
            "sigma-max",
            Kind::Real,
            "control cap (default: CFL bound dx^2/dt)",
        ),
        param("slices", Kind::Count, "64", "stored time slices"),
    ]
}

fn dp_solve(p: &Params) -> Result<Outcome> {
    let mut spec = DpSpec::with_defaults(p.count("n-x")?, p.real("eps")?)?;
    if let Some(nt) = p.opt_count("n-t")? {
        spec.n_t = nt;
    }
    if let Some(k) = p.opt_real("penalty-k")? {
        spec.penalty_k = k;
    }
    spec.t0 = p.real("t0")?;
    spec.sigma_max = p.opt_real("sigma-max")?;
    spec.n_slices = p.count("slices")?;
    let sol = solve_dp(&spec)?;
    let mut t = Table::new(&["t", "x", "value", "sigma_policy"]);
    let vs = &sol.value_slices;
    let pol = &sol.policy.grid;
    for j in 0..vs.nt() {
        let tt = vs.t.as_ref().expect("slices carry times")[j];
        for i in 0..vs.nx() {
            // The terminal row has no control.
            let s = if j < pol.nt() { pol.at(j, i) } else { f64::NAN };
            t.push(vec![
                tt.into(),
                vs.x[i].into(),
                vs.at(j, i).into(),
                s.into(),
            ]);
        }
    }
    let gap = sol
        .value
        .iter()
        .map(|(_, x, v)| SpaceTimePoint::new(spec.t0, x).map(|pt| (v - value_function(pt)).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Outcome::table(t)
        .line("n_t", spec.n_t)
        .line("cap", spec.cap())
        .line("clamped_updates", sol.clamped_updates)
        .line("max_abs_gap_to_closed_form", gap))
}

fn dp_refine_params() -> Vec<ParamSpec> {
    vec![
        param("n-x", Kind::Count, "25", "coarsest space intervals"),
        param("eps", Kind::Real, "1e-2", "terminal time is 1 - eps"),
        param(
            "levels",
            Kind::Count,
            "4",
            "levels; n_x doubles and n_t quadruples per level",
        ),
    ]
}

fn dp_refine(p: &Params) -> Result<Outcome> {
    let specs = DpSpec::refinement_ladder(p.count("n-x")?, p.real("eps")?, p.count("levels")?)?;
    let rows = dp_refinement_study(&specs)?;
    let mut t = Table::new(&[
        "n_x",
        "n_t",
        "gap_to_previous",
        "gap_to_closed_form",
        "boundary_zero",
    ]);
    let mut out = Outcome::table(Table::new(&[]));
    for r in &rows {
        t.push(vec![
            r.n_x.into(),
            r.n_t.into(),
            r.gap_to_previous.into(),
            r.gap_to_closed_form.into(),
            r.boundary_zero.into(),
        ]);
        out = out.line(
            &format!("gap_to_closed_form[{}]", r.n_x),
            r.gap_to_closed_form,
        );
        if let Some(g) = r.gap_to_previous {
            out = out.line(&format!("gap_to_previous[{}]", r.n_x), g);
        }
    }
    out.artifact = Artifact::Table(t);
    Ok(out)
}

// Wright–Fisher.

fn simulate_params() -> Vec<ParamSpec> {
    with(
        sim_params("1000"),
        &[
            param("model", Kind::Text, "scaled-wf", "scaled-wf or standard-wf"),
            param(
                "horizon",
                Kind::Real,
                "1",
                "time horizon (standard-wf only)",
            ),
        ],
    )
}

fn simulate(p: &Params) -> Result<Outcome> {
    let ens = match p.text("model")? {
        "scaled-wf" => simulate_scaled_wf(&wf_run(p)?)?,
        "standard-wf" => simulate_standard_wf(
            p.real("x0")?,
            p.real("horizon")?,
            p.real("dt")?,
            p.count("paths")?,
            p.seed("seed")?,
        )?,
        other => {
            return Err(Error::Usage(format!(
                "unknown model '{other}' (scaled-wf, standard-wf)"
            )))
        }
    };
    let absorbed = ens.absorbed_fraction();
    let n = ens.len();
    let scheme = ens.scheme.clone();
    Ok(Outcome::new(Artifact::Ensemble(Box::new(ens)))
        .line("paths", n)
        .line("absorbed_fraction", absorbed)
        .line("scheme", scheme))
}

fn entropy_params() -> Vec<ParamSpec> {
    with(
        sim_params("10000"),
        &[
            param(
                "integrand",
                Kind::Text,
                "reciprocal",
                "reciprocal, specific, log-moment, p-wasserstein, moment, p-quotient",
            ),
            optional(
                "param",
                Kind::Real,
                "p or q for the parametrised integrands",
            ),
        ],
    )
}

fn entropy(p: &Params) -> Result<Outcome> {
    let name = p.text("integrand")?;
    let g = IntegrandRegistry::default().build(name, p.opt_real("param")?)?;
    let run = wf_run(p)?;
    let e = stream_estimates(&run, &[(g.as_ref(), run.eps)])?.remove(0);
    let mut t = Table::new(&ESTIMATE_COLUMNS);
    t.push(estimate_row(name, p.opt_real("param")?, &e));
    Ok(Outcome::table(t).line(name, pm(&e)))
}

fn p_divergence_params() -> Vec<ParamSpec> {
    with(
        sim_params("10000"),
        &[param(
            "p",
            Kind::Real,
            "3",
            "exponent p > 0 (integrand Sigma^(p/2))",
        )],
    )
}

fn p_divergence(p: &Params) -> Result<Outcome> {
    let pp = p.real("p")?;
    let g = IntegrandRegistry::default().build("p-wasserstein", Some(pp))?;
    let run = wf_run(p)?;
    let e = stream_estimates(&run, &[(g.as_ref(), run.eps)])?.remove(0);
    let mut t = Table::new(&ESTIMATE_COLUMNS);
    t.push(estimate_row("p-wasserstein", Some(pp), &e));
    Ok(Outcome::table(t).line("p_divergence", pm(&e)))
}

fn p_derivative_params() -> Vec<ParamSpec> {
    with(
        sim_params("10000"),
        &[param("p", Kind::Reals, "2.1,2.05,2.01", "exponents p > 2")],
    )
}

fn p_derivative(p: &Params) -> Result<Outcome> {
    let reg = IntegrandRegistry::default();
    let ps = p.reals("p")?;
    let run = wf_run(p)?;
    let mut gs = ps
        .iter()
        .map(|&pp| reg.build("p-quotient", Some(pp)))
        .collect::<Result<Vec<_>>>()?;
    gs.push(reg.build("log-moment", None)?);
    let evals: Vec<(&dyn Integrand, f64)> = gs.iter().map(|g| (g.as_ref(), run.eps)).collect();
    let ests = stream_estimates(&run, &evals)?;
    let mut t = Table::new(&ESTIMATE_COLUMNS);
    let mut out = Outcome::table(Table::new(&[]));
    for (pp, e) in ps.iter().zip(&ests) {
        t.push(estimate_row("p-quotient", Some(*pp), e));
        out = out.line(&format!("quotient[p={pp}]"), pm(e));
    }
    let lm = ests.last().expect("log-moment appended");
    t.push(estimate_row("log-moment", None, lm));
    out = out.line("log_moment", pm(lm));
    out.artifact = Artifact::Table(t);
    Ok(out)
}

fn sigma_martingale_params() -> Vec<ParamSpec> {
    with(
        sim_params("10000"),
        &[param(
            "checkpoints",
            Kind::Reals,
            "0.25,0.5,0.75,0.9",
            "checkpoint times",
        )],
    )
}

fn sigma_martingale(p: &Params) -> Result<Outcome> {
    let stats = sigma_martingale_check_run(&wf_run(p)?, &p.reals("checkpoints")?)?;
    let mut t = Table::new(&["t", "mean", "std_error", "reference", "z"]);
    for s in &stats {
        t.push(vec![
            s.t.into(),
            s.mean.into(),
            s.std_error.into(),
            s.reference.into(),
            s.z.into(),
        ]);
    }
    let worst = stats.iter().map(|s| s.z.abs()).fold(0.0, f64::max);
    Ok(Outcome::table(t).line("max_abs_z", worst))
}

fn moment_params() -> Vec<ParamSpec> {
    with(
        sim_params("10000"),
        &[
            param("q", Kind::Real, "1.5", "moment exponent q > 0"),
            optional(
                "cutoffs",
                Kind::Reals,
                "time cutoffs, each >= eps (default: eps)",
            ),
        ],
    )
}

fn moment(p: &Params) -> Result<Outcome> {
    let q = p.real("q")?;
    let g = IntegrandRegistry::default().build("moment", Some(q))?;
    let run = wf_run(p)?;
    let cutoffs = p.opt_reals("cutoffs")?.unwrap_or_else(|| vec![run.eps]);
    let evals: Vec<(&dyn Integrand, f64)> = cutoffs.iter().map(|&c| (g.as_ref(), c)).collect();
    let ests = stream_estimates(&run, &evals)?;
    let mut t = Table::new(&ESTIMATE_COLUMNS);
    let mut out = Outcome::table(Table::new(&[]));
    for e in &ests {
        t.push(estimate_row("moment", Some(q), e));
        out = out.line(&format!("moment[eps={}]", e.time_cutoff_eps), pm(e));
    }
    out.artifact = Artifact::Table(t);
    Ok(out)
}

fn density_params() -> Vec<ParamSpec> {
    vec![
        param("t", Kind::Real, "0.5", "time > 0"),
        param("x", Kind::Real, "0.5", "initial state in (0,1)"),
        param(
            "points",
            Kind::Count,
            "99",
            "evaluation points y = k/(points+1)",
        ),
        param("tol", Kind::Real, "1e-12", "series truncation tolerance"),
    ]
}

fn density(p: &Params) -> Result<Outcome> {
    let (tt, x, n, tol) = (
        p.real("t")?,
        p.real("x")?,
        p.count("points")?,
        p.real("tol")?,
    );
    if n == 0 {
        return Err(Error::Usage("points must be positive".into()));
    }
    let terms = density_terms_for_tolerance(tt, tol)?;
    let mut t = Table::new(&["y", "density"]);
    for k in 1..=n {
        let y = k as f64 / (n + 1) as f64;
        t.push(vec![y.into(), transition_density(tt, x, y, terms)?.into()]);
    }
    Ok(Outcome::table(t)
        .line("n_terms", terms)
        .line("tail_bound", density_tail_bound(tt, terms)?)
        .line("mass", density_mass(tt, x, terms)?)
        .line("moment_series_bound", moment_series_bound(tt, terms)?))
}

fn density_mc_params() -> Vec<ParamSpec> {
    vec![
        param("t", Kind::Real, "0.5", "time > 0"),
        param("x0", Kind::Real, "0.5", "initial state in (0,1)"),
        param("dt", Kind::Real, "1e-4", "time step"),
        param("paths", Kind::Count, "10000", "number of paths"),
        param("seed", Kind::Seed, "2024", "master seed"),
        param("bins", Kind::Count, "20", "histogram bins on [0,1]"),
    ]
}

fn density_mc(p: &Params) -> Result<Outcome> {
    let c = density_vs_monte_carlo(
        p.real("t")?,
        p.real("x0")?,
        p.real("dt")?,
        p.count("paths")?,
        p.seed("seed")?,
        p.count("bins")?,
    )?;
    let mut t = Table::new(&["lo", "hi", "expected", "observed", "std_error", "z"]);
    for b in &c.bins {
        t.push(vec![
            b.lo.into(),
            b.hi.into(),
            b.expected.into(),
            b.observed.into(),
            b.std_error.into(),
            b.z().into(),
        ]);
    }
    Ok(Outcome::table(t)
        .line("max_abs_z", c.max_abs_z())
        .line("survival_fraction", c.survival_fraction())
        .line("series_mass", c.series_mass)
        .line("n_terms", c.n_terms)
        .line("tail_bound", c.tail_bound))
}

// Trinomial and deterministic profiles.

fn trinomial_params() -> Vec<ParamSpec> {
    vec![
        param("sigma", Kind::Real, "2", "volatility of the measured tree"),
        param(
            "sigma-bar",
            Kind::Real,
            "10",
            "grid volatility, above sigma and sigma0",
        ),
        param("sigma0", Kind::Real, "1", "reference volatility"),
        param("h", Kind::Real, "1", "step size with 1/h an integer"),
    ]
}

fn trinomial(p: &Params) -> Result<Outcome> {
    let spec = TrinomialSpec::new(
        p.real("h")?,
        p.real("sigma-bar")?,
        p.real("sigma")?,
        p.real("sigma0")?,
    )?;
    let h = scaled_path_entropy(&spec);
    // σ̄ → ∞ limit: σ₀²·(r log r + 1 − r) with r = σ²/σ₀².
    let s0 = spec.sigma0() * spec.sigma0();
    let limit = s0 * integrand_reciprocal(VarianceSample::new(spec.sigma() * spec.sigma() / s0)?);
    let gap = (h - limit).abs();
    let mut t = Table::new(&[
        "sigma",
        "sigma_bar",
        "sigma0",
        "h",
        "one_step_kl",
        "scaled_entropy",
        "limit",
        "gap",
    ]);
    t.push(vec![
        spec.sigma().into(),
        spec.sigma_bar().into(),
        spec.sigma0().into(),
        spec.h().into(),
        one_step_kl(&spec).into(),
        h.into(),
        limit.into(),
        gap.into(),
    ]);
    Ok(Outcome::table(t)
        .line("scaled_entropy", h)
        .line("limit", limit)
        .line("gap", gap))
}

fn counterexample_params() -> Vec<ParamSpec> {
    vec![
        param(
            "profile",
            Kind::Text,
            "log-cubed",
            "deterministic volatility profile: log-cubed or unit",
        ),
        param(
            "integrand",
            Kind::Text,
            "log-moment",
            "integrand name, as for entropy",
        ),
        optional(
            "param",
            Kind::Real,
            "p or q for the parametrised integrands",
        ),
        param(
            "deltas",
            Kind::Reals,
            "1e-3,1e-6,1e-9,0",
            "lower time cutoffs in [0,1)",
        ),
    ]
}

fn counterexample(p: &Params) -> Result<Outcome> {
    let vol = VolatilityRegistry::default().get(p.text("profile")?)?;
    let g = IntegrandRegistry::default().build(p.text("integrand")?, p.opt_real("param")?)?;
    let mut t = Table::new(&["delta", "value"]);
    let mut out = Outcome::table(Table::new(&[]));
    for d in p.reals("deltas")? {
        let v = deterministic_divergence(&vol, g.as_ref(), d)?;
        t.push(vec![d.into(), v.into()]);
        out = out.line(&format!("value[delta={d}]"), v);
    }
    out.artifact = Artifact::Table(t);
    Ok(out)
}

fn reciprocity_params() -> Vec<ParamSpec> {
    vec![
        param("vol", Kind::Text, "sine", "sine (1 + sin(x)/2) or const"),
        param(
            "c",
            Kind::Real,
            "1.6487212707001282",
            "constant volatility for vol = const",
        ),
        param("x0", Kind::Real, "0", "initial state"),
        param("dt", Kind::Real, "1e-3", "time step"),
        param("paths", Kind::Count, "10000", "paths per side"),
        param("seed", Kind::Seed, "2024", "master seed"),
    ]
}

fn reciprocity(p: &Params) -> Result<Outcome> {
    let vol = match p.text("vol")? {
        "sine" => StateVolatility::sine(),
        "const" => StateVolatility::constant(p.real("c")?)?,
        other => {
            return Err(Error::Usage(format!(
                "unknown volatility '{other}' (sine, const)"
            )))
        }
    };
    let r = reciprocity_check_with(
        &vol,
        p.real("x0")?,
        p.count("paths")?,
        p.seed("seed")?,
        p.real("dt")?,
    )?;
    let mut t = Table::new(&["lhs", "lhs_std_error", "rhs", "rhs_std_error", "z"]);
    t.push(vec![
        r.lhs.value.into(),
        r.lhs.std_error.into(),
        r.rhs.value.into(),
        r.rhs.std_error.into(),
        r.z().into(),
    ]);
    Ok(Outcome::table(t)
        .line("lhs", pm(&r.lhs))
        .line("rhs", pm(&r.rhs))
        .line("z", r.z()))
}

// Multidimensional.

fn md_common(paths: &'static str) -> Vec<ParamSpec> {
    vec![
        param(
            "d",
            Kind::Count,
            "2",
            "dimension 1..=4 (start at the barycenter unless x0 is given)",
        ),
        optional("x0", Kind::Reals, "interior starting point"),
        param("eps", Kind::Real, "1e-2", "simulate up to time 1 - eps"),
        param("dt", Kind::Real, "5e-3", "base time step"),
        param("paths", Kind::Count, paths, "number of paths"),
        param("seed", Kind::Seed, "2024", "master seed"),
    ]
}

fn md_start(p: &Params) -> Result<SimplexState> {
    match p.opt_reals("x0")? {
        Some(x) => SimplexState::new(x),
        None => SimplexState::barycenter(p.count("d")?),
    }
}

fn md_entropy_params() -> Vec<ParamSpec> {
    with(
        md_common("1000"),
        &[
            param(
                "adaptive",
                Kind::Flag,
                "true",
                "shrink steps as min(dt, 0.1(1-t)) near t = 1",
            ),
            optional(
                "cutoffs",
                Kind::Reals,
                "time cutoffs, each >= eps (default: eps)",
            ),
        ],
    )
}

fn md_entropy(p: &Params) -> Result<Outcome> {
    let run = SimplexRun::new(
        md_start(p)?,
        policy(p)?,
        p.real("eps")?,
        p.count("paths")?,
        p.seed("seed")?,
    );
    let cutoffs = p.opt_reals("cutoffs")?.unwrap_or_else(|| vec![run.eps]);
    if let Some(c) = cutoffs.iter().find(|&&c| c < run.eps) {
        return Err(Error::Usage(format!(
            "cutoff {c} is below the simulated eps {}",
            run.eps
        )));
    }
    let rows = map_simplex(&SimplexWrightFisher, &run, |path| {
        let v: Vec<f64> = cutoffs.iter().map(|&c| md_path_value(&path, c)).collect();
        (
            v,
            vertex_distance(path.terminal_state()) <= VERTEX_RADIUS,
            path.forced_projections,
        )
    })?;
    let n = rows.len() as f64;
    let near = rows.iter().filter(|r| r.1).count() as f64 / n;
    let forced: u64 = rows.iter().map(|r| u64::from(r.2)).sum();
    let mut t = Table::new(&[
        "cutoff",
        "value",
        "std_error",
        "n_paths",
        "vertex_fraction",
        "forced_projections",
    ]);
    let mut out = Outcome::table(Table::new(&[]));
    for (k, &c) in cutoffs.iter().enumerate() {
        let acc: MeanVar = rows.iter().map(|r| r.0[k]).collect();
        t.push(vec![
            c.into(),
            acc.mean().into(),
            acc.std_error().into(),
            rows.len().into(),
            near.into(),
            forced.into(),
        ]);
        out = out.line(
            &format!("md_entropy[eps={c}]"),
            format!("{} +- {}", acc.mean(), acc.std_error()),
        );
    }
    out.artifact = Artifact::Table(t);
    Ok(out
        .line("vertex_fraction", near)
        .line("forced_projections", forced))
}

fn md_search_params() -> Vec<ParamSpec> {
    with(
        md_common("400"),
        &[
            param(
                "budget",
                Kind::Count,
                "13",
                "maximum candidate evaluations, baseline included",
            ),
            param("step", Kind::Real, "0.2", "initial coordinate step"),
        ],
    )
}

fn md_search(p: &Params) -> Result<Outcome> {
    let x0 = md_start(p)?;
    let mut opts = SearchOptions::new(
        x0.coords().to_vec(),
        p.count("paths")?,
        p.real("eps")?,
        p.real("dt")?,
        p.count("budget")?,
        p.seed("seed")?,
    );
    opts.initial_step = p.real("step")?;
    let report = perturbation_search(&opts)?;
    let mut t = Table::new(&[
        "theta",
        "feasible",
        "value",
        "std_error",
        "vertex_fraction",
        "projected_fraction",
        "forced_projections",
    ]);
    for c in &report.history {
        let theta: Vec<String> = c.theta.iter().map(|v| v.to_string()).collect();
        t.push(vec![
            theta.join(";").into(),
            c.feasible.into(),
            c.value.into(),
            c.std_error.into(),
            c.vertex_fraction.into(),
            c.projected_fraction.into(),
            c.forced_projections.into(),
        ]);
    }
    let json = serde_json::to_value(&report).map_err(|e| Error::Format(e.to_string()))?;
    let fmt = |v: Option<f64>| v.map_or("infeasible".to_string(), |v| v.to_string());
    Ok(Outcome::new(Artifact::Report { json, table: t })
        .line("baseline", fmt(report.baseline.value))
        .line("best", fmt(report.best.value))
        .line("best_theta", format!("{:?}", report.best.theta))
        .line("improvement", report.improvement)
        .line("combined_std_error", report.combined_std_error)
        .line("significant", report.significant)
        .line("evaluations", report.evaluations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn registry_lists_every_command_once() {
        let r = Registry::default();
        let names: BTreeSet<&str> = r.iter().map(|c| c.name()).collect();
        assert_eq!(names.len(), 19);
        for c in r.iter() {
            let params: BTreeSet<&str> = c.params().iter().map(|s| s.name).collect();
            assert_eq!(
                params.len(),
                c.params().len(),
                "duplicate parameter in {}",
                c.name()
            );
        }
        assert!(r.get("nope").is_err());
    }
}
