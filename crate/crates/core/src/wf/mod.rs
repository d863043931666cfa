//! Wright–Fisher and generic scalar diffusions: simulation, diagnostics,
//! transition density and ensemble serialization.

pub mod density;
pub mod diagnostics;
pub mod io;
pub mod model;
pub mod path;
pub mod reciprocity;
pub mod simulate;

pub use density::{
    binned_density, compare_density, density_mass, density_tail_bound, density_terms_for_tolerance,
    density_vs_monte_carlo, jacobi_p11, moment_series_bound, transition_density, DensityBin,
    DensityComparison,
};
pub use diagnostics::{
    martingale_check, p_moment_estimate, sigma_martingale_check, sigma_martingale_check_run,
    CheckpointStat,
};
pub use model::{
    DiffusionModel, ModelRegistry, ScaledWrightFisher, StandardWrightFisher, StateVolatility,
};
pub use path::{PathEnsemble, SamplePath, StepPolicy};
pub use reciprocity::{reciprocity_check, reciprocity_check_with, Reciprocity};
pub use simulate::{
    map_paths, map_scaled_wf, map_standard_wf, simulate_generic_sde, simulate_path,
    simulate_scaled_wf, simulate_standard_wf, time_change_map, StepView, WfRun, DEFAULT_ABSORB_TOL,
};
