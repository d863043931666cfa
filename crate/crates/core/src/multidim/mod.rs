//! Matrix-valued analogues: quantum relative entropy rates, Wright–Fisher
//! diffusion on the sub-probability simplex, and a search over perturbed
//! volatilities.

mod matrix;
mod search;
mod simplex;

pub use matrix::{
    matrix_exp, matrix_log, matrix_sqrt, quantum_entropy_rate, SpdMatrix, MAX_DIM, SINGULAR_TOL,
};
pub use search::{
    perturbation_search, Candidate, SearchOptions, SearchReport, ShapeFunction, PROJECTED_FRACTION,
    SIGNIFICANCE, VERTEX_FRACTION, VERTEX_RADIUS,
};
pub use simplex::{
    map_simplex, md_path_value, md_reciprocal_entropy, simulate_simplex_wf, vertex_distance,
    MatrixPath, MatrixPathEnsemble, PerturbedWrightFisher, SimplexCovariance, SimplexRun,
    SimplexState, SimplexWrightFisher,
};
