//! Reciprocal specific relative entropy between continuous martingales and
//! the win-martingale problem it solves: the scaled neutral Wright–Fisher
//! diffusion, its closed-form value function, and numerical checks of both.

pub mod closed_form;
pub mod entropy;
pub mod error;
pub mod grid;
pub mod multidim;
pub mod pde;
pub mod rng;
pub mod stats;
pub mod trinomial;
pub mod wf;

pub use error::{Error, Result};
