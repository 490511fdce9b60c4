//! Stochastic mirror descent (SMD) with constant and mirror-Polyak stepsizes.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: mirror maps ψ, Bregman divergences, primal/dual norms.
//! * [`constraints`]: feasible sets, the closed-form mirror step, ℓ₁ lifting.
//! * [`problems`]: finite-sum problems, datasets, the neighborhoods σ² and σ²_X.
//! * [`stepsizes`]: constant, mirror Polyak, mSPS, mSPS_max and smoothed variants.
//! * [`solver`]: the SMD loop, deterministic mirror descent, Monte Carlo runs.
//! * [`analysis`]: theorem bound curves, precondition checks, rate fits.

// `!(x > 0.0)` is used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constraints;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod problems;
pub mod solver;
pub mod stepsizes;

pub use constraints::{euclid_project, l1_lift, l1_unlift, mirror_step, FeasibleSet, LiftMatrix};
pub use error::{Error, Result};
pub use geometry::{dual_norm_sq, MirrorMap, NormTag, SpdMatrix};
pub use problems::{Component, Dataset, FiniteSumProblem};
pub use solver::{
    monte_carlo, monte_carlo_lenient, run_deterministic_md, run_smd, MonteCarloSummary, RunConfig,
    Trajectory,
};
pub use stepsizes::{StepContext, StepsizeRule};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
