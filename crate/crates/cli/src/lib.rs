//! Config-driven experiment runner and verification suites for `mirroropt-core`.
//!
//! * [`config`]: the TOML experiment schema.
//! * [`instances`]: problem generators and the config → problem builder.
//! * [`run`]: Monte Carlo runs, CSV output and manifests.
//! * [`sigma`]: neighborhood reports.
//! * [`suite`]: the acceptance criteria behind `verify`.

// `!(x > 0.0)` is used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod instances;
pub mod properties;
pub mod run;
pub mod sigma;
pub mod suite;
