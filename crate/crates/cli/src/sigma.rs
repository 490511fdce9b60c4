//! `sigma`: neighborhood sizes and the interpolation report for a config.

use std::path::Path;

use anyhow::Context;

use mirroropt_core::problems::{
    expected_grad_norm_sq, interpolation_check, sigma_sq, sigma_sq_constrained, InterpolationReport,
};
use mirroropt_core::Error;

use crate::config::ExperimentConfig;
use crate::instances::{build_map, build_problem};

/// Default tolerance of the interpolation flags.
pub const INTERPOLATION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaReport {
    pub sigma_sq: f64,
    pub sigma_sq_x: f64,
    /// Set when some constrained infimum came from the grid oracle.
    pub oracle_resolution: Option<usize>,
    pub grad_norm_sq: f64,
    pub interpolation: InterpolationReport,
    pub xstar_approximate: bool,
}

impl SigmaReport {
    pub fn render(&self) -> String {
        let oracle = match self.oracle_resolution {
            Some(r) => format!(" (oracle, resolution {r})"),
            None => String::new(),
        };
        let mut s = format!(
            "sigma^2            = {:.9e}\nsigma_X^2          = {:.9e}{oracle}\nE|grad f_i(x*)|^2  = {:.9e}\n\
             interpolation: sigma_X^2 == 0: {}, x* minimizes every f_i on X: {} (max gap {:.3e})\n",
            self.sigma_sq,
            self.sigma_sq_x,
            self.grad_norm_sq,
            self.interpolation.sigma_x_zero,
            self.interpolation.xstar_in_all_component_minima,
            self.interpolation.max_component_gap,
        );
        if self.xstar_approximate {
            s.push_str("note: x* comes from a finite reference solve\n");
        }
        s
    }
}

pub fn sigma_for(cfg: &ExperimentConfig) -> anyhow::Result<SigmaReport> {
    let mut built = build_problem(cfg)?;
    build_map(&cfg.geometry, &mut built)?;
    let p = &built.problem;
    let guidance = || {
        "no minimizer is known for this problem; use a consistent linear system, \
         a strongly convex quad1d ensemble, or set `reference_iterations` for logistic problems"
    };
    let wrap = |e: Error| match e {
        Error::MissingOptimum => anyhow::Error::new(e).context(guidance()),
        other => other.into(),
    };
    let x = p.known_xstar().ok_or(Error::MissingOptimum).map_err(wrap)?;
    let xs = Some(x);
    let constrained = sigma_sq_constrained(p, xs).map_err(wrap)?;
    Ok(SigmaReport {
        sigma_sq: sigma_sq(p, xs).map_err(wrap)?,
        sigma_sq_x: constrained.value,
        oracle_resolution: constrained.oracle_resolution,
        grad_norm_sq: expected_grad_norm_sq(p, xs).map_err(wrap)?,
        interpolation: interpolation_check(p, x, INTERPOLATION_TOL).map_err(wrap)?,
        xstar_approximate: built.xstar_approximate,
    })
}

pub fn cmd_sigma(config_path: &Path) -> anyhow::Result<SigmaReport> {
    let cfg = ExperimentConfig::load(config_path)?;
    sigma_for(&cfg).with_context(|| format!("sigma for {}", config_path.display()))
}
