//! Experiment configuration, read from TOML.
//!
//! ```toml
//! [problem]
//! kind = "markov"          # markov | linear_system | quad1d | logistic | abs_plus_quadratic
//! m = 5
//! seed = 3
//!
//! [geometry]
//! map = "neg_entropy"      # euclidean | pnorm | neg_entropy | mahalanobis
//!
//! [set]
//! kind = "simplex"         # reals | nonneg | box | simplex | l1ball
//!
//! [[rules]]
//! kind = "constant"        # constant | constant_sweep | msps | msps_max |
//! eta = 1.0                # smoothed_msps_max | mirror_polyak
//!
//! [run]
//! iterations = 1000
//! replicates = 100
//! seed = 0
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use mirroropt_core::{FeasibleSet, StepsizeRule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<SetConfig>,
    pub rules: Vec<RuleConfig>,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Random row-stochastic chain with positive entries.
    Markov {
        m: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Gaussian n×d system; `consistent` plants a feasible solution.
    LinearSystem {
        n: usize,
        d: usize,
        #[serde(default = "yes")]
        consistent: bool,
        #[serde(default)]
        seed: u64,
    },
    Quad1d {
        coeffs: Vec<[f64; 3]>,
        #[serde(default)]
        strongly_convex: bool,
    },
    Logistic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        synthetic: Option<SyntheticData>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rbf_bandwidth: Option<f64>,
        /// Iterations of a full-gradient reference solve whose final
        /// iterate serves as an approximate x_* for metrics.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference_iterations: Option<usize>,
    },
    AbsPlusQuadratic {
        center: Vec<f64>,
        abs_weights: Vec<f64>,
        quad_weights: Vec<f64>,
    },
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticData {
    pub n: usize,
    pub d: usize,
    pub margin: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapName {
    Euclidean,
    Pnorm,
    NegEntropy,
    Mahalanobis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub map: MapName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Diagonal of M; defaults to the diagonal of the problem Hessian.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag: Option<Vec<f64>>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            map: MapName::Euclidean,
            p: None,
            diag: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetConfig {
    Reals,
    Nonneg,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Simplex,
    L1ball { lambda: f64 },
}

impl SetConfig {
    pub fn build(&self) -> anyhow::Result<FeasibleSet> {
        Ok(match self {
            SetConfig::Reals => FeasibleSet::Reals,
            SetConfig::Nonneg => FeasibleSet::NonNeg,
            SetConfig::Box { lo, hi } => FeasibleSet::new_box(lo.clone(), hi.clone())?,
            SetConfig::Simplex => FeasibleSet::Simplex,
            SetConfig::L1ball { lambda } => FeasibleSet::l1_ball(*lambda)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleConfig {
    Constant {
        eta: f64,
    },
    /// One constant rule per entry of `etas`.
    ConstantSweep {
        etas: Vec<f64>,
    },
    Msps {
        c: f64,
    },
    MspsMax {
        c: f64,
        eta_b: f64,
    },
    SmoothedMspsMax {
        c: f64,
        tau: f64,
        #[serde(default = "one")]
        batch: usize,
        #[serde(default = "unit_eta")]
        eta_init: f64,
    },
    /// Full-gradient Polyak step with f_* from the problem.
    MirrorPolyak,
}

fn one() -> usize {
    1
}

fn unit_eta() -> f64 {
    1.0
}

impl RuleConfig {
    /// Expands sweeps; `n` is the number of components and `fstar` the
    /// optimal value when known.
    pub fn expand(&self, n: usize, fstar: Option<f64>) -> anyhow::Result<Vec<StepsizeRule>> {
        Ok(match self {
            RuleConfig::Constant { eta } => vec![StepsizeRule::Constant { eta: *eta }],
            RuleConfig::ConstantSweep { etas } => {
                if etas.is_empty() {
                    bail!("constant_sweep needs at least one stepsize");
                }
                etas.iter().map(|&eta| StepsizeRule::Constant { eta }).collect()
            }
            RuleConfig::Msps { c } => vec![StepsizeRule::Msps { c: *c }],
            RuleConfig::MspsMax { c, eta_b } => vec![StepsizeRule::MspsMax { c: *c, eta_b: *eta_b }],
            RuleConfig::SmoothedMspsMax {
                c,
                tau,
                batch,
                eta_init,
            } => vec![StepsizeRule::SmoothedMspsMax {
                c: *c,
                tau: *tau,
                batch: *batch,
                n,
                eta_init: *eta_init,
            }],
            RuleConfig::MirrorPolyak => {
                let fstar = fstar.context("mirror_polyak needs a problem with a known optimal value")?;
                vec![StepsizeRule::MirrorPolyak { fstar }]
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub iterations: usize,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_init: Option<Vec<f64>>,
    #[serde(default)]
    pub exact_running_metrics: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Constants the problem does not determine by itself.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Relative strong convexity (or PL) constant of f.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

/// Overrides for `verify`, used for negative controls. Read from a file
/// holding a single `[verify]` table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thm5_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thm7_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thm1_eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates_scale: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyFile {
    verify: VerifyConfig,
}

impl VerifyConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading verify config {}", path.display()))?;
        let f: VerifyFile = toml::from_str(&text)
            .with_context(|| format!("parsing verify config {}", path.display()))?;
        Ok(f.verify)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    fn check(&self) -> anyhow::Result<()> {
        if self.rules.is_empty() {
            bail!("at least one [[rules]] entry is required");
        }
        if self.run.iterations == 0 || self.run.replicates == 0 || self.run.record_every == 0 {
            bail!("iterations, replicates and record_every must be positive");
        }
        Ok(())
    }
}
