//! `run`: Monte Carlo trajectories, bound curves and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mirroropt_core::analysis::{
    bound_at_records, bound_metric, check_preconditions, BoundConstants, BoundKind, BoundSpec,
};
use mirroropt_core::problems::{sigma_sq, sigma_sq_constrained};
use mirroropt_core::solver::Stepper;
use mirroropt_core::{
    dual_norm_sq, monte_carlo_lenient, FiniteSumProblem, MirrorMap, MonteCarloSummary, RunConfig,
    StepsizeRule, VERSION,
};

use crate::config::ExperimentConfig;
use crate::instances::{build_map, build_problem, default_x_init};

pub const MANIFEST: &str = "manifest.json";

pub const TRAJ_HEADER: &str = "t,eta_mean,f_gap_mean,f_gap_se,bpsi_mean,bpsi_se,bf_mean,bf_se,favg_gap_mean,favg_gap_se,fbest_gap_mean";

pub const BOUNDS_HEADER: &str = "t,bound,metric_mean,metric_se";

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOverrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreconditionEntry {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub kind: String,
    /// Written only when every precondition holds.
    pub file: Option<String>,
    pub preconditions: Vec<PreconditionEntry>,
    /// Whether mean ≤ bound + 3·SE at every record.
    pub dominated: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleEntry {
    pub index: usize,
    pub label: String,
    pub file: String,
    pub replicates: usize,
    pub diverged: usize,
    /// More than 1% of the replicates diverged.
    pub flagged: bool,
    pub run_digest: String,
    pub bounds: Vec<BoundEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_path: Option<String>,
    /// SHA-256 over the library version and the effective config.
    pub config_digest: String,
    pub seed: u64,
    pub replicates: usize,
    pub problem: String,
    pub map: String,
    pub set: String,
    pub xstar_approximate: bool,
    pub rules: Vec<RuleEntry>,
    /// File name → SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> anyhow::Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(dir.join(MANIFEST), text)?;
        Ok(())
    }
}

/// Digest of the effective config under this library version. Callers
/// leave the output directory out of `text`.
pub fn config_digest(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(VERSION.as_bytes());
    h.update(b"\n");
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

pub fn file_sha256(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Fails when `dir` holds a manifest from another version or config, or
/// whose files no longer match their recorded hashes.
pub fn ensure_fresh(dir: &Path, expected_digest: &str) -> anyhow::Result<()> {
    if !dir.join(MANIFEST).exists() {
        return Ok(());
    }
    let m = Manifest::load(dir)?;
    if m.version != VERSION {
        bail!(
            "stale manifest in {}: written by version {}, this is {}",
            dir.display(),
            m.version,
            VERSION
        );
    }
    if m.config_digest != expected_digest {
        bail!("stale manifest in {}: config digest differs", dir.display());
    }
    for (name, hash) in &m.files {
        let path = dir.join(name);
        if !path.exists() || file_sha256(&path)? != *hash {
            bail!("stale manifest in {}: {name} does not match its recorded hash", dir.display());
        }
    }
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Trajectory CSV text for one Monte Carlo summary.
pub fn trajectory_csv(s: &MonteCarloSummary) -> String {
    let mut out = String::from(TRAJ_HEADER);
    out.push('\n');
    for (j, t) in s.t.iter().enumerate() {
        let row = [
            s.eta.mean[j],
            s.f_gap.mean[j],
            s.f_gap.se[j],
            s.bregman_psi.mean[j],
            s.bregman_psi.se[j],
            s.bregman_f.mean[j],
            s.bregman_f.se[j],
            s.f_avg_gap.mean[j],
            s.f_avg_gap.se[j],
            s.f_best_gap.mean[j],
        ];
        let _ = write!(out, "{t}");
        for v in row {
            out.push(',');
            out.push_str(&num(v));
        }
        out.push('\n');
    }
    out
}

/// Bound CSV text: the curve aligned with the metric it constrains.
pub fn bounds_csv(spec: &BoundSpec, s: &MonteCarloSummary) -> anyhow::Result<String> {
    let bound = bound_at_records(spec, &s.t)?;
    let m = bound_metric(spec.kind, s);
    let mut out = String::from(BOUNDS_HEADER);
    out.push('\n');
    for (j, t) in s.t.iter().enumerate() {
        let _ = writeln!(out, "{t},{},{},{}", num(bound[j]), num(m.mean[j]), num(m.se[j]));
    }
    Ok(out)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// max_t ‖∇f(x_t)‖_* along the full-gradient run.
pub fn max_dual_grad_norm(problem: &FiniteSumProblem, cfg: &RunConfig) -> anyhow::Result<f64> {
    let mut stepper = Stepper::deterministic(problem, cfg)?;
    let mut g = 0.0f64;
    for _ in 0..cfg.iterations {
        let info = stepper.step()?;
        g = g.max(dual_norm_sq(&cfg.map.primal_norm(), &info.grad).sqrt());
    }
    Ok(g)
}

/// Bound specs worth checking for a rule.
pub fn candidate_bounds(
    problem: &FiniteSumProblem,
    map: &MirrorMap,
    cfg: &RunConfig,
    mu: Option<f64>,
) -> anyhow::Result<Vec<BoundSpec>> {
    let Some(xs) = cfg.xstar_for_metrics.as_deref() else {
        return Ok(Vec::new());
    };
    let l = problem.l_max();
    let mu_psi = map.mu_psi();
    let base = BoundConstants {
        mu,
        l: Some(l),
        l_max: Some(l),
        mu_psi: Some(mu_psi),
        b1: Some(map.bregman(xs, &cfg.x_init)?),
        f1_gap: Some(problem.value(&cfg.x_init) - problem.value(xs)),
        sigma_sq: sigma_sq(problem, Some(xs)).ok(),
        sigma_sq_x: sigma_sq_constrained(problem, Some(xs)).ok().map(|c| c.value),
        ..Default::default()
    };
    let mut out = Vec::new();
    match &cfg.rule {
        StepsizeRule::Constant { eta } => {
            // L relative to ψ is L/μ_ψ for L-smooth f in the primal norm
            let rel = BoundConstants {
                eta: Some(*eta),
                l: Some(l / mu_psi),
                l_max: Some(l / mu_psi),
                ..base.clone()
            };
            if mu.is_some() {
                out.push(BoundSpec::new(BoundKind::Thm1RelStrong, rel.clone()));
            }
            out.push(BoundSpec::new(BoundKind::Thm3RelSmooth, rel));
            out.push(BoundSpec::new(
                BoundKind::Cor8ConstSmooth,
                BoundConstants {
                    eta: Some(*eta),
                    ..base.clone()
                },
            ));
        }
        StepsizeRule::Msps { c } | StepsizeRule::MspsMax { c, .. } => {
            let eta_b = match cfg.rule {
                StepsizeRule::MspsMax { eta_b, .. } => eta_b,
                _ => f64::INFINITY,
            };
            let k = BoundConstants {
                c: Some(*c),
                eta_b: Some(eta_b),
                ..base.clone()
            };
            if mu.is_some() {
                out.push(BoundSpec::new(BoundKind::Thm5StrongMSPS, k.clone()));
                out.push(BoundSpec::new(BoundKind::PLPrecond, k.clone()));
            }
            out.push(BoundSpec::new(BoundKind::Thm7ConvexMSPS, k));
        }
        StepsizeRule::MirrorPolyak { .. } => {
            let g = max_dual_grad_norm(problem, cfg)?;
            out.push(BoundSpec::new(
                BoundKind::NonSmoothPolyak,
                BoundConstants {
                    g: Some(g),
                    ..base
                },
            ));
        }
        StepsizeRule::SmoothedMspsMax { .. } => {}
    }
    Ok(out)
}

#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

/// Effective config after command-line overrides.
pub fn apply_overrides(mut cfg: ExperimentConfig, o: &RunOverrides) -> ExperimentConfig {
    if let Some(s) = o.seed {
        cfg.run.seed = s;
    }
    if let Some(r) = o.replicates {
        cfg.run.replicates = r;
    }
    if let Some(out) = &o.out {
        cfg.run.out = Some(out.clone());
    }
    cfg
}

pub fn cmd_run(config_path: &Path, overrides: &RunOverrides) -> anyhow::Result<RunReport> {
    let cfg = apply_overrides(ExperimentConfig::load(config_path)?, overrides);
    let mut report = run_experiment(&cfg)?;
    report.manifest.config_path = Some(config_path.display().to_string());
    report.manifest.write(&report.out_dir)?;
    Ok(report)
}

/// Runs every rule of `cfg` and writes CSVs and the manifest to the
/// configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<RunReport> {
    if cfg.run.replicates == 0 {
        bail!("replicates must be positive");
    }
    let out_dir = cfg.run.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut built = build_problem(cfg)?;
    let map = build_map(&cfg.geometry, &mut built)?;
    let problem = &built.problem;
    let d = problem.dim();
    let x_init = cfg
        .run
        .x_init
        .clone()
        .unwrap_or_else(|| default_x_init(&problem.set, d));
    let rules: Vec<StepsizeRule> = cfg
        .rules
        .iter()
        .map(|r| r.expand(problem.n(), problem.known_fstar()))
        .collect::<anyhow::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    for rule in &rules {
        rule.validate()
            .with_context(|| format!("rule {}", rule.label()))?;
    }
    let mu = cfg.analysis.as_ref().and_then(|a| a.mu);

    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut files = BTreeMap::new();
    let mut entries = Vec::new();
    for (index, rule) in rules.iter().enumerate() {
        let mut rc = RunConfig::new(
            problem,
            map.clone(),
            rule.clone(),
            cfg.run.iterations,
            cfg.run.seed,
            x_init.clone(),
        )
        .with_record_every(cfg.run.record_every);
        rc.exact_running_metrics = cfg.run.exact_running_metrics;
        let deterministic = matches!(rule, StepsizeRule::MirrorPolyak { .. });
        let replicates = if deterministic { 1 } else { cfg.run.replicates };
        log::info!("rule {index} ({}): {replicates} replicates", rule.label());
        let summary = monte_carlo_lenient(problem, &rc, replicates, deterministic)?;
        let label = sanitize(&rule.label());
        let file = format!("traj_{index:02}_{label}.csv");
        write_tracked(&out_dir, &file, &trajectory_csv(&summary), &mut files)?;

        let mut bounds = Vec::new();
        if summary.completed() > 0 {
            for spec in candidate_bounds(problem, &map, &rc, mu)? {
                let pre = check_preconditions(&spec, problem, &map, rule);
                let ok = pre.iter().all(|p| p.holds)
                    && spec.curve(&[1]).map(|c| c[0].is_finite()).unwrap_or(false);
                let preconditions = pre
                    .into_iter()
                    .map(|p| PreconditionEntry {
                        name: p.name,
                        holds: p.holds,
                        detail: p.detail,
                    })
                    .collect();
                let (file, dominated) = if ok {
                    let name = format!("bounds_{}_{index:02}_{label}.csv", spec.kind.name());
                    write_tracked(&out_dir, &name, &bounds_csv(&spec, &summary)?, &mut files)?;
                    let dom = mirroropt_core::analysis::check_domination(&spec, &summary, 3.0)?;
                    (Some(name), Some(dom.holds))
                } else {
                    (None, None)
                };
                bounds.push(BoundEntry {
                    kind: spec.kind.name().to_string(),
                    file,
                    preconditions,
                    dominated,
                });
            }
        }
        entries.push(RuleEntry {
            index,
            label: rule.label(),
            file,
            replicates,
            diverged: summary.diverged,
            flagged: summary.diverged * 100 > replicates,
            run_digest: summary.config_digest.clone(),
            bounds,
        });
    }
    let mut digested = cfg.clone();
    digested.run.out = None;
    let manifest = Manifest {
        version: VERSION.to_string(),
        config_path: None,
        config_digest: config_digest(&digested.to_toml()?),
        seed: cfg.run.seed,
        replicates: cfg.run.replicates,
        problem: problem.name.clone(),
        map: map.name(),
        set: problem.set.to_string(),
        xstar_approximate: built.xstar_approximate,
        rules: entries,
        files,
    };
    manifest.write(&out_dir)?;
    Ok(RunReport { out_dir, manifest })
}

pub fn write_tracked(
    dir: &Path,
    name: &str,
    text: &str,
    files: &mut BTreeMap<String, String>,
) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    files.insert(name.to_string(), hex::encode(Sha256::digest(text.as_bytes())));
    Ok(())
}
