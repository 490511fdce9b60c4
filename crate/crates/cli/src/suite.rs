//! Verification suites: every acceptance criterion as a runnable check.
//!
//! | suite        | criteria            |
//! |--------------|---------------------|
//! | `properties` | 7, 10               |
//! | `theorems`   | 1, 2, 3, 4, 5, 6    |
//! | `figures`    | 1, 8, 9             |
//! | `all`        | 1 … 10              |

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mirroropt_core::analysis::{
    check_domination, check_preconditions, dimension_scaling, fit_linear_rate,
    fit_sublinear_rate, BoundConstants, BoundKind, BoundSpec,
};
use mirroropt_core::problems::{
    interpolation_check, linear_system_problem, logistic_problem, markov_problem, quad1d_problem,
    sigma_sq, sigma_sq_constrained, expected_grad_norm_sq, synth_margin_dataset,
};
use mirroropt_core::stepsizes::pl_constants;
use mirroropt_core::{
    monte_carlo, run_deterministic_md, FeasibleSet, FiniteSumProblem, MirrorMap,
    MonteCarloSummary, RunConfig, StepsizeRule, VERSION,
};

use crate::config::{ExperimentConfig, VerifyConfig};
use crate::instances::{gaussian_matrix, hessian, rademacher_simplex_system, random_chain, stationarity_residual};
use crate::properties;
use crate::run::{bounds_csv, config_digest, ensure_fresh, run_experiment, trajectory_csv, write_tracked, Manifest};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Properties,
    Theorems,
    Figures,
    All,
}

impl Suite {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Properties => &[7, 10],
            Suite::Theorems => &[1, 2, 3, 4, 5, 6],
            Suite::Figures => &[1, 8, 9],
            Suite::All => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Properties => "properties",
            Suite::Theorems => "theorems",
            Suite::Figures => "figures",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "properties" => Suite::Properties,
            "theorems" => Suite::Theorems,
            "figures" => Suite::Figures,
            "all" => Suite::All,
            other => bail!("unknown suite {other:?}; expected properties, theorems, figures or all"),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {:>2} {} ({:.1}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

/// Settings shared by all criteria.
#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub overrides: VerifyConfig,
    /// Where figure CSVs go; nothing is written without it.
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl VerifyOptions {
    fn replicates(&self, r: usize) -> usize {
        let scale = self.overrides.replicates_scale.unwrap_or(1.0);
        ((r as f64 * scale).round() as usize).max(2)
    }
}

/// Files a criterion wants written, name → contents.
type Artifacts = BTreeMap<String, String>;

struct Outcome {
    passed: bool,
    detail: String,
    artifacts: Artifacts,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome {
        passed,
        detail,
        artifacts: Artifacts::new(),
    }
}

pub fn criterion_name(id: u8) -> &'static str {
    match id {
        1 => "linear rate, constant stepsize, relative strong convexity",
        2 => "Markov chain EG, averaged Bregman-f bound",
        3 => "mSPS_max c = 1/2, strongly convex linear system",
        4 => "mSPS_max c = 1, logistic regression on separable data",
        5 => "non-smooth mirror Polyak",
        6 => "preconditioned PL",
        7 => "property suite",
        8 => "interpolation without small classical neighborhoods",
        9 => "EG vs SPGD dimension scaling",
        10 => "determinism of run output",
        _ => "unknown",
    }
}

/// Runs one criterion; errors count as failures.
pub fn run_criterion(id: u8, opts: &VerifyOptions) -> (CriterionResult, Artifacts) {
    let start = Instant::now();
    let res = match id {
        1 => criterion_1(opts),
        2 => criterion_2(opts),
        3 => criterion_3(opts),
        4 => criterion_4(opts),
        5 => criterion_5(opts),
        6 => criterion_6(opts),
        7 => criterion_7(opts),
        8 => criterion_8(opts),
        9 => criterion_9(opts),
        10 => criterion_10(opts),
        other => Err(anyhow::anyhow!("no criterion {other}")),
    };
    let (passed, detail, artifacts) = match res {
        Ok(o) => (o.passed, o.detail, o.artifacts),
        Err(e) => (false, format!("error: {e:#}"), Artifacts::new()),
    };
    (
        CriterionResult {
            id,
            name: criterion_name(id),
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        },
        artifacts,
    )
}

/// Digest identifying a verify run's outputs.
pub fn verify_digest(suite: Suite, opts: &VerifyOptions) -> anyhow::Result<String> {
    let text = format!(
        "suite = {:?}\nseed = {}\n{}",
        suite.name(),
        opts.seed,
        toml::to_string(&opts.overrides)?
    );
    Ok(config_digest(&text))
}

/// Runs a suite, printing one line per criterion unless `quiet`.
pub fn cmd_verify(suite: Suite, opts: &VerifyOptions, quiet: bool) -> anyhow::Result<Vec<CriterionResult>> {
    let digest = verify_digest(suite, opts)?;
    if let Some(dir) = &opts.out {
        ensure_fresh(dir, &digest)?;
    }
    let mut results = Vec::new();
    let mut files = BTreeMap::new();
    for &id in suite.criteria() {
        let (res, artifacts) = run_criterion(id, opts);
        if !quiet {
            println!("{res}");
        }
        if let Some(dir) = &opts.out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, text) in &artifacts {
                write_tracked(dir, name, text, &mut files)?;
            }
        }
        results.push(res);
    }
    if let Some(dir) = &opts.out {
        Manifest {
            version: VERSION.to_string(),
            config_path: None,
            config_digest: digest,
            seed: opts.seed,
            replicates: 0,
            problem: format!("verify:{}", suite.name()),
            map: String::new(),
            set: String::new(),
            xstar_approximate: false,
            rules: Vec::new(),
            files,
        }
        .write(dir)?;
    }
    Ok(results)
}

fn fmt_fit(kind: &str, v: f64, r2: f64) -> String {
    format!("{kind} {v:.4} (r2 {r2:.3})")
}

/// Largest index range [0, end) where the metric stays positive and normal.
fn positive_prefix(ts: &[usize], m: &[f64]) -> (usize, usize) {
    let end = m.iter().position(|&v| !(v > 1e-250)).unwrap_or(m.len());
    (ts[0], ts[end.saturating_sub(1).max(1).min(ts.len() - 1)])
}

fn preconditions_hold(spec: &BoundSpec, p: &FiniteSumProblem, map: &MirrorMap, rule: &StepsizeRule) -> (bool, String) {
    let pre = check_preconditions(spec, p, map, rule);
    let failed: Vec<String> = pre
        .iter()
        .filter(|c| !c.holds)
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect();
    (failed.is_empty(), failed.join("; "))
}

// ---------------------------------------------------------------------------
// 1

/// Box[0,1] ensemble: one non-convex component −x² + x and four strongly
/// convex ones a x², all minimized at 0 within the box, so σ²_X = 0.
pub fn rate_ensemble() -> anyhow::Result<FiniteSumProblem> {
    let coeffs = [(-1.0, 1.0, 0.0), (0.9, 0.0, 0.0), (0.6, 0.0, 0.0), (0.8, 0.0, 0.0), (0.7, 0.0, 0.0)];
    Ok(quad1d_problem(&coeffs, FeasibleSet::cube(1, 0.0, 1.0)?, true)?)
}

fn criterion_1(opts: &VerifyOptions) -> anyhow::Result<Outcome> {
    let p = rate_ensemble()?;
    let map = MirrorMap::euclidean(1);
    let l = p.l_max();
    // f = 0.4x² + 0.2x on [0, 1]
    let mu = 0.8;
    let eta = opts.overrides.thm1_eta.unwrap_or(1.0 / l);
    let rule = StepsizeRule::Constant { eta };
    let cfg = RunConfig::new(&p, map.clone(), rule.clone(), 200, opts.seed, vec![1.0]);
    let sx = sigma_sq_constrained(&p, None)?.value;
    let spec = BoundSpec::new(
        BoundKind::Thm1RelStrong,
        BoundConstants {
            mu: Some(mu),
            l: Some(l),
            eta: Some(eta),
            mu_psi: Some(1.0),
            sigma_sq_x: Some(sx),
            b1: Some(map.bregman(&[0.0], &[1.0])?),
            ..Default::default()
        },
    );
    let (pre_ok, pre_detail) = preconditions_hold(&spec, &p, &map, &rule);
    let s = monte_carlo(&p, &cfg, opts.replicates(10_000))?;
    let dom = check_domination(&spec, &s, 3.0)?;
    let window = positive_prefix(&s.t, &s.bregman_psi.mean);
    let fit = fit_linear_rate(&s.t, &s.bregman_psi.mean, window)?;
    let target = 1.0 - mu * eta;
    let passed = pre_ok && dom.holds && fit.rate <= target + 0.02;
    let mut detail = format!(
        "sigma_X^2 = {sx:.1e}, bound held: {} (worst mean/bound {:.3} at t = {}), {} <= {:.4} + 0.02",
        dom.holds,
        dom.worst_ratio,
        dom.worst_t,
        fmt_fit("decay", fit.rate, fit.r2),
        target
    );
    if !pre_ok {
        detail.push_str(&format!("; preconditions failed: {pre_detail}"));
    }
    let mut artifacts = Artifacts::new();
    artifacts.insert("fig_linear_rate_traj.csv".into(), trajectory_csv(&s));
    artifacts.insert("fig_linear_rate_bound.csv".into(), bounds_csv(&spec, &s)?);
    Ok(Outcome {
        passed,
        detail,
        artifacts,
    })
}

// ---------------------------------------------------------------------------
// 2

fn criterion_2(opts: &VerifyOptions) -> anyhow::Result<Outcome> {
    let chain = random_chain(5, 11 + opts.seed);
    let p = markov_problem(&chain)?;
    let map = MirrorMap::neg_entropy(5);
    let xs = p.known_xstar().context("chain has a stationary distribution")?.to_vec();
    let x1 = vec![0.2; 5];
    let rule = StepsizeRule::Constant { eta: 1.0 };
    let t_max = 2000;
    let cfg = RunConfig::new(&p, map.clone(), rule.clone(), t_max, opts.seed, x1.clone())
        .with_record_every(10)
        .with_exact_running_metrics();
    let sx = sigma_sq_constrained(&p, None)?.value;
    let spec = BoundSpec::new(
        BoundKind::Thm3RelSmooth,
        BoundConstants {
            l: Some(p.l_max()),
            eta: Some(1.0),
            mu_psi: Some(1.0),
            sigma_sq_x: Some(sx),
            b1: Some(map.bregman(&xs, &x1)?),
            ..Default::default()
        },
    );
    let (pre_ok, pre_detail) = preconditions_hold(&spec, &p, &map, &rule);
    let s = monte_carlo(&p, &cfg, opts.replicates(2000))?;
    let dom = check_domination(&spec, &s, 3.0)?;
    let residual = s
        .final_xs
        .iter()
        .map(|x| stationarity_residual(&chain, x))
        .sum::<f64>()
        / s.final_xs.len() as f64;
    let end = positive_prefix(&s.t, &s.f_avg_gap.mean).1;
    let fit = fit_sublinear_rate(&s.t, &s.f_avg_gap.mean, (t_max / 20, end))?;
    let passed = pre_ok && dom.holds && residual <= 1e-2 && fit.rate <= -0.8;
    let mut detail = format!(
        "bound held: {} (worst mean/bound {:.3} at t = {}), mean |P^T x - x|_1 = {residual:.2e} <= 1e-2, {} <= -0.8",
        dom.holds,
        dom.worst_ratio,
        dom.worst_t,
        fmt_fit("exponent", fit.rate, fit.r2)
    );
    if !pre_ok {
        detail.push_str(&format!("; preconditions failed: {pre_detail}"));
    }
    Ok(outcome(passed, detail))
}

// ---------------------------------------------------------------------------
// 3

/// Consistent Gaussian 50×10 system over ℝ^10.
pub fn strongly_convex_system(seed: u64) -> anyhow::Result<(FiniteSumProblem, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(50, 10, &mut rng);
    let x0: Vec<f64> = FeasibleSet::Reals.sample(10, 1.0, &mut rng);
    let b: Vec<f64> = (a.clone() * DVector::from_column_slice(&x0)).iter().copied().collect();
    let mu = hessian(&a).symmetric_eigen().eigenvalues.min();
    Ok((linear_system_problem(&a, &b, FeasibleSet::Reals)?.with_xstar(x0)?, mu))
}

fn criterion_3(opts: &VerifyOptions) -> anyhow::Result<Outcome> {
    let (p, mu) = strongly_convex_system(23 + opts.seed)?;
    let map = MirrorMap::euclidean(10);
    let c = opts.overrides.thm5_c.unwrap_or(0.5);
    let eta_b = 1.0;
    let rule = StepsizeRule::MspsMax { c, eta_b };
    let x1 = vec![0.0; 10];
    let xs = p.known_xstar().unwrap().to_vec();
    let spec = BoundSpec::new(
        BoundKind::Thm5StrongMSPS,
        BoundConstants {
            mu: Some(mu),
            l: Some(p.l_max()),
            mu_psi: Some(1.0),
            c: Some(c),
            eta_b: Some(eta_b),
            sigma_sq: Some(sigma_sq(&p, None)?),
            b1: Some(map.bregman(&xs, &x1)?),
            ..Default::default()
        },
    );
    let (pre_ok, pre_detail) = preconditions_hold(&spec, &p, &map, &rule);
    let cfg = RunConfig::new(&p, map.clone(), rule, 500, opts.seed, x1.clone()).with_record_every(5);
    let s = monte_carlo(&p, &cfg, opts.replicates(2000))?;
    let dom = check_domination(&spec, &s, 3.0)?;

    let unbounded = RunConfig::new(&p, map, StepsizeRule::Msps { c }, 5000, opts.seed, x1)
        .with_record_every(5000);
    let u = monte_carlo(&p, &unbounded, opts.replicates(100))?;
    let worst_final = u
        .final_xs
        .iter()
        .map(|x| p.value(x) - p.known_fstar().unwrap())
        .fold(0.0, f64::max);
    let passed = pre_ok && dom.holds && worst_final <= 1e-8;
    let mut detail = format!(
        "mu = {mu:.3}, L = {:.3}, bound held: {} (worst mean/bound {:.3} at t = {}), unbounded mSPS worst final gap {worst_final:.2e} <= 1e-8",
        p.l_max(),
        dom.holds,
        dom.worst_ratio,
        dom.worst_t
    );
    if !pre_ok {
        detail.push_str(&format!("; preconditions failed: {pre_detail}"));
    }
    Ok(outcome(passed, detail))
}

// ---------------------------------------------------------------------------
// 4

/// f(s·u) for s on a grid, u = direction of a long full-gradient run.
fn comparator_profile(p: &FiniteSumProblem) -> anyhow::Result<Vec<(f64, f64)>> {
    let d = p.dim();
    let cfg = RunConfig::new(p, MirrorMap::euclidean(d), StepsizeRule::Constant { eta: 4.0 }, 20_000, 0, vec![0.0; d])
        .with_record_every(20_000);
    let x = run_deterministic_md(p, &cfg)?.final_x;
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dir: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let mut out = vec![(0.0, p.value(&vec![0.0; d]))];
    for k in 0..=240 {
        let s = 10f64.powf(-1.0 + k as f64 / 60.0);
        let u: Vec<f64> = dir.iter().map(|v| s * v).collect();
        out.push((s, p.value(&u)));
    }
    Ok(out)
}

fn criterion_4(opts: &VerifyOptions) -> anyhow::Result<Outcome> {
    let data = synth_margin_dataset(1000, 20, 0.05, 7)?;
    let p = logistic_problem(&data, FeasibleSet::Reals)?;
    let map = MirrorMap::euclidean(20);
    let c = opts.overrides.thm7_c.unwrap_or(1.0);
    let eta_b = 20.0;
    let rule = StepsizeRule::MspsMax { c, eta_b };
    let l = p.l_max();
    let spec = BoundSpec::new(
        BoundKind::Thm7ConvexMSPS,
        BoundConstants {
            l: Some(l),
            mu_psi: Some(1.0),
            c: Some(c),
            eta_b: Some(eta_b),
            ..Default::default()
        },
    );
    let (pre_ok, pre_detail) = preconditions_hold(&spec, &p, &map, &rule);
    let alpha = spec.alpha()?;
    let t_max = 5000;
    let mut cfg = RunConfig::new(&p, map, rule, t_max, opts.seed, vec![0.0; 20]).with_record_every(50);
    cfg.xstar_for_metrics = None;
    let s = monte_carlo(&p, &cfg, opts.replicates(200))?;
    // No minimizer exists; the bound is taken against comparators u = s·dir,
    // where every f_i^* = 0 gives σ²(u) = f(u):
    //   f(x̄_t) ≤ (1 + 2η_b/α) f(u) + 2B_ψ(u; 0)/(αt)
    let profile = comparator_profile(&p)?;
    let factor = 1.0 + 2.0 * eta_b / alpha;
    let mut holds = true;
    let mut worst = 0.0f64;
    let mut worst_t = 0;
    for (j, &t) in s.t.iter().enumerate() {
        let bound = profile
            .iter()
            .map(|&(r, fu)| factor * fu + r * r / (alpha * t as f64))
            .fold(f64::INFINITY, f64::min);
        let cap = bound + 3.0 * s.f_avg_gap.se[j];
        if !(s.f_avg_gap.mean[j] <= cap) {
            holds = false;
        }
        if s.f_avg_gap.mean[j] / cap > worst {
            worst = s.f_avg_gap.mean[j] / cap;
            worst_t = t;
        }
    }
    let fit = fit_sublinear_rate(&s.t, &s.f_avg_gap.mean, (t_max / 10, t_max + 1))?;
    let passed = pre_ok && holds && fit.rate <= -0.8;
    let mut detail = format!(
        "L_max = {l:.4}, alpha = {alpha:.3}, comparator bound held: {holds} (worst mean/bound {worst:.3} at t = {worst_t}), {} <= -0.8",
        fmt_fit("exponent", fit.rate, fit.r2)
    );
    if !pre_ok {
        detail.push_str(&format!("; preconditions failed: {pre_detail}"));
    }
    Ok(outcome(passed, detail))
}

// ---------------------------------------------------------------------------
// 5

/// Σ w_j|x_j − c_j| + ½ Σ q_j (x_j − c_j)² with c = (0.5, −1, 2).
pub fn nonsmooth_problem() -> anyhow::Result<FiniteSumProblem> {
    Ok(mirroropt_core::problems::abs_plus_quadratic_problem(
        vec![0.5, -1.0, 2.0],
        vec![1.0, 0.5, 2.0],
        vec![1.0, 1.0, 0.5],
    )?)
}

fn criterion_5(opts: &VerifyOptions) -> anyhow::Result<Outcome> {
    let t_max = 10_000;
    let mut passed = true;
    let mut parts = Vec::new();
    for map in [MirrorMap::euclidean(3), MirrorMap::pnorm(3, 1.5)?] {
        let p = nonsmooth_problem()?.with_norm(map.primal_norm());
        let rule = StepsizeRule::MirrorPolyak { fstar: 0.0 };
        let cfg = RunConfig::new(&p, map.clone(), rule.clone(), t_max, opts.seed, vec![0.0; 3]);
        let tr = run_deterministic_md(&p, &cfg)?;
        let mut monotone = true;
        let mut worst_rise = 0.0f64;
        for w in tr.records.windows(2) {
            let rise = w[1].bregman_psi - w[0].bregman_psi;
            worst_rise = worst_rise.max(rise);
            if rise > 1e-10 {
                monotone = false;
            }
        }
        let g = crate::run::max_dual_grad_norm(&p, &cfg)?;
        let xs = p.known_xstar().unwrap();
        let spec = BoundSpec::new(
            BoundKind::NonSmoothPolyak,
            BoundConstants {
                g: Some(g),
                mu_psi: Some(map.mu_psi()),
                b1: Some(map.bregman(xs, &cfg.x_init)?),
                ..Default::default()
            },
        );
        let (pre_ok, pre_detail) = preconditions_hold(&spec, &p, &map, &rule);
        let ts: Vec<usize> = tr.records.iter().map(|r| r.t).collect();
        let bound = spec.curve(&ts)?;
        let mut bound_ok = true;
        let mut worst = 0.0f64;
        for (r, b) in tr.records.iter().zip(&bound) {
            if r.t > t_max {
                break;
            }
            worst = worst.max(r.f_avg_gap / b);
            if r.f_avg_gap > *b {
                bound_ok = false;
            }
        }
        passed &= monotone && bound_ok && pre_ok;
        let mut part = format!(
            "{}: Bregman monotone {monotone} (max rise {worst_rise:.1e}), G = {g:.3}, bound held {bound_ok} (worst ratio {worst:.3})",
            map.name()
        );
        if !pre_ok {
            part.push_str(&format!(", preconditions failed: {pre_detail}"));
        }
        parts.push(part);
    }
    Ok(outcome(passed, parts.join("; ")))
}

// ---------------------------------------------------------------------------
// 6

/// f_i = ½⟨a_i, x⟩² with badly scaled columns; returns the problem and Q.
pub fn scaled_quadratic(seed: u64) -> anyhow::Result<(FiniteSumProblem, DMatrix<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scales = [1.0, 3.0, 0.3, 10.0, 0.1];
    let mut a = gaussian_matrix(40, 5, &mut rng);
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).iter_mut().for_each(|v| *v *= s);
    }
    let q = hessian(&a);
    let p = linear_system_problem(&a, &[0.0; 40], FeasibleSet::Reals)?.with_xstar(vec![0.0; 5])?;
    Ok((p, q))
}

fn criterion_6(opts: &VerifyOptions) -> anyhow::Result<Outcome> {
    let (p, q) = scaled_quadratic(31 + opts.seed)?;
    let m = DMatrix::from_diagonal(&q.diagonal());
    let map = MirrorMap::mahalanobis(m.clone())?;
    let p = p.with_norm(map.primal_norm());
    let l_max = p.l_max();
    let m_inv_sqrt = DMatrix::from_diagonal(&q.diagonal().map(|v| 1.0 / v.sqrt()));
    let mu = (&m_inv_sqrt * &q * &m_inv_sqrt).symmetric_eigen().eigenvalues.min();
    let c = l_max / (2.0 * mu);
    let eta_b = 1.0 / (2.0 * c * l_max);
    let pl = pl_constants(c, l_max, mu, eta_b);
    let rule = StepsizeRule::MspsMax { c, eta_b };
    let x1 = vec![1.0; 5];
    let xs = p.known_xstar().unwrap().to_vec();
    let spec = BoundSpec::new(
        BoundKind::PLPrecond,
        BoundConstants {
            mu: Some(mu),
            l_max: Some(l_max),
            c: Some(c),
            eta_b: Some(eta_b),
            sigma_sq: Some(sigma_sq(&p, None)?),
            f1_gap: Some(p.value(&x1) - p.value(&xs)),
            ..Default::default()
        },
    );
    let (pre_ok, pre_detail) = preconditions_hold(&spec, &p, &map, &rule);
    let t_max = ((20.0 / (1.0 - pl.nu)).ceil() as usize).clamp(200, 5000);
    let cfg = RunConfig::new(&p, map, rule, t_max, opts.seed, x1).with_record_every((t_max / 200).max(1));
    let s = monte_carlo(&p, &cfg, opts.replicates(2000))?;
    let dom = check_domination(&spec, &s, 3.0)?;
    let nu_ok = pl.nu > 0.0 && pl.nu < 1.0;
    let passed = nu_ok && pl.valid && pre_ok && dom.holds;
    let mut detail = format!(
        "mu = {mu:.4}, L_max = {l_max:.4}, nu = {:.6} in (0,1): {nu_ok}, T = {t_max}, bound held: {} (worst mean/bound {:.3} at t = {})",
        pl.nu, dom.holds, dom.worst_ratio, dom.worst_t
    );
    if !pre_ok {
        detail.push_str(&format!("; preconditions failed: {pre_detail}"));
    }
    Ok(outcome(passed, detail))
}

// ---------------------------------------------------------------------------
// 7

fn criterion_7(opts: &VerifyOptions) -> anyhow::Result<Outcome> {
    let checks = properties::all_checks(opts.seed);
    let passed = checks.iter().all(|c| c.passed() && c.seconds < 10.0);
    let detail = checks
        .iter()
        .map(|c| {
            format!(
                "{} {}: worst {:.1e} <= {:.0e} over {} cases in {:.2}s",
                if c.passed() && c.seconds < 10.0 { "ok" } else { "FAILED" },
                c.name,
                c.worst,
                c.tol,
                c.cases,
                c.seconds
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok(outcome(passed, detail))
}

// ---------------------------------------------------------------------------
// 8

/// Strongly convex quadratics on ℝ₊ whose unconstrained minimizers are
/// negative while all of them are minimized over ℝ₊ at 0.
pub fn nonneg_interpolation_instance() -> anyhow::Result<FiniteSumProblem> {
    let coeffs = [(1.0, 1.0, 0.0), (2.0, 3.0, 0.0), (0.5, 2.0, 0.0), (1.5, 0.5, 0.0)];
    Ok(quad1d_problem(&coeffs, FeasibleSet::NonNeg, true)?)
}

/// Box[0,1] instance with the concave member −x² + 2x.
pub fn box_nonconvex_instance() -> anyhow::Result<FiniteSumProblem> {
    let coeffs = [(-1.0, 2.0, 0.0), (2.0, 1.0, 0.0), (1.0, 0.0, 0.0)];
    Ok(quad1d_problem(&coeffs, FeasibleSet::cube(1, 0.0, 1.0)?, true)?)
}

fn converges(p: &FiniteSumProblem, eta: f64, x1: f64, seed: u64, replicates: usize) -> anyhow::Result<(f64, MonteCarloSummary)> {
    let cfg = RunConfig::new(p, MirrorMap::euclidean(1), StepsizeRule::Constant { eta }, 200, seed, vec![x1])
        .with_record_every(10);
    let s = monte_carlo(p, &cfg, replicates)?;
    let worst = s
        .final_xs
        .iter()
        .map(|x| p.value(x) - p.known_fstar().unwrap())
        .fold(0.0, f64::max);
    Ok((worst, s))
}

fn criterion_8(opts: &VerifyOptions) -> anyhow::Result<Outcome> {
    let reps = opts.replicates(200);
    let a = nonneg_interpolation_instance()?;
    let sx = sigma_sq_constrained(&a, None)?.value;
    let s2 = sigma_sq(&a, None)?;
    let g2 = expected_grad_norm_sq(&a, None)?;
    let report = interpolation_check(&a, a.known_xstar().unwrap(), 1e-12)?;
    let (gap_a, sa) = converges(&a, 1.0 / a.l_max(), 1.0, opts.seed, reps)?;
    let ok_a = sx == 0.0
        && s2 > 0.0
        && g2 > 0.0
        && report.sigma_x_zero
        && report.xstar_in_all_component_minima
        && gap_a <= 1e-8;

    let b = box_nonconvex_instance()?;
    let bx = sigma_sq_constrained(&b, None)?.value;
    let b2 = sigma_sq(&b, None)?;
    let (gap_b, sb) = converges(&b, 0.25, 1.0, opts.seed, reps)?;
    let ok_b = bx == 0.0 && b2.is_infinite() && gap_b <= 1e-8;

    let detail = format!(
        "NonNeg: sigma_X^2 = {sx:.1e}, sigma^2 = {s2:.4}, E|grad f_i(x*)|^2 = {g2:.4}, flags ({}, {}), worst final gap {gap_a:.1e}; \
         Box[0,1]: sigma_X^2 = {bx:.1e}, sigma^2 = {b2}, worst final gap {gap_b:.1e}",
        report.sigma_x_zero, report.xstar_in_all_component_minima
    );
    let mut artifacts = Artifacts::new();
    artifacts.insert("fig_interpolation_nonneg.csv".into(), trajectory_csv(&sa));
    artifacts.insert("fig_interpolation_box.csv".into(), trajectory_csv(&sb));
    Ok(Outcome {
        passed: ok_a && ok_b,
        detail,
        artifacts,
    })
}

// ---------------------------------------------------------------------------
// 9

pub const SCALING_DIMS: [usize; 6] = [8, 16, 32, 64, 128, 256];

/// Rademacher simplex systems with x_* = e₁: EG with η = 1 against
/// projected SGD with η = 1/d, both from the barycenter.
pub fn scaling_setup(d: usize, seed: u64) -> mirroropt_core::Result<(FiniteSumProblem, RunConfig, RunConfig)> {
    let p = rademacher_simplex_system(d, 2, d as u64)
        .map_err(|e| mirroropt_core::Error::InvalidArgument(e.to_string()))?;
    let x1 = vec![1.0 / d as f64; d];
    let eg = RunConfig::new(&p, MirrorMap::neg_entropy(d), StepsizeRule::Constant { eta: 1.0 }, 1, seed, x1.clone());
    let spgd = RunConfig::new(
        &p,
        MirrorMap::euclidean(d),
        StepsizeRule::Constant { eta: 1.0 / d as f64 },
        1,
        seed,
        x1,
    );
    Ok((p, eg, spgd))
}

fn criterion_9(opts: &VerifyOptions) -> anyhow::Result<Outcome> {
    let reps = opts.replicates(10);
    let seed = opts.seed;
    let rows = dimension_scaling(&SCALING_DIMS, |d| scaling_setup(d, seed), 1e-6, 2_000_000, reps)?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio()).collect();
    let nondecreasing = ratios.windows(2).filter(|w| w[1] >= w[0]).count();
    let mut csv = String::from("d,iters_eg,iters_spgd,ratio\n");
    for r in &rows {
        csv.push_str(&format!("{},{:.16e},{:.16e},{:.16e}\n", r.d, r.iters_eg, r.iters_spgd, r.ratio()));
    }
    let detail = format!(
        "ratios {} nondecreasing over {nondecreasing} of 5 doublings (need 4)",
        ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
    );
    let mut artifacts = Artifacts::new();
    artifacts.insert("fig_dimension_scaling.csv".into(), csv);
    Ok(Outcome {
        passed: nondecreasing >= 4,
        detail,
        artifacts,
    })
}

// ---------------------------------------------------------------------------
// 10

pub const DETERMINISM_CONFIG: &str = r#"
[problem]
kind = "markov"
m = 5
seed = 3

[geometry]
map = "neg_entropy"

[[rules]]
kind = "constant"
eta = 1.0

[[rules]]
kind = "msps_max"
c = 1.0
eta_b = 10.0

[run]
iterations = 1000
replicates = 100
record_every = 10
"#;

fn csv_bytes(dir: &Path) -> anyhow::Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            out.insert(name, fs::read(&path)?);
        }
    }
    Ok(out)
}

fn criterion_10(opts: &VerifyOptions) -> anyhow::Result<Outcome> {
    let tmp = tempfile::tempdir()?;
    let mut cfg = ExperimentConfig::from_toml(DETERMINISM_CONFIG)?;
    cfg.run.seed = opts.seed;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        cfg.run.out = Some(tmp.path().join(run));
        run_experiment(&cfg)?;
        outputs.push(csv_bytes(&tmp.path().join(run))?);
    }
    let same = outputs[0] == outputs[1];
    let passed = same && !outputs[0].is_empty();
    Ok(outcome(
        passed,
        format!("{} CSVs, byte-identical across two runs: {same}", outputs[0].len()),
    ))
}
