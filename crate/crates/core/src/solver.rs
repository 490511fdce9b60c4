//! The SMD loop
//!
//! ```text
//! x_{t+1} = argmin_{x ∈ X} ⟨∇f_{ξ_t}(x_t), x⟩ + (1/η_t) B_ψ(x; x_t)
//! ```
//!
//! with ξ_t drawn i.i.d. uniform, its full-gradient counterpart, and Monte
//! Carlo aggregation over seeded replicates.
//!
//! Iterates are indexed from x_1 = `x_init`. A run of T iterations takes T
//! steps and records x_t for t = 1, 1 + k·`record_every`, …, and T + 1. The
//! stepsize stored at t is η_t, the one computed at x_t; at t = T + 1 it is
//! evaluated but not applied.
//!
//! Random numbers come from ChaCha8 seeded with `seed + replicate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::constraints::{is_supported, mirror_step, FeasibleSet};
use crate::error::{Error, Result};
use crate::geometry::MirrorMap;
use crate::linalg::{axpy, dot, sub};
use crate::problems::FiniteSumProblem;
use crate::stepsizes::{StepContext, Stepsize, StepsizeRule};

/// Any coordinate above this magnitude counts as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e150;

/// Replicate batch processed in parallel before sequential aggregation.
const MC_CHUNK: usize = 256;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub map: MirrorMap,
    pub set: FeasibleSet,
    pub rule: StepsizeRule,
    pub iterations: usize,
    pub seed: u64,
    pub x_init: Vec<f64>,
    pub record_every: usize,
    pub xstar_for_metrics: Option<Vec<f64>>,
    /// Evaluate the best-iterate gap and the running B_f average at every
    /// step instead of at recorded steps only.
    pub exact_running_metrics: bool,
}

impl RunConfig {
    /// Defaults: record every step, metrics against the problem's known x_*.
    pub fn new(
        problem: &FiniteSumProblem,
        map: MirrorMap,
        rule: StepsizeRule,
        iterations: usize,
        seed: u64,
        x_init: Vec<f64>,
    ) -> Self {
        Self {
            map,
            set: problem.set.clone(),
            rule,
            iterations,
            seed,
            x_init,
            record_every: 1,
            xstar_for_metrics: problem.known_xstar().map(<[f64]>::to_vec),
            exact_running_metrics: false,
        }
    }

    pub fn with_record_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }

    pub fn with_exact_running_metrics(mut self) -> Self {
        self.exact_running_metrics = true;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, problem: &FiniteSumProblem) -> Result<()> {
        let d = problem.dim();
        if self.map.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.map.dim(),
            });
        }
        if self.set != problem.set {
            return Err(Error::InvalidArgument(format!(
                "run set {} differs from problem set {}",
                self.set, problem.set
            )));
        }
        if !is_supported(&self.map, &self.set) {
            return Err(Error::UnsupportedPair {
                map: self.map.name(),
                set: self.set.to_string(),
            });
        }
        if self.iterations < 1 || self.record_every < 1 {
            return Err(Error::InvalidArgument(
                "iterations and record_every must be at least 1".into(),
            ));
        }
        if self.x_init.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.x_init.len(),
            });
        }
        if !self.set.contains(&self.x_init) || !self.map.is_interior(&self.x_init) {
            return Err(Error::InfeasibleStart(format!(
                "x_init must lie in {} and the interior of dom {}",
                self.set,
                self.map.name()
            )));
        }
        if let Some(xs) = &self.xstar_for_metrics {
            if xs.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: xs.len(),
                });
            }
        }
        self.rule.validate()
    }

    /// SHA-256 over the configuration and the problem's identity.
    pub fn digest(&self, problem: &FiniteSumProblem) -> String {
        let mut h = Sha256::new();
        h.update(format!("{self:?}").as_bytes());
        h.update(format!("{}|{}|{}", problem.name, problem.n(), problem.dim()).as_bytes());
        hex::encode(h.finalize())
    }
}

/// Metrics at iterate x_t.
///
/// Without an x_* the gap fields hold raw values (f(x_t), f(x̄_t),
/// min f(x_s)) and the Bregman fields are NaN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterateRecord {
    pub t: usize,
    pub eta_t: f64,
    /// f(x_t) − f(x_*)
    pub f_gap: f64,
    /// B_ψ(x_*; x_t)
    pub bregman_psi: f64,
    /// B_f(x_*; x_t)
    pub bregman_f: f64,
    /// f(x̄_t) − f(x_*), x̄_t = (1/t) Σ_{s≤t} x_s
    pub f_avg_gap: f64,
    /// min_{s≤t} f(x_s) − f(x_*)
    pub f_best_gap: f64,
    /// (1/t) Σ_{s≤t} B_f(x_*; x_s)
    pub bf_running_avg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// Iterate x_t left the finite range.
    Diverged { t: usize },
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<IterateRecord>,
    pub final_x: Vec<f64>,
    pub config_digest: String,
    pub status: RunStatus,
    /// Gap fields hold raw objective values.
    pub metrics_raw: bool,
}

impl Trajectory {
    /// SHA-256 over every recorded value and the final iterate, bit for bit.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.config_digest.as_bytes());
        for r in &self.records {
            h.update((r.t as u64).to_le_bytes());
            for v in [
                r.eta_t,
                r.f_gap,
                r.bregman_psi,
                r.bregman_f,
                r.f_avg_gap,
                r.f_best_gap,
                r.bf_running_avg,
            ] {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        for v in &self.final_x {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }
}

/// The data of one update x_t → x_{t+1}.
#[derive(Clone, Debug)]
pub struct StepInfo {
    pub t: usize,
    /// Sampled component; `None` for full-gradient steps.
    pub index: Option<usize>,
    pub x: Vec<f64>,
    /// f_{ξ_t}(x_t), or f(x_t)
    pub loss_value: f64,
    pub grad: Vec<f64>,
    pub eta: f64,
    pub x_next: Vec<f64>,
}

/// Stepsize and gradient at the current iterate, before the update.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub index: Option<usize>,
    pub loss_value: f64,
    pub grad: Vec<f64>,
    pub eta: f64,
}

/// Step-by-step driver shared by the stochastic and deterministic loops.
#[derive(Debug)]
pub struct Stepper<'a> {
    problem: &'a FiniteSumProblem,
    map: MirrorMap,
    set: FeasibleSet,
    stepsize: Stepsize,
    rng: ChaCha8Rng,
    x: Vec<f64>,
    t: usize,
    deterministic: bool,
    fstar: Option<f64>,
}

impl<'a> Stepper<'a> {
    /// Stochastic driver sampling one component per step.
    pub fn new(problem: &'a FiniteSumProblem, cfg: &RunConfig) -> Result<Self> {
        cfg.validate(problem)?;
        if let StepsizeRule::MirrorPolyak { .. } = cfg.rule {
            return Err(Error::InvalidArgument(
                "mirror Polyak is a full-gradient rule; use run_deterministic_md".into(),
            ));
        }
        Self::build(problem, cfg, false)
    }

    /// Full-gradient driver.
    pub fn deterministic(problem: &'a FiniteSumProblem, cfg: &RunConfig) -> Result<Self> {
        cfg.validate(problem)?;
        Self::build(problem, cfg, true)
    }

    fn build(problem: &'a FiniteSumProblem, cfg: &RunConfig, deterministic: bool) -> Result<Self> {
        let fstar = problem
            .known_fstar()
            .or_else(|| cfg.xstar_for_metrics.as_ref().map(|x| problem.value(x)));
        Ok(Self {
            problem,
            map: cfg.map.clone(),
            set: cfg.set.clone(),
            stepsize: Stepsize::new(cfg.rule.clone())?,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            x: cfg.x_init.clone(),
            t: 1,
            deterministic,
            fstar,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Index of the current iterate.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn stepsize(&self) -> &Stepsize {
        &self.stepsize
    }

    /// Samples ξ_t (if stochastic) and evaluates η_t at x_t.
    pub fn prepare(&mut self) -> Result<Prepared> {
        let mut grad = vec![0.0; self.problem.dim()];
        let (index, loss_value, loss_inf) = if self.deterministic {
            let v = self.problem.value_grad(&self.x, &mut grad);
            let inf = match (self.stepsize.rule(), self.fstar) {
                (StepsizeRule::Constant { .. } | StepsizeRule::MirrorPolyak { .. }, _) => {
                    f64::NEG_INFINITY
                }
                (_, Some(f)) => f,
                (_, None) => return Err(Error::MissingOptimum),
            };
            (None, v, inf)
        } else {
            let i = self.rng.random_range(0..self.problem.n());
            let c = self.problem.component(i);
            let v = c.value_grad(&self.x, &mut grad);
            (Some(i), v, c.inf_unconstrained())
        };
        let ctx = StepContext {
            loss_value,
            loss_inf,
            grad: &grad,
            mu_psi: self.map.mu_psi(),
            norm: &self.map.primal_norm(),
            t: self.t,
        };
        let eta = self.stepsize.next(&ctx)?;
        Ok(Prepared {
            index,
            loss_value,
            grad,
            eta,
        })
    }

    /// Applies a prepared update and advances t.
    pub fn apply(&mut self, p: &Prepared) -> Result<Vec<f64>> {
        let next = mirror_step(&self.map, &self.set, &self.x, &p.grad, p.eta)?;
        self.x = next;
        self.t += 1;
        Ok(self.x.clone())
    }

    pub fn step(&mut self) -> Result<StepInfo> {
        let t = self.t;
        let x = self.x.clone();
        let p = self.prepare()?;
        let x_next = self.apply(&p)?;
        Ok(StepInfo {
            t,
            index: p.index,
            x,
            loss_value: p.loss_value,
            grad: p.grad,
            eta: p.eta,
            x_next,
        })
    }
}

fn is_diverged(x: &[f64]) -> bool {
    x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_THRESHOLD)
}

struct Recorder<'a> {
    problem: &'a FiniteSumProblem,
    map: &'a MirrorMap,
    xstar: Option<&'a [f64]>,
    fstar: f64,
    exact: bool,
    sum_x: Vec<f64>,
    best: f64,
    bf_sum: f64,
    bf_count: usize,
}

impl<'a> Recorder<'a> {
    fn new(problem: &'a FiniteSumProblem, cfg: &'a RunConfig) -> Self {
        let xstar = cfg.xstar_for_metrics.as_deref();
        let fstar = xstar.map_or(0.0, |x| problem.value(x));
        Self {
            problem,
            map: &cfg.map,
            xstar,
            fstar,
            exact: cfg.exact_running_metrics,
            sum_x: vec![0.0; problem.dim()],
            best: f64::INFINITY,
            bf_sum: 0.0,
            bf_count: 0,
        }
    }

    /// (f(x) − f_*, B_f(x_*; x))
    fn gap_and_bf(&self, x: &[f64]) -> (f64, f64) {
        match self.xstar {
            Some(xs) => {
                let mut g = vec![0.0; x.len()];
                let fx = self.problem.value_grad(x, &mut g);
                let bf = self.fstar - fx - dot(&g, &sub(xs, x));
                (fx - self.fstar, bf.max(0.0))
            }
            None => (self.problem.value(x), f64::NAN),
        }
    }

    /// Folds x_t into the running quantities; returns a record when asked.
    fn observe(&mut self, t: usize, x: &[f64], eta: f64, record: bool) -> Result<Option<IterateRecord>> {
        axpy(1.0, x, &mut self.sum_x);
        if !(record || self.exact) {
            return Ok(None);
        }
        let (f_gap, bf) = self.gap_and_bf(x);
        self.best = self.best.min(f_gap);
        self.bf_sum += bf;
        self.bf_count += 1;
        if !record {
            return Ok(None);
        }
        let inv_t = 1.0 / t as f64;
        let avg: Vec<f64> = self.sum_x.iter().map(|v| v * inv_t).collect();
        let f_avg = self.problem.value(&avg) - self.fstar;
        let bregman_psi = match self.xstar {
            Some(xs) => self.map.bregman(xs, x)?,
            None => f64::NAN,
        };
        Ok(Some(IterateRecord {
            t,
            eta_t: eta,
            f_gap,
            bregman_psi,
            bregman_f: bf,
            f_avg_gap: f_avg,
            f_best_gap: self.best,
            bf_running_avg: self.bf_sum / self.bf_count as f64,
        }))
    }
}

fn drive(problem: &FiniteSumProblem, cfg: &RunConfig, mut stepper: Stepper<'_>) -> Result<Trajectory> {
    let mut recorder = Recorder::new(problem, cfg);
    let mut records = Vec::with_capacity(cfg.iterations / cfg.record_every + 2);
    let last = cfg.iterations + 1;
    let mut status = RunStatus::Completed;
    for t in 1..=last {
        let p = stepper.prepare()?;
        let record = (t - 1) % cfg.record_every == 0 || t == last;
        if let Some(r) = recorder.observe(t, stepper.x(), p.eta, record)? {
            records.push(r);
        }
        if t == last {
            break;
        }
        stepper.apply(&p)?;
        if is_diverged(stepper.x()) {
            status = RunStatus::Diverged { t: t + 1 };
            break;
        }
    }
    Ok(Trajectory {
        records,
        final_x: stepper.x().to_vec(),
        config_digest: cfg.digest(problem),
        status,
        metrics_raw: cfg.xstar_for_metrics.is_none(),
    })
}

/// Stochastic mirror descent with one uniformly sampled component per step.
pub fn run_smd(problem: &FiniteSumProblem, cfg: &RunConfig) -> Result<Trajectory> {
    drive(problem, cfg, Stepper::new(problem, cfg)?)
}

/// Full-gradient mirror descent.
pub fn run_deterministic_md(problem: &FiniteSumProblem, cfg: &RunConfig) -> Result<Trajectory> {
    drive(problem, cfg, Stepper::deterministic(problem, cfg)?)
}

/// Per-t mean and standard error (sample std / √R) of one metric.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricStats {
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct MonteCarloSummary {
    pub t: Vec<usize>,
    pub eta: MetricStats,
    pub f_gap: MetricStats,
    pub bregman_psi: MetricStats,
    pub bregman_f: MetricStats,
    pub f_avg_gap: MetricStats,
    pub f_best_gap: MetricStats,
    pub bf_running_avg: MetricStats,
    pub replicates: usize,
    /// Replicates that diverged; they are excluded from the statistics.
    pub diverged: usize,
    /// Final iterates of the completed replicates, in replicate order.
    pub final_xs: Vec<Vec<f64>>,
    pub config_digest: String,
    pub metrics_raw: bool,
}

impl MonteCarloSummary {
    pub fn completed(&self) -> usize {
        self.replicates - self.diverged
    }
}

/// Welford accumulator per (t, metric).
struct Accumulator {
    count: usize,
    mean: Vec<[f64; 7]>,
    m2: Vec<[f64; 7]>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![[0.0; 7]; len],
            m2: vec![[0.0; 7]; len],
        }
    }

    fn push(&mut self, records: &[IterateRecord]) {
        self.count += 1;
        let k = self.count as f64;
        for (j, r) in records.iter().enumerate() {
            let vals = [
                r.eta_t,
                r.f_gap,
                r.bregman_psi,
                r.bregman_f,
                r.f_avg_gap,
                r.f_best_gap,
                r.bf_running_avg,
            ];
            for (m, v) in vals.iter().enumerate() {
                let delta = v - self.mean[j][m];
                self.mean[j][m] += delta / k;
                self.m2[j][m] += delta * (v - self.mean[j][m]);
            }
        }
    }

    fn stats(&self, m: usize) -> MetricStats {
        let r = self.count as f64;
        let mean = self.mean.iter().map(|v| v[m]).collect();
        let se = self
            .m2
            .iter()
            .map(|v| {
                if self.count < 2 {
                    0.0
                } else {
                    (v[m] / (r - 1.0)).sqrt() / r.sqrt()
                }
            })
            .collect();
        MetricStats { mean, se }
    }
}

fn monte_carlo_impl(
    problem: &FiniteSumProblem,
    cfg: &RunConfig,
    replicates: usize,
    deterministic: bool,
) -> Result<MonteCarloSummary> {
    if replicates < 1 {
        return Err(Error::InvalidArgument("replicates must be at least 1".into()));
    }
    cfg.validate(problem)?;
    let mut ts: Option<Vec<usize>> = None;
    let mut acc: Option<Accumulator> = None;
    let mut diverged = 0;
    let mut final_xs = Vec::new();
    let run = |r: usize| {
        let c = cfg.clone().with_seed(cfg.seed.wrapping_add(r as u64));
        if deterministic {
            run_deterministic_md(problem, &c)
        } else {
            run_smd(problem, &c)
        }
    };
    let mut start = 0;
    while start < replicates {
        let end = (start + MC_CHUNK).min(replicates);
        let batch: Vec<Result<Trajectory>> = (start..end).into_par_iter().map(run).collect();
        for traj in batch {
            let traj = traj?;
            if traj.diverged() {
                diverged += 1;
                continue;
            }
            let t: Vec<usize> = traj.records.iter().map(|r| r.t).collect();
            let acc = acc.get_or_insert_with(|| Accumulator::new(t.len()));
            ts.get_or_insert(t);
            acc.push(&traj.records);
            final_xs.push(traj.final_x);
        }
        start = end;
    }
    let acc = acc.unwrap_or_else(|| Accumulator::new(0));
    Ok(MonteCarloSummary {
        t: ts.unwrap_or_default(),
        eta: acc.stats(0),
        f_gap: acc.stats(1),
        bregman_psi: acc.stats(2),
        bregman_f: acc.stats(3),
        f_avg_gap: acc.stats(4),
        f_best_gap: acc.stats(5),
        bf_running_avg: acc.stats(6),
        replicates,
        diverged,
        final_xs,
        config_digest: cfg.digest(problem),
        metrics_raw: cfg.xstar_for_metrics.is_none(),
    })
}

/// Runs `replicates` SMD trajectories with seeds `seed + r` and averages them.
///
/// Fails when more than 1% of the replicates diverge.
pub fn monte_carlo(
    problem: &FiniteSumProblem,
    cfg: &RunConfig,
    replicates: usize,
) -> Result<MonteCarloSummary> {
    let s = monte_carlo_impl(problem, cfg, replicates, false)?;
    if s.diverged * 100 > replicates {
        return Err(Error::TooManyDivergent {
            diverged: s.diverged,
            replicates,
        });
    }
    Ok(s)
}

/// As [`monte_carlo`] but reports divergence instead of failing; used by
/// stepsize sweeps where blow-ups are expected.
pub fn monte_carlo_lenient(
    problem: &FiniteSumProblem,
    cfg: &RunConfig,
    replicates: usize,
    deterministic: bool,
) -> Result<MonteCarloSummary> {
    monte_carlo_impl(problem, cfg, replicates, deterministic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{linear_system_problem, quad1d_problem};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn consistent_system() -> FiniteSumProblem {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 1.0, 0.2, -0.7]);
        let x0 = [0.3, -0.4];
        let b: Vec<f64> = (0..4).map(|i| a[(i, 0)] * x0[0] + a[(i, 1)] * x0[1]).collect();
        linear_system_problem(&a, &b, FeasibleSet::Reals)
            .unwrap()
            .with_xstar(x0.to_vec())
            .unwrap()
    }

    #[test]
    fn fixed_point_at_optimum() {
        let p = consistent_system();
        let xs = p.known_xstar().unwrap().to_vec();
        for rule in [
            StepsizeRule::Constant { eta: 0.1 },
            StepsizeRule::Msps { c: 0.5 },
            StepsizeRule::MspsMax { c: 1.0, eta_b: 1.0 },
        ] {
            let cfg = RunConfig::new(&p, MirrorMap::euclidean(2), rule, 50, 3, xs.clone());
            let tr = run_smd(&p, &cfg).unwrap();
            assert_eq!(tr.final_x, xs);
            for r in &tr.records {
                assert_eq!(r.f_gap, 0.0);
                assert_eq!(r.bregman_psi, 0.0);
            }
        }
    }

    #[test]
    fn one_step_to_zero() {
        let p = quad1d_problem(&[(1.0, 0.0, 0.0)], FeasibleSet::Reals, true).unwrap();
        let cfg = RunConfig::new(
            &p,
            MirrorMap::euclidean(1),
            StepsizeRule::Constant { eta: 0.5 },
            3,
            0,
            vec![1.0],
        );
        let tr = run_smd(&p, &cfg).unwrap();
        assert_eq!(tr.records.len(), 4);
        assert_eq!(tr.records[1].f_gap, 0.0);
        assert_eq!(tr.final_x, vec![0.0]);
        // x̄_2 = ½
        assert_relative_eq!(tr.records[1].f_avg_gap, 0.25);
    }

    #[test]
    fn deterministic_polyak_hand_step() {
        let p = quad1d_problem(&[(0.5, 0.0, 0.0)], FeasibleSet::Reals, true).unwrap();
        let cfg = RunConfig::new(
            &p,
            MirrorMap::euclidean(1),
            StepsizeRule::MirrorPolyak { fstar: 0.0 },
            1,
            0,
            vec![1.0],
        );
        let tr = run_deterministic_md(&p, &cfg).unwrap();
        assert_relative_eq!(tr.records[0].eta_t, 0.5);
        assert_relative_eq!(tr.final_x[0], 0.5);
        assert!(run_smd(&p, &cfg).is_err());
    }

    #[test]
    fn record_schedule() {
        let p = consistent_system();
        let cfg = RunConfig::new(
            &p,
            MirrorMap::euclidean(2),
            StepsizeRule::Constant { eta: 0.01 },
            10,
            1,
            vec![0.0, 0.0],
        )
        .with_record_every(4);
        let tr = run_smd(&p, &cfg).unwrap();
        let ts: Vec<usize> = tr.records.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![1, 5, 9, 11]);
    }

    #[test]
    fn divergence_is_flagged() {
        let p = consistent_system();
        let cfg = RunConfig::new(
            &p,
            MirrorMap::euclidean(2),
            StepsizeRule::Constant { eta: 100.0 },
            2000,
            1,
            vec![1.0, 1.0],
        );
        let tr = run_smd(&p, &cfg).unwrap();
        assert!(tr.diverged());
        assert!(matches!(
            monte_carlo(&p, &cfg, 10),
            Err(Error::TooManyDivergent { .. })
        ));
        let s = monte_carlo_lenient(&p, &cfg, 10, false).unwrap();
        assert_eq!(s.diverged, 10);
        assert!(s.t.is_empty());
    }

    #[test]
    fn bad_configs() {
        let p = consistent_system();
        let base = RunConfig::new(
            &p,
            MirrorMap::euclidean(2),
            StepsizeRule::Constant { eta: 0.1 },
            10,
            1,
            vec![0.0, 0.0],
        );
        let mut c = base.clone();
        c.map = MirrorMap::neg_entropy(2);
        assert!(matches!(run_smd(&p, &c), Err(Error::UnsupportedPair { .. })));
        let mut c = base.clone();
        c.x_init = vec![0.0];
        assert!(matches!(run_smd(&p, &c), Err(Error::DimensionMismatch { .. })));
        let mut c = base.clone();
        c.iterations = 0;
        assert!(run_smd(&p, &c).is_err());
    }

    #[test]
    fn monte_carlo_single_replicate_matches_run() {
        let p = consistent_system();
        let cfg = RunConfig::new(
            &p,
            MirrorMap::euclidean(2),
            StepsizeRule::MspsMax { c: 0.5, eta_b: 1.0 },
            30,
            9,
            vec![0.0, 0.0],
        );
        let s = monte_carlo(&p, &cfg, 1).unwrap();
        let tr = run_smd(&p, &cfg).unwrap();
        let means: Vec<f64> = tr.records.iter().map(|r| r.bregman_psi).collect();
        assert_eq!(s.bregman_psi.mean, means);
        assert!(s.bregman_psi.se.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn raw_metrics_without_optimum() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let p = linear_system_problem(&a, &[1.0, 2.0], FeasibleSet::Reals).unwrap();
        let cfg = RunConfig::new(
            &p,
            MirrorMap::euclidean(1),
            StepsizeRule::Constant { eta: 0.1 },
            5,
            0,
            vec![0.0],
        );
        let tr = run_smd(&p, &cfg).unwrap();
        assert!(tr.metrics_raw);
        assert_relative_eq!(tr.records[0].f_gap, 1.25);
        assert!(tr.records[0].bregman_psi.is_nan());
    }
}
