//! Convergence bounds, their hypotheses, and empirical rate fits.
//!
//! | kind              | metric                          | right-hand side                          |
//! |-------------------|---------------------------------|------------------------------------------|
//! | `Thm1RelStrong`   | E B_ψ(x_*; x_{t+1})             | (1−μη)^t B₁ + σ²_X/μ                     |
//! | `Thm3RelSmooth`   | E (1/t) Σ_{s≤t} B_f(x_*; x_s)   | B₁/(ηt) + σ²_X                           |
//! | `Thm5StrongMSPS`  | E B_ψ(x_*; x_{t+1})             | (1−μα)^t B₁ + η_b σ²/(αμ)                |
//! | `Thm7ConvexMSPS`  | E f(x̄_t) − f_*                  | 2B₁/(αt) + 2η_b σ²/α                     |
//! | `Cor8ConstSmooth` | E f(x̄_t) − f_*                  | 2B₁/(ηt) + 2σ²                           |
//! | `NonSmoothPolyak` | f(x̄_t) − f_*                    | G √(2B₁/(μ_ψ t))                         |
//! | `PLPrecond`       | E f(x_{t+1}) − f_*              | ν^t (f(x₁) − f_*) + Lσ²η_b/(2(1−ν)c)     |
//!
//! B₁ = B_ψ(x_*; x₁).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::MirrorMap;
use crate::problems::FiniteSumProblem;
use crate::solver::{MetricStats, MonteCarloSummary, RunConfig, Stepper};
use crate::stepsizes::{self, StepsizeRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundKind {
    Thm1RelStrong,
    Thm3RelSmooth,
    Thm5StrongMSPS,
    Thm7ConvexMSPS,
    Cor8ConstSmooth,
    NonSmoothPolyak,
    PLPrecond,
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Thm1RelStrong => "thm1",
            BoundKind::Thm3RelSmooth => "thm3",
            BoundKind::Thm5StrongMSPS => "thm5",
            BoundKind::Thm7ConvexMSPS => "thm7",
            BoundKind::Cor8ConstSmooth => "cor8",
            BoundKind::NonSmoothPolyak => "nonsmooth",
            BoundKind::PLPrecond => "pl",
        }
    }

    /// Whether the bound at t constrains the iterate x_{t+1} (rather than
    /// an average over x_1 … x_t).
    pub fn is_last_iterate(&self) -> bool {
        matches!(
            self,
            BoundKind::Thm1RelStrong | BoundKind::Thm5StrongMSPS | BoundKind::PLPrecond
        )
    }
}

/// Constants a bound may need; only those relevant to the kind are read.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundConstants {
    pub mu: Option<f64>,
    pub l: Option<f64>,
    pub l_max: Option<f64>,
    pub mu_psi: Option<f64>,
    pub c: Option<f64>,
    pub eta: Option<f64>,
    pub eta_b: Option<f64>,
    pub alpha: Option<f64>,
    pub nu: Option<f64>,
    pub g: Option<f64>,
    pub sigma_sq: Option<f64>,
    pub sigma_sq_x: Option<f64>,
    /// B_ψ(x_*; x₁)
    pub b1: Option<f64>,
    /// f(x₁) − f(x_*)
    pub f1_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundSpec {
    pub kind: BoundKind,
    pub constants: BoundConstants,
}

fn need(v: Option<f64>, name: &'static str) -> Result<f64> {
    v.ok_or(Error::IncompleteSpec(name))
}

/// a·b with 0·∞ = 0, for neighborhood terms under interpolation.
fn times(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl BoundSpec {
    pub fn new(kind: BoundKind, constants: BoundConstants) -> Self {
        Self { kind, constants }
    }

    /// α given directly, else min{μ_ψ/(2cL), η_b}.
    pub fn alpha(&self) -> Result<f64> {
        let k = &self.constants;
        if let Some(a) = k.alpha {
            return Ok(a);
        }
        Ok(stepsizes::alpha(
            need(k.c, "c")?,
            need(k.mu_psi, "mu_psi")?,
            need(k.l.or(k.l_max), "L")?,
            need(k.eta_b, "eta_b")?,
        ))
    }

    /// ν given directly, else from the preconditioned PL constants.
    pub fn nu(&self) -> Result<f64> {
        let k = &self.constants;
        if let Some(nu) = k.nu {
            return Ok(nu);
        }
        Ok(stepsizes::pl_constants(
            need(k.c, "c")?,
            need(k.l_max, "L_max")?,
            need(k.mu, "mu")?,
            need(k.eta_b, "eta_b")?,
        )
        .nu)
    }

    /// The t-independent neighborhood term.
    pub fn neighborhood(&self) -> Result<f64> {
        let k = &self.constants;
        Ok(match self.kind {
            BoundKind::Thm1RelStrong => times(need(k.sigma_sq_x, "sigma_sq_x")?, 1.0 / need(k.mu, "mu")?),
            BoundKind::Thm3RelSmooth => need(k.sigma_sq_x, "sigma_sq_x")?,
            BoundKind::Thm5StrongMSPS => times(
                need(k.sigma_sq, "sigma_sq")?,
                need(k.eta_b, "eta_b")? / (self.alpha()? * need(k.mu, "mu")?),
            ),
            BoundKind::Thm7ConvexMSPS => {
                times(need(k.sigma_sq, "sigma_sq")?, 2.0 * need(k.eta_b, "eta_b")? / self.alpha()?)
            }
            BoundKind::Cor8ConstSmooth => 2.0 * need(k.sigma_sq, "sigma_sq")?,
            BoundKind::NonSmoothPolyak => 0.0,
            BoundKind::PLPrecond => {
                let nu = self.nu()?;
                times(
                    need(k.sigma_sq, "sigma_sq")?,
                    need(k.l.or(k.l_max), "L")? * need(k.eta_b, "eta_b")?
                        / (2.0 * (1.0 - nu) * need(k.c, "c")?),
                )
            }
        })
    }

    /// Right-hand side at each t.
    pub fn curve(&self, ts: &[usize]) -> Result<Vec<f64>> {
        let k = &self.constants;
        let nb = self.neighborhood()?;
        let term: Box<dyn Fn(f64) -> f64> = match self.kind {
            BoundKind::Thm1RelStrong => {
                let (rate, b1) = (1.0 - need(k.mu, "mu")? * need(k.eta, "eta")?, need(k.b1, "b1")?);
                Box::new(move |t| rate.powf(t) * b1)
            }
            BoundKind::Thm3RelSmooth => {
                let (eta, b1) = (need(k.eta, "eta")?, need(k.b1, "b1")?);
                Box::new(move |t| b1 / (eta * t))
            }
            BoundKind::Thm5StrongMSPS => {
                let (rate, b1) = (1.0 - need(k.mu, "mu")? * self.alpha()?, need(k.b1, "b1")?);
                Box::new(move |t| rate.powf(t) * b1)
            }
            BoundKind::Thm7ConvexMSPS => {
                let (a, b1) = (self.alpha()?, need(k.b1, "b1")?);
                Box::new(move |t| 2.0 * b1 / (a * t))
            }
            BoundKind::Cor8ConstSmooth => {
                let (eta, b1) = (need(k.eta, "eta")?, need(k.b1, "b1")?);
                Box::new(move |t| 2.0 * b1 / (eta * t))
            }
            BoundKind::NonSmoothPolyak => {
                let (g, b1, mp) = (need(k.g, "G")?, need(k.b1, "b1")?, need(k.mu_psi, "mu_psi")?);
                Box::new(move |t| g * (2.0 * b1 / (mp * t)).sqrt())
            }
            BoundKind::PLPrecond => {
                let (nu, f1) = (self.nu()?, need(k.f1_gap, "f1_gap")?);
                Box::new(move |t| nu.powf(t) * f1)
            }
        };
        Ok(ts.iter().map(|&t| term(t as f64) + nb).collect())
    }
}

pub fn bound_curve(spec: &BoundSpec, ts: &[usize]) -> Result<Vec<f64>> {
    spec.curve(ts)
}

/// The bound at each record t: last-iterate kinds bound x_t by the curve
/// at t − 1, averaged kinds use the curve at t.
pub fn bound_at_records(spec: &BoundSpec, ts: &[usize]) -> Result<Vec<f64>> {
    if spec.kind.is_last_iterate() {
        let shifted: Vec<usize> = ts.iter().map(|t| t.saturating_sub(1)).collect();
        spec.curve(&shifted)
    } else {
        spec.curve(ts)
    }
}

/// The Monte Carlo statistic a bound constrains.
pub fn bound_metric(kind: BoundKind, s: &MonteCarloSummary) -> &MetricStats {
    match kind {
        BoundKind::Thm1RelStrong | BoundKind::Thm5StrongMSPS => &s.bregman_psi,
        BoundKind::Thm3RelSmooth => &s.bf_running_avg,
        BoundKind::Thm7ConvexMSPS | BoundKind::Cor8ConstSmooth | BoundKind::NonSmoothPolyak => {
            &s.f_avg_gap
        }
        BoundKind::PLPrecond => &s.f_gap,
    }
}

/// Outcome of comparing mean + slack against a bound at every record.
#[derive(Clone, Debug, PartialEq)]
pub struct Domination {
    pub holds: bool,
    /// Record with the largest mean / (bound + se_mult·SE).
    pub worst_t: usize,
    pub worst_ratio: f64,
    pub bound: Vec<f64>,
}

/// Checks mean_t ≤ bound_t + se_mult·SE_t at every record.
pub fn check_domination(spec: &BoundSpec, s: &MonteCarloSummary, se_mult: f64) -> Result<Domination> {
    let bound = bound_at_records(spec, &s.t)?;
    let m = bound_metric(spec.kind, s);
    let mut holds = true;
    let mut worst_t = 0;
    let mut worst_ratio = f64::NEG_INFINITY;
    for (j, &t) in s.t.iter().enumerate() {
        let cap = bound[j] + se_mult * m.se[j];
        if !(m.mean[j] <= cap) {
            holds = false;
        }
        let ratio = if cap > 0.0 { m.mean[j] / cap } else if m.mean[j] <= 0.0 { 0.0 } else { f64::INFINITY };
        if ratio > worst_ratio || worst_t == 0 {
            worst_ratio = ratio;
            worst_t = t;
        }
    }
    Ok(Domination {
        holds,
        worst_t,
        worst_ratio,
        bound,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Precondition {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

fn cond(name: &str, holds: bool, detail: String) -> Precondition {
    Precondition {
        name: name.to_string(),
        holds,
        detail,
    }
}

const REL_TOL: f64 = 1e-12;

/// Largest observed B_{f_i}(x; y) / B_ψ(x; y) over random feasible pairs.
///
/// A sampled ratio above L refutes L-relative smoothness; a ratio below it
/// certifies nothing.
pub fn sampled_relative_smoothness(
    problem: &FiniteSumProblem,
    map: &MirrorMap,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = problem.dim();
    let mut worst = 0.0f64;
    let mut gy = vec![0.0; d];
    for s in 0..samples {
        let x = problem.set.sample(d, 1.0, &mut rng);
        let y = problem.set.sample(d, 1.0, &mut rng);
        let bpsi = map.bregman(&x, &y)?;
        if bpsi <= 1e-14 {
            continue;
        }
        let c = problem.component(s % problem.n());
        let fy = c.value_grad(&y, &mut gy);
        let diff: f64 = x.iter().zip(&y).zip(&gy).map(|((a, b), g)| g * (a - b)).sum();
        let bf = c.value(&x) - fy - diff;
        worst = worst.max(bf / bpsi);
    }
    Ok(worst)
}

/// Machine-checkable hypotheses of the bound for this problem, map and rule.
pub fn check_preconditions(
    spec: &BoundSpec,
    problem: &FiniteSumProblem,
    map: &MirrorMap,
    rule: &StepsizeRule,
) -> Vec<Precondition> {
    let k = &spec.constants;
    let mut out = Vec::new();
    if let Some(mp) = k.mu_psi {
        out.push(cond(
            "mu_psi matches map",
            (mp - map.mu_psi()).abs() <= REL_TOL,
            format!("declared {mp}, map {}", map.mu_psi()),
        ));
    }
    let eta_rule = match rule {
        StepsizeRule::Constant { eta } => Some(*eta),
        _ => None,
    };
    let c_rule = match rule {
        StepsizeRule::Msps { c } | StepsizeRule::MspsMax { c, .. } => Some(*c),
        StepsizeRule::SmoothedMspsMax { c, .. } => Some(*c),
        _ => None,
    };
    let eta_b_rule = match rule {
        StepsizeRule::MspsMax { eta_b, .. } => Some(*eta_b),
        _ => None,
    };
    let constant_eta = |out: &mut Vec<Precondition>, cap: f64, label: &str| match eta_rule {
        Some(eta) => {
            out.push(cond(
                &format!("eta <= {label}"),
                eta <= cap * (1.0 + REL_TOL),
                format!("eta = {eta}, {label} = {cap}"),
            ));
            if let Some(e) = k.eta {
                out.push(cond("eta matches rule", e == eta, format!("spec {e}, rule {eta}")));
            }
        }
        None => out.push(cond("constant stepsize", false, format!("rule is {}", rule.label()))),
    };
    let msps_c = |out: &mut Vec<Precondition>, threshold: f64| match (rule, c_rule) {
        (StepsizeRule::MspsMax { .. } | StepsizeRule::Msps { .. }, Some(c)) => {
            out.push(cond(
                &format!("c >= {threshold}"),
                c >= threshold,
                format!("c = {c}"),
            ));
            if let Some(sc) = k.c {
                out.push(cond("c matches rule", sc == c, format!("spec {sc}, rule {c}")));
            }
            if let (Some(sb), Some(rb)) = (k.eta_b, eta_b_rule) {
                out.push(cond("eta_b matches rule", sb == rb, format!("spec {sb}, rule {rb}")));
            }
        }
        _ => out.push(cond("mSPS_max stepsize", false, format!("rule is {}", rule.label()))),
    };
    let l = k.l.or(k.l_max);
    match spec.kind {
        BoundKind::Thm1RelStrong | BoundKind::Thm3RelSmooth => {
            match l {
                Some(l) => {
                    constant_eta(&mut out, 1.0 / l, "1/L");
                    match sampled_relative_smoothness(problem, map, 10_000, 0) {
                        Ok(r) => out.push(cond(
                            "relative smoothness not refuted",
                            r <= l * (1.0 + 1e-9) + 1e-12,
                            format!("max sampled B_f/B_psi = {r}, L = {l}"),
                        )),
                        Err(e) => out.push(cond("relative smoothness not refuted", false, e.to_string())),
                    }
                }
                None => out.push(cond("L declared", false, "missing L".into())),
            }
            if spec.kind == BoundKind::Thm1RelStrong {
                out.push(cond(
                    "mu > 0",
                    k.mu.is_some_and(|m| m > 0.0),
                    format!("mu = {:?}", k.mu),
                ));
            }
        }
        BoundKind::Thm5StrongMSPS => {
            msps_c(&mut out, 0.5);
            out.push(cond("mu > 0", k.mu.is_some_and(|m| m > 0.0), format!("mu = {:?}", k.mu)));
        }
        BoundKind::Thm7ConvexMSPS => msps_c(&mut out, 1.0),
        BoundKind::Cor8ConstSmooth => match (l, k.mu_psi) {
            (Some(l), Some(mp)) => constant_eta(&mut out, mp / (2.0 * l), "mu_psi/(2L)"),
            _ => out.push(cond("L and mu_psi declared", false, "missing".into())),
        },
        BoundKind::NonSmoothPolyak => {
            out.push(cond(
                "mirror Polyak stepsize",
                matches!(rule, StepsizeRule::MirrorPolyak { .. }),
                format!("rule is {}", rule.label()),
            ));
            out.push(cond("G declared", k.g.is_some_and(|g| g.is_finite()), format!("G = {:?}", k.g)));
        }
        BoundKind::PLPrecond => {
            msps_c(&mut out, 0.0);
            match (c_rule, k.l_max, k.mu, eta_b_rule) {
                (Some(c), Some(lm), Some(mu), Some(eb)) => {
                    let pl = stepsizes::pl_constants(c, lm, mu, eb);
                    out.push(cond(
                        "c > L_max/(4 mu)",
                        c > lm / (4.0 * mu),
                        format!("c = {c}, L_max/(4 mu) = {}", lm / (4.0 * mu)),
                    ));
                    out.push(cond(
                        "nu in (0, 1)",
                        pl.valid,
                        format!("alpha = {}, nu = {}", pl.alpha, pl.nu),
                    ));
                }
                _ => out.push(cond("PL constants declared", false, "missing c, L_max, mu or eta_b".into())),
            }
        }
    }
    out
}

/// Least-squares fit of log(metric) against t (linear) or log t (sublinear).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    /// exp(slope) for linear fits, the slope for sublinear fits.
    pub rate: f64,
    pub r2: f64,
}

fn windowed(ts: &[usize], m: &[f64], window: (usize, usize)) -> Result<(Vec<f64>, Vec<f64>)> {
    if ts.len() != m.len() {
        return Err(Error::DimensionMismatch {
            expected: ts.len(),
            got: m.len(),
        });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in ts.iter().zip(m) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveMetric { t });
        }
        xs.push(t as f64);
        ys.push(v.ln());
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("fit window holds fewer than two points".into()));
    }
    Ok((xs, ys))
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy <= f64::EPSILON * f64::EPSILON * n {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, r2)
}

/// Geometric decay per step of a metric over t ∈ [window.0, window.1].
pub fn fit_linear_rate(ts: &[usize], metric: &[f64], window: (usize, usize)) -> Result<RateFit> {
    let (xs, ys) = windowed(ts, metric, window)?;
    let (slope, r2) = least_squares(&xs, &ys);
    Ok(RateFit {
        rate: slope.exp(),
        r2,
    })
}

/// Exponent β of a metric ∝ t^β over t ∈ [window.0, window.1].
pub fn fit_sublinear_rate(ts: &[usize], metric: &[f64], window: (usize, usize)) -> Result<RateFit> {
    let (xs, ys) = windowed(ts, metric, window)?;
    let logs: Vec<f64> = xs.iter().map(|t| t.ln()).collect();
    let (slope, r2) = least_squares(&logs, &ys);
    Ok(RateFit { rate: slope, r2 })
}

/// First t with f(x_t) − f_* ≤ ε, or `None` within `max_iter` steps.
pub fn iterations_to_eps(
    problem: &FiniteSumProblem,
    cfg: &RunConfig,
    fstar: f64,
    eps: f64,
    max_iter: usize,
) -> Result<Option<usize>> {
    let mut stepper = Stepper::new(problem, cfg)?;
    for _ in 0..=max_iter {
        if problem.value(stepper.x()) - fstar <= eps {
            return Ok(Some(stepper.t()));
        }
        stepper.step()?;
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub d: usize,
    pub iters_eg: f64,
    pub iters_spgd: f64,
}

impl ScalingRow {
    pub fn ratio(&self) -> f64 {
        self.iters_spgd / self.iters_eg
    }
}

/// Mean iterations to ε of EG and SPGD over `replicates` seeds for each d.
///
/// `build(d)` returns the problem and the EG and SPGD configurations. A
/// replicate that misses ε counts as `max_iter`.
pub fn dimension_scaling<F>(
    dims: &[usize],
    build: F,
    eps: f64,
    max_iter: usize,
    replicates: usize,
) -> Result<Vec<ScalingRow>>
where
    F: Fn(usize) -> Result<(FiniteSumProblem, RunConfig, RunConfig)>,
{
    use rayon::prelude::*;
    dims.iter()
        .map(|&d| {
            let (problem, eg, spgd) = build(d)?;
            let fstar = problem.known_fstar().ok_or(Error::MissingOptimum)?;
            let mean_iters = |cfg: &RunConfig| -> Result<f64> {
                let counts: Vec<Result<usize>> = (0..replicates)
                    .into_par_iter()
                    .map(|r| {
                        let c = cfg.clone().with_seed(cfg.seed.wrapping_add(r as u64));
                        Ok(iterations_to_eps(&problem, &c, fstar, eps, max_iter)?.unwrap_or(max_iter))
                    })
                    .collect();
                let mut total = 0.0;
                for c in counts {
                    total += c? as f64;
                }
                Ok(total / replicates as f64)
            };
            Ok(ScalingRow {
                d,
                iters_eg: mean_iters(&eg)?,
                iters_spgd: mean_iters(&spgd)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::FeasibleSet;
    use crate::problems::{markov_problem, quad1d_problem};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::Rng;

    fn spec(kind: BoundKind, k: BoundConstants) -> BoundSpec {
        BoundSpec::new(kind, k)
    }

    #[test]
    fn curve_examples() {
        let s = spec(
            BoundKind::Thm1RelStrong,
            BoundConstants {
                mu: Some(1.0),
                eta: Some(0.5),
                b1: Some(1.0),
                sigma_sq_x: Some(0.0),
                ..Default::default()
            },
        );
        assert_relative_eq!(s.curve(&[3]).unwrap()[0], 0.125);

        let s = spec(
            BoundKind::Thm3RelSmooth,
            BoundConstants {
                eta: Some(1.0),
                b1: Some(1.0),
                sigma_sq_x: Some(0.0),
                ..Default::default()
            },
        );
        assert_relative_eq!(s.curve(&[10]).unwrap()[0], 0.1);

        let s = spec(
            BoundKind::Thm7ConvexMSPS,
            BoundConstants {
                c: Some(1.0),
                mu_psi: Some(1.0),
                l: Some(2.0),
                eta_b: Some(1.0),
                b1: Some(0.5),
                sigma_sq: Some(0.0),
                ..Default::default()
            },
        );
        let v = s.curve(&[1, 2, 4, 8]).unwrap();
        for w in v.windows(2) {
            assert_relative_eq!(w[0] / w[1], 2.0);
        }
    }

    #[test]
    fn incomplete_spec() {
        let s = spec(BoundKind::Thm5StrongMSPS, BoundConstants::default());
        assert!(matches!(s.curve(&[1]), Err(Error::IncompleteSpec(_))));
    }

    #[test]
    fn infinite_sigma_and_zero_weight() {
        let s = spec(
            BoundKind::Thm1RelStrong,
            BoundConstants {
                mu: Some(1.0),
                eta: Some(0.5),
                b1: Some(1.0),
                sigma_sq_x: Some(0.0),
                sigma_sq: Some(f64::INFINITY),
                ..Default::default()
            },
        );
        assert!(s.curve(&[1]).unwrap()[0].is_finite());
    }

    #[test]
    fn preconditions() {
        let p = quad1d_problem(&[(1.0, 0.0, 0.0)], FeasibleSet::Reals, true).unwrap();
        let map = MirrorMap::euclidean(1);
        let k = BoundConstants {
            mu: Some(2.0),
            l: Some(2.0),
            eta: Some(0.5),
            b1: Some(1.0),
            sigma_sq_x: Some(0.0),
            ..Default::default()
        };
        let pre = check_preconditions(
            &spec(BoundKind::Thm1RelStrong, k.clone()),
            &p,
            &map,
            &StepsizeRule::Constant { eta: 0.5 },
        );
        assert!(pre.iter().all(|c| c.holds), "{pre:?}");

        let pre = check_preconditions(
            &spec(BoundKind::Thm7ConvexMSPS, k),
            &p,
            &map,
            &StepsizeRule::MspsMax { c: 0.9, eta_b: 1.0 },
        );
        assert!(pre.iter().any(|c| c.name == "c >= 1" && !c.holds));
    }

    #[test]
    fn markov_is_relatively_smooth() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = 5;
        let mut p = DMatrix::from_fn(m, m, |_, _| rng.random::<f64>() + 0.01);
        for i in 0..m {
            let s: f64 = p.row(i).sum();
            for j in 0..m {
                p[(i, j)] /= s;
            }
        }
        let prob = markov_problem(&p).unwrap();
        let r = sampled_relative_smoothness(&prob, &MirrorMap::neg_entropy(m), 10_000, 1).unwrap();
        assert!(r <= 1.0, "ratio {r}");
    }

    #[test]
    fn rate_fits() {
        let ts: Vec<usize> = (1..=50).collect();
        let m: Vec<f64> = ts.iter().map(|&t| 0.9f64.powi(t as i32)).collect();
        let f = fit_linear_rate(&ts, &m, (1, 50)).unwrap();
        assert_relative_eq!(f.rate, 0.9, epsilon = 1e-12);
        assert!(f.r2 >= 0.999);

        let f = fit_linear_rate(&ts, &vec![3.0; 50], (1, 50)).unwrap();
        assert_relative_eq!(f.rate, 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noisy: Vec<f64> = ts
            .iter()
            .map(|&t| 0.8f64.powi(t as i32) * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0)))
            .collect();
        let f = fit_linear_rate(&ts, &noisy, (1, 50)).unwrap();
        assert!((0.79..=0.81).contains(&f.rate));

        let m: Vec<f64> = ts.iter().map(|&t| 5.0 / t as f64).collect();
        assert_relative_eq!(fit_sublinear_rate(&ts, &m, (1, 50)).unwrap().rate, -1.0, epsilon = 1e-12);
        let m: Vec<f64> = ts.iter().map(|&t| 3.0 / (t as f64).sqrt()).collect();
        assert_relative_eq!(fit_sublinear_rate(&ts, &m, (1, 50)).unwrap().rate, -0.5, epsilon = 1e-12);

        let mut z = m.clone();
        z[10] = 0.0;
        assert!(matches!(
            fit_sublinear_rate(&ts, &z, (1, 50)),
            Err(Error::NonPositiveMetric { t: 11 })
        ));
    }
}
