//! Problem instances: random generators and the config → problem builder.

use std::path::Path;

use anyhow::{bail, Context};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use mirroropt_core::constraints::dirichlet_ones;
use mirroropt_core::problems::{
    abs_plus_quadratic_problem, linear_system_problem, logistic_problem, markov_problem,
    quad1d_problem, rbf_features, read_libsvm, stationary_distribution, synth_margin_dataset,
};
use mirroropt_core::{
    run_deterministic_md, FeasibleSet, FiniteSumProblem, MirrorMap, NormTag, RunConfig,
    StepsizeRule,
};

use crate::config::{ExperimentConfig, GeometryConfig, MapName, ProblemConfig};

/// Row-stochastic m×m matrix with entries bounded away from zero.
pub fn random_chain(m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = DMatrix::from_fn(m, m, |_, _| 0.05 + rng.random::<f64>());
    for i in 0..m {
        let s: f64 = p.row(i).sum();
        p.row_mut(i).iter_mut().for_each(|v| *v /= s);
    }
    p
}

pub fn gaussian_matrix(n: usize, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// ‖Pᵀx − x‖₁
pub fn stationarity_residual(p: &DMatrix<f64>, x: &[f64]) -> f64 {
    let v = DVector::from_column_slice(x);
    (p.transpose() * &v - &v).abs().sum()
}

/// Gaussian system on `set` with a planted solution drawn from the set.
pub fn planted_linear_system(
    n: usize,
    d: usize,
    set: FeasibleSet,
    seed: u64,
) -> anyhow::Result<(FiniteSumProblem, DMatrix<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(n, d, &mut rng);
    let x0 = match &set {
        FeasibleSet::Simplex => dirichlet_ones(d, &mut rng),
        other => other.sample(d, 1.0, &mut rng),
    };
    let b: Vec<f64> = (a.clone() * DVector::from_column_slice(&x0)).iter().copied().collect();
    let p = linear_system_problem(&a, &b, set)?.with_xstar(x0)?;
    Ok((p, a))
}

/// Least-squares system over ℝ^d with an inconsistent right-hand side.
pub fn noisy_linear_system(n: usize, d: usize, seed: u64) -> anyhow::Result<(FiniteSumProblem, DMatrix<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(n, d, &mut rng);
    let b: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let ata = a.transpose() * &a;
    let atb = a.transpose() * DVector::from_column_slice(&b);
    let xs = ata
        .cholesky()
        .context("design matrix is rank deficient")?
        .solve(&atb);
    let p = linear_system_problem(&a, &b, FeasibleSet::Reals)?
        .with_xstar(xs.iter().copied().collect())?;
    Ok((p, a))
}

/// Rademacher system on Δ_d with x_* = e₁: every row is ±1, so each f_i is
/// 1-smooth in ‖·‖₁ and d-smooth in ‖·‖₂.
pub fn rademacher_simplex_system(d: usize, rows_per_dim: usize, seed: u64) -> anyhow::Result<FiniteSumProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rows_per_dim * d;
    let a = DMatrix::from_fn(n, d, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
    let mut xs = vec![0.0; d];
    xs[0] = 1.0;
    let b: Vec<f64> = (0..n).map(|i| a[(i, 0)]).collect();
    Ok(linear_system_problem(&a, &b, FeasibleSet::Simplex)?.with_xstar(xs)?)
}

/// Q = AᵀA/n
pub fn hessian(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * a / a.nrows() as f64
}

/// A problem built from a config, with what the builder learned on the way.
#[derive(Debug)]
pub struct BuiltProblem {
    pub problem: FiniteSumProblem,
    /// Hessian of f for quadratic objectives.
    pub hessian: Option<DMatrix<f64>>,
    /// The transition matrix of Markov instances.
    pub chain: Option<DMatrix<f64>>,
    /// x_* comes from a finite reference solve.
    pub xstar_approximate: bool,
}

pub fn build_problem(cfg: &ExperimentConfig) -> anyhow::Result<BuiltProblem> {
    let set = cfg.set.as_ref().map(|s| s.build()).transpose()?;
    let mut quad_hessian = None;
    let mut chain = None;
    let mut approx = false;
    let problem = match &cfg.problem {
        ProblemConfig::Markov { m, seed } => {
            if let Some(s) = &set {
                if *s != FeasibleSet::Simplex {
                    bail!("markov problems live on the simplex, got set {s}");
                }
            }
            let p = random_chain(*m, *seed);
            let prob = markov_problem(&p)?;
            chain = Some(p);
            prob
        }
        ProblemConfig::LinearSystem { n, d, consistent, seed } => {
            let set = set.unwrap_or(FeasibleSet::Reals);
            let (p, a) = if *consistent {
                planted_linear_system(*n, *d, set, *seed)?
            } else {
                if set != FeasibleSet::Reals {
                    bail!("inconsistent systems are only supported over the reals");
                }
                noisy_linear_system(*n, *d, *seed)?
            };
            quad_hessian = Some(hessian(&a));
            p
        }
        ProblemConfig::Quad1d { coeffs, strongly_convex } => {
            let set = set.unwrap_or(FeasibleSet::cube(1, 0.0, 1.0)?);
            let triples: Vec<(f64, f64, f64)> = coeffs.iter().map(|c| (c[0], c[1], c[2])).collect();
            quad1d_problem(&triples, set, *strongly_convex)?
        }
        ProblemConfig::Logistic {
            data,
            synthetic,
            rbf_bandwidth,
            reference_iterations,
        } => {
            let ds = match (data, synthetic) {
                (Some(path), None) => read_libsvm(Path::new(path))?,
                (None, Some(s)) => synth_margin_dataset(s.n, s.d, s.margin, s.seed)?,
                _ => bail!("logistic problems need exactly one of `data` or `synthetic`"),
            };
            let ds = match rbf_bandwidth {
                Some(g) => rbf_features(&ds, *g)?,
                None => ds,
            };
            let p = logistic_problem(&ds, set.unwrap_or(FeasibleSet::Reals))?;
            match reference_iterations {
                Some(iters) => {
                    approx = true;
                    reference_solve(p, *iters)?
                }
                None => p,
            }
        }
        ProblemConfig::AbsPlusQuadratic {
            center,
            abs_weights,
            quad_weights,
        } => {
            if let Some(s) = &set {
                if *s != FeasibleSet::Reals {
                    bail!("abs_plus_quadratic is defined over the reals, got set {s}");
                }
            }
            abs_plus_quadratic_problem(center.clone(), abs_weights.clone(), quad_weights.clone())?
        }
    };
    Ok(BuiltProblem {
        problem,
        hessian: quad_hessian,
        chain,
        xstar_approximate: approx,
    })
}

/// Full-gradient descent with η = 1/L from x = 0; the last iterate becomes x_*.
pub fn reference_solve(p: FiniteSumProblem, iterations: usize) -> anyhow::Result<FiniteSumProblem> {
    let d = p.dim();
    let l = p.l_max();
    let x0 = match p.set {
        FeasibleSet::Simplex => vec![1.0 / d as f64; d],
        _ => vec![0.0; d],
    };
    let mut cfg = RunConfig::new(
        &p,
        MirrorMap::euclidean(d),
        StepsizeRule::Constant { eta: 1.0 / l },
        iterations.max(1),
        0,
        x0,
    )
    .with_record_every(iterations.max(1));
    cfg.xstar_for_metrics = None;
    let tr = run_deterministic_md(&p, &cfg)?;
    Ok(p.with_xstar(tr.final_x)?)
}

/// Mirror map for a config; the problem norm is set to the map's primal norm.
pub fn build_map(
    geometry: &GeometryConfig,
    built: &mut BuiltProblem,
) -> anyhow::Result<MirrorMap> {
    let d = built.problem.dim();
    let map = match geometry.map {
        MapName::Euclidean => MirrorMap::euclidean(d),
        MapName::Pnorm => MirrorMap::pnorm(d, geometry.p.context("pnorm map needs `p`")?)?,
        MapName::NegEntropy => MirrorMap::neg_entropy(d),
        MapName::Mahalanobis => {
            let diag = match (&geometry.diag, &built.hessian) {
                (Some(v), _) => v.clone(),
                (None, Some(h)) => h.diagonal().iter().copied().collect(),
                (None, None) => bail!("mahalanobis map needs `diag` for this problem"),
            };
            if diag.len() != d {
                bail!("`diag` has length {}, problem dimension is {d}", diag.len());
            }
            MirrorMap::mahalanobis(DMatrix::from_diagonal(&DVector::from_vec(diag)))?
        }
    };
    let norm = map.primal_norm();
    if norm.name() != built.problem.norm.name() {
        built.problem = match &built.chain {
            // the declared unit smoothness of Markov rows holds for ℓ₁ only
            Some(p) => markov_with_norm(p, norm)?,
            None => built.problem.clone().with_norm(norm),
        };
    }
    Ok(map)
}

fn markov_with_norm(p: &DMatrix<f64>, norm: NormTag) -> anyhow::Result<FiniteSumProblem> {
    let m = p.nrows();
    let g = p.transpose() - DMatrix::identity(m, m);
    let mut prob = linear_system_problem(&g, &vec![0.0; m], FeasibleSet::Simplex)?.with_norm(norm);
    prob.name = "markov".into();
    let xs = stationary_distribution(p).context("chain has no unique stationary distribution")?;
    Ok(prob.with_xstar(xs)?.with_fstar(0.0))
}

/// Default x₁: uniform on the simplex, the box midpoint, otherwise zero.
pub fn default_x_init(set: &FeasibleSet, d: usize) -> Vec<f64> {
    match set {
        FeasibleSet::Simplex => vec![1.0 / d as f64; d],
        FeasibleSet::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
        _ => vec![0.0; d],
    }
}
