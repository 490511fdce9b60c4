//! The neighborhood radii σ² and σ²_X, a brute-force infimum oracle for
//! components without a closed form, and the interpolation check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Component, FiniteSumProblem};
use crate::constraints::{dirichlet_ones, euclid_project, FeasibleSet};
use crate::error::{Error, Result};
use crate::linalg::{dot, sub};

/// Grid size used by [`sigma_sq_constrained`] when a component lacks a closed form.
pub const DEFAULT_ORACLE_RESOLUTION: usize = 4096;

const REFINE_ITERS: usize = 500;

fn resolve_xstar<'a>(problem: &'a FiniteSumProblem, xstar: Option<&'a [f64]>) -> Result<&'a [f64]> {
    let x = xstar.or(problem.known_xstar()).ok_or(Error::MissingOptimum)?;
    if x.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x.len(),
        });
    }
    Ok(x)
}

/// σ² = f(x_*) − (1/n) Σ f_i^*, +∞ when some f_i is unbounded below.
pub fn sigma_sq(problem: &FiniteSumProblem, xstar: Option<&[f64]>) -> Result<f64> {
    let x = resolve_xstar(problem, xstar)?;
    let mut total = 0.0;
    for c in problem.components() {
        let inf = c.inf_unconstrained();
        if inf == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        total += (c.value(x) - inf).max(0.0);
    }
    Ok(total / problem.n() as f64)
}

/// σ²_X together with the oracle resolution when any infimum was estimated.
///
/// An estimated infimum is an upper bound, so the reported value is then a
/// lower estimate of σ²_X.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedNeighborhood {
    pub value: f64,
    pub oracle_resolution: Option<usize>,
}

fn constrained_gaps(
    problem: &FiniteSumProblem,
    x: &[f64],
) -> Result<(Vec<f64>, Option<usize>)> {
    let mut used_oracle = None;
    let mut gaps = Vec::with_capacity(problem.n());
    for c in problem.components() {
        let inf = match c.inf_constrained(&problem.set) {
            Some(v) => v,
            None => {
                used_oracle = Some(DEFAULT_ORACLE_RESOLUTION);
                component_inf_oracle(c.as_ref(), &problem.set, DEFAULT_ORACLE_RESOLUTION, None)?
                    .value
            }
        };
        gaps.push((c.value(x) - inf).max(0.0));
    }
    Ok((gaps, used_oracle))
}

/// σ²_X = f(x_*) − (1/n) Σ f_i^*(X).
pub fn sigma_sq_constrained(
    problem: &FiniteSumProblem,
    xstar: Option<&[f64]>,
) -> Result<ConstrainedNeighborhood> {
    let x = resolve_xstar(problem, xstar)?;
    let (gaps, oracle_resolution) = constrained_gaps(problem, x)?;
    Ok(ConstrainedNeighborhood {
        value: gaps.iter().sum::<f64>() / problem.n() as f64,
        oracle_resolution,
    })
}

/// (1/n) Σ ‖∇f_i(x_*)‖²₂.
pub fn expected_grad_norm_sq(problem: &FiniteSumProblem, xstar: Option<&[f64]>) -> Result<f64> {
    let x = resolve_xstar(problem, xstar)?;
    let total: f64 = problem
        .components()
        .iter()
        .map(|c| {
            let g = c.grad(x);
            dot(&g, &g)
        })
        .sum();
    Ok(total / problem.n() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleEstimate {
    /// Upper bound on the infimum.
    pub value: f64,
    pub argmin: Vec<f64>,
    pub resolution: usize,
}

/// Euclidean projection onto {‖x‖₁ ≤ λ}.
fn project_l1_ball(x: &[f64], lambda: f64) -> Vec<f64> {
    let norm: f64 = x.iter().map(|v| v.abs()).sum();
    if norm <= lambda {
        return x.to_vec();
    }
    let scaled: Vec<f64> = x.iter().map(|v| v.abs() / lambda).collect();
    let w = euclid_project(&FeasibleSet::Simplex, &scaled).expect("simplex projection");
    x.iter()
        .zip(w)
        .map(|(v, wj)| v.signum() * wj * lambda)
        .collect()
}

fn project(set: &FeasibleSet, x: &[f64]) -> Vec<f64> {
    match set {
        FeasibleSet::L1Ball { lambda } => project_l1_ball(x, *lambda),
        other => euclid_project(other, x).expect("projection onto a supported set"),
    }
}

fn tensor_grid(lo: &[f64], hi: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let d = lo.len();
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut k| {
            (0..d)
                .map(|j| {
                    let i = k % per_axis;
                    k /= per_axis;
                    if per_axis == 1 {
                        0.5 * (lo[j] + hi[j])
                    } else {
                        lo[j] + (hi[j] - lo[j]) * i as f64 / (per_axis - 1) as f64
                    }
                })
                .collect()
        })
        .collect()
}

fn candidate_points(set: &FeasibleSet, dim: usize, resolution: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    match set {
        FeasibleSet::Box { lo, hi } => {
            let mut k = (resolution as f64).powf(1.0 / dim as f64).floor() as usize;
            while k > 1 && k.checked_pow(dim as u32).is_none_or(|t| t > resolution) {
                k -= 1;
            }
            if k >= 2 {
                tensor_grid(lo, hi, k)
            } else {
                // too many dimensions for a tensor grid: corners of the box are
                // replaced by uniform samples
                (0..resolution.max(1)).map(|_| set.sample(dim, 1.0, &mut rng)).collect()
            }
        }
        FeasibleSet::Simplex => {
            let mut pts: Vec<Vec<f64>> = (0..dim)
                .map(|j| {
                    let mut e = vec![0.0; dim];
                    e[j] = 1.0;
                    e
                })
                .collect();
            pts.push(vec![1.0 / dim as f64; dim]);
            while pts.len() < resolution {
                pts.push(dirichlet_ones(dim, &mut rng));
            }
            pts
        }
        FeasibleSet::L1Ball { lambda } => {
            let mut pts = vec![vec![0.0; dim]];
            for j in 0..dim {
                for s in [-1.0, 1.0] {
                    let mut e = vec![0.0; dim];
                    e[j] = s * lambda;
                    pts.push(e);
                }
            }
            while pts.len() < resolution {
                pts.push(set.sample(dim, 1.0, &mut rng));
            }
            pts
        }
        FeasibleSet::Reals | FeasibleSet::NonNeg => unreachable!("bounded by caller"),
    }
}

/// Projected gradient descent with Armijo backtracking from `x`.
fn refine(component: &dyn Component, set: &FeasibleSet, mut x: Vec<f64>) -> (f64, Vec<f64>) {
    let mut g = vec![0.0; x.len()];
    let mut fx = component.value_grad(&x, &mut g);
    let mut step = 1.0;
    for _ in 0..REFINE_ITERS {
        let mut accepted = false;
        while step > 1e-16 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
            let y = project(set, &trial);
            let fy = component.value(&y);
            let d = sub(&x, &y);
            if fy.is_finite() && fy <= fx - 0.5 / step * dot(&d, &d) + 1e-15 * fx.abs() {
                if fy < fx {
                    x = y;
                    fx = component.value_grad(&x, &mut g);
                    accepted = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step *= 2.0;
    }
    (fx, x)
}

/// Brute-force infimum of one component over a bounded set (or over `set ∩ bbox`).
///
/// Evaluates `resolution` grid points (Box) or vertices plus Dirichlet samples
/// (Simplex, L1 ball), then refines the best point by projected gradient
/// descent. The result is an upper bound on the true infimum.
pub fn component_inf_oracle(
    component: &dyn Component,
    set: &FeasibleSet,
    resolution: usize,
    bbox: Option<(&[f64], &[f64])>,
) -> Result<OracleEstimate> {
    let dim = component.dim();
    let search = match (set, bbox) {
        (FeasibleSet::Reals, Some((lo, hi))) => FeasibleSet::new_box(lo.to_vec(), hi.to_vec())?,
        (FeasibleSet::NonNeg, Some((lo, hi))) => FeasibleSet::new_box(
            lo.iter().map(|v| v.max(0.0)).collect(),
            hi.iter().map(|v| v.max(0.0)).collect(),
        )?,
        (FeasibleSet::Reals | FeasibleSet::NonNeg, None) => return Err(Error::UnboundedSet),
        (bounded, _) => bounded.clone(),
    };
    if let FeasibleSet::Box { lo, .. } = &search {
        if lo.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: lo.len(),
            });
        }
    }
    let points = candidate_points(&search, dim, resolution);
    let (best_idx, _) = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| (i, component.value(p)))
        .reduce(
            || (usize::MAX, f64::INFINITY),
            |a, b| {
                // total order on (value, index) keeps the reduction order-independent
                match a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)) {
                    std::cmp::Ordering::Greater => b,
                    _ => a,
                }
            },
        );
    let start = points[best_idx].clone();
    let (value, argmin) = refine(component, &search, start);
    Ok(OracleEstimate {
        value,
        argmin,
        resolution: points.len(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationReport {
    /// σ²_X ≤ n·tol
    pub sigma_x_zero: bool,
    /// f_i(x_*) − f_i^*(X) ≤ tol for every i
    pub xstar_in_all_component_minima: bool,
    pub sigma_sq_constrained: f64,
    pub max_component_gap: f64,
}

impl InterpolationReport {
    pub fn flags_agree(&self) -> bool {
        self.sigma_x_zero == self.xstar_in_all_component_minima
    }
}

/// Numerical check of σ²_X = 0 ⇔ x_* minimizes every f_i over X.
pub fn interpolation_check(
    problem: &FiniteSumProblem,
    xstar: &[f64],
    tol: f64,
) -> Result<InterpolationReport> {
    let (gaps, _) = constrained_gaps(problem, resolve_xstar(problem, Some(xstar))?)?;
    let n = problem.n() as f64;
    let sigma_x = gaps.iter().sum::<f64>() / n;
    let max_gap = gaps.iter().fold(0.0f64, |m, &g| m.max(g));
    Ok(InterpolationReport {
        sigma_x_zero: sigma_x <= n * tol,
        xstar_in_all_component_minima: max_gap <= tol,
        sigma_sq_constrained: sigma_x,
        max_component_gap: max_gap,
    })
}
