//! Finite-sum problems f(x) = (1/n) Σ f_i(x) over a feasible set, the
//! problem builders used by the experiments, and the neighborhood
//! quantities σ² and σ²_X.

mod components;
mod data;
mod neighborhood;

use std::sync::Arc;

use nalgebra::DMatrix;

pub use components::{
    AbsPlusQuadratic, Component, LeastSquaresRow, LiftedComponent, Logistic, Quadratic1d,
};
pub use data::{read_libsvm, parse_libsvm, rbf_features, resolve_data_path, synth_margin_dataset, Dataset, DATA_DIR_ENV};
pub use neighborhood::{
    component_inf_oracle, expected_grad_norm_sq, interpolation_check, sigma_sq,
    sigma_sq_constrained, ConstrainedNeighborhood, InterpolationReport, OracleEstimate,
};

use crate::constraints::{l1_lift, FeasibleSet, LiftMatrix};
use crate::error::{Error, Result};
use crate::geometry::NormTag;
use crate::linalg::{axpy, dot, sub};

/// f(x) = (1/n) Σ f_i(x) with uniform sampling weights.
#[derive(Clone, Debug)]
pub struct FiniteSumProblem {
    pub name: String,
    components: Vec<Arc<dyn Component>>,
    pub set: FeasibleSet,
    pub norm: NormTag,
    known_xstar: Option<Vec<f64>>,
    known_fstar: Option<f64>,
    declared_smoothness: Option<f64>,
    dim: usize,
}

impl FiniteSumProblem {
    pub fn new(
        name: impl Into<String>,
        components: Vec<Arc<dyn Component>>,
        set: FeasibleSet,
        norm: NormTag,
    ) -> Result<Self> {
        let dim = components.first().map(|c| c.dim()).ok_or_else(|| {
            Error::InvalidArgument("a finite-sum problem needs at least one component".into())
        })?;
        if let Some(c) = components.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.dim(),
            });
        }
        if let FeasibleSet::Box { lo, .. } = &set {
            if lo.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: lo.len(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            components,
            set,
            norm,
            known_xstar: None,
            known_fstar: None,
            declared_smoothness: None,
            dim,
        })
    }

    /// Attaches a known minimizer; it must be feasible.
    pub fn with_xstar(mut self, xstar: Vec<f64>) -> Result<Self> {
        if xstar.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xstar.len(),
            });
        }
        if !self.set.contains(&xstar) {
            return Err(Error::InfeasibleStart("known minimizer is not feasible".into()));
        }
        self.known_fstar.get_or_insert(self.value(&xstar));
        self.known_xstar = Some(xstar);
        Ok(self)
    }

    pub fn with_fstar(mut self, fstar: f64) -> Self {
        self.known_fstar = Some(fstar);
        self
    }

    pub fn with_norm(mut self, norm: NormTag) -> Self {
        self.norm = norm;
        self
    }

    /// Overrides the computed L_max with a declared constant.
    pub fn with_declared_smoothness(mut self, l: f64) -> Self {
        self.declared_smoothness = Some(l);
        self
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Arc<dyn Component>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &dyn Component {
        self.components[i].as_ref()
    }

    pub fn known_xstar(&self) -> Option<&[f64]> {
        self.known_xstar.as_deref()
    }

    pub fn known_fstar(&self) -> Option<f64> {
        self.known_fstar
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.components.iter().map(|c| c.value(x)).sum::<f64>() / self.n() as f64
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.value_grad(x, &mut g);
        g
    }

    /// f(x), writing ∇f(x) into `out`.
    pub fn value_grad(&self, x: &[f64], out: &mut [f64]) -> f64 {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut buf = vec![0.0; self.dim];
        let mut total = 0.0;
        for c in &self.components {
            total += c.value_grad(x, &mut buf);
            axpy(1.0, &buf, out);
        }
        let inv = 1.0 / self.n() as f64;
        out.iter_mut().for_each(|v| *v *= inv);
        total * inv
    }

    /// B_f(x; y) = f(x) − f(y) − ⟨∇f(y), x − y⟩.
    pub fn bregman_f(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim];
        let fy = self.value_grad(y, &mut g);
        self.value(x) - fy - dot(&g, &sub(x, y))
    }

    /// L_i with respect to the problem norm.
    pub fn smoothness(&self, i: usize) -> f64 {
        self.components[i].smoothness(&self.norm)
    }

    /// max_i L_i, or the declared constant when one was set.
    pub fn l_max(&self) -> f64 {
        self.declared_smoothness.unwrap_or_else(|| {
            (0..self.n()).map(|i| self.smoothness(i)).fold(0.0, f64::max)
        })
    }

    /// Rewrites an ℓ₁-ball problem over the simplex Δ_{2d} via w ↦ Λw.
    pub fn lift_l1(&self) -> Result<(FiniteSumProblem, LiftMatrix)> {
        let lambda = match self.set {
            FeasibleSet::L1Ball { lambda } => lambda,
            _ => {
                return Err(Error::InvalidArgument(
                    "only l1-ball problems can be lifted".into(),
                ))
            }
        };
        let lift = LiftMatrix::new(lambda, self.dim)?;
        let comps: Vec<Arc<dyn Component>> = self
            .components
            .iter()
            .map(|c| {
                Arc::new(LiftedComponent {
                    inner: c.clone(),
                    lift,
                }) as Arc<dyn Component>
            })
            .collect();
        let mut lifted = FiniteSumProblem::new(
            format!("{}-lifted", self.name),
            comps,
            FeasibleSet::Simplex,
            NormTag::L1,
        )?;
        if let Some(l) = self.declared_smoothness {
            lifted.declared_smoothness = Some(lambda * lambda * l);
        }
        if let Some(x) = &self.known_xstar {
            lifted = lifted.with_xstar(l1_lift(lambda, x)?)?;
        }
        if let Some(f) = self.known_fstar {
            lifted.known_fstar = Some(f);
        }
        Ok((lifted, lift))
    }
}

/// Sum of one-dimensional quadratics a x² + b x + c.
///
/// With `require_strongly_convex`, the averaged objective must have ā > 0.
pub fn quad1d_problem(
    coeffs: &[(f64, f64, f64)],
    set: FeasibleSet,
    require_strongly_convex: bool,
) -> Result<FiniteSumProblem> {
    match &set {
        FeasibleSet::Reals | FeasibleSet::NonNeg => {}
        FeasibleSet::Box { lo, .. } if lo.len() == 1 => {}
        other => {
            return Err(Error::InvalidArgument(format!(
                "one-dimensional quadratics need reals, nonneg or a 1-d box, got {other}"
            )))
        }
    }
    if coeffs.is_empty() {
        return Err(Error::InvalidArgument("no quadratic components".into()));
    }
    let mean_a = coeffs.iter().map(|c| c.0).sum::<f64>() / coeffs.len() as f64;
    if require_strongly_convex && mean_a <= 0.0 {
        return Err(Error::Domain(format!(
            "averaged quadratic is not strongly convex (mean a = {mean_a})"
        )));
    }
    let comps = coeffs
        .iter()
        .map(|&(a, b, c)| Arc::new(Quadratic1d::new(a, b, c)) as Arc<dyn Component>)
        .collect();
    let problem = FiniteSumProblem::new("quad1d", comps, set.clone(), NormTag::L2)?;
    if mean_a > 0.0 {
        // minimizer of the averaged quadratic on the interval
        let mean_b = coeffs.iter().map(|c| c.1).sum::<f64>() / coeffs.len() as f64;
        let v = -mean_b / (2.0 * mean_a);
        let x = match &set {
            FeasibleSet::Reals => v,
            FeasibleSet::NonNeg => v.max(0.0),
            FeasibleSet::Box { lo, hi } => v.clamp(lo[0], hi[0]),
            _ => unreachable!(),
        };
        return problem.with_xstar(vec![x]);
    }
    Ok(problem)
}

/// f_i(x) = ½(⟨A_i, x⟩ − b_i)², Euclidean norm by default.
pub fn linear_system_problem(
    a: &DMatrix<f64>,
    b: &[f64],
    set: FeasibleSet,
) -> Result<FiniteSumProblem> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let comps = (0..a.nrows())
        .map(|i| {
            let row: Vec<f64> = a.row(i).iter().copied().collect();
            Arc::new(LeastSquaresRow::new(row, b[i])) as Arc<dyn Component>
        })
        .collect();
    FiniteSumProblem::new("linear-system", comps, set, NormTag::L2)
}

/// Stationary distribution of a Markov chain as a linear system on the simplex:
/// f_i(x) = ½⟨g_i, x⟩² with g_i = (Pᵀ − I)_{i:}.
pub fn markov_problem(p: &DMatrix<f64>) -> Result<FiniteSumProblem> {
    let m = p.nrows();
    if p.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: p.ncols(),
        });
    }
    for i in 0..m {
        let row = p.row(i);
        if row.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::NotStochastic(format!("row {i} has a negative entry")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
        }
    }
    let g = p.transpose() - DMatrix::identity(m, m);
    let problem = linear_system_problem(&g, &vec![0.0; m], FeasibleSet::Simplex)?
        .with_norm(NormTag::L1);
    let observed = problem.l_max();
    if observed > 1.0 + 1e-12 {
        log::warn!("markov rows exceed the unit smoothness bound: L = {observed}");
    }
    let mut problem = problem.with_declared_smoothness(observed.max(1.0));
    problem.name = "markov".into();
    match stationary_distribution(p) {
        Some(x) => problem.with_xstar(x).map(|p| p.with_fstar(0.0)),
        None => Ok(problem.with_fstar(0.0)),
    }
}

/// Solves (Pᵀ − I)x = 0, Σx = 1; `None` when the chain has no unique solution.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Option<Vec<f64>> {
    let m = p.nrows();
    let mut sys = p.transpose() - DMatrix::identity(m, m);
    for j in 0..m {
        sys[(m - 1, j)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::zeros(m);
    rhs[m - 1] = 1.0;
    let x = sys.lu().solve(&rhs)?;
    if x.iter().any(|&v| v < -1e-10 || !v.is_finite()) {
        return None;
    }
    let mut x: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    Some(x)
}

/// Binary logistic regression, one component per example.
pub fn logistic_problem(data: &Dataset, set: FeasibleSet) -> Result<FiniteSumProblem> {
    if let Some((i, y)) = data
        .labels
        .iter()
        .enumerate()
        .find(|(_, &y)| y != 1.0 && y != -1.0)
    {
        return Err(Error::BadLabels(format!("label {y} at row {i}")));
    }
    let comps = (0..data.n())
        .map(|i| {
            let w: Vec<f64> = data.features.row(i).iter().copied().collect();
            Arc::new(Logistic::new(w, data.labels[i])) as Arc<dyn Component>
        })
        .collect();
    let mut p = FiniteSumProblem::new("logistic", comps, set, NormTag::L2)?;
    p.name = format!("logistic-{}", data.name);
    Ok(p)
}

/// f(x) = Σ w_j|x_j − c_j| + ½ Σ q_j (x_j − c_j)², a single convex non-smooth component.
pub fn abs_plus_quadratic_problem(
    center: Vec<f64>,
    abs_weights: Vec<f64>,
    quad_weights: Vec<f64>,
) -> Result<FiniteSumProblem> {
    let d = center.len();
    if abs_weights.len() != d || quad_weights.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: abs_weights.len().min(quad_weights.len()),
        });
    }
    let comp = AbsPlusQuadratic {
        center: center.clone(),
        abs_weights,
        quad_weights,
    };
    FiniteSumProblem::new(
        "abs-plus-quadratic",
        vec![Arc::new(comp)],
        FeasibleSet::Reals,
        NormTag::L2,
    )?
    .with_xstar(center)
}
