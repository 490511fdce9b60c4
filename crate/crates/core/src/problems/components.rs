//! Concrete loss components f_i.

use std::fmt;
use std::sync::Arc;

use crate::constraints::{FeasibleSet, LiftMatrix};
use crate::geometry::{dual_norm_sq, NormTag};
use crate::linalg::dot;

/// One summand f_i of a finite-sum objective.
pub trait Component: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes ∇f_i(x) (a subgradient for non-smooth components) into `out`.
    fn grad_into(&self, x: &[f64], out: &mut [f64]);

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.grad_into(x, &mut g);
        g
    }

    /// Returns f_i(x) and writes the gradient into `out`.
    fn value_grad(&self, x: &[f64], out: &mut [f64]) -> f64 {
        self.grad_into(x, out);
        self.value(x)
    }

    /// f_i^* = inf over ℝ^d; may be −∞.
    fn inf_unconstrained(&self) -> f64;

    /// f_i^*(X) = inf over `set` when a closed form is known.
    fn inf_constrained(&self, set: &FeasibleSet) -> Option<f64>;

    /// Smoothness constant with respect to `norm`; +∞ when not smooth.
    fn smoothness(&self, norm: &NormTag) -> f64;
}

/// `[lo, hi]` image of x ↦ ⟨a, x⟩ over `set`, endpoints possibly infinite.
pub(crate) fn linear_range(a: &[f64], set: &FeasibleSet) -> (f64, f64) {
    let all_zero = a.iter().all(|&v| v == 0.0);
    match set {
        FeasibleSet::Reals => {
            if all_zero {
                (0.0, 0.0)
            } else {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
        }
        FeasibleSet::NonNeg => {
            let lo = if a.iter().any(|&v| v < 0.0) { f64::NEG_INFINITY } else { 0.0 };
            let hi = if a.iter().any(|&v| v > 0.0) { f64::INFINITY } else { 0.0 };
            (lo, hi)
        }
        FeasibleSet::Box { lo, hi } => {
            let mut rl = 0.0;
            let mut rh = 0.0;
            for ((&aj, &l), &h) in a.iter().zip(lo).zip(hi) {
                let (p, q) = (aj * l, aj * h);
                rl += p.min(q);
                rh += p.max(q);
            }
            (rl, rh)
        }
        FeasibleSet::Simplex => {
            let lo = a.iter().fold(f64::INFINITY, |m, &v| m.min(v));
            let hi = a.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            (lo, hi)
        }
        FeasibleSet::L1Ball { lambda } => {
            let m = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (-lambda * m, lambda * m)
        }
    }
}

/// f(x) = a x² + b x + c on ℝ.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadratic1d {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quadratic1d {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    /// Exact infimum over the interval [lo, hi] (endpoints may be infinite).
    pub fn inf_on_interval(&self, lo: f64, hi: f64) -> f64 {
        let behaves_at = |dir: f64| -> f64 {
            // limit of f as x → dir·∞
            if self.a > 0.0 {
                f64::INFINITY
            } else if self.a < 0.0 {
                f64::NEG_INFINITY
            } else if self.b * dir > 0.0 {
                f64::INFINITY
            } else if self.b * dir < 0.0 {
                f64::NEG_INFINITY
            } else {
                self.c
            }
        };
        let mut best = f64::INFINITY;
        best = best.min(if lo.is_finite() { self.eval(lo) } else { behaves_at(-1.0) });
        best = best.min(if hi.is_finite() { self.eval(hi) } else { behaves_at(1.0) });
        if self.a > 0.0 {
            let v = -self.b / (2.0 * self.a);
            if v >= lo && v <= hi {
                best = best.min(self.c - self.b * self.b / (4.0 * self.a));
            }
        }
        best
    }
}

impl Component for Quadratic1d {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x[0])
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 2.0 * self.a * x[0] + self.b;
    }

    fn inf_unconstrained(&self) -> f64 {
        self.inf_on_interval(f64::NEG_INFINITY, f64::INFINITY)
    }

    fn inf_constrained(&self, set: &FeasibleSet) -> Option<f64> {
        let (lo, hi) = match set {
            FeasibleSet::Reals => (f64::NEG_INFINITY, f64::INFINITY),
            FeasibleSet::NonNeg => (0.0, f64::INFINITY),
            FeasibleSet::Box { lo, hi } => (lo[0], hi[0]),
            FeasibleSet::Simplex => (1.0, 1.0),
            FeasibleSet::L1Ball { lambda } => (-lambda, *lambda),
        };
        Some(self.inf_on_interval(lo, hi))
    }

    fn smoothness(&self, norm: &NormTag) -> f64 {
        2.0 * self.a.abs() * dual_norm_sq(norm, &[1.0])
    }
}

/// f(x) = ½(⟨a, x⟩ − b)²
#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquaresRow {
    pub a: Vec<f64>,
    pub b: f64,
}

impl LeastSquaresRow {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Self { a, b }
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        dot(&self.a, x) - self.b
    }
}

impl Component for LeastSquaresRow {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        0.5 * r * r
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        let r = self.residual(x);
        for (o, a) in out.iter_mut().zip(&self.a) {
            *o = r * a;
        }
    }

    fn value_grad(&self, x: &[f64], out: &mut [f64]) -> f64 {
        let r = self.residual(x);
        for (o, a) in out.iter_mut().zip(&self.a) {
            *o = r * a;
        }
        0.5 * r * r
    }

    fn inf_unconstrained(&self) -> f64 {
        if self.a.iter().all(|&v| v == 0.0) {
            0.5 * self.b * self.b
        } else {
            0.0
        }
    }

    fn inf_constrained(&self, set: &FeasibleSet) -> Option<f64> {
        let (lo, hi) = linear_range(&self.a, set);
        let dist = if self.b < lo {
            lo - self.b
        } else if self.b > hi {
            self.b - hi
        } else {
            0.0
        };
        Some(0.5 * dist * dist)
    }

    fn smoothness(&self, norm: &NormTag) -> f64 {
        dual_norm_sq(norm, &self.a)
    }
}

/// log(1 + e^{−m}) without overflow.
pub(crate) fn softplus_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

/// σ(−m) = 1 / (1 + e^{m})
fn sigmoid_neg(m: f64) -> f64 {
    if m > 0.0 {
        let e = (-m).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + m.exp())
    }
}

/// f(x) = log(1 + exp(−y⟨w, x⟩)), y ∈ {−1, +1}.
///
/// The infimum is declared 0 even when it is not attained.
#[derive(Clone, Debug, PartialEq)]
pub struct Logistic {
    pub w: Vec<f64>,
    pub y: f64,
}

impl Logistic {
    pub fn new(w: Vec<f64>, y: f64) -> Self {
        Self { w, y }
    }

    fn margin(&self, x: &[f64]) -> f64 {
        self.y * dot(&self.w, x)
    }
}

impl Component for Logistic {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        softplus_neg(self.margin(x))
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        let s = -self.y * sigmoid_neg(self.margin(x));
        for (o, w) in out.iter_mut().zip(&self.w) {
            *o = s * w;
        }
    }

    fn value_grad(&self, x: &[f64], out: &mut [f64]) -> f64 {
        let m = self.margin(x);
        let s = -self.y * sigmoid_neg(m);
        for (o, w) in out.iter_mut().zip(&self.w) {
            *o = s * w;
        }
        softplus_neg(m)
    }

    fn inf_unconstrained(&self) -> f64 {
        0.0
    }

    fn inf_constrained(&self, set: &FeasibleSet) -> Option<f64> {
        let yw: Vec<f64> = self.w.iter().map(|v| self.y * v).collect();
        let (_, hi) = linear_range(&yw, set);
        Some(if hi.is_infinite() { 0.0 } else { softplus_neg(hi) })
    }

    fn smoothness(&self, norm: &NormTag) -> f64 {
        0.25 * dual_norm_sq(norm, &self.w)
    }
}

/// f(x) = Σ_j w_j |x_j − c_j| + ½ Σ_j q_j (x_j − c_j)².
///
/// Convex, non-smooth when any w_j > 0; minimized at x = c with value 0.
#[derive(Clone, Debug, PartialEq)]
pub struct AbsPlusQuadratic {
    pub center: Vec<f64>,
    pub abs_weights: Vec<f64>,
    pub quad_weights: Vec<f64>,
}

impl AbsPlusQuadratic {
    fn separable_inf(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.center
            .iter()
            .zip(lo.iter().zip(hi))
            .zip(self.abs_weights.iter().zip(&self.quad_weights))
            .map(|((&c, (&l, &h)), (&w, &q))| {
                let d = if c < l {
                    l - c
                } else if c > h {
                    c - h
                } else {
                    0.0
                };
                w * d + 0.5 * q * d * d
            })
            .sum()
    }
}

impl Component for AbsPlusQuadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .zip(self.abs_weights.iter().zip(&self.quad_weights))
            .map(|((&xi, &c), (&w, &q))| {
                let d = xi - c;
                w * d.abs() + 0.5 * q * d * d
            })
            .sum()
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let d = x[j] - self.center[j];
            let s = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            *o = self.abs_weights[j] * s + self.quad_weights[j] * d;
        }
    }

    fn inf_unconstrained(&self) -> f64 {
        0.0
    }

    fn inf_constrained(&self, set: &FeasibleSet) -> Option<f64> {
        let d = self.dim();
        match set {
            FeasibleSet::Reals => Some(0.0),
            FeasibleSet::NonNeg => Some(self.separable_inf(&vec![0.0; d], &vec![f64::INFINITY; d])),
            FeasibleSet::Box { lo, hi } => Some(self.separable_inf(lo, hi)),
            _ => None,
        }
    }

    fn smoothness(&self, _norm: &NormTag) -> f64 {
        if self.abs_weights.iter().any(|&w| w > 0.0) {
            f64::INFINITY
        } else {
            self.quad_weights.iter().fold(0.0, |m: f64, &q| m.max(q))
        }
    }
}

/// w ↦ f(Λw): a component pulled back to the lifted simplex Δ_{2d}.
#[derive(Clone, Debug)]
pub struct LiftedComponent {
    pub inner: Arc<dyn Component>,
    pub lift: LiftMatrix,
}

impl Component for LiftedComponent {
    fn dim(&self) -> usize {
        2 * self.lift.d
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.inner.value(&self.lift.apply(w))
    }

    fn grad_into(&self, w: &[f64], out: &mut [f64]) {
        let g = self.inner.grad(&self.lift.apply(w));
        out.copy_from_slice(&self.lift.apply_transpose(&g));
    }

    fn value_grad(&self, w: &[f64], out: &mut [f64]) -> f64 {
        let x = self.lift.apply(w);
        let mut g = vec![0.0; self.lift.d];
        let v = self.inner.value_grad(&x, &mut g);
        out.copy_from_slice(&self.lift.apply_transpose(&g));
        v
    }

    fn inf_unconstrained(&self) -> f64 {
        // Λ is onto, so the lifted infimum over ℝ^{2d} equals the original one.
        self.inner.inf_unconstrained()
    }

    fn inf_constrained(&self, set: &FeasibleSet) -> Option<f64> {
        match set {
            FeasibleSet::Simplex => self.inner.inf_constrained(&FeasibleSet::L1Ball {
                lambda: self.lift.lambda,
            }),
            FeasibleSet::Reals => Some(self.inner.inf_unconstrained()),
            _ => None,
        }
    }

    fn smoothness(&self, norm: &NormTag) -> f64 {
        // ‖Λh‖₁ ≤ λ‖h‖₁ and ‖Λh‖₂ ≤ √2 λ‖h‖₂
        let l2 = self.lift.lambda * self.lift.lambda;
        match norm {
            NormTag::L1 => l2 * self.inner.smoothness(&NormTag::L1),
            NormTag::L2 => 2.0 * l2 * self.inner.smoothness(&NormTag::L2),
            _ => f64::INFINITY,
        }
    }
}
