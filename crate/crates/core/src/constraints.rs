//! Feasible sets and the closed-form mirror step
//!
//! ```text
//! x⁺ = argmin_{z ∈ X} ⟨g, z⟩ + (1/η) B_ψ(z; x)
//! ```
//!
//! for every supported (mirror map, set) pair, plus the ℓ₁-ball ↔ simplex
//! lifting used to run exponentiated gradient on ℓ₁-constrained problems.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{conjugate_exponent, phi, MapKind, MirrorMap, ENTROPY_FLOOR};

/// Membership tolerance used throughout.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Above this value of max|η g_i| the multiplicative update runs in log space.
const EG_LOG_SPACE_THRESHOLD: f64 = 30.0;

#[derive(Clone, Debug, PartialEq)]
pub enum FeasibleSet {
    Reals,
    NonNeg,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Simplex,
    L1Ball { lambda: f64 },
}

impl fmt::Display for FeasibleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibleSet::Reals => write!(f, "reals"),
            FeasibleSet::NonNeg => write!(f, "nonneg"),
            FeasibleSet::Box { .. } => write!(f, "box"),
            FeasibleSet::Simplex => write!(f, "simplex"),
            FeasibleSet::L1Ball { lambda } => write!(f, "l1ball({lambda})"),
        }
    }
}

impl FeasibleSet {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidArgument("box needs lo <= hi".into()));
        }
        Ok(FeasibleSet::Box { lo, hi })
    }

    /// `[lo, hi]^d`
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; dim], vec![hi; dim])
    }

    pub fn l1_ball(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument("l1 ball radius must be positive".into()));
        }
        Ok(FeasibleSet::L1Ball { lambda })
    }

    pub fn is_bounded(&self) -> bool {
        matches!(
            self,
            FeasibleSet::Box { .. } | FeasibleSet::Simplex | FeasibleSet::L1Ball { .. }
        )
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_tol(x, MEMBERSHIP_TOL)
    }

    pub fn contains_tol(&self, x: &[f64], tol: f64) -> bool {
        if x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            FeasibleSet::Reals => true,
            FeasibleSet::NonNeg => x.iter().all(|&v| v >= -tol),
            FeasibleSet::Box { lo, hi } => {
                lo.len() == x.len()
                    && x
                        .iter()
                        .zip(lo.iter().zip(hi))
                        .all(|(&v, (&l, &h))| v >= l - tol && v <= h + tol)
            }
            FeasibleSet::Simplex => {
                !x.is_empty()
                    && x.iter().all(|&v| v >= -tol)
                    && (x.iter().sum::<f64>() - 1.0).abs() <= tol
            }
            FeasibleSet::L1Ball { lambda } => x.iter().map(|v| v.abs()).sum::<f64>() <= lambda + tol,
        }
    }

    /// Draws a random feasible point; `scale` bounds the spread on unbounded sets.
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, scale: f64, rng: &mut R) -> Vec<f64> {
        match self {
            FeasibleSet::Reals => (0..dim)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            FeasibleSet::NonNeg => (0..dim).map(|_| scale * rng.random::<f64>()).collect(),
            FeasibleSet::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(&l, &h)| l + (h - l) * rng.random::<f64>())
                .collect(),
            FeasibleSet::Simplex => dirichlet_ones(dim, rng),
            FeasibleSet::L1Ball { lambda } => {
                // radius·(signed Dirichlet), radius ≤ λ
                let w = dirichlet_ones(dim + 1, rng);
                (0..dim)
                    .map(|j| {
                        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        s * lambda * w[j]
                    })
                    .collect()
            }
        }
    }
}

/// Uniform sample from the open simplex (Dirichlet(1, …, 1)).
pub fn dirichlet_ones<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..dim)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            e.max(1e-300)
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Euclidean projection of `x` onto `set`.
pub fn euclid_project(set: &FeasibleSet, x: &[f64]) -> Result<Vec<f64>> {
    match set {
        FeasibleSet::Reals => Ok(x.to_vec()),
        FeasibleSet::NonNeg => Ok(x.iter().map(|v| v.max(0.0)).collect()),
        FeasibleSet::Box { lo, hi } => {
            if lo.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: lo.len(),
                    got: x.len(),
                });
            }
            Ok(x.iter()
                .zip(lo.iter().zip(hi))
                .map(|(&v, (&l, &h))| v.clamp(l, h))
                .collect())
        }
        FeasibleSet::Simplex => Ok(project_simplex(x)),
        FeasibleSet::L1Ball { .. } => Err(Error::UnsupportedPair {
            map: "euclidean-projection".into(),
            set: set.to_string(),
        }),
    }
}

/// Sort-and-threshold projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn unsupported(map: &MirrorMap, set: &FeasibleSet) -> Error {
    Error::UnsupportedPair {
        map: map.name(),
        set: set.to_string(),
    }
}

/// Whether `mirror_step` has a closed form for this pair.
pub fn is_supported(map: &MirrorMap, set: &FeasibleSet) -> bool {
    matches!(
        (map.kind(), set),
        (
            MapKind::Euclidean,
            FeasibleSet::Reals | FeasibleSet::NonNeg | FeasibleSet::Box { .. } | FeasibleSet::Simplex
        ) | (MapKind::NegEntropy, FeasibleSet::Simplex)
            | (MapKind::PNorm { .. }, FeasibleSet::Reals)
            | (MapKind::Mahalanobis(_), FeasibleSet::Reals)
    )
}

/// argmin_{z ∈ set} ⟨g, z⟩ + (1/η) B_ψ(z; x).
pub fn mirror_step(
    map: &MirrorMap,
    set: &FeasibleSet,
    x: &[f64],
    g: &[f64],
    eta: f64,
) -> Result<Vec<f64>> {
    if !is_supported(map, set) {
        return Err(unsupported(map, set));
    }
    if x.len() != map.dim() || g.len() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            got: if x.len() != map.dim() { x.len() } else { g.len() },
        });
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!("stepsize must be finite and >= 0, got {eta}")));
    }
    if !map.is_interior(x) || !set.contains_tol(x, 1e-6) {
        return Err(Error::Domain("iterate is not a feasible interior point".into()));
    }
    match map.kind() {
        MapKind::Euclidean => {
            let y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - eta * b).collect();
            euclid_project(set, &y)
        }
        MapKind::NegEntropy => Ok(exponentiated_step(x, g, eta)),
        MapKind::PNorm { p } => {
            let z = phi(x, *p);
            let y: Vec<f64> = z.iter().zip(g).map(|(a, b)| a - eta * b).collect();
            Ok(phi(&y, conjugate_exponent(*p)))
        }
        MapKind::Mahalanobis(m) => {
            let dir = m.solve(g);
            Ok(x.iter().zip(&dir).map(|(a, b)| a - eta * b).collect())
        }
    }
}

/// y = x ⊙ exp(−η g), x⁺ = y / ‖y‖₁, kept ≥ [`ENTROPY_FLOOR`].
fn exponentiated_step(x: &[f64], g: &[f64], eta: f64) -> Vec<f64> {
    let big = g.iter().fold(0.0f64, |m, v| m.max((eta * v).abs()));
    let mut y: Vec<f64> = if big > EG_LOG_SPACE_THRESHOLD {
        let logs: Vec<f64> = x.iter().zip(g).map(|(a, b)| a.ln() - eta * b).collect();
        let top = logs.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        logs.iter().map(|v| (v - top).exp()).collect()
    } else {
        x.iter().zip(g).map(|(a, b)| a * (-eta * b).exp()).collect()
    };
    let s: f64 = y.iter().sum();
    for v in y.iter_mut() {
        *v = (*v / s).max(ENTROPY_FLOOR);
    }
    y
}

/// Λ ∈ ℝ^{d×2d} with interleaved columns (+λe_j, −λe_j); maps Δ_{2d} onto the ℓ₁ ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiftMatrix {
    pub lambda: f64,
    pub d: usize,
}

impl LiftMatrix {
    pub fn new(lambda: f64, d: usize) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument("lift radius must be positive".into()));
        }
        Ok(Self { lambda, d })
    }

    /// Λw without the simplex check.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        (0..self.d)
            .map(|j| self.lambda * (w[2 * j] - w[2 * j + 1]))
            .collect()
    }

    /// Λᵀg
    pub fn apply_transpose(&self, g: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.d);
        for &gj in g.iter().take(self.d) {
            out.push(self.lambda * gj);
            out.push(-self.lambda * gj);
        }
        out
    }
}

/// A point w ∈ Δ_{2d} with Λw = x0; leftover mass is spread uniformly.
pub fn l1_lift(lambda: f64, x0: &[f64]) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("lift radius must be positive".into()));
    }
    let l1: f64 = x0.iter().map(|v| v.abs()).sum();
    if l1 > lambda + MEMBERSHIP_TOL {
        return Err(Error::InfeasibleStart(format!(
            "‖x0‖₁ = {l1} exceeds radius {lambda}"
        )));
    }
    let d = x0.len();
    let residual = (1.0 - l1 / lambda).max(0.0) / (2 * d) as f64;
    let mut w = Vec::with_capacity(2 * d);
    for &v in x0 {
        w.push(v.max(0.0) / lambda + residual);
        w.push((-v).max(0.0) / lambda + residual);
    }
    Ok(w)
}

/// Λw for w in the simplex.
pub fn l1_unlift(lift: &LiftMatrix, w: &[f64]) -> Result<Vec<f64>> {
    if w.len() != 2 * lift.d {
        return Err(Error::DimensionMismatch {
            expected: 2 * lift.d,
            got: w.len(),
        });
    }
    if !FeasibleSet::Simplex.contains(w) {
        return Err(Error::Domain("lifted point is not in the simplex".into()));
    }
    Ok(lift.apply(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_gradient_fixes_iterate() {
        let pairs: Vec<(MirrorMap, FeasibleSet, Vec<f64>)> = vec![
            (MirrorMap::euclidean(2), FeasibleSet::Reals, vec![0.3, -2.0]),
            (MirrorMap::euclidean(2), FeasibleSet::NonNeg, vec![0.3, 2.0]),
            (
                MirrorMap::euclidean(2),
                FeasibleSet::cube(2, 0.0, 1.0).unwrap(),
                vec![0.3, 0.9],
            ),
            (MirrorMap::euclidean(3), FeasibleSet::Simplex, vec![0.2, 0.3, 0.5]),
            (MirrorMap::neg_entropy(3), FeasibleSet::Simplex, vec![0.2, 0.3, 0.5]),
            (MirrorMap::pnorm(2, 1.5).unwrap(), FeasibleSet::Reals, vec![0.3, -2.0]),
            (
                MirrorMap::mahalanobis(nalgebra::DMatrix::from_diagonal_element(2, 2, 3.0))
                    .unwrap(),
                FeasibleSet::Reals,
                vec![0.3, -2.0],
            ),
        ];
        for (map, set, x) in pairs {
            let g = vec![0.0; x.len()];
            let z = mirror_step(&map, &set, &x, &g, 0.7).unwrap();
            for (a, b) in z.iter().zip(&x) {
                assert_relative_eq!(a, b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn clipping_step() {
        let z = mirror_step(
            &MirrorMap::euclidean(2),
            &FeasibleSet::NonNeg,
            &[1.0, 1.0],
            &[3.0, -1.0],
            1.0,
        )
        .unwrap();
        assert_eq!(z, vec![0.0, 2.0]);
    }

    #[test]
    fn exponentiated_gradient_step() {
        let z = mirror_step(
            &MirrorMap::neg_entropy(2),
            &FeasibleSet::Simplex,
            &[0.5, 0.5],
            &[2f64.ln(), 0.0],
            1.0,
        )
        .unwrap();
        assert_relative_eq!(z[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(z[1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn log_space_branch_agrees_and_stays_positive() {
        let x = [0.25, 0.25, 0.5];
        let g = [10.0, -8.0, 5.0];
        // max|ηg| = 50 takes the log-space branch
        let logsp = exponentiated_step(&x, &g, 5.0);
        let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a * (-5.0 * b).exp()).collect();
        let s: f64 = y.iter().sum();
        for (a, b) in y.iter().zip(&logsp) {
            assert_relative_eq!(a / s, b, max_relative = 1e-12);
        }
        let huge = exponentiated_step(&x, &[1e6, 0.0, 0.0], 1.0);
        assert!(huge.iter().all(|&v| v >= ENTROPY_FLOOR && v.is_finite()));
        assert!((huge.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unsupported_pairs_fail() {
        let r = mirror_step(
            &MirrorMap::neg_entropy(2),
            &FeasibleSet::NonNeg,
            &[0.5, 0.5],
            &[0.0, 0.0],
            1.0,
        );
        assert!(matches!(r, Err(Error::UnsupportedPair { .. })));
        let r = mirror_step(
            &MirrorMap::pnorm(2, 1.5).unwrap(),
            &FeasibleSet::Simplex,
            &[0.5, 0.5],
            &[0.0, 0.0],
            1.0,
        );
        assert!(matches!(r, Err(Error::UnsupportedPair { .. })));
        let r = mirror_step(
            &MirrorMap::euclidean(2),
            &FeasibleSet::L1Ball { lambda: 1.0 },
            &[0.5, 0.0],
            &[0.0, 0.0],
            1.0,
        );
        assert!(matches!(r, Err(Error::UnsupportedPair { .. })));
    }

    #[test]
    fn infeasible_iterate_is_a_domain_error() {
        let r = mirror_step(
            &MirrorMap::euclidean(2),
            &FeasibleSet::NonNeg,
            &[-1.0, 0.5],
            &[0.0, 0.0],
            1.0,
        );
        assert!(matches!(r, Err(Error::Domain(_))));
        let r = mirror_step(
            &MirrorMap::neg_entropy(2),
            &FeasibleSet::Simplex,
            &[1.0, 0.0],
            &[0.0, 0.0],
            1.0,
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn projection_examples() {
        assert_eq!(
            euclid_project(&FeasibleSet::Simplex, &[0.2, 0.3, 0.5]).unwrap(),
            vec![0.2, 0.3, 0.5]
        );
        assert_eq!(
            euclid_project(&FeasibleSet::NonNeg, &[-1.0, 2.0]).unwrap(),
            vec![0.0, 2.0]
        );
        assert_eq!(
            euclid_project(&FeasibleSet::Simplex, &[1.0, 1.0]).unwrap(),
            vec![0.5, 0.5]
        );
        assert!(matches!(
            euclid_project(&FeasibleSet::L1Ball { lambda: 1.0 }, &[1.0]),
            Err(Error::UnsupportedPair { .. })
        ));
    }

    #[test]
    fn lift_examples() {
        assert_eq!(l1_lift(1.0, &[0.0, 0.0]).unwrap(), vec![0.25; 4]);
        assert_eq!(l1_lift(2.0, &[2.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        let w = l1_lift(1.0, &[0.5, 0.0]).unwrap();
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        let lift = LiftMatrix::new(1.0, 2).unwrap();
        let x = l1_unlift(&lift, &w).unwrap();
        assert_relative_eq!(x[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-15);
        assert!(w.iter().all(|&v| v > 0.0));
        assert!(matches!(
            l1_lift(1.0, &[0.8, 0.8]),
            Err(Error::InfeasibleStart(_))
        ));
    }

    #[test]
    fn unlift_examples() {
        let lift = LiftMatrix::new(3.0, 3).unwrap();
        let mut w = vec![0.0; 6];
        w[0] = 1.0;
        assert_eq!(l1_unlift(&lift, &w).unwrap(), vec![3.0, 0.0, 0.0]);
        let u = vec![1.0 / 6.0; 6];
        for v in l1_unlift(&lift, &u).unwrap() {
            assert!(v.abs() < 1e-15);
        }
        assert!(matches!(
            l1_unlift(&lift, &[0.5; 6]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn box_validation() {
        assert!(FeasibleSet::new_box(vec![1.0], vec![0.0]).is_err());
        assert!(FeasibleSet::new_box(vec![0.0, 0.0], vec![1.0]).is_err());
    }
}
