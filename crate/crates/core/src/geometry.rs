//! Mirror maps (distance-generating functions), their gradient maps and
//! Bregman divergences, plus primal/dual norm evaluation.
//!
//! Four maps are supported:
//!
//! | map           | ψ(x)                 | ∇ψ(x)                        | μ_ψ  | primal norm |
//! |---------------|----------------------|------------------------------|------|-------------|
//! | `Euclidean`   | ½‖x‖₂²               | x                            | 1    | ‖·‖₂        |
//! | `PNorm(p)`    | ½‖x‖_p²              | φ^p(x)                       | p−1  | ‖·‖_p       |
//! | `NegEntropy`  | Σ x_i log x_i        | 1 + log x_i                  | 1    | ‖·‖₁        |
//! | `Mahalanobis` | ½⟨x, Mx⟩             | Mx                           | 1    | ‖·‖_M       |
//!
//! with φ^p_i(x) = ‖x‖_p^{2−p} sign(x_i)|x_i|^{p−1}, whose inverse is φ^q for
//! the conjugate exponent q = p/(p−1).

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::dot;

/// Smallest value a negative-entropy coordinate is allowed to take.
pub const ENTROPY_FLOOR: f64 = 1e-300;

/// A symmetric positive-definite matrix together with its Cholesky factor.
///
/// The factorization is computed once and reused for every `M⁻¹` application.
#[derive(Clone)]
pub struct SpdMatrix {
    m: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl SpdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let asym = (&m - m.transpose()).abs().max();
        if asym > 1e-10 * m.abs().max().max(1.0) {
            return Err(Error::Domain("matrix is not symmetric".into()));
        }
        let chol = Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { m, chol })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `M x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.m * DVector::from_column_slice(x);
        v.as_slice().to_vec()
    }

    /// `M⁻¹ z` via the stored factorization.
    pub fn solve(&self, z: &[f64]) -> Vec<f64> {
        let v = self.chol.solve(&DVector::from_column_slice(z));
        v.as_slice().to_vec()
    }

    /// `⟨x, M x⟩`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.apply(x))
    }

    /// `⟨z, M⁻¹ z⟩`
    pub fn inv_quad_form(&self, z: &[f64]) -> f64 {
        dot(z, &self.solve(z))
    }
}

impl fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpdMatrix({:?})", self.m.as_slice())
    }
}

/// A norm on ℝ^d, tagged so that its dual can be looked up.
#[derive(Clone, Debug)]
pub enum NormTag {
    L2,
    Lp(f64),
    L1,
    LInf,
    /// ‖x‖_M = √⟨x, Mx⟩
    Mahalanobis(Arc<SpdMatrix>),
    /// ‖x‖_{M⁻¹} = √⟨x, M⁻¹x⟩
    MahalanobisInverse(Arc<SpdMatrix>),
}

impl NormTag {
    pub fn dual(&self) -> NormTag {
        match self {
            NormTag::L2 => NormTag::L2,
            NormTag::Lp(p) => NormTag::Lp(conjugate_exponent(*p)),
            NormTag::L1 => NormTag::LInf,
            NormTag::LInf => NormTag::L1,
            NormTag::Mahalanobis(m) => NormTag::MahalanobisInverse(m.clone()),
            NormTag::MahalanobisInverse(m) => NormTag::Mahalanobis(m.clone()),
        }
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        match self {
            NormTag::L2 => dot(x, x).sqrt(),
            NormTag::Lp(p) => lp_norm(x, *p),
            NormTag::L1 => x.iter().map(|v| v.abs()).sum(),
            NormTag::LInf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
            NormTag::Mahalanobis(m) => m.quad_form(x).max(0.0).sqrt(),
            NormTag::MahalanobisInverse(m) => m.inv_quad_form(x).max(0.0).sqrt(),
        }
    }

    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        match self {
            NormTag::L2 => dot(x, x),
            NormTag::Mahalanobis(m) => m.quad_form(x),
            NormTag::MahalanobisInverse(m) => m.inv_quad_form(x),
            _ => {
                let n = self.norm(x);
                n * n
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            NormTag::L2 => "l2".into(),
            NormTag::Lp(p) => format!("l{p}"),
            NormTag::L1 => "l1".into(),
            NormTag::LInf => "linf".into(),
            NormTag::Mahalanobis(_) => "mahalanobis".into(),
            NormTag::MahalanobisInverse(_) => "mahalanobis-inverse".into(),
        }
    }
}

/// ‖g‖²_* where `tag` is the primal norm.
pub fn dual_norm_sq(tag: &NormTag, g: &[f64]) -> f64 {
    tag.dual().norm_sq(g)
}

/// q such that 1/p + 1/q = 1.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if p.is_infinite() {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = x.iter().map(|v| (v.abs() / scale).powf(p)).sum();
    scale * s.powf(1.0 / p)
}

/// φ^p(x)_i = ‖x‖_p^{2−p} sign(x_i) |x_i|^{p−1}, with φ^p(0) = 0.
pub fn phi(x: &[f64], p: f64) -> Vec<f64> {
    let n = lp_norm(x, p);
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    // ‖x‖^{2−p}|x_i|^{p−1} = ‖x‖ (|x_i|/‖x‖)^{p−1}
    x.iter()
        .map(|&v| {
            if v == 0.0 {
                0.0
            } else {
                v.signum() * n * (v.abs() / n).powf(p - 1.0)
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub enum MapKind {
    Euclidean,
    PNorm { p: f64 },
    NegEntropy,
    Mahalanobis(Arc<SpdMatrix>),
}

/// A distance-generating function ψ on ℝ^d.
#[derive(Clone, Debug)]
pub struct MirrorMap {
    kind: MapKind,
    dim: usize,
}

impl MirrorMap {
    pub fn euclidean(dim: usize) -> Self {
        Self {
            kind: MapKind::Euclidean,
            dim,
        }
    }

    pub fn pnorm(dim: usize, p: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "p-norm map needs 1 < p <= 2, got {p}"
            )));
        }
        Ok(Self {
            kind: MapKind::PNorm { p },
            dim,
        })
    }

    pub fn neg_entropy(dim: usize) -> Self {
        Self {
            kind: MapKind::NegEntropy,
            dim,
        }
    }

    pub fn mahalanobis(m: DMatrix<f64>) -> Result<Self> {
        let spd = SpdMatrix::new(m)?;
        let dim = spd.dim();
        Ok(Self {
            kind: MapKind::Mahalanobis(Arc::new(spd)),
            dim,
        })
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> String {
        match &self.kind {
            MapKind::Euclidean => "euclidean".into(),
            MapKind::PNorm { p } => format!("pnorm({p})"),
            MapKind::NegEntropy => "negentropy".into(),
            MapKind::Mahalanobis(_) => "mahalanobis".into(),
        }
    }

    /// Strong-convexity constant of ψ with respect to [`Self::primal_norm`].
    /// For the negative entropy this holds on the simplex only.
    pub fn mu_psi(&self) -> f64 {
        match &self.kind {
            MapKind::PNorm { p } => p - 1.0,
            _ => 1.0,
        }
    }

    pub fn primal_norm(&self) -> NormTag {
        match &self.kind {
            MapKind::Euclidean => NormTag::L2,
            MapKind::PNorm { p } => NormTag::Lp(*p),
            MapKind::NegEntropy => NormTag::L1,
            MapKind::Mahalanobis(m) => NormTag::Mahalanobis(m.clone()),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Whether `x` lies in the interior of dom ψ.
    pub fn is_interior(&self, x: &[f64]) -> bool {
        match self.kind {
            MapKind::NegEntropy => x.iter().all(|&v| v > 0.0),
            _ => x.iter().all(|v| v.is_finite()),
        }
    }

    pub fn psi(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match &self.kind {
            MapKind::Euclidean => 0.5 * dot(x, x),
            MapKind::PNorm { p } => 0.5 * lp_norm(x, *p).powi(2),
            MapKind::NegEntropy => {
                let mut s = 0.0;
                for &v in x {
                    if v < 0.0 {
                        return Err(Error::Domain(format!(
                            "negative entropy undefined at negative coordinate {v}"
                        )));
                    }
                    if v > 0.0 {
                        s += v * v.ln();
                    }
                }
                s
            }
            MapKind::Mahalanobis(m) => 0.5 * m.quad_form(x),
        })
    }

    pub fn grad_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(match &self.kind {
            MapKind::Euclidean => x.to_vec(),
            MapKind::PNorm { p } => phi(x, *p),
            MapKind::NegEntropy => {
                if let Some(v) = x.iter().find(|&&v| v <= 0.0) {
                    return Err(Error::Domain(format!(
                        "negative entropy gradient needs positive coordinates, got {v}"
                    )));
                }
                x.iter().map(|v| 1.0 + v.ln()).collect()
            }
            MapKind::Mahalanobis(m) => m.apply(x),
        })
    }

    /// (∇ψ)⁻¹(z). Always defined for the supported maps.
    pub fn inverse_grad_map(&self, z: &[f64]) -> Vec<f64> {
        match &self.kind {
            MapKind::Euclidean => z.to_vec(),
            MapKind::PNorm { p } => phi(z, conjugate_exponent(*p)),
            MapKind::NegEntropy => z.iter().map(|v| (v - 1.0).exp()).collect(),
            MapKind::Mahalanobis(m) => m.solve(z),
        }
    }

    /// B_ψ(x; y) = ψ(x) − ψ(y) − ⟨∇ψ(y), x − y⟩.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let b = match &self.kind {
            MapKind::Euclidean => {
                let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                0.5 * dot(&d, &d)
            }
            MapKind::PNorm { p } => {
                // ⟨φ^p(y), y⟩ = ‖y‖_p², so B = ½‖x‖² + ½‖y‖² − ⟨φ^p(y), x⟩
                let nx = lp_norm(x, *p);
                let ny = lp_norm(y, *p);
                0.5 * nx * nx + 0.5 * ny * ny - dot(&phi(y, *p), x)
            }
            MapKind::NegEntropy => {
                let mut s = 0.0;
                for (&a, &b) in x.iter().zip(y) {
                    if b <= 0.0 {
                        return Err(Error::Domain(format!(
                            "Bregman divergence of negative entropy needs y > 0, got {b}"
                        )));
                    }
                    if a < 0.0 {
                        return Err(Error::Domain(format!(
                            "Bregman divergence of negative entropy needs x >= 0, got {a}"
                        )));
                    }
                    s += if a > 0.0 { a * (a / b).ln() - a + b } else { b };
                }
                s
            }
            MapKind::Mahalanobis(m) => {
                let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                0.5 * m.quad_form(&d)
            }
        };
        Ok(b.max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bregman_examples() {
        let e = MirrorMap::euclidean(2);
        assert_eq!(e.bregman(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_relative_eq!(e.bregman(&[3.0, 0.0], &[1.0, 0.0]).unwrap(), 2.0);
        let h = MirrorMap::neg_entropy(4);
        let b = h.bregman(&[1.0, 0.0, 0.0, 0.0], &[0.25; 4]).unwrap();
        assert_relative_eq!(b, 4f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn negentropy_domain_errors() {
        let h = MirrorMap::neg_entropy(2);
        assert!(matches!(
            h.bregman(&[0.5, 0.5], &[1.0, 0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            h.bregman(&[-0.5, 1.5], &[0.5, 0.5]),
            Err(Error::Domain(_))
        ));
        assert!(h.grad_map(&[0.0, 1.0]).is_err());
        assert!(h.psi(&[-1.0, 2.0]).is_err());
        // 0 log 0 = 0
        assert_eq!(h.psi(&[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn grad_map_examples() {
        let m = MirrorMap::pnorm(2, 1.5).unwrap();
        let g = m.grad_map(&[4.0, 0.0]).unwrap();
        assert_relative_eq!(g[0], 4.0, epsilon = 1e-14);
        assert_eq!(g[1], 0.0);
        let m2 = MirrorMap::pnorm(3, 2.0).unwrap();
        let x = [0.3, -1.7, 2.2];
        for (a, b) in m2.grad_map(&x).unwrap().iter().zip(&x) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
        let e = MirrorMap::euclidean(2);
        assert_eq!(e.grad_map(&[0.5, -1.0]).unwrap(), vec![0.5, -1.0]);
        assert_eq!(m.grad_map(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn inverse_grad_map_examples() {
        let m = MirrorMap::pnorm(3, 1.5).unwrap();
        let z = m.grad_map(&[1.0, 2.0, 3.0]).unwrap();
        let x = m.inverse_grad_map(&z);
        for (a, b) in x.iter().zip(&[1.0, 2.0, 3.0]) {
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
        let mm = MirrorMap::mahalanobis(DMatrix::from_diagonal_element(2, 2, 2.0)).unwrap();
        let x = mm.inverse_grad_map(&[4.0, 4.0]);
        assert_relative_eq!(x[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 2.0, epsilon = 1e-14);
        assert_eq!(MirrorMap::euclidean(1).inverse_grad_map(&[7.0]), vec![7.0]);
    }

    #[test]
    fn dual_norm_examples() {
        assert_relative_eq!(dual_norm_sq(&NormTag::L1, &[3.0, -5.0, 1.0]), 25.0);
        assert_relative_eq!(
            dual_norm_sq(&NormTag::Lp(2.0), &[3.0, 4.0]),
            25.0,
            max_relative = 1e-14
        );
        let m = Arc::new(SpdMatrix::from_diagonal(&[4.0, 4.0]).unwrap());
        assert_relative_eq!(
            dual_norm_sq(&NormTag::Mahalanobis(m), &[2.0, 0.0]),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn dual_pairing_table() {
        assert!(matches!(NormTag::L2.dual(), NormTag::L2));
        assert!(matches!(NormTag::L1.dual(), NormTag::LInf));
        assert!(matches!(NormTag::LInf.dual(), NormTag::L1));
        match NormTag::Lp(1.5).dual() {
            NormTag::Lp(q) => assert_relative_eq!(q, 3.0),
            other => panic!("unexpected dual {other:?}"),
        }
        let m = Arc::new(SpdMatrix::from_diagonal(&[1.0]).unwrap());
        assert!(matches!(
            NormTag::Mahalanobis(m).dual(),
            NormTag::MahalanobisInverse(_)
        ));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MirrorMap::pnorm(2, 1.0).is_err());
        assert!(MirrorMap::pnorm(2, 2.5).is_err());
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            MirrorMap::mahalanobis(not_pd),
            Err(Error::NotPositiveDefinite)
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(MirrorMap::mahalanobis(asym).is_err());
    }

    #[test]
    fn pnorm_norm_is_scale_safe() {
        let x = [1e200, 1e200];
        let n = lp_norm(&x, 1.5);
        assert!(n.is_finite());
        assert_relative_eq!(n, 1e200 * 2f64.powf(1.0 / 1.5), max_relative = 1e-12);
    }
}
