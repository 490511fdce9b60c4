//! Stepsize rules: constant, mirror Polyak, mSPS, mSPS_max and the smoothed
//! mSPS_max, plus the constants the convergence bounds are stated in.
//!
//! The Polyak family computes
//!
//! ```text
//! η_t = μ_ψ (f_i(x_t) − f_i^*) / (c ‖∇f_i(x_t)‖²_*)
//! ```
//!
//! and returns 0 at a converged component (zero gap and zero gradient).

use crate::error::{Error, Result};
use crate::geometry::{dual_norm_sq, NormTag};

/// Gaps at or below this are treated as converged.
pub const CONVERGED_GAP: f64 = 1e-12;
/// Dual gradient norms at or below this are treated as zero.
pub const ZERO_GRAD: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub enum StepsizeRule {
    Constant {
        eta: f64,
    },
    /// Full-gradient Polyak step with the true optimal value.
    MirrorPolyak {
        fstar: f64,
    },
    Msps {
        c: f64,
    },
    MspsMax {
        c: f64,
        eta_b: f64,
    },
    /// min{mSPS, τ^{b/n} η_{t−1}} with η_0 = `eta_init`.
    SmoothedMspsMax {
        c: f64,
        tau: f64,
        batch: usize,
        n: usize,
        eta_init: f64,
    },
}

impl StepsizeRule {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        match *self {
            StepsizeRule::Constant { eta } if !(eta > 0.0 && eta.is_finite()) => {
                bad("constant stepsize must be positive and finite")
            }
            StepsizeRule::MirrorPolyak { fstar } if !fstar.is_finite() => {
                bad("mirror Polyak needs a finite optimal value")
            }
            StepsizeRule::Msps { c } if !(c > 0.0) => bad("c must be positive"),
            StepsizeRule::MspsMax { c, eta_b } if !(c > 0.0 && eta_b > 0.0) => {
                bad("c and eta_b must be positive")
            }
            StepsizeRule::SmoothedMspsMax {
                c,
                tau,
                batch,
                n,
                eta_init,
            } if !(c > 0.0 && tau > 0.0 && tau <= 1.0 && batch >= 1 && n >= 1 && eta_init > 0.0) => {
                bad("smoothed mSPS_max needs c > 0, tau in (0, 1], b, n >= 1, eta_init > 0")
            }
            _ => Ok(()),
        }
    }

    pub fn is_polyak(&self) -> bool {
        !matches!(self, StepsizeRule::Constant { .. })
    }

    /// Short label used in file names and reports.
    pub fn label(&self) -> String {
        match self {
            StepsizeRule::Constant { eta } => format!("constant_{eta:e}"),
            StepsizeRule::MirrorPolyak { .. } => "mirror_polyak".into(),
            StepsizeRule::Msps { c } => format!("msps_c{c}"),
            StepsizeRule::MspsMax { c, eta_b } => format!("msps_max_c{c}_b{eta_b}"),
            StepsizeRule::SmoothedMspsMax { c, tau, .. } => format!("smoothed_msps_max_c{c}_tau{tau}"),
        }
    }
}

/// The quantities a rule may read at step t.
#[derive(Clone, Copy, Debug)]
pub struct StepContext<'a> {
    /// f_{ξ_t}(x_t), or f(x_t) for full-gradient rules.
    pub loss_value: f64,
    /// f_{ξ_t}^*
    pub loss_inf: f64,
    pub grad: &'a [f64],
    pub mu_psi: f64,
    /// Primal norm of the mirror map; gradients are measured in its dual.
    pub norm: &'a NormTag,
    pub t: usize,
}

fn polyak_ratio(gap: f64, grad: &[f64], norm: &NormTag, mu_psi: f64, c: f64) -> Result<f64> {
    let g2 = dual_norm_sq(norm, grad);
    if g2.sqrt() <= ZERO_GRAD {
        if gap > CONVERGED_GAP {
            return Err(Error::ZeroGradientAtNonOptimum { gap });
        }
        return Ok(0.0);
    }
    Ok(mu_psi * gap.max(0.0) / (c * g2))
}

/// A rule together with the per-run state of the smoothed variant.
#[derive(Clone, Debug)]
pub struct Stepsize {
    rule: StepsizeRule,
    prev: Option<f64>,
    last_bound: Option<f64>,
}

impl Stepsize {
    pub fn new(rule: StepsizeRule) -> Result<Self> {
        rule.validate()?;
        let prev = match rule {
            StepsizeRule::SmoothedMspsMax { eta_init, .. } => Some(eta_init),
            _ => None,
        };
        Ok(Self {
            rule,
            prev,
            last_bound: None,
        })
    }

    pub fn rule(&self) -> &StepsizeRule {
        &self.rule
    }

    /// η_{t−1} held by the smoothed rule.
    pub fn state(&self) -> Option<f64> {
        self.prev
    }

    /// τ^{b/n} η_{t−1} from the most recent smoothed step.
    pub fn last_bound(&self) -> Option<f64> {
        self.last_bound
    }

    pub fn next(&mut self, ctx: &StepContext<'_>) -> Result<f64> {
        match self.rule {
            StepsizeRule::Constant { eta } => Ok(eta),
            StepsizeRule::MirrorPolyak { fstar } => {
                polyak_ratio(ctx.loss_value - fstar, ctx.grad, ctx.norm, ctx.mu_psi, 1.0)
            }
            StepsizeRule::Msps { c } => self.msps(ctx, c),
            StepsizeRule::MspsMax { c, eta_b } => Ok(self.msps(ctx, c)?.min(eta_b)),
            StepsizeRule::SmoothedMspsMax { c, tau, batch, n, .. } => {
                let raw = self.msps(ctx, c)?;
                let prev = self.prev.expect("smoothed rule carries state");
                let bound = tau.powf(batch as f64 / n as f64) * prev;
                self.last_bound = Some(bound);
                let eta = raw.min(bound);
                // a converged component returns 0 without collapsing the bound
                if eta > 0.0 {
                    self.prev = Some(eta);
                }
                Ok(eta)
            }
        }
    }

    fn msps(&self, ctx: &StepContext<'_>, c: f64) -> Result<f64> {
        if ctx.loss_inf == f64::NEG_INFINITY {
            return Err(Error::UnknownInfimum);
        }
        polyak_ratio(ctx.loss_value - ctx.loss_inf, ctx.grad, ctx.norm, ctx.mu_psi, c)
    }
}

/// Evaluates a rule once with fresh state.
pub fn stepsize(rule: &StepsizeRule, ctx: &StepContext<'_>) -> Result<f64> {
    Stepsize::new(rule.clone())?.next(ctx)
}

/// μ_ψ/(2cL) ≤ η_t^{mSPS} ≤ μ_ψ/(2cμ); the upper end is +∞ without μ.
pub fn msps_bounds(c: f64, mu_psi: f64, l: f64, mu: Option<f64>) -> (f64, f64) {
    let lower = mu_psi / (2.0 * c * l);
    let upper = mu.map_or(f64::INFINITY, |m| mu_psi / (2.0 * c * m));
    (lower, upper)
}

/// α = min{μ_ψ/(2cL), η_b}
pub fn alpha(c: f64, mu_psi: f64, l: f64, eta_b: f64) -> f64 {
    (mu_psi / (2.0 * c * l)).min(eta_b)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlConstants {
    pub alpha: f64,
    pub nu: f64,
    pub valid: bool,
}

/// Contraction constants of the preconditioned PL analysis (μ_ψ = 1).
pub fn pl_constants(c: f64, l_max: f64, mu_pl: f64, eta_b: f64) -> PlConstants {
    let alpha = (1.0 / (2.0 * c * l_max)).min(eta_b);
    let inner = 1.0 / alpha - 2.0 * mu_pl + l_max / (2.0 * c);
    let nu = eta_b * inner;
    let eta_cap = (1.0 / inner).max(1.0 / (2.0 * c * l_max));
    let valid = c > l_max / (4.0 * mu_pl) && eta_b < eta_cap && nu > 0.0 && nu < 1.0;
    PlConstants { alpha, nu, valid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ctx<'a>(value: f64, inf: f64, grad: &'a [f64], norm: &'a NormTag) -> StepContext<'a> {
        StepContext {
            loss_value: value,
            loss_inf: inf,
            grad,
            mu_psi: 1.0,
            norm,
            t: 1,
        }
    }

    #[test]
    fn msps_examples() {
        let l2 = NormTag::L2;
        // f = ½x² at x = 2
        let c = ctx(2.0, 0.0, &[2.0], &l2);
        assert_relative_eq!(stepsize(&StepsizeRule::Msps { c: 1.0 }, &c).unwrap(), 0.5);
        assert_relative_eq!(
            stepsize(&StepsizeRule::MspsMax { c: 1.0, eta_b: 0.1 }, &c).unwrap(),
            0.1
        );
        let c0 = ctx(0.0, 0.0, &[0.0], &l2);
        assert_eq!(stepsize(&StepsizeRule::Msps { c: 1.0 }, &c0).unwrap(), 0.0);
    }

    #[test]
    fn polyak_errors() {
        let l2 = NormTag::L2;
        let c = ctx(1.0, 0.0, &[0.0, 0.0], &l2);
        assert!(matches!(
            stepsize(&StepsizeRule::Msps { c: 1.0 }, &c),
            Err(Error::ZeroGradientAtNonOptimum { .. })
        ));
        let c = ctx(1.0, f64::NEG_INFINITY, &[1.0], &l2);
        assert!(matches!(
            stepsize(&StepsizeRule::Msps { c: 1.0 }, &c),
            Err(Error::UnknownInfimum)
        ));
        assert!(StepsizeRule::Msps { c: 0.0 }.validate().is_err());
        assert!(StepsizeRule::Constant { eta: -1.0 }.validate().is_err());
    }

    #[test]
    fn mirror_polyak_uses_global_optimum() {
        let l2 = NormTag::L2;
        // f = ½x² at x = 1
        let c = ctx(0.5, 123.0, &[1.0], &l2);
        let eta = stepsize(&StepsizeRule::MirrorPolyak { fstar: 0.0 }, &c).unwrap();
        assert_relative_eq!(eta, 0.5);
    }

    #[test]
    fn dual_norm_enters() {
        let l1 = NormTag::L1;
        // ‖(1, −3)‖_∞² = 9
        let c = ctx(9.0, 0.0, &[1.0, -3.0], &l1);
        assert_relative_eq!(stepsize(&StepsizeRule::Msps { c: 0.5 }, &c).unwrap(), 2.0);
    }

    #[test]
    fn smoothed_bound_replay() {
        let l2 = NormTag::L2;
        let rule = StepsizeRule::SmoothedMspsMax {
            c: 1.0,
            tau: 0.5,
            batch: 2,
            n: 4,
            eta_init: 1.0,
        };
        let mut s = Stepsize::new(rule).unwrap();
        let factor = 0.5f64.powf(0.5);
        // raw mSPS = 0.5 each time
        let c = ctx(2.0, 0.0, &[2.0], &l2);
        let mut prev = 1.0;
        for _ in 0..5 {
            let eta = s.next(&c).unwrap();
            assert_eq!(s.last_bound(), Some(factor * prev));
            assert_eq!(eta, (factor * prev).min(0.5));
            prev = eta;
        }
        // converged component leaves the state untouched
        let before = s.state();
        let z = ctx(0.0, 0.0, &[0.0], &l2);
        assert_eq!(s.next(&z).unwrap(), 0.0);
        assert_eq!(s.state(), before);
    }

    #[test]
    fn constants() {
        assert_eq!(msps_bounds(1.0, 1.0, 2.0, Some(1.0)), (0.25, 0.5));
        assert_eq!(msps_bounds(0.5, 0.5, 4.0, None), (0.125, f64::INFINITY));
        let (lo, hi) = msps_bounds(1.0, 1.0, 3.0, Some(3.0));
        assert_eq!(lo, hi);
        assert_eq!(alpha(1.0, 1.0, 2.0, 10.0), 0.25);
        assert_eq!(alpha(1.0, 1.0, 2.0, 0.1), 0.1);
        assert_eq!(alpha(1.0, 1.0, 2.0, 0.25), 0.25);
    }

    #[test]
    fn pl_examples() {
        let k = pl_constants(1.0, 1.0, 1.0, 0.1);
        assert_relative_eq!(k.alpha, 0.1);
        assert_relative_eq!(k.nu, 0.85, epsilon = 1e-14);
        assert!(k.valid);
        assert!(!pl_constants(0.1, 1.0, 1.0, 0.1).valid);
    }

    #[test]
    fn pl_two_case_bound_by_scan() {
        // the η_b condition with c > L/(4μ) should coincide with ν ∈ (0, 1) on a grid
        let (c, l, mu) = (1.0, 1.0, 0.5);
        for k in 1..400 {
            let eta_b = k as f64 * 0.01;
            let p = pl_constants(c, l, mu, eta_b);
            let by_nu = p.nu > 0.0 && p.nu < 1.0;
            assert_eq!(p.valid, by_nu, "eta_b = {eta_b}");
        }
    }
}
