//! Randomized identity and inequality checks behind the `properties` suite.
//!
//! Each check reports the worst violation it saw against its tolerance.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use mirroropt_core::constraints::{is_supported, LiftMatrix};
use mirroropt_core::linalg::{dot, sub};
use mirroropt_core::problems::{
    quad1d_problem, sigma_sq, sigma_sq_constrained, AbsPlusQuadratic, LeastSquaresRow, Logistic,
    Quadratic1d,
};
use mirroropt_core::stepsizes::{msps_bounds, stepsize};
use mirroropt_core::{
    dual_norm_sq, l1_lift, linalg, mirror_step, Component, FeasibleSet, MirrorMap, NormTag,
    StepContext, StepsizeRule,
};

use crate::instances::gaussian_matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub worst: f64,
    pub tol: f64,
    pub cases: usize,
    pub seconds: f64,
}

impl PropertyCheck {
    pub fn passed(&self) -> bool {
        self.worst <= self.tol
    }
}

fn timed(name: &'static str, tol: f64, f: impl FnOnce() -> (f64, usize)) -> PropertyCheck {
    let start = Instant::now();
    let (worst, cases) = f();
    PropertyCheck {
        name,
        worst,
        tol,
        cases,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn normal_vec(d: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn spd(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let b = gaussian_matrix(d, d, rng);
    b.transpose() * b + DMatrix::identity(d, d) * 0.5
}

/// Every map with the set its domain is sampled from.
fn maps(d: usize, rng: &mut ChaCha8Rng) -> Vec<(MirrorMap, FeasibleSet)> {
    vec![
        (MirrorMap::euclidean(d), FeasibleSet::Reals),
        (MirrorMap::pnorm(d, 1.5).unwrap(), FeasibleSet::Reals),
        (MirrorMap::pnorm(d, 1.25).unwrap(), FeasibleSet::Reals),
        (MirrorMap::neg_entropy(d), FeasibleSet::Simplex),
        (MirrorMap::mahalanobis(spd(d, rng)).unwrap(), FeasibleSet::Reals),
    ]
}

fn rel(err: f64, scale: f64) -> f64 {
    err.abs() / scale.abs().max(1.0)
}

/// B(x;z) = B(x;y) + B(y;z) + ⟨∇ψ(y) − ∇ψ(z), x − y⟩
pub fn three_point(samples: usize, seed: u64) -> PropertyCheck {
    timed("three-point identity", 1e-9, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for s in 0..samples {
            let d = 1 + s % 6;
            for (map, set) in maps(d, &mut rng) {
                let x = set.sample(d, 2.0, &mut rng);
                let y = set.sample(d, 2.0, &mut rng);
                let z = set.sample(d, 2.0, &mut rng);
                let bxz = map.bregman(&x, &z).unwrap();
                let bxy = map.bregman(&x, &y).unwrap();
                let byz = map.bregman(&y, &z).unwrap();
                let cross = dot(
                    &sub(&map.grad_map(&y).unwrap(), &map.grad_map(&z).unwrap()),
                    &sub(&x, &y),
                );
                let scale = bxz.abs() + bxy.abs() + byz.abs() + cross.abs();
                worst = worst.max(rel(bxz - bxy - byz - cross, scale));
            }
        }
        (worst, samples * 5)
    })
}

/// ∇ψ*(∇ψ(x)) = x
pub fn inverse_grad(samples: usize, seed: u64) -> PropertyCheck {
    timed("inverse_grad_map after grad_map", 1e-9, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for s in 0..samples {
            let d = 1 + s % 6;
            for (map, set) in maps(d, &mut rng) {
                let x = set.sample(d, 3.0, &mut rng);
                let back = map.inverse_grad_map(&map.grad_map(&x).unwrap());
                let err = linalg::max_abs(&sub(&back, &x));
                worst = worst.max(rel(err, linalg::max_abs(&x)));
            }
        }
        (worst, samples * 5)
    })
}

/// B_f(x;y) = B_f(y;x) for quadratic f.
pub fn bregman_symmetry(samples: usize, seed: u64) -> PropertyCheck {
    timed("Bregman symmetry for quadratic losses", 1e-10, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for s in 0..samples {
            let d = 1 + s % 5;
            let n = 1 + s % 7;
            let a = gaussian_matrix(n, d, &mut rng);
            let b = normal_vec(n, 1.0, &mut rng);
            let p = mirroropt_core::problems::linear_system_problem(&a, &b, FeasibleSet::Reals).unwrap();
            let x = normal_vec(d, 2.0, &mut rng);
            let y = normal_vec(d, 2.0, &mut rng);
            let (fxy, fyx) = (p.bregman_f(&x, &y), p.bregman_f(&y, &x));
            worst = worst.max(rel(fxy - fyx, fxy));
        }
        (worst, samples)
    })
}

fn random_components(d: usize, rng: &mut ChaCha8Rng) -> Vec<Arc<dyn Component>> {
    let w = normal_vec(d, 1.0, rng);
    let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
    vec![
        Arc::new(LeastSquaresRow::new(normal_vec(d, 1.0, rng), rng.sample(StandardNormal))),
        Arc::new(Logistic::new(w, y)),
    ]
}

/// ‖∇f_i(x)‖²_* ≤ 2L_i (f_i(x) − f_i^*)
pub fn self_bounding(samples: usize, seed: u64) -> PropertyCheck {
    timed("self-bounding inequality", 1e-9, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let norms = [NormTag::L2, NormTag::L1, NormTag::LInf, NormTag::Lp(1.5), NormTag::Lp(4.0)];
        let mut worst = 0.0f64;
        let mut cases = 0;
        for s in 0..samples {
            let d = 1 + s % 6;
            let norm = &norms[s % norms.len()];
            for c in random_components(d, &mut rng) {
                let x = normal_vec(d, 3.0, &mut rng);
                let mut g = vec![0.0; d];
                let v = c.value_grad(&x, &mut g);
                let lhs = dual_norm_sq(norm, &g);
                let rhs = 2.0 * c.smoothness(norm) * (v - c.inf_unconstrained());
                worst = worst.max((lhs - rhs) / rhs.abs().max(1.0));
                cases += 1;
            }
        }
        (worst.max(0.0), cases)
    })
}

/// μ_ψ/(2cL_i) ≤ η ≤ μ_ψ/(2cμ_i) for f_i = ½(x − x_i)ᵀH_i(x − x_i).
pub fn msps_sandwich(samples: usize, seed: u64) -> PropertyCheck {
    timed("mSPS sandwich bounds", 1e-12, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for s in 0..samples {
            let d = 1 + s % 5;
            let h = spd(d, &mut rng);
            let eig = h.clone().symmetric_eigen().eigenvalues;
            let (mu, l) = (eig.min(), eig.max());
            let center = normal_vec(d, 1.0, &mut rng);
            let x = normal_vec(d, 2.0, &mut rng);
            let e = nalgebra::DVector::from_vec(sub(&x, &center));
            let he = &h * &e;
            let value = 0.5 * e.dot(&he);
            let grad: Vec<f64> = he.iter().copied().collect();
            let c = 0.25 + 2.0 * rng.random::<f64>();
            let ctx = StepContext {
                loss_value: value,
                loss_inf: 0.0,
                grad: &grad,
                mu_psi: 1.0,
                norm: &NormTag::L2,
                t: 1,
            };
            let eta = stepsize(&StepsizeRule::Msps { c }, &ctx).unwrap();
            let (lo, hi) = msps_bounds(c, 1.0, l, Some(mu));
            let violation = ((lo - eta) / lo).max((eta - hi) / hi);
            worst = worst.max(violation);
        }
        (worst.max(0.0), samples)
    })
}

/// σ²_X ≤ σ² on random one-dimensional ensembles.
pub fn sigma_order(ensembles: usize, seed: u64) -> PropertyCheck {
    timed("sigma_X^2 <= sigma^2", 1e-12, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sets = [
            FeasibleSet::cube(1, 0.0, 1.0).unwrap(),
            FeasibleSet::NonNeg,
            FeasibleSet::cube(1, -1.0, 2.0).unwrap(),
        ];
        let mut worst = 0.0f64;
        let mut done = 0;
        while done < ensembles {
            let n = 2 + rng.random_range(0..6);
            let coeffs: Vec<(f64, f64, f64)> = (0..n)
                .map(|_| {
                    (
                        -1.0 + 3.0 * rng.random::<f64>(),
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                    )
                })
                .collect();
            let set = sets[done % sets.len()].clone();
            let Ok(p) = quad1d_problem(&coeffs, set, true) else {
                continue;
            };
            let s = sigma_sq(&p, None).unwrap();
            let sx = sigma_sq_constrained(&p, None).unwrap().value;
            worst = worst.max(sx - s);
            done += 1;
        }
        (worst.max(0.0), ensembles)
    })
}

/// ⟨ηg + ∇ψ(x⁺) − ∇ψ(x), u − x⁺⟩ ≥ 0 for feasible u.
pub fn mirror_step_certificate(samples: usize, seed: u64) -> PropertyCheck {
    timed("mirror_step optimality certificate", 1e-7, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let mut cases = 0;
        for s in 0..samples {
            let d = 1 + s % 6;
            let sets = [
                FeasibleSet::Reals,
                FeasibleSet::NonNeg,
                FeasibleSet::cube(d, -0.5, 1.5).unwrap(),
                FeasibleSet::Simplex,
            ];
            for (map, _) in maps(d, &mut rng) {
                for set in &sets {
                    if !is_supported(&map, set) {
                        continue;
                    }
                    let x = set.sample(d, 1.0, &mut rng);
                    if !map.is_interior(&x) {
                        continue;
                    }
                    let g = normal_vec(d, 5.0, &mut rng);
                    let eta = 10f64.powf(-2.0 + 3.0 * rng.random::<f64>());
                    let xp = mirror_step(&map, set, &x, &g, eta).unwrap();
                    let gp = map.grad_map(&xp).unwrap();
                    let gx = map.grad_map(&x).unwrap();
                    let v: Vec<f64> = (0..d).map(|j| eta * g[j] + gp[j] - gx[j]).collect();
                    for _ in 0..4 {
                        let u = set.sample(d, 3.0, &mut rng);
                        let ip = dot(&v, &sub(&u, &xp));
                        let scale = linalg::max_abs(&v) * linalg::max_abs(&sub(&u, &xp));
                        worst = worst.max(-ip / scale.max(1.0));
                        cases += 1;
                    }
                }
            }
        }
        (worst.max(0.0), cases)
    })
}

/// Λ·lift(x₀) = x₀ and the lift lies in the simplex.
pub fn lift_round_trip(samples: usize, seed: u64) -> PropertyCheck {
    timed("l1 lift round trip", 1e-12, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for s in 0..samples {
            let d = 1 + s % 8;
            let lambda = 0.1 + 5.0 * rng.random::<f64>();
            let set = FeasibleSet::l1_ball(lambda).unwrap();
            let x0 = set.sample(d, 1.0, &mut rng);
            let w = l1_lift(lambda, &x0).unwrap();
            let back = LiftMatrix::new(lambda, d).unwrap().apply(&w);
            let simplex_err = (w.iter().sum::<f64>() - 1.0).abs()
                + w.iter().map(|v| (-v).max(0.0)).sum::<f64>();
            worst = worst.max(linalg::max_abs(&sub(&back, &x0))).max(simplex_err);
        }
        (worst, samples)
    })
}

fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let h = 1e-6 * x[j].abs().max(1.0);
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[j] += h;
            b[j] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

/// Analytic gradients of components and mirror maps against central differences.
pub fn finite_differences(samples: usize, seed: u64) -> PropertyCheck {
    timed("gradients vs finite differences", 1e-5, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let mut cases = 0;
        let mut record = |g: &[f64], fd: &[f64]| {
            let err = linalg::max_abs(&sub(g, fd));
            worst = worst.max(err / linalg::max_abs(g).max(1.0));
        };
        for s in 0..samples {
            let d = 1 + s % 6;
            let mut comps = random_components(d, &mut rng);
            comps.push(Arc::new(AbsPlusQuadratic {
                center: normal_vec(d, 1.0, &mut rng),
                abs_weights: (0..d).map(|_| rng.random::<f64>()).collect(),
                quad_weights: (0..d).map(|_| rng.random::<f64>()).collect(),
            }));
            if d == 1 {
                comps.push(Arc::new(Quadratic1d::new(
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                )));
            }
            for c in comps {
                let x = normal_vec(d, 2.0, &mut rng);
                record(&c.grad(&x), &central_difference(&|y| c.value(y), &x));
                cases += 1;
            }
            for (map, set) in maps(d, &mut rng) {
                let mut x = set.sample(d, 2.0, &mut rng);
                if let FeasibleSet::Simplex = set {
                    // keep the stencil inside the positive orthant
                    x.iter_mut().for_each(|v| *v = v.max(1e-3));
                }
                let fd = central_difference(&|y| map.psi(y).unwrap(), &x);
                record(&map.grad_map(&x).unwrap(), &fd);
                cases += 1;
            }
        }
        (worst, cases)
    })
}

/// Every property check at its default sample size.
pub fn all_checks(seed: u64) -> Vec<PropertyCheck> {
    vec![
        three_point(2000, seed),
        bregman_symmetry(2000, seed + 1),
        self_bounding(10_000, seed + 2),
        msps_sandwich(2000, seed + 3),
        sigma_order(500, seed + 4),
        inverse_grad(2000, seed + 5),
        mirror_step_certificate(500, seed + 6),
        lift_round_trip(2000, seed + 7),
        finite_differences(500, seed + 8),
    ]
}
