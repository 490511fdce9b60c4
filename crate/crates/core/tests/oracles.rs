//! Library results against independent reference computations.

use approx::assert_relative_eq;
use mirroropt_core::problems::{
    component_inf_oracle, linear_system_problem, markov_problem, sigma_sq_constrained,
    LeastSquaresRow,
};
use mirroropt_core::solver::monte_carlo_lenient;
use mirroropt_core::{
    euclid_project, mirror_step, monte_carlo, run_smd, FeasibleSet, MirrorMap, RunConfig,
    StepsizeRule,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Simplex projection by bisection on the threshold τ with Σ max(x_i − τ, 0) = 1.
fn project_by_bisection(x: &[f64]) -> Vec<f64> {
    let mass = |tau: f64| x.iter().map(|v| (v - tau).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (x.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0, x.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    x.iter().map(|v| (v - tau).max(0.0)).collect()
}

#[test]
fn simplex_projection_matches_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let d = rng.random_range(1..12);
        let x: Vec<f64> = (0..d).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
        let p = euclid_project(&FeasibleSet::Simplex, &x).unwrap();
        let q = project_by_bisection(&x);
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-10, "{p:?} vs {q:?}");
        }
    }
}

#[test]
fn exponentiated_gradient_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let d = rng.random_range(2..9);
        let mut x: Vec<f64> = (0..d).map(|_| 0.05 + rng.random::<f64>()).collect();
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);
        let g: Vec<f64> = (0..d).map(|_| 6.0 * rng.random::<f64>() - 3.0).collect();
        let eta = 0.01 + 4.0 * rng.random::<f64>();
        let w: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi * (-eta * gi).exp()).collect();
        let z: f64 = w.iter().sum();
        let got = mirror_step(&MirrorMap::neg_entropy(d), &FeasibleSet::Simplex, &x, &g, eta).unwrap();
        for (a, b) in got.iter().zip(&w) {
            assert_relative_eq!(*a, b / z, max_relative = 1e-12);
        }
    }
}

#[test]
fn markov_optimum_matches_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = 6;
    let mut p = DMatrix::from_fn(m, m, |_, _| 0.1 + rng.random::<f64>());
    for i in 0..m {
        let s: f64 = p.row(i).sum();
        p.row_mut(i).iter_mut().for_each(|v| *v /= s);
    }
    let mut pi = nalgebra::DVector::from_element(m, 1.0 / m as f64);
    for _ in 0..2000 {
        pi = p.transpose() * pi;
    }
    let problem = markov_problem(&p).unwrap();
    let xs = problem.known_xstar().unwrap();
    for (a, b) in xs.iter().zip(pi.iter()) {
        assert_relative_eq!(*a, *b, epsilon = 1e-12);
    }
    assert!(problem.value(xs) < 1e-28);
    assert!(problem.l_max() <= 1.0 + 1e-12);
}

#[test]
fn monte_carlo_statistics_match_replicates() {
    let a = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 1.0, 0.2, -0.7]);
    let xs = [0.3, -0.4];
    let b: Vec<f64> = (0..4).map(|i| a[(i, 0)] * xs[0] + a[(i, 1)] * xs[1]).collect();
    let p = linear_system_problem(&a, &b, FeasibleSet::Reals)
        .unwrap()
        .with_xstar(xs.to_vec())
        .unwrap();
    let cfg = RunConfig::new(&p, MirrorMap::euclidean(2), StepsizeRule::Constant { eta: 0.05 }, 40, 17, vec![1.0, 1.0])
        .with_record_every(7);
    let r = 300;
    let s = monte_carlo(&p, &cfg, r).unwrap();
    let runs: Vec<_> = (0..r)
        .map(|k| run_smd(&p, &cfg.clone().with_seed(17 + k as u64)).unwrap())
        .collect();
    for (j, &t) in s.t.iter().enumerate() {
        let vals: Vec<f64> = runs.iter().map(|tr| tr.records[j].bregman_psi).collect();
        assert_eq!(runs[0].records[j].t, t);
        let mean = vals.iter().sum::<f64>() / r as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
        assert_relative_eq!(s.bregman_psi.mean[j], mean, max_relative = 1e-10);
        assert_relative_eq!(s.bregman_psi.se[j], (var / r as f64).sqrt(), max_relative = 1e-8, epsilon = 1e-12);
    }
    let again = monte_carlo(&p, &cfg, r).unwrap();
    assert_eq!(s.bregman_psi.mean, again.bregman_psi.mean);
    assert_eq!(s.f_gap.se, again.f_gap.se);
}

#[test]
fn sweep_flags_divergence_without_failing() {
    let a = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
    let p = linear_system_problem(&a, &[1.0, 2.0, 3.0], FeasibleSet::Reals)
        .unwrap()
        .with_xstar(vec![1.0])
        .unwrap();
    let cfg = RunConfig::new(&p, MirrorMap::euclidean(1), StepsizeRule::Constant { eta: 1e5 }, 200, 0, vec![0.0]);
    let s = monte_carlo_lenient(&p, &cfg, 20, false).unwrap();
    assert_eq!(s.diverged, 20);
    assert!(monte_carlo(&p, &cfg, 20).is_err());
}

#[test]
fn constrained_infima_match_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let set = FeasibleSet::cube(2, -0.5, 1.0).unwrap();
    for _ in 0..20 {
        let row = LeastSquaresRow::new(
            vec![4.0 * rng.random::<f64>() - 2.0, 4.0 * rng.random::<f64>() - 2.0],
            6.0 * rng.random::<f64>() - 3.0,
        );
        let closed = mirroropt_core::Component::inf_constrained(&row, &set).unwrap();
        let est = component_inf_oracle(&row, &set, 4096, None).unwrap();
        assert!(est.value >= closed - 1e-12);
        assert!(est.value - closed < 1e-6, "{} vs {closed}", est.value);
    }
    let p = linear_system_problem(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]), &[2.0, -1.0], set)
        .unwrap()
        .with_xstar(vec![1.0, -0.5])
        .unwrap();
    assert_relative_eq!(sigma_sq_constrained(&p, None).unwrap().value, 0.0, epsilon = 1e-15);
}
