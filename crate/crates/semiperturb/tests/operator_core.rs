use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semiperturb::linalg::{self, cplx};
use semiperturb::models::{dirichlet_laplacian, dirichlet_laplacian_eigenvalue, sine_mode};
use semiperturb::operator_core::{certify_sector, phi_grid};
use semiperturb::{c64, CMat, CVec, DiscreteSpace, GeneratorRep, NormKind};

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    (0..n)
        .map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn rel(a: &CMat, b: &CMat) -> f64 {
    linalg::fro(&(a - b)) / linalg::fro(b)
}

#[test]
fn resolvent_identity_on_laplacian() {
    let a = dirichlet_laplacian(0.0, PI, 64, NormKind::Sup).unwrap();
    let (l, m) = (cplx(1.0), cplx(2.0));
    let rl = a.resolvent_matrix(l).unwrap();
    let rm = a.resolvent_matrix(m).unwrap();
    let lhs = &rl - &rm;
    let rhs = rl.dot(&rm).mapv(|v| v * (m - l));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..8 {
        let x = random_vec(&mut rng, 64);
        let d = linalg::vec_norm2((lhs.dot(&x) - rhs.dot(&x)).view());
        assert!(d <= 1e-8 * linalg::vec_norm2(lhs.dot(&x).view()));
    }
}

#[test]
fn semigroup_matches_eigen_expansion() {
    // Exact discrete eigenpairs: sin(k s_j) with eigenvalue -4/h^2 sin^2(k h/2).
    let n = 128;
    let a = dirichlet_laplacian(0.0, PI, n, NormKind::WeightedP(2.0)).unwrap();
    let grid = a.space().grid().to_vec();
    let x: CVec = grid.iter().map(|&s| cplx(s * (PI - s))).collect();
    let t = 0.1;
    let mut oracle = Array1::<f64>::zeros(n);
    for k in 1..=n {
        let phi: Vec<f64> = grid.iter().map(|s| (k as f64 * s).sin()).collect();
        let nrm: f64 = phi.iter().map(|v| v * v).sum();
        let c: f64 = phi.iter().zip(&x).map(|(p, xi)| p * xi.re).sum::<f64>() / nrm;
        let lam = dirichlet_laplacian_eigenvalue(0.0, PI, n, k);
        for j in 0..n {
            oracle[j] += c * (lam * t).exp() * phi[j];
        }
    }
    let y = a.semigroup_apply(t, &x).unwrap();
    let err = y.iter().zip(&oracle).map(|(u, v)| (u.re - v).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-8, "err = {err}");
}

#[test]
fn semigroup_law_and_shift_covariance_non_normal() {
    // Non-normal test matrix drives the Pade route.
    let n = 24;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m: CMat = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            cplx(-1.0 - i as f64)
        } else if j > i {
            c64::new(rng.gen_range(-2.0..2.0), 0.0)
        } else {
            cplx(0.0)
        }
    });
    let a = GeneratorRep::new(DiscreteSpace::coordinates(n, NormKind::Sup).unwrap(), m).unwrap();
    assert!(!a.is_near_normal());
    let (s, t) = (0.3, 0.45);
    let lhs = a.semigroup(s + t).unwrap();
    let rhs = a.semigroup(s).unwrap().dot(&a.semigroup(t).unwrap());
    assert!(rel(&lhs, &rhs) < 1e-9);
    let shifted = a.shifted(-2.5).unwrap().semigroup(t).unwrap();
    let expect = a.semigroup(t).unwrap().mapv(|v| v * (-2.5 * t).exp());
    assert!(rel(&shifted, &expect) < 1e-10);
}

#[test]
fn derivative_second_order_convergence() {
    let a = dirichlet_laplacian(0.0, PI, 32, NormKind::Sup).unwrap();
    let x = sine_mode(a.space().grid(), 0.0, PI, 2) + sine_mode(a.space().grid(), 0.0, PI, 3);
    let t = 0.2;
    let exact = a.apply(&a.semigroup_apply(t, &x).unwrap()).unwrap();
    let err = |h: f64| {
        let d = (a.semigroup_apply(t + h, &x).unwrap() - a.semigroup_apply(t - h, &x).unwrap())
            .mapv(|v| v / (2.0 * h));
        a.space().norm((&d - &exact).view()).unwrap()
    };
    let ratio = err(1e-2) / err(5e-3);
    assert!((ratio - 4.0).abs() <= 1.0, "ratio = {ratio}");
}

#[test]
fn growth_bound_approaches_first_dirichlet_eigenvalue() {
    let a = dirichlet_laplacian(0.0, PI, 256, NormKind::Sup).unwrap();
    assert!((a.growth_bound() + 1.0).abs() < 1e-2);
}

#[test]
fn sector_self_adjoint_negative() {
    let a = dirichlet_laplacian(0.0, PI, 32, NormKind::WeightedP(2.0)).unwrap();
    let theta = PI / 2.0 - 0.01;
    let lam = linalg::logspace(1e-2, 1e6, 48);
    let phis = phi_grid(theta, 6);
    let c = certify_sector(&a, theta, &lam, &phis).unwrap();
    let worst_phi = phis.iter().cloned().fold(0.0f64, |m, p| m.max(p.abs()));
    assert!(c.pass);
    assert!(c.constant <= 1.1 / worst_phi.cos(), "constant {}", c.constant);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn norm_is_positive_definite(seed in 0u64..1000, p in 1.0f64..4.0) {
        let grid = linalg::linspace(0.0, 2.0, 17);
        let s = DiscreteSpace::lp_trapezoid(grid, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_vec(&mut rng, 17);
        prop_assert!(s.norm(x.view()).unwrap() > 0.0);
        let y = x.mapv(|v| v * 2.0);
        prop_assert!((s.norm(y.view()).unwrap() - 2.0 * s.norm(x.view()).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn triangle_inequality(seed in 0u64..1000, p in 1.0f64..4.0) {
        let grid = linalg::linspace(-1.0, 1.0, 9);
        let s = DiscreteSpace::lp_trapezoid(grid, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_vec(&mut rng, 9);
        let y = random_vec(&mut rng, 9);
        let lhs = s.norm((&x + &y).view()).unwrap();
        prop_assert!(lhs <= s.norm(x.view()).unwrap() + s.norm(y.view()).unwrap() + 1e-12);
    }
}
