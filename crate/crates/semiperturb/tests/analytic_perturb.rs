use std::f64::consts::PI;

use ndarray::Array2;
use semiperturb::admissibility::{scalar_triple, ControlObsTriple, ZDescriptor};
use semiperturb::analytic_perturb::{
    admissible_p_range, build_perturbed, certify, domain_probes, embedding_via_interpolation_estimate,
    fit_io_scaling, interpolation_family, verify_perturbed_analytic, verify_vop_formula, vop_convergence,
};
use semiperturb::linalg::{self, cplx, CVec};
use semiperturb::models::dirichlet_laplacian;
use semiperturb::operator_core::{certify_sector, phi_grid};
use semiperturb::{CMat, GeneratorRep, NormKind, OperatorBlock, Verdict};

fn laplacian(n: usize) -> GeneratorRep {
    dirichlet_laplacian(0.0, PI, n, NormKind::WeightedP(2.0)).unwrap()
}

fn identity_triple(a: GeneratorRep, scale: f64) -> ControlObsTriple {
    let x = a.space().clone();
    let n = a.dim();
    let b = OperatorBlock::new(x.clone(), x.clone(), linalg::eye(n).mapv(|v| v * scale)).unwrap();
    ControlObsTriple::new(a, b.clone(), b, ZDescriptor::FullSpace)
        .unwrap()
        .with_bounded_control()
}

/// Central difference on the interior nodes with zero ends.
fn derivative(a: &GeneratorRep) -> OperatorBlock {
    let n = a.dim();
    let g = a.space().grid();
    let h = g[1] - g[0];
    let mut d = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        if i > 0 {
            d[[i, i - 1]] = -0.5 / h;
        }
        if i + 1 < n {
            d[[i, i + 1]] = 0.5 / h;
        }
    }
    OperatorBlock::new(a.space().clone(), a.space().clone(), linalg::to_complex(&d)).unwrap()
}

#[test]
fn p_range_arithmetic() {
    let ((lo, hi), p1) = admissible_p_range(0.25, 0.5);
    assert!((lo - 4.0 / 3.0).abs() < 1e-15 && (hi - 2.0).abs() < 1e-15 && !p1);
    let (_, p1) = admissible_p_range(0.0, 0.5);
    assert!(p1);
}

#[test]
fn certificate_sum_condition() {
    let tr = identity_triple(laplacian(32), 1.0);
    let c = certify(&tr, 0.6, 0.5, 1.0).unwrap();
    assert!(!c.sum_ok);
    assert_eq!(c.verdict(), Verdict::Fail);
    let c = certify(&tr, 0.0, 0.1, 1.0).unwrap();
    assert!(c.sum_ok && c.includes_p1 && c.admits(1.0) && c.admits(2.0) && !c.admits(11.0));
    // B = Id maps into Fav_1: R(lambda, A) x lies in D(A)
    assert_eq!(c.range_verdict, Verdict::Pass);
    assert!(certify(&tr, 0.0, 0.1, -100.0).is_err());
    assert!(certify(&tr, 0.0, 0.0, 1.0).is_err());
}

#[test]
fn interpolation_identity_and_derivative() {
    let rho: Vec<f64> = linalg::logspace(1.0, 1e8, 40);
    let a = laplacian(64);
    let id = OperatorBlock::new(a.space().clone(), a.space().clone(), linalg::eye(64)).unwrap();
    let probes = semiperturb::analytic_perturb::interpolation_probes(a.space(), 8, 1);
    let m = embedding_via_interpolation_estimate(&a, &id, 0.5, &rho, &probes).unwrap();
    assert!(m <= 1.0 + 1e-12, "{m}");
    assert!(embedding_via_interpolation_estimate(&a, &id, 1.0, &rho, &probes).is_err());

    let fam: Vec<_> = [32, 64, 128, 256]
        .iter()
        .map(|&n| {
            let a = laplacian(n);
            let k = derivative(&a);
            (n, a, k)
        })
        .collect();
    let r = interpolation_family(&fam, 0.5, &rho, 3).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");

    let fam: Vec<_> = [32, 64, 128, 256]
        .iter()
        .map(|&n| {
            let a = laplacian(n);
            let k = OperatorBlock::new(a.space().clone(), a.space().clone(), a.matrix().clone()).unwrap();
            (n, a, k)
        })
        .collect();
    let r = interpolation_family(&fam, 0.5, &rho, 3).unwrap();
    assert_eq!(r.verdict, Verdict::Fail, "{r:?}");
}

#[test]
fn bounded_io_scaling_exponent() {
    let tr = identity_triple(laplacian(16), 1.0);
    let cert = certify(&tr, 0.0, 0.1, 1.0).unwrap();
    let times = linalg::logspace(1e-3, 1.0, 7);
    let fit = fit_io_scaling(&tr, &cert, 2.0, 0.5, &times, 16).unwrap();
    assert!(fit.exponent >= 0.5, "{fit:?}");
    assert_eq!(fit.verdict, Verdict::Pass);
    assert!(fit_io_scaling(&tr, &cert, 2.0, 0.95, &times, 16).is_err());
    assert!(fit_io_scaling(&tr, &cert, 20.0, 0.5, &times, 16).is_err());
}

#[test]
fn trivial_perturbations() {
    let a = laplacian(16);
    let tr = identity_triple(a.clone(), 0.0);
    let pg = build_perturbed(&tr).unwrap();
    assert_eq!(pg.generator.matrix(), a.matrix());
    let probes = domain_probes(&pg, 3, 0).unwrap();
    assert!(verify_vop_formula(&pg, 1.0, 16, &probes).unwrap() < 1e-12);

    // B = b I shifts the spectrum by b
    let pg = build_perturbed(&identity_triple(a.clone(), 0.5)).unwrap();
    let shift = pg.generator.growth_bound() - a.growth_bound();
    assert!((shift - 0.25).abs() < 1e-10, "{shift}");
}

#[test]
fn scalar_vop_closed_form() {
    // A = -1, B = C = 1: A_BC = 0 and 1 = e^{-t} + int_0^t e^{-(t-s)} ds
    let tr = scalar_triple(-1.0, 1.0, 1.0, 2.0).unwrap();
    let pg = build_perturbed(&tr).unwrap();
    assert!(pg.generator.matrix()[[0, 0]].norm() < 1e-15);
    let x = CVec::from_elem(1, cplx(1.0));
    let r = verify_vop_formula(&pg, 2.0, 8, &[x]).unwrap();
    assert!(r < 1e-13, "{r:e}");
}

#[test]
fn vop_converges_at_second_order() {
    let a = laplacian(24);
    let n = a.dim();
    let mut k = CMat::zeros((n, n));
    for i in 0..n {
        k[[i, (i + 3) % n]] = cplx(0.7);
    }
    let x = a.space().clone();
    let tr = ControlObsTriple::new(
        a,
        OperatorBlock::new(x.clone(), x.clone(), k).unwrap(),
        OperatorBlock::new(x.clone(), x, linalg::eye(n)).unwrap(),
        ZDescriptor::FullSpace,
    )
    .unwrap();
    let pg = build_perturbed(&tr).unwrap();
    let probes = domain_probes(&pg, 4, 5).unwrap();
    let c = vop_convergence(&pg, 1.0, &[16, 32, 64], &probes).unwrap();
    assert!(c.ratios.iter().all(|&r| r >= 1.8), "{c:?}");
}

#[test]
fn perturbed_sector_needs_base_certificate() {
    let a = laplacian(24);
    let lam = linalg::logspace(1e-2, 1e4, 12);
    let phis = phi_grid(PI / 2.0 - 0.05, 4);
    let pg = build_perturbed(&identity_triple(a.clone(), 0.3)).unwrap();
    assert!(verify_perturbed_analytic(&pg, PI / 2.0 - 0.05, &lam, &phis).is_err());
    let cert = certify_sector(&a, PI / 2.0, &lam, &phis).unwrap();
    assert!(cert.pass);
    let tr = identity_triple(a.with_sector(&cert), 0.3);
    let pg = build_perturbed(&tr).unwrap();
    let c = verify_perturbed_analytic(&pg, PI / 2.0 - 0.05, &lam, &phis).unwrap();
    assert!(c.pass, "{c:?}");
}
