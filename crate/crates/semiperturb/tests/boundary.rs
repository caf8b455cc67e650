use std::f64::consts::PI;

use ndarray::Axis;
use semiperturb::boundary::{
    assemble_g, block_encoding, block_feedback_check, block_feedback_from_blocks, boundary_projection_check,
    cross_route_residual, decay_equivalences, dirichlet_from_resolvent, dirichlet_solve, la_independence,
    relative_diff, spectral_gap, BoundarySystem, DirichletConstruction,
};
use semiperturb::admissibility::ZDescriptor;
use semiperturb::analytic_perturb::build_perturbed;
use semiperturb::linalg::{self, c64, cplx};
use semiperturb::models::{laplacian_boundary_system, sine_mode};
use semiperturb::{CMat, Error, NormKind, Verdict};

fn lap(n: usize) -> BoundarySystem {
    laplacian_boundary_system(0.0, PI, n, NormKind::WeightedP(2.0)).unwrap()
}

/// Kernel of lambda - d^2/ds^2 with f'(0) = d0, f(pi) = d1.
fn kernel_closed_form(s: f64, lambda: f64, d0: f64, d1: f64) -> f64 {
    let r = lambda.sqrt();
    d0 * (r * (s - PI)).sinh() / (r * (r * PI).cosh()) + d1 * (r * s).cosh() / (r * PI).cosh()
}

fn perturbed(n: usize) -> BoundarySystem {
    let sys = lap(n);
    let nn = sys.full.dim();
    let mut phi = CMat::zeros((2, nn));
    // f'(0) = 0.3 f(pi/2) - 0.2 mean(f), f(pi) = 0.1 f(0)
    phi[[0, nn / 2]] = cplx(0.3);
    for j in 0..nn {
        phi[[0, j]] -= cplx(0.2 / nn as f64);
    }
    phi[[1, 0]] = cplx(0.1);
    let mut p = CMat::zeros((n, nn));
    for r in 0..n {
        p[[r, r + 1]] = cplx(-0.5);
    }
    sys.with_phi(phi).unwrap().with_p(p).unwrap()
}

#[test]
fn laplacian_kernel_invariants_and_closed_form() {
    let sys = lap(256);
    for lambda in [cplx(1.0), cplx(4.0), c64::new(2.0, 3.0)] {
        let d = dirichlet_solve(&sys, lambda).unwrap();
        assert_eq!(d.construction, DirichletConstruction::DirectKernelSolve);
        let (trace, kern) = d.invariant_residuals(&sys);
        assert!(trace <= 1e-8 && kern <= 1e-8, "{lambda}: {trace:e} {kern:e}");
    }
    let d = dirichlet_solve(&sys, cplx(4.0)).unwrap();
    for (i, s) in sys.full.grid().iter().enumerate() {
        for (col, (d0, d1)) in [(1.0, 0.0), (0.0, 1.0)].into_iter().enumerate() {
            let exact = kernel_closed_form(*s, 4.0, d0, d1);
            // second-order stencils: O(h^2) agreement with the continuum kernel
            assert!((d.full[[i, col]].re - exact).abs() <= 1e-3, "s = {s}");
        }
    }
}

#[test]
fn cross_route_and_independence() {
    let sys = lap(128);
    assert!(cross_route_residual(&sys, cplx(1.0), cplx(0.0)).unwrap() <= 1e-8);
    assert!(cross_route_residual(&sys, cplx(9.0), cplx(1.0)).unwrap() <= 1e-8);
    let same = dirichlet_from_resolvent(&sys, cplx(0.0), cplx(0.0)).unwrap();
    let direct = dirichlet_solve(&sys, cplx(0.0)).unwrap();
    assert_eq!(relative_diff(&same.full, &direct.full), 0.0);
    let w = la_independence(&sys, &[cplx(1.0), cplx(4.0), cplx(9.0)]).unwrap();
    assert!(w <= 1e-8, "{w:e}");
}

#[test]
fn resolvent_point_on_spectrum_is_refused() {
    let sys = lap(32);
    let ev = sys.base_generator().eigenvalues()[0];
    match dirichlet_solve(&sys, ev) {
        Err(Error::SpectralProximity { .. }) => {}
        other => panic!("expected spectral proximity error, got {other:?}"),
    }
}

#[test]
fn unperturbed_assembly_is_the_base_generator() {
    let sys = lap(48);
    let g = assemble_g(&sys).unwrap();
    assert!(relative_diff(g.generator.matrix(), sys.base_generator().matrix()) < 1e-12);
}

#[test]
fn block_encoding_reproduces_g() {
    let sys = perturbed(64);
    let g = assemble_g(&sys).unwrap();
    let tr = block_encoding(&sys, ZDescriptor::FullSpace).unwrap();
    let pg = build_perturbed(&tr).unwrap();
    assert!(relative_diff(pg.generator.matrix(), g.generator.matrix()) <= 1e-10);
    assert!(spectral_gap(&pg.generator, &g.generator, 10) <= 1e-6);
}

#[test]
fn spectrum_continuous_in_phi() {
    let base = lap(48);
    let nn = base.full.dim();
    let mut prev = f64::INFINITY;
    for eps in [1e-1, 1e-2, 1e-3] {
        let mut phi = CMat::zeros((2, nn));
        phi[[0, 0]] = cplx(eps);
        let g = assemble_g(&base.with_phi(phi).unwrap()).unwrap();
        let gap = spectral_gap(&g.generator, base.base_generator(), 5);
        assert!(gap < prev);
        prev = gap;
    }
    assert!(prev < 1e-3);
}

#[test]
fn boundary_projection_identity() {
    let sys = perturbed(64);
    let g = sys.state.grid().to_vec();
    let samples = vec![sine_mode(&g, 0.0, PI, 1), sine_mode(&g, 0.0, PI, 3).mapv(|v| v + cplx(0.5))];
    let r = boundary_projection_check(&sys, cplx(2.0), &samples).unwrap();
    assert!(r.identity <= 1e-10 && r.kernel <= 1e-10, "{r:?}");
}

#[test]
fn block_feedback_trivial_and_adversarial() {
    let z = |n: usize, m: usize| CMat::zeros((n, m));
    let r = block_feedback_from_blocks(&z(4, 4), &z(4, 2), &z(2, 4), &z(2, 2)).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    let mut f11 = z(4, 4);
    for i in 0..4 {
        f11[[i, i]] = cplx(if i == 0 { -1.0 } else { 0.5 });
    }
    let r = block_feedback_from_blocks(&f11, &z(4, 2), &z(2, 4), &z(2, 2)).unwrap();
    assert!((r.remaining_gain - 1.0).abs() < 1e-12);
    assert_eq!(r.verdict, Verdict::Suspect);
}

#[test]
fn block_feedback_small_time() {
    let sys = perturbed(24);
    let r = block_feedback_check(&sys, 2.0, 0.05, 16).unwrap();
    assert_eq!(r.sub.verdict, Verdict::Pass);
    assert_eq!(r.full.verdict, Verdict::Pass);
    assert!(block_feedback_check(&sys, 1.0, 0.05, 16).is_err());
}

#[test]
fn decay_equivalences_agree() {
    let sys = lap(256);
    let lambdas = linalg::logspace(1.0, 1e3, 16);
    let ok = decay_equivalences(&sys, 0.2, &lambdas).unwrap();
    assert!(ok.agree, "{ok:?}");
    assert_eq!(ok.a_verdict, Verdict::Pass);
    let bad = decay_equivalences(&sys, 1.0, &lambdas).unwrap();
    assert!(bad.agree, "{bad:?}");
    assert_eq!(bad.a_verdict, Verdict::Suspect);
}

#[test]
fn lifts_satisfy_constraints() {
    let sys = perturbed(32);
    let j = sys.lift(true).unwrap();
    let r = sys.l.dot(&j) - sys.phi.dot(&j);
    assert!(r.iter().all(|v| v.norm() < 1e-9));
    let j0 = sys.lift(false).unwrap();
    assert!(sys.l.dot(&j0).iter().all(|v| v.norm() < 1e-9));
    assert_eq!(j0.len_of(Axis(1)), 32);
}
