use std::f64::consts::PI;

use semiperturb::admissibility::ZDescriptor;
use semiperturb::analytic_perturb::{build_perturbed, certify, domain_probes, fit_io_scaling, vop_convergence};
use semiperturb::boundary::{
    assemble_g, block_encoding, dirichlet_solve, relative_diff, spectral_gap, DirichletConstruction,
};
use semiperturb::examples::wentzell::*;
use semiperturb::linalg::{self, cplx, CVec};
use semiperturb::operator_core::{certify_sector, phi_grid};
use semiperturb::{Error, Verdict};

#[test]
fn coefficient_checks() {
    let ok = Coefficient::Beta { scale: 1.0, alpha0: 0.5, alpha1: 0.5 };
    assert!(integrability_check(&ok).converged);
    let h = holder_exponent(&ok);
    assert!((h - 0.5).abs() < 0.02, "{h}");
    let steep = Coefficient::Beta { scale: 1.0, alpha0: 0.9, alpha1: 0.0 };
    assert!(integrability_check(&steep).converged);
    let lin = Coefficient::Beta { scale: 1.0, alpha0: 1.0, alpha1: 0.0 };
    let c = integrability_check(&lin);
    assert!(!c.converged, "{c:?}");
    let mut p = WentzellProblem::reference();
    p.a = lin;
    assert!(matches!(wentzell_build(&p, 32), Err(Error::Domain(_))));
    p.a = Coefficient::Poly { coef: vec![0.1, -1.0, 1.0] };
    assert!(matches!(wentzell_build(&p, 32), Err(Error::Domain(_))));
    p.a = ok;
    p.holder_delta = 0.8;
    assert!(matches!(wentzell_build(&p, 32), Err(Error::Domain(_))));
}

#[test]
fn formula_route_matches_direct_route() {
    let prob = WentzellProblem::reference();
    let sys = wentzell_build(&prob, 256).unwrap();
    let l0 = linalg::norm_inf(l_tilde0(&sys).view());
    for lambda in [1.0, 10.0, 100.0, 1000.0] {
        let f = wentzell_dirichlet(&sys, lambda).unwrap();
        assert_eq!(f.construction, DirichletConstruction::ResolventFormula);
        let d = dirichlet_solve(&sys, cplx(lambda)).unwrap();
        let r = relative_diff(&f.full, &d.full);
        let nrm = linalg::norm_inf(f.full.view());
        println!("lambda {lambda}: diff {r:e} bound {}", lambda * nrm / 2.0 / l0);
        assert!(r <= 1e-8);
        assert!(lambda * nrm / 2.0 <= 1.02 * l0);
    }
}

#[test]
fn sector_certificates() {
    for prob in [WentzellProblem::reference(), WentzellProblem::with_derivative_terms()] {
        let sys = wentzell_build(&prob, 128).unwrap();
        let lam = linalg::logspace(1e-2, 1e6, 16);
        let phis = phi_grid(PI / 2.0 - 0.05, 4);
        let g = assemble_g(&sys).unwrap();
        let c = certify_sector(&g.generator, PI / 2.0 - 0.05, &lam, &phis).unwrap();
        assert!(c.pass && c.constant < 50.0, "{c:?}");
        assert!(g.generator.eigenvalues().iter().all(|z| z.re < 1e-9));
    }
}

#[test]
fn io_scaling_without_derivative_terms() {
    let prob = WentzellProblem::reference();
    let sys = wentzell_build(&prob, 64).unwrap();
    let tr = wentzell_triple(&prob, &sys).unwrap();
    let cert = certify(&tr, 0.0, 0.25, 1.0).unwrap();
    assert_eq!(cert.verdict(), Verdict::Pass, "{cert:?}");
    assert!(cert.admits(2.0));
    let times = linalg::logspace(1e-3, 1.0, 8);
    let fit = fit_io_scaling(&tr, &cert, 2.0, 0.2, &times, 32).unwrap();
    assert!(fit.exponent >= 0.15 && fit.bound_holds, "{fit:?}");
}

#[test]
fn derivative_terms_narrow_the_p_window() {
    let prob = WentzellProblem::with_derivative_terms();
    let sys = wentzell_build(&prob, 32).unwrap();
    let tr = wentzell_triple(&prob, &sys).unwrap();
    let cert = certify(&tr, 0.0, 0.55, 1.0).unwrap();
    assert!(cert.admits(1.5) && !cert.admits(2.0));
}

#[test]
fn vop_on_block_encoding() {
    let prob = WentzellProblem::reference();
    let sys = wentzell_build(&prob, 64).unwrap();
    let tr = block_encoding(&sys, ZDescriptor::FullSpace).unwrap();
    let pg = build_perturbed(&tr).unwrap();
    let probes = domain_probes(&pg, 4, 1).unwrap();
    let c = vop_convergence(&pg, 1.0, &[32, 64, 128], &probes).unwrap();
    assert!(c.residuals[2] <= 1e-4 && c.ratios.iter().all(|&r| r >= 1.8), "{c:?}");
}

fn smooth_start(sys: &semiperturb::boundary::BoundarySystem) -> CVec {
    let f: CVec = sys.full.grid().iter().map(|s| cplx((PI * s).sin() + 0.3 * (3.0 * PI * s).cos())).collect();
    project_to_domain(sys, &f).unwrap()
}

#[test]
fn plain_diffusion_spectrum() {
    let prob = WentzellProblem::plain(1.0);
    let a = assemble_g(&wentzell_build(&prob, 128).unwrap()).unwrap();
    let b = assemble_g(&wentzell_build(&prob, 256).unwrap()).unwrap();
    let gap = spectral_gap(&a.generator, &b.generator, 5);
    assert!(gap <= 1e-3, "{gap:e}");
}

#[test]
fn plain_diffusion_decays() {
    let sys = wentzell_build(&WentzellProblem::plain(1.0), 128).unwrap();
    let tr = solve_de(&sys, &smooth_start(&sys), 0.5, 50).unwrap();
    // the extrapolated boundary rows break the discrete maximum principle at O(h^3)
    assert!(tr.sup_norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-5)));
    assert!(tr.sup_norms.last().unwrap() < &tr.sup_norms[0]);
    assert!(tr.constraint_residual <= 1e-5);
}

#[test]
fn trajectories() {
    let prob = WentzellProblem::with_derivative_terms();
    let sys = wentzell_build(&prob, 64).unwrap();
    let zero = CVec::zeros(sys.full.dim());
    let tr = solve_de(&sys, &zero, 1.0, 10).unwrap();
    assert!(tr.sup_norms.iter().all(|&v| v == 0.0));

    let mut bad = smooth_start(&sys);
    bad[0] += cplx(0.1);
    assert!(matches!(solve_de(&sys, &bad, 1.0, 10), Err(Error::Domain(_))));

    // derivative functionals read f' where a degenerates, which converges only at O(h^1/2)
    let prob = WentzellProblem::reference();
    let snap = |n: usize| {
        let sys = wentzell_build(&prob, n).unwrap();
        let tr = solve_de(&sys, &smooth_start(&sys), 0.1, 4).unwrap();
        assert!(tr.constraint_residual <= 1e-5);
        let t = tr.states.last().unwrap().clone();
        assert!(t.iter().all(|v| v.abs() <= tr.growth_constant * tr.sup_norms[0] * (tr.growth_rate * 0.1).exp() + 1e-12));
        (tr.grid, t)
    };
    let (gc, vc) = snap(128);
    let (gf, vf) = snap(256);
    let d = gf.iter().zip(&vf).map(|(s, v)| (linalg::interp1(&gc, &vc, *s) - v).abs()).fold(0.0, f64::max);
    assert!(d <= 1e-3, "{d:e}");
}
