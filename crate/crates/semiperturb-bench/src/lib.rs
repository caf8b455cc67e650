//! Fixtures shared by the criterion benches.

use std::f64::consts::PI;

use semiperturb::admissibility::ControlObsTriple;
use semiperturb::boundary::BoundarySystem;
use semiperturb::examples::rde::{rde_build_projected, RdeProblem, RdeSystem};
use semiperturb::examples::wentzell::{wentzell_build, wentzell_triple, WentzellProblem};
use semiperturb::models::dirichlet_laplacian;
use semiperturb::{GeneratorRep, NormKind};

pub fn laplacian(n: usize) -> GeneratorRep {
    dirichlet_laplacian(0.0, PI, n, NormKind::WeightedP(2.0)).expect("valid Laplacian")
}

pub fn wentzell(n: usize) -> (BoundarySystem, ControlObsTriple) {
    let prob = WentzellProblem::reference();
    let sys = wentzell_build(&prob, n).expect("reference problem builds");
    let tr = wentzell_triple(&prob, &sys).expect("reference triple");
    (sys, tr)
}

pub fn rde(n: usize, m: usize) -> RdeSystem {
    rde_build_projected(&RdeProblem::reference(n, m)).expect("reference RDE builds")
}
