//! The identity suite: algebraic identities that must hold to roundoff on the
//! Laplacian family, plus the randomized Young harness. Deterministic given the seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admissibility::{young_convolution_check, ZDescriptor};
use crate::analytic_perturb::build_perturbed;
use crate::boundary::{
    assemble_g, block_encoding, cross_route_residual, dirichlet_solve, la_independence, relative_diff,
};
use crate::linalg::{self, c64, cplx, CMat};
use crate::models::{dirichlet_laplacian, laplacian_boundary_system};
use crate::report::{CheckRecord, Verdict};
use crate::scales::{rotated_resolvent_identity, rotated_semigroup_product, rotation_power_identity};
use crate::{Error, NormKind, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentityTolerances {
    pub rotated_resolvent: f64,
    pub rotated_power: f64,
    pub rotated_product: f64,
    pub dirichlet: f64,
    pub block_encoding: f64,
    pub young_slack: f64,
}

impl Default for IdentityTolerances {
    fn default() -> Self {
        Self {
            rotated_resolvent: 1e-10,
            rotated_power: 1e-8,
            rotated_product: 1e-9,
            dirichlet: 1e-8,
            block_encoding: 1e-10,
            young_slack: crate::admissibility::YOUNG_SLACK,
        }
    }
}

impl IdentityTolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("rotated_resolvent", self.rotated_resolvent),
            ("rotated_power", self.rotated_power),
            ("rotated_product", self.rotated_product),
            ("dirichlet", self.dirichlet),
            ("block_encoding", self.block_encoding),
            ("young_slack", self.young_slack),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySuite {
    pub seed: u64,
    pub mesh_family: Vec<usize>,
    /// Randomized (kernel, input, exponents) draws for the Young harness.
    pub young_configs: usize,
    pub tolerances: IdentityTolerances,
}

impl IdentitySuite {
    pub fn new(seed: u64, mesh_family: Vec<usize>) -> Self {
        Self { seed, mesh_family, young_configs: 50, tolerances: IdentityTolerances::default() }
    }

    /// Runs every check; failures inside a check become FAIL records.
    pub fn run(&self) -> Vec<CheckRecord> {
        let mut out: Vec<CheckRecord> = self
            .mesh_family
            .par_iter()
            .map(|&n| mesh_checks(n, self.seed, &self.tolerances))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect();
        out.push(young_harness(self.seed, self.young_configs, self.tolerances.young_slack));
        out
    }
}

fn record(name: String, anchor: &str, value: Result<f64>, tol: f64, key: &str) -> CheckRecord {
    match value {
        Ok(v) => CheckRecord::new(name, anchor, Verdict::from_bool(v <= tol))
            .residual(key, v)
            .constant("tolerance", tol),
        Err(e) => CheckRecord::failed(name, anchor, e),
    }
}

fn mesh_checks(n: usize, seed: u64, tol: &IdentityTolerances) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    let phi = PI / 6.0;
    match dirichlet_laplacian(0.0, PI, n, NormKind::WeightedP(2.0)) {
        Ok(a) => {
            out.push(record(
                format!("rotated_resolvent/n={n}"),
                "resolvent of e^{i phi} A equals e^{-i phi} R(e^{-i phi} lambda, A)",
                rotated_resolvent_identity(&a, phi, c64::new(2.0, 1.0)),
                tol.rotated_resolvent,
                "relative_fro",
            ));
            out.push(record(
                format!("rotated_power/n={n}"),
                "negative fractional power of the rotated generator picks up e^{-i phi alpha}",
                rotation_power_identity(&a, phi, 0.5),
                tol.rotated_power,
                "relative_norm",
            ));
            let z = c64::new(0.3, 0.1);
            let prod = rotated_semigroup_product(&a, phi, z).and_then(|p| {
                let d = a.exp_complex(z)?;
                Ok(linalg::fro(&(&p - &d)) / linalg::fro(&d))
            });
            out.push(record(
                format!("rotated_product/n={n}"),
                "product of the two rotated semigroups equals exp(zA) inside the sector",
                prod,
                tol.rotated_product,
                "relative_fro",
            ));
        }
        Err(e) => out.push(CheckRecord::failed(format!("laplacian/n={n}"), "Dirichlet Laplacian", e)),
    }
    let sys = match laplacian_boundary_system(0.0, PI, n, NormKind::WeightedP(2.0)) {
        Ok(s) => s,
        Err(e) => {
            out.push(CheckRecord::failed(format!("boundary_system/n={n}"), "Neumann-Dirichlet Laplacian", e));
            return out;
        }
    };
    let inv = dirichlet_solve(&sys, cplx(4.0)).map(|d| {
        let (a, b) = d.invariant_residuals(&sys);
        a.max(b)
    });
    out.push(record(
        format!("dirichlet_invariants/n={n}"),
        "Dirichlet operator: L L_lambda = Id on the boundary, range in ker(lambda - Am)",
        inv,
        tol.dirichlet,
        "max_residual",
    ));
    out.push(record(
        format!("dirichlet_cross_route/n={n}"),
        "Dirichlet operator from the resolvent identity against the direct kernel solve",
        cross_route_residual(&sys, cplx(9.0), cplx(1.0)),
        tol.dirichlet,
        "relative_diff",
    ));
    out.push(record(
        format!("la_independence/n={n}"),
        "L_A = (lambda - A_{-1}) L_lambda does not depend on lambda",
        la_independence(&sys, &[cplx(1.0), cplx(4.0), cplx(9.0)]),
        tol.dirichlet,
        "relative_spread",
    ));
    // seeded boundary perturbation Phi for the block encoding
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9e37_79b9));
    let nn = sys.full.dim();
    let mut phi_m = CMat::zeros((2, nn));
    for v in phi_m.iter_mut() {
        *v = cplx(rng.gen_range(-1.0..1.0) / nn as f64);
    }
    let enc = sys.with_phi(phi_m).and_then(|s| {
        let g = assemble_g(&s)?;
        let pg = build_perturbed(&block_encoding(&s, ZDescriptor::FullSpace)?)?;
        Ok(relative_diff(pg.generator.matrix(), g.generator.matrix()))
    });
    out.push(record(
        format!("block_encoding/n={n}"),
        "A + B C with B = L_A and C = Phi J reproduces the boundary-perturbed generator",
        enc,
        tol.block_encoding,
        "relative_diff",
    ));
    out
}

/// Seeded Young checks with kernels c t^{-beta} e^{-t}, beta q < 1.
pub fn young_harness(seed: u64, count: usize, slack: f64) -> CheckRecord {
    let anchor = "Young inequality for Volterra convolutions: ||k * v||_r <= ||k||_q ||v||_p";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(f64, f64, f64, f64, f64, f64)> = (0..count)
        .map(|_| {
            let p: f64 = rng.gen_range(1.0..3.0);
            let r: f64 = rng.gen_range(p..8.0);
            let q = 1.0 / (1.0 + 1.0 / r - 1.0 / p);
            let beta = rng.gen_range(0.0..0.95) / q;
            (p, q, r, beta, rng.gen_range(0.5..2.0), rng.gen_range(0.0..6.0))
        })
        .collect();
    let reports: Result<Vec<_>> = draws
        .par_iter()
        .map(|&(p, q, r, beta, c, w)| {
            let k = move |t: f64| c * t.powf(-beta) * (-t).exp();
            let v = move |t: f64| (w * t).cos() + 0.3;
            young_convolution_check(&k, &v, p, q, r)
        })
        .collect();
    match reports {
        Ok(reps) => {
            let worst = reps.iter().map(|r| r.lhs / r.rhs).fold(0.0, f64::max);
            let held = reps.iter().filter(|r| r.lhs <= r.rhs * (1.0 + slack)).count();
            let singular = draws.iter().filter(|d| d.3 > 0.0).count();
            CheckRecord::new("young_harness", anchor, Verdict::from_bool(held == reps.len()))
                .constant("configurations", reps.len() as f64)
                .constant("held", held as f64)
                .constant("singular_kernels", singular as f64)
                .constant("worst_ratio", worst)
                .constant("slack", slack)
        }
        Err(e) => CheckRecord::failed("young_harness", anchor, e),
    }
}
