//! Reference discretizations and probe families shared by checks and tests.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::admissibility::{ControlObsTriple, ZDescriptor};
use crate::boundary::BoundarySystem;
use crate::linalg::{self, CMat, CVec};
use crate::operator_core::{DiscreteSpace, GeneratorRep, NormKind, OperatorBlock};

/// Interior nodes of a uniform grid on [a, b] with `n` interior points.
pub fn interior_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n + 1) as f64;
    (1..=n).map(|i| a + i as f64 * h).collect()
}

/// Trapezoid weights of the full grid with the dropped end weights lumped
/// onto the neighbouring kept nodes, so the total is still b - a.
pub fn lumped_weights(full_grid: &[f64], keep: &[usize]) -> Vec<f64> {
    let w = crate::operator_core::trapezoid_weights(full_grid);
    let mut out: Vec<f64> = keep.iter().map(|&i| w[i]).collect();
    for (i, wi) in w.iter().enumerate() {
        if keep.contains(&i) {
            continue;
        }
        // nearest kept index
        let j = (0..keep.len())
            .min_by_key(|&j| (keep[j] as isize - i as isize).unsigned_abs())
            .expect("nonempty keep set");
        out[j] += wi;
    }
    out
}

/// Space on the interior nodes of a uniform grid on [a, b].
pub fn interior_space(a: f64, b: f64, n: usize, kind: NormKind) -> Result<DiscreteSpace> {
    let full = linalg::linspace(a, b, n + 2);
    let keep: Vec<usize> = (1..=n).collect();
    let grid = keep.iter().map(|&i| full[i]).collect();
    match kind {
        NormKind::Sup => DiscreteSpace::sup(grid),
        NormKind::WeightedP(p) => DiscreteSpace::lp_weighted(grid, p, lumped_weights(&full, &keep), b - a),
    }
}

/// Second-difference Dirichlet Laplacian on (a, b) with `n` interior nodes.
pub fn dirichlet_laplacian(a: f64, b: f64, n: usize, kind: NormKind) -> Result<GeneratorRep> {
    if n < 2 {
        return Err(Error::Domain("need at least two interior nodes".into()));
    }
    let h = (b - a) / (n + 1) as f64;
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = -2.0 / (h * h);
        if i > 0 {
            m[[i, i - 1]] = 1.0 / (h * h);
        }
        if i + 1 < n {
            m[[i, i + 1]] = 1.0 / (h * h);
        }
    }
    GeneratorRep::from_real(interior_space(a, b, n, kind)?, &m)
}

/// Cell-centred Neumann Laplacian on (a, b) with `n` cells and midpoint weights.
pub fn neumann_laplacian(a: f64, b: f64, n: usize, kind: NormKind) -> Result<GeneratorRep> {
    if n < 2 {
        return Err(Error::Domain("need at least two cells".into()));
    }
    let h = (b - a) / n as f64;
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        if i > 0 {
            m[[i, i - 1]] = 1.0 / (h * h);
            m[[i, i]] -= 1.0 / (h * h);
        }
        if i + 1 < n {
            m[[i, i + 1]] = 1.0 / (h * h);
            m[[i, i]] -= 1.0 / (h * h);
        }
    }
    let grid: Vec<f64> = (0..n).map(|i| a + (i as f64 + 0.5) * h).collect();
    let space = match kind {
        NormKind::Sup => DiscreteSpace::sup(grid)?,
        NormKind::WeightedP(p) => DiscreteSpace::lp_weighted(grid, p, vec![h; n], b - a)?,
    };
    GeneratorRep::from_real(space, &m)
}

/// d^2/ds^2 on a uniform grid of [a, b] with `n` interior nodes and boundary
/// operator L f = (f'(a), f(b)), the derivative by the second-order one-sided
/// stencil. P = 0, Phi = 0, reference point mu = 0.
pub fn laplacian_boundary_system(a: f64, b: f64, n: usize, kind: NormKind) -> Result<BoundarySystem> {
    if n < 3 {
        return Err(Error::Domain("need at least three interior nodes".into()));
    }
    let nn = n + 2;
    let h = (b - a) / (n + 1) as f64;
    let full_grid = linalg::linspace(a, b, nn);
    let full = match kind {
        NormKind::Sup => DiscreteSpace::sup(full_grid)?,
        NormKind::WeightedP(p) => DiscreteSpace::lp_trapezoid(full_grid, p)?,
    };
    let state = interior_space(a, b, n, kind)?;
    let boundary = DiscreteSpace::coordinates(2, kind)?;
    let mut am = Array2::<f64>::zeros((n, nn));
    for r in 0..n {
        let i = r + 1;
        am[[r, i - 1]] = 1.0 / (h * h);
        am[[r, i]] = -2.0 / (h * h);
        am[[r, i + 1]] = 1.0 / (h * h);
    }
    let mut l = Array2::<f64>::zeros((2, nn));
    l[[0, 0]] = -1.5 / h;
    l[[0, 1]] = 2.0 / h;
    l[[0, 2]] = -0.5 / h;
    l[[1, nn - 1]] = 1.0;
    BoundarySystem::new(
        full,
        state,
        boundary,
        (1..=n).collect(),
        linalg::to_complex(&am),
        linalg::to_complex(&l),
        CMat::zeros((0, nn)),
        CMat::zeros((n, nn)),
        CMat::zeros((2, nn)),
        linalg::cplx(0.0),
    )
}

/// Exact eigenvalues of the discrete Dirichlet Laplacian, k = 1..n.
pub fn dirichlet_laplacian_eigenvalue(a: f64, b: f64, n: usize, k: usize) -> f64 {
    let h = (b - a) / (n + 1) as f64;
    let theta = k as f64 * PI / (n + 1) as f64;
    -4.0 / (h * h) * (theta / 2.0).sin().powi(2)
}

/// sin(k pi (s - a)/(b - a)) sampled on `grid`.
pub fn sine_mode(grid: &[f64], a: f64, b: f64, k: usize) -> CVec {
    linalg::to_complex_vec(
        &grid
            .iter()
            .map(|s| (k as f64 * PI * (s - a) / (b - a)).sin())
            .collect::<Vec<_>>(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeBasis {
    /// sin modes vanishing at both ends
    Sine,
    /// cos modes
    Cosine,
}

/// Band-limited random probes with coefficients decaying like k^-2.
/// Deterministic in `seed`, and independent of the grid so mesh families see
/// the same underlying functions.
pub fn band_limited_probes(
    grid: &[f64],
    a: f64,
    b: f64,
    count: usize,
    kmax: usize,
    basis: ProbeBasis,
    seed: u64,
) -> Vec<CVec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let coef: Vec<f64> = (1..=kmax)
                .map(|k| rng.gen_range(-1.0..1.0) / (k * k) as f64)
                .collect();
            grid.iter()
                .map(|s| {
                    let u = PI * (s - a) / (b - a);
                    let v: f64 = coef
                        .iter()
                        .enumerate()
                        .map(|(j, c)| {
                            let k = (j + 1) as f64;
                            match basis {
                                ProbeBasis::Sine => c * (k * u).sin(),
                                ProbeBasis::Cosine => c * ((k - 1.0) * u).cos(),
                            }
                        })
                        .sum();
                    linalg::cplx(v)
                })
                .collect()
        })
        .collect()
}

/// Random coefficients c_k ~ U(-1,1)/k^2, k = 1..kmax, for scalar-valued probes in time.
pub fn decaying_coefficients(rng: &mut ChaCha8Rng, kmax: usize) -> Vec<f64> {
    (1..=kmax).map(|k| rng.gen_range(-1.0..1.0) / (k * k) as f64).collect()
}

/// Heat semigroup on L^1(0, 1) with Neumann ends, B = Id and C the value in
/// the first cell. The negative control for the admissibility plateau audit.
pub fn point_observation_heat_triple(n: usize) -> Result<ControlObsTriple> {
    let a = neumann_laplacian(0.0, 1.0, n, NormKind::WeightedP(1.0))?;
    let x = a.space().clone();
    let b = OperatorBlock::new(x.clone(), x.clone(), linalg::eye(n))?;
    let mut c = CMat::zeros((1, n));
    c[[0, 0]] = linalg::cplx(1.0);
    let c = OperatorBlock::new(x, DiscreteSpace::coordinates(1, NormKind::WeightedP(1.0))?, c)?;
    ControlObsTriple::new(a, b, c, ZDescriptor::FullSpace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lumped_weights_keep_total() {
        let s = interior_space(0.0, PI, 10, NormKind::WeightedP(2.0)).unwrap();
        let w: f64 = s.weights().unwrap().iter().sum();
        assert!((w - PI).abs() < 1e-13);
    }

    #[test]
    fn laplacian_spectrum_matches_formula() {
        let a = dirichlet_laplacian(0.0, PI, 32, NormKind::Sup).unwrap();
        let mut ev: Vec<f64> = a.eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (k, v) in ev.iter().enumerate().take(5) {
            assert!((v - dirichlet_laplacian_eigenvalue(0.0, PI, 32, k + 1)).abs() < 1e-9);
        }
    }

    #[test]
    fn probes_are_reproducible() {
        let g = linalg::linspace(0.0, 1.0, 9);
        let a = band_limited_probes(&g, 0.0, 1.0, 3, 8, ProbeBasis::Sine, 7);
        let b = band_limited_probes(&g, 0.0, 1.0, 3, 8, ProbeBasis::Sine, 7);
        assert_eq!(a, b);
        assert!(a[0][0].norm() < 1e-15);
    }
}
