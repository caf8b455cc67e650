//! Graph norms, extrapolation norms, fractional powers, Favard norms and
//! rotated generators.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, c64, cplx, CMat, CVec};
use crate::models::{band_limited_probes, ProbeBasis};
use crate::operator_core::{induced_norm, GeneratorRep, OperatorBlock};
use crate::report::Verdict;

/// Number of log-spaced points on the default lambda grid.
pub const LAMBDA_POINTS: usize = 48;
pub const LAMBDA_TOP: f64 = 1e6;
/// Slope (log10 running max per decade) beyond which a sup is flagged.
pub const SLOPE_THRESHOLD: f64 = 0.05;
/// Allowed relative drift between the two finest meshes.
pub const PLATEAU_DRIFT: f64 = 0.2;

pub fn graph_norm(a: &GeneratorRep, x: &CVec) -> Result<f64> {
    let s = a.space();
    Ok(s.norm(x.view())? + s.norm(a.apply(x)?.view())?)
}

/// ||R(lambda0, A) x|| at the generator's base point.
pub fn xminus1_norm(a: &GeneratorRep, x: &CVec) -> Result<f64> {
    check_len(a.dim(), x.len())?;
    let r = a.resolvent_solve(cplx(a.base_lambda()), &x.clone().insert_axis(ndarray::Axis(1)))?;
    a.space().norm(r.column(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PowerRoute {
    Auto,
    Eigen,
    Balakrishnan,
}

#[derive(Debug, Clone)]
pub struct FractionalPower {
    pub lambda_shift: f64,
    pub gamma: f64,
    pub matrix: CMat,
    pub route: PowerRoute,
    /// Achieved quadrature tolerance (zero for the eigen route).
    pub quadrature_error: f64,
}

/// (lambda - A)^gamma on the principal branch.
pub fn fractional_power(a: &GeneratorRep, lambda: f64, gamma: f64) -> Result<FractionalPower> {
    fractional_power_via(a, lambda, gamma, PowerRoute::Auto)
}

pub fn fractional_power_via(
    a: &GeneratorRep,
    lambda: f64,
    gamma: f64,
    route: PowerRoute,
) -> Result<FractionalPower> {
    if !(a.growth_bound() - lambda < 0.0) {
        return Err(Error::Precondition(format!(
            "gb(A - lambda) = {} must be negative",
            a.growth_bound() - lambda
        )));
    }
    if !(gamma > -1.0 && gamma <= 1.0) || gamma == 0.0 {
        return Err(Error::Domain(format!("gamma = {gamma} not in (-1, 1] \\ {{0}}")));
    }
    let b = a.shifted_matrix(cplx(lambda));
    if gamma == 1.0 {
        return Ok(FractionalPower {
            lambda_shift: lambda,
            gamma,
            matrix: b,
            route: PowerRoute::Eigen,
            quadrature_error: 0.0,
        });
    }
    let use_eigen = match route {
        PowerRoute::Eigen => true,
        PowerRoute::Balakrishnan => false,
        PowerRoute::Auto => a.is_near_normal() && a.eigen().map(|e| e.condition() < 1e6).unwrap_or(false),
    };
    if use_eigen {
        let e = a
            .eigen()
            .ok_or_else(|| Error::Numeric("eigenvector basis is singular".into()))?;
        let m = e.apply_fn(|mu| (cplx(lambda) - mu).powf(gamma));
        return Ok(FractionalPower {
            lambda_shift: lambda,
            gamma,
            matrix: m,
            route: PowerRoute::Eigen,
            quadrature_error: 0.0,
        });
    }
    let (matrix, err) = if gamma < 0.0 {
        balakrishnan_negative_power(&b, -gamma, 1e-11)?
    } else {
        let (m, e) = balakrishnan_negative_power(&b, 1.0 - gamma, 1e-11)?;
        (b.dot(&m), e)
    };
    Ok(FractionalPower {
        lambda_shift: lambda,
        gamma,
        matrix,
        route: PowerRoute::Balakrishnan,
        quadrature_error: err,
    })
}

/// B^{-beta} = sin(pi beta)/pi * int_0^inf s^{-beta} (s + B)^{-1} ds for beta in (0,1),
/// evaluated as a trapezoid rule in u = ln s with step halving.
pub fn balakrishnan_negative_power(b: &CMat, beta: f64, tol: f64) -> Result<(CMat, f64)> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta = {beta} not in (0, 1)")));
    }
    let n = b.nrows();
    let ev = linalg::eigvals(b)?;
    let rmin = ev.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min).max(1e-300);
    let rmax = ev.iter().map(|z| z.norm()).fold(0.0, f64::max).max(rmin);
    let ltol = (1.0 / (tol * 1e-3)).ln();
    let u_lo = rmin.ln() - ltol / (1.0 - beta);
    let u_hi = rmax.ln() + ltol / beta;
    let node = |u: f64| -> Result<CMat> {
        let s = u.exp();
        let m = linalg::shifted(b, cplx(s), cplx(1.0));
        Ok(linalg::inv(&m)?.mapv(|v| v * (s.powf(1.0 - beta))))
    };
    let scale = (PI * beta).sin() / PI;
    let mut h = 1.0;
    let mut nodes = ((u_hi - u_lo) / h).ceil() as usize;
    let mut sum = CMat::zeros((n, n));
    for k in 0..=nodes {
        sum = sum + node(u_lo + k as f64 * h)?;
    }
    let mut prev = sum.mapv(|v| v * h * scale);
    for _ in 0..6 {
        // halve h: add the midpoints
        for k in 0..nodes {
            sum = sum + node(u_lo + (k as f64 + 0.5) * h)?;
        }
        h *= 0.5;
        nodes *= 2;
        let cur = sum.mapv(|v| v * h * scale);
        let diff = linalg::fro(&(&cur - &prev)) / linalg::fro(&cur).max(1e-300);
        if diff < tol {
            return Ok((cur, diff));
        }
        prev = cur;
    }
    let diff = 1.0;
    Err(Error::Quadrature { achieved: diff })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FavardEstimate {
    pub alpha: f64,
    pub lambda_grid: Vec<f64>,
    pub samples: Vec<f64>,
    pub value: f64,
    pub argmax_lambda: f64,
    /// log10 growth of the running max over the last decade of the grid.
    pub top_decade_slope: f64,
    pub unbounded_suspect: bool,
}

pub enum FavardTarget<'a> {
    Vector(&'a CVec),
    Operator(&'a OperatorBlock),
}

/// Default lambda grid: 48 log-spaced points on [max(1, 2 gb+), 1e6].
pub fn default_lambda_grid(a: &GeneratorRep) -> Vec<f64> {
    let lo = 1f64.max(2.0 * a.growth_bound().max(0.0));
    linalg::logspace(lo, LAMBDA_TOP.max(10.0 * lo), LAMBDA_POINTS)
}

pub fn favard_norm(a: &GeneratorRep, alpha: f64, target: FavardTarget) -> Result<FavardEstimate> {
    favard_norm_on(a, alpha, target, &default_lambda_grid(a))
}

pub fn favard_norm_on(
    a: &GeneratorRep,
    alpha: f64,
    target: FavardTarget,
    grid: &[f64],
) -> Result<FavardEstimate> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} not in (0, 1]")));
    }
    if grid.iter().any(|&l| !(l > a.growth_bound())) {
        return Err(Error::Precondition("lambda grid reaches below the growth bound".into()));
    }
    let rhs: CMat = match &target {
        FavardTarget::Vector(x) => {
            check_len(a.dim(), x.len())?;
            (*x).clone().insert_axis(ndarray::Axis(1))
        }
        FavardTarget::Operator(op) => {
            check_len(a.dim(), op.matrix.nrows())?;
            op.matrix.clone()
        }
    };
    let space = a.space();
    let mut samples = Vec::with_capacity(grid.len());
    for &lam in grid {
        // A R(lambda, A) y = lambda R y - y
        let r = a.resolvent_solve(cplx(lam), &rhs)?;
        let m = r.mapv(|v| v * lam) - &rhs;
        let v = match &target {
            FavardTarget::Vector(_) => space.norm(m.column(0))?,
            FavardTarget::Operator(op) => induced_norm(&op.domain, space, m.view()).upper,
        };
        samples.push(lam.powf(alpha) * v);
    }
    Ok(summarize_sup(alpha, grid, samples))
}

fn summarize_sup(alpha: f64, grid: &[f64], samples: Vec<f64>) -> FavardEstimate {
    let (imax, value) = samples
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let slope = top_decade_slope(grid, &samples);
    FavardEstimate {
        alpha,
        lambda_grid: grid.to_vec(),
        value,
        argmax_lambda: grid[imax],
        top_decade_slope: slope,
        unbounded_suspect: slope > SLOPE_THRESHOLD,
        samples,
    }
}

/// Growth (log10 per decade) of the running maximum across the last decade.
pub fn top_decade_slope(grid: &[f64], samples: &[f64]) -> f64 {
    let n = grid.len();
    let top = grid[n - 1];
    let start = grid.iter().position(|&l| l >= top / 10.0).unwrap_or(0);
    let mut run = Vec::with_capacity(n);
    let mut m = f64::NEG_INFINITY;
    for &v in samples {
        m = m.max(v);
        run.push(m);
    }
    if start >= n - 1 || run[start] <= 0.0 {
        return 0.0;
    }
    let decades = (top / grid[start]).log10();
    (run[n - 1] / run[start]).log10() / decades
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingRow {
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub alpha: f64,
    pub delta: f64,
    pub rows: Vec<EmbeddingRow>,
    pub drift_c1: f64,
    pub drift_c2: f64,
    pub verdict: Verdict,
}

/// Relative change between the last two entries.
pub fn drift(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let (a, b) = (values[n - 2], values[n - 1]);
    if a == b {
        return 0.0;
    }
    (b - a).abs() / a.abs().max(b.abs())
}

/// Empirical constants of D((-A)^alpha) -> Fav_alpha -> D((-A)^delta) on
/// band-limited probes over the interval [lo, hi], one row per mesh.
pub fn check_embedding_chain(
    family: &[GeneratorRep],
    interval: (f64, f64),
    alpha: f64,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<EmbeddingReport> {
    if !(alpha < 1.0 && alpha > delta && delta > 0.0) {
        return Err(Error::Precondition(format!(
            "need 1 > alpha > delta > 0, got alpha = {alpha}, delta = {delta}"
        )));
    }
    let mut rows = Vec::new();
    for a in family {
        if !(a.growth_bound() < 0.0) {
            return Err(Error::Precondition("gb(A) must be negative".into()));
        }
        let pa = fractional_power(a, 0.0, alpha)?;
        let pd = fractional_power(a, 0.0, delta)?;
        let probes = band_limited_probes(
            a.space().grid(),
            interval.0,
            interval.1,
            samples,
            8,
            ProbeBasis::Sine,
            seed,
        );
        let sp = a.space();
        let (mut c1, mut c2) = (0.0f64, 0.0f64);
        for x in &probes {
            let nx = sp.norm(x.view())?;
            let fav = favard_norm(a, alpha, FavardTarget::Vector(x))?.value;
            let na = sp.norm(pa.matrix.dot(x).view())?;
            let nd = sp.norm(pd.matrix.dot(x).view())?;
            c1 = c1.max(fav / (na + nx));
            c2 = c2.max(nd / (fav + nx));
        }
        rows.push(EmbeddingRow { n: a.dim(), c1, c2 });
    }
    let d1 = drift(&rows.iter().map(|r| r.c1).collect::<Vec<_>>());
    let d2 = drift(&rows.iter().map(|r| r.c2).collect::<Vec<_>>());
    let verdict = if d1 <= PLATEAU_DRIFT && d2 <= PLATEAU_DRIFT {
        Verdict::Pass
    } else {
        Verdict::Suspect
    };
    Ok(EmbeddingReport {
        alpha,
        delta,
        rows,
        drift_c1: d1,
        drift_c2: d2,
        verdict,
    })
}

/// e^{i phi} A; requires a recorded sector angle exceeding |phi|.
pub fn rotate_generator(a: &GeneratorRep, phi: f64) -> Result<GeneratorRep> {
    let theta = a
        .sector_angle()
        .ok_or_else(|| Error::Domain("generator has no sector angle".into()))?;
    if phi == 0.0 {
        return Ok(a.clone());
    }
    if !(phi.abs() < theta) {
        return Err(Error::Domain(format!("|phi| = {} not below sector angle {theta}", phi.abs())));
    }
    let m = a.matrix().mapv(|v| v * c64::from_polar(1.0, phi));
    GeneratorRep::new(a.space().clone(), m)
}

/// Oblique decomposition z = r+ e^{i phi} + r- e^{-i phi}.
pub fn sector_coordinates(phi: f64, z: c64) -> Result<(f64, f64)> {
    // [cos phi, cos phi; sin phi, -sin phi] [r+; r-] = [Re z; Im z]
    let (c, s) = (phi.cos(), phi.sin());
    let det = -2.0 * c * s;
    if det.abs() < 1e-300 {
        return Err(Error::Domain("phi must lie in (0, pi/2)".into()));
    }
    let rp = (-s * z.re - c * z.im) / det;
    let rm = (-s * z.re + c * z.im) / det;
    Ok((rp, rm))
}

/// exp(r+ e^{i phi} A) exp(r- e^{-i phi} A), which should equal exp(z A).
pub fn rotated_semigroup_product(a: &GeneratorRep, phi: f64, z: c64) -> Result<CMat> {
    if !(phi > 0.0 && phi < PI / 2.0) {
        return Err(Error::Domain(format!("phi = {phi} not in (0, pi/2)")));
    }
    let (rp, rm) = sector_coordinates(phi, z)?;
    if rp < -1e-12 || rm < -1e-12 {
        return Err(Error::Domain(format!("z = {z} lies outside the sector of half-angle {phi}")));
    }
    let (rp, rm) = (rp.max(0.0), rm.max(0.0));
    let tp = a.exp_complex(c64::from_polar(rp, phi))?;
    let tm = a.exp_complex(c64::from_polar(rm, -phi))?;
    Ok(tp.dot(&tm))
}

/// ||(-A_phi)^{-alpha} - e^{-i phi alpha} (-A)^{-alpha}|| / ||(-A)^{-alpha}||.
pub fn rotation_power_identity(a: &GeneratorRep, phi: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} not in (0, 1)")));
    }
    if !(a.growth_bound() < 0.0) {
        return Err(Error::Precondition("gb(A) must be negative".into()));
    }
    let rot = GeneratorRep::new(a.space().clone(), a.matrix().mapv(|v| v * c64::from_polar(1.0, phi)))?;
    if !(rot.growth_bound() < 0.0) {
        return Err(Error::Precondition("gb(A_phi) must be negative".into()));
    }
    let lhs = fractional_power_via(&rot, 0.0, -alpha, PowerRoute::Eigen)?.matrix;
    let base = fractional_power_via(a, 0.0, -alpha, PowerRoute::Eigen)?.matrix;
    let rhs = base.mapv(|v| v * c64::from_polar(1.0, -phi * alpha));
    let sp = a.space();
    let num = induced_norm(sp, sp, (&lhs - &rhs).view()).upper;
    let den = induced_norm(sp, sp, base.view()).upper;
    Ok(num / den)
}

/// ||R(lambda, A_phi) - e^{-i phi} R(e^{-i phi} lambda, A)|| relative to ||R(lambda, A_phi)||.
pub fn rotated_resolvent_identity(a: &GeneratorRep, phi: f64, lambda: c64) -> Result<f64> {
    let rot = GeneratorRep::new(a.space().clone(), a.matrix().mapv(|v| v * c64::from_polar(1.0, phi)))?;
    let lhs = rot.resolvent_matrix(lambda)?;
    let e = c64::from_polar(1.0, -phi);
    let rhs = a.resolvent_matrix(e * lambda)?.mapv(|v| v * e);
    Ok(linalg::fro(&(&lhs - &rhs)) / linalg::fro(&lhs))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothingFit {
    pub gamma: f64,
    pub slope: f64,
    pub constant: f64,
    pub holds: bool,
}

/// Fit log ||(-A)^gamma T(t)|| against log t; the bound M t^{-gamma} uses the
/// smallest M valid on every sample.
pub fn analytic_smoothing_fit(a: &GeneratorRep, gamma: f64, times: &[f64]) -> Result<SmoothingFit> {
    let p = fractional_power(a, 0.0, gamma)?;
    let sp = a.space();
    let e = a.eigen();
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut m = 0.0f64;
    for &t in times {
        let tt = match (a.is_near_normal(), e) {
            (true, Some(e)) => e.apply_fn(|l| (l * t).exp()),
            _ => a.semigroup(t)?,
        };
        let v = induced_norm(sp, sp, p.matrix.dot(&tt).view()).upper;
        lx.push(t.ln());
        ly.push(v.ln());
        m = m.max(v * t.powf(gamma));
    }
    let (slope, _) = linalg::linear_fit(&lx, &ly);
    Ok(SmoothingFit {
        gamma,
        slope,
        constant: m,
        holds: slope >= -gamma - 0.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{dirichlet_laplacian, sine_mode};
    use crate::operator_core::{DiscreteSpace, NormKind};
    use ndarray::{arr1, Array2};

    fn scalar(v: f64) -> GeneratorRep {
        let s = DiscreteSpace::coordinates(1, NormKind::Sup).unwrap();
        GeneratorRep::new(s, Array2::from_elem((1, 1), cplx(v))).unwrap()
    }

    #[test]
    fn graph_and_extrapolation_norms_scalar() {
        let a = scalar(-2.0);
        assert!((graph_norm(&a, &arr1(&[cplx(1.0)])).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(graph_norm(&a, &arr1(&[cplx(0.0)])).unwrap(), 0.0);
        let b = scalar(-1.0).with_base_lambda(0.0).unwrap();
        assert!((xminus1_norm(&b, &arr1(&[cplx(1.0)])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_half_power() {
        let a = scalar(-3.0);
        let p = fractional_power(&a, 1.0, 0.5).unwrap();
        assert!((p.matrix[[0, 0]] - cplx(2.0)).norm() < 1e-14);
        let q = fractional_power_via(&a, 1.0, 0.5, PowerRoute::Balakrishnan).unwrap();
        assert!((q.matrix[[0, 0]] - cplx(2.0)).norm() < 1e-9);
        assert!(fractional_power(&a, -4.0, 0.5).is_err());
        assert!(fractional_power(&a, 1.0, 0.0).is_err());
    }

    #[test]
    fn favard_scalar_oracle() {
        // sup lambda^{1/2} / (lambda + 1) is 1/2 at lambda = 1
        let a = scalar(-1.0);
        let x = arr1(&[cplx(1.0)]);
        let f = favard_norm(&a, 0.5, FavardTarget::Vector(&x)).unwrap();
        assert!((f.value - 0.5).abs() < 1e-12);
        assert_eq!(f.argmax_lambda, 1.0);
        assert!(!f.unbounded_suspect);
    }

    #[test]
    fn sector_coordinates_real_axis() {
        let phi = 0.4;
        let (rp, rm) = sector_coordinates(phi, cplx(2.0)).unwrap();
        let expect = 2.0 / (2.0 * phi.cos());
        assert!((rp - expect).abs() < 1e-14 && (rm - expect).abs() < 1e-14);
        let (rp, rm) = sector_coordinates(phi, c64::from_polar(3.0, phi)).unwrap();
        assert!((rp - 3.0).abs() < 1e-14 && rm.abs() < 1e-14);
    }

    #[test]
    fn laplacian_eigenvector_graph_norm() {
        let a = dirichlet_laplacian(0.0, PI, 128, NormKind::WeightedP(2.0)).unwrap();
        let x = sine_mode(a.space().grid(), 0.0, PI, 1);
        let nx = a.space().norm(x.view()).unwrap();
        let g = graph_norm(&a, &x).unwrap();
        assert!((g - 2.0 * nx).abs() < 1e-3 * nx);
    }

    #[test]
    fn rotation_requires_sector() {
        let a = scalar(-1.0);
        assert!(rotate_generator(&a, 0.1).is_err());
        let a = a.assume_sector(PI / 2.0).unwrap();
        let r = rotate_generator(&a, PI / 4.0).unwrap();
        assert!((r.matrix()[[0, 0]] + c64::from_polar(1.0, PI / 4.0)).norm() < 1e-15);
        assert!(rotate_generator(&a, PI / 2.0).is_err());
    }
}
