//! Discretized spaces, dense generator realizations and induced norms.

use std::f64::consts::PI;
use std::sync::OnceLock;

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, c64, cplx, CMat, CVec, EigenDecomp};

/// Threshold on ||AA*-A*A|| / ||A||^2 below which the eigen route is used.
pub const NORMALITY_TOL: f64 = 1e-8;
/// Relative distance to the spectrum below which resolvents are refused.
pub const SPECTRAL_PROXIMITY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    Sup,
    WeightedP(f64),
}

impl NormKind {
    /// Exponent with `Sup` mapped to infinity.
    pub fn exponent(&self) -> f64 {
        match self {
            NormKind::Sup => f64::INFINITY,
            NormKind::WeightedP(p) => *p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpace {
    grid: Vec<f64>,
    kind: NormKind,
    weights: Option<Vec<f64>>,
    measure: f64,
}

impl DiscreteSpace {
    /// General constructor; `measure` is the total mass the weights must carry.
    pub fn new(grid: Vec<f64>, kind: NormKind, weights: Option<Vec<f64>>, measure: f64) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Domain("empty grid".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("grid points must be strictly increasing".into()));
        }
        match (&kind, &weights) {
            (NormKind::Sup, None) => {}
            (NormKind::Sup, Some(_)) => {
                return Err(Error::Domain("sup-norm space carries no weights".into()))
            }
            (NormKind::WeightedP(p), Some(w)) => {
                if !(*p >= 1.0) || !p.is_finite() {
                    return Err(Error::Domain(format!("p = {p} must be finite and >= 1")));
                }
                check_len(grid.len(), w.len())?;
                if w.iter().any(|&v| !(v >= 0.0)) {
                    return Err(Error::Domain("quadrature weights must be nonnegative".into()));
                }
                let s: f64 = w.iter().sum();
                if (s - measure).abs() > 1e-12 * measure.abs().max(1.0) {
                    return Err(Error::Domain(format!(
                        "weights sum to {s}, expected interval length {measure}"
                    )));
                }
            }
            (NormKind::WeightedP(_), None) => {
                return Err(Error::Domain("weighted p-norm requires weights".into()))
            }
        }
        Ok(Self {
            grid,
            kind,
            weights,
            measure,
        })
    }

    /// Sup-norm space on a grid with at least two points.
    pub fn sup(grid: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::Domain("grid needs at least two points".into()));
        }
        let m = grid[grid.len() - 1] - grid[0];
        Self::new(grid, NormKind::Sup, None, m)
    }

    /// Weighted p-norm space with composite trapezoid weights over the grid hull.
    pub fn lp_trapezoid(grid: Vec<f64>, p: f64) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::Domain("grid needs at least two points".into()));
        }
        let w = trapezoid_weights(&grid);
        let m = grid[grid.len() - 1] - grid[0];
        Self::new(grid, NormKind::WeightedP(p), Some(w), m)
    }

    /// Weighted p-norm space with explicit weights covering `measure`.
    pub fn lp_weighted(grid: Vec<f64>, p: f64, weights: Vec<f64>, measure: f64) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::Domain("grid needs at least two points".into()));
        }
        Self::new(grid, NormKind::WeightedP(p), Some(weights), measure)
    }

    /// Finite coordinate space C^k (boundary and input spaces); unit weights.
    pub fn coordinates(k: usize, kind: NormKind) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("coordinate space needs k >= 1".into()));
        }
        let grid: Vec<f64> = (0..k).map(|i| i as f64).collect();
        let weights = match kind {
            NormKind::Sup => None,
            NormKind::WeightedP(_) => Some(vec![1.0; k]),
        };
        Self::new(grid, kind, weights, k as f64)
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn kind(&self) -> NormKind {
        self.kind
    }
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }
    pub fn measure(&self) -> f64 {
        self.measure
    }

    /// Same grid and weights with another exponent (ignored for sup spaces).
    pub fn with_exponent(&self, p: f64) -> Result<Self> {
        match self.kind {
            NormKind::Sup => Ok(self.clone()),
            NormKind::WeightedP(_) => Self::new(
                self.grid.clone(),
                NormKind::WeightedP(p),
                self.weights.clone(),
                self.measure,
            ),
        }
    }

    pub fn norm(&self, x: ArrayView1<c64>) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        Ok(self.norm_unchecked(x))
    }

    pub(crate) fn norm_unchecked(&self, x: ArrayView1<c64>) -> f64 {
        match (&self.kind, &self.weights) {
            (NormKind::Sup, _) => x.iter().map(|v| v.norm()).fold(0.0, f64::max),
            (NormKind::WeightedP(p), Some(w)) => weighted_p_norm(x, w, *p),
            _ => unreachable!("validated at construction"),
        }
    }

    /// Weighted p-norm of real samples.
    pub fn norm_real(&self, x: &[f64]) -> Result<f64> {
        let v: CVec = x.iter().map(|&r| cplx(r)).collect();
        self.norm(v.view())
    }
}

pub fn weighted_p_norm(x: ArrayView1<c64>, w: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        return x.iter().zip(w).map(|(v, wi)| wi * v.norm()).sum();
    }
    if p == 2.0 {
        return x.iter().zip(w).map(|(v, wi)| wi * v.norm_sqr()).sum::<f64>().sqrt();
    }
    let m = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().zip(w).map(|(v, wi)| wi * (v.norm() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = grid[i + 1] - grid[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// Two-sided estimate of an operator norm; `exact` when lower = upper by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBracket {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
}

impl NormBracket {
    fn exact(v: f64) -> Self {
        Self {
            lower: v,
            upper: v,
            exact: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBlock {
    pub domain: DiscreteSpace,
    pub codomain: DiscreteSpace,
    pub matrix: CMat,
}

impl OperatorBlock {
    pub fn new(domain: DiscreteSpace, codomain: DiscreteSpace, matrix: CMat) -> Result<Self> {
        check_len(codomain.dim(), matrix.nrows())?;
        check_len(domain.dim(), matrix.ncols())?;
        Ok(Self {
            domain,
            codomain,
            matrix,
        })
    }

    pub fn apply(&self, x: &CVec) -> Result<CVec> {
        check_len(self.domain.dim(), x.len())?;
        Ok(self.matrix.dot(x))
    }

    pub fn norm_bracket(&self) -> NormBracket {
        induced_norm(&self.domain, &self.codomain, self.matrix.view())
    }

    /// Induced norm; the upper end of the bracket when not exact.
    pub fn norm(&self) -> f64 {
        self.norm_bracket().upper
    }
}

fn dual_exponent(q: f64) -> f64 {
    if q == 1.0 {
        f64::INFINITY
    } else if q.is_infinite() {
        1.0
    } else {
        q / (q - 1.0)
    }
}

fn lp_plain(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        x.iter().cloned().fold(0.0, f64::max)
    } else {
        x.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Norm of `m` as a map from `dom` to `cod`, each with its own norm.
pub fn induced_norm(dom: &DiscreteSpace, cod: &DiscreteSpace, m: ArrayView2<c64>) -> NormBracket {
    let (nr, nc) = m.dim();
    if nr == 0 || nc == 0 {
        return NormBracket::exact(0.0);
    }
    let q = dom.kind().exponent();
    let p = cod.kind().exponent();
    let wd = dom.weights();
    let wc = cod.weights();
    // Scale to unweighted l^q -> l^p: K = V^{1/p} M W^{-1/q}.
    let mut k = m.to_owned();
    for i in 0..nr {
        for j in 0..nc {
            let mut f = 1.0;
            if let Some(v) = wc {
                f *= v[i].powf(1.0 / p);
            }
            if let Some(w) = wd {
                f /= w[j].powf(1.0 / q);
            }
            k[[i, j]] *= f;
        }
    }
    if p.is_infinite() {
        // l^q -> l^inf: max row norm in l^{q'}.
        let qd = dual_exponent(q);
        let v = k
            .rows()
            .into_iter()
            .map(|r| lp_plain(&r.iter().map(|z| z.norm()).collect::<Vec<_>>(), qd))
            .fold(0.0, f64::max);
        return NormBracket::exact(v);
    }
    if nc == 1 {
        let col: Vec<f64> = k.column(0).iter().map(|z| z.norm()).collect();
        return NormBracket::exact(lp_plain(&col, p));
    }
    if q == 1.0 {
        // l^1 -> l^p: max column norm.
        let v = k
            .columns()
            .into_iter()
            .map(|c| lp_plain(&c.iter().map(|z| z.norm()).collect::<Vec<_>>(), p))
            .fold(0.0, f64::max);
        return NormBracket::exact(v);
    }
    if p == 2.0 && q == 2.0 {
        return NormBracket::exact(linalg::spectral_norm(&k).unwrap_or(f64::NAN));
    }
    let upper = if p == q {
        // Riesz-Thorin between the l^1 and l^inf norms.
        let n1 = linalg::norm_one(k.view());
        let ni = linalg::norm_inf(k.view());
        n1.powf(1.0 / p) * ni.powf(1.0 - 1.0 / p)
    } else if q.is_infinite() {
        let rs: Vec<f64> = k.rows().into_iter().map(|r| r.iter().map(|z| z.norm()).sum()).collect();
        lp_plain(&rs, p)
    } else {
        // factor through l^inf: ||K||_{q->inf} * n^{1/p}
        let qd = dual_exponent(q);
        let rmax = k
            .rows()
            .into_iter()
            .map(|r| lp_plain(&r.iter().map(|z| z.norm()).collect::<Vec<_>>(), qd))
            .fold(0.0, f64::max);
        rmax * (nr as f64).powf(1.0 / p)
    };
    let lower = boyd_lower(&k, p, q, 20, 60, 0x5eed).min(upper);
    NormBracket {
        lower,
        upper,
        exact: (upper - lower) <= 1e-12 * upper.max(1e-300),
    }
}

fn dual_vector(z: &CVec, p: f64) -> CVec {
    // Unit vector y in l^{p'} with <z, y> = ||z||_p.
    if p.is_infinite() {
        let (imax, _) = z
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, v)| if v.norm() > acc.1 { (i, v.norm()) } else { acc });
        let mut y = CVec::zeros(z.len());
        let v = z[imax];
        y[imax] = if v.norm() > 0.0 { v.conj() / v.norm() } else { cplx(1.0) };
        return y;
    }
    if p == 1.0 {
        return z.mapv(|v| if v.norm() > 0.0 { v.conj() / v.norm() } else { cplx(0.0) });
    }
    let nrm = lp_plain(&z.iter().map(|v| v.norm()).collect::<Vec<_>>(), p);
    if nrm == 0.0 {
        return CVec::zeros(z.len());
    }
    z.mapv(|v| {
        let a = v.norm();
        if a == 0.0 {
            cplx(0.0)
        } else {
            v.conj() / a * (a / nrm).powf(p - 1.0)
        }
    })
}

/// Projected power iteration for the l^q -> l^p norm, best over several starts.
pub fn boyd_lower(k: &CMat, p: f64, q: f64, starts: usize, iters: usize, seed: u64) -> f64 {
    let nc = k.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qd = dual_exponent(q);
    let mut best = 0.0f64;
    let kt = k.t();
    for s in 0..starts {
        let mut x: CVec = if s == 0 {
            CVec::from_elem(nc, cplx(1.0))
        } else {
            (0..nc)
                .map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        };
        normalize_lq(&mut x, q);
        for _ in 0..iters {
            let y = k.dot(&x);
            let val = lp_plain(&y.iter().map(|v| v.norm()).collect::<Vec<_>>(), p);
            best = best.max(val);
            let g = kt.dot(&dual_vector(&y, p));
            // next x maximizes Re sum g_j x_j over the unit l^q ball
            let mut xn = dual_vector(&g, qd);
            if xn.iter().all(|v| v.norm() == 0.0) {
                break;
            }
            normalize_lq(&mut xn, q);
            let diff: f64 = (&xn - &x).iter().map(|v| v.norm()).sum();
            x = xn;
            if diff < 1e-13 {
                break;
            }
        }
        let y = k.dot(&x);
        best = best.max(lp_plain(&y.iter().map(|v| v.norm()).collect::<Vec<_>>(), p));
    }
    best
}

fn normalize_lq(x: &mut CVec, q: f64) {
    let n = lp_plain(&x.iter().map(|v| v.norm()).collect::<Vec<_>>(), q);
    if n > 0.0 {
        x.mapv_inplace(|v| v / n);
    }
}

/// Sampled sectoriality certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorCertificate {
    pub theta: f64,
    pub shift: f64,
    pub constant: f64,
    pub worst_phi: f64,
    pub worst_lambda: f64,
    /// Largest growth bound over the rotated, shifted generators.
    pub max_rotated_growth: f64,
    pub cap: f64,
    pub pass: bool,
}

#[derive(Debug)]
pub struct GeneratorRep {
    space: DiscreteSpace,
    matrix: CMat,
    eigenvalues: CVec,
    growth_bound: f64,
    sector_angle: Option<f64>,
    sector_constant: Option<f64>,
    base_lambda: f64,
    scale: f64,
    departure: f64,
    eigen: OnceLock<Option<EigenDecomp>>,
}

impl Clone for GeneratorRep {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(e.clone());
        }
        Self {
            space: self.space.clone(),
            matrix: self.matrix.clone(),
            eigenvalues: self.eigenvalues.clone(),
            growth_bound: self.growth_bound,
            sector_angle: self.sector_angle,
            sector_constant: self.sector_constant,
            base_lambda: self.base_lambda,
            scale: self.scale,
            departure: self.departure,
            eigen,
        }
    }
}

impl GeneratorRep {
    pub fn new(space: DiscreteSpace, matrix: CMat) -> Result<Self> {
        check_len(matrix.nrows(), matrix.ncols())?;
        check_len(space.dim(), matrix.nrows())?;
        let eigenvalues = linalg::eigvals(&matrix)?;
        let growth_bound = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let scale = linalg::norm_inf(matrix.view());
        let departure = linalg::departure_from_normality(&matrix);
        Ok(Self {
            space,
            matrix,
            eigenvalues,
            growth_bound,
            sector_angle: None,
            sector_constant: None,
            base_lambda: growth_bound.max(0.0) + 1.0,
            scale,
            departure,
            eigen: OnceLock::new(),
        })
    }

    pub fn from_real(space: DiscreteSpace, matrix: &ndarray::Array2<f64>) -> Result<Self> {
        Self::new(space, linalg::to_complex(matrix))
    }

    pub fn with_base_lambda(mut self, lambda0: f64) -> Result<Self> {
        if !(lambda0 > self.growth_bound) {
            return Err(Error::Precondition(format!(
                "base lambda {lambda0} must exceed the growth bound {}",
                self.growth_bound
            )));
        }
        self.base_lambda = lambda0;
        Ok(self)
    }

    pub fn with_sector(mut self, cert: &SectorCertificate) -> Self {
        if cert.pass {
            self.sector_angle = Some(cert.theta);
            self.sector_constant = Some(cert.constant);
        }
        self
    }

    /// Declare a sector angle without sampling (used by rotation on known operators).
    pub fn assume_sector(mut self, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= PI / 2.0) {
            return Err(Error::Domain(format!("sector angle {theta} not in (0, pi/2]")));
        }
        self.sector_angle = Some(theta);
        Ok(self)
    }

    pub fn space(&self) -> &DiscreteSpace {
        &self.space
    }
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    pub fn eigenvalues(&self) -> &CVec {
        &self.eigenvalues
    }
    pub fn growth_bound(&self) -> f64 {
        self.growth_bound
    }
    pub fn sector_angle(&self) -> Option<f64> {
        self.sector_angle
    }
    pub fn sector_constant(&self) -> Option<f64> {
        self.sector_constant
    }
    pub fn base_lambda(&self) -> f64 {
        self.base_lambda
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn departure_from_normality(&self) -> f64 {
        self.departure
    }
    pub fn is_near_normal(&self) -> bool {
        self.departure < NORMALITY_TOL
    }

    /// Cached eigendecomposition; `None` if the eigenvector basis is singular.
    pub fn eigen(&self) -> Option<&EigenDecomp> {
        self.eigen
            .get_or_init(|| EigenDecomp::new(&self.matrix).ok())
            .as_ref()
    }

    /// A + s I with a fresh spectral record.
    pub fn shifted(&self, s: f64) -> Result<Self> {
        let m = linalg::shifted(&self.matrix, cplx(s), cplx(1.0));
        let mut g = Self::new(self.space.clone(), m)?;
        g.base_lambda = (self.base_lambda + s).max(g.growth_bound + 1e-12);
        Ok(g)
    }

    /// Operator norm of A in its own space.
    pub fn norm(&self) -> f64 {
        induced_norm(&self.space, &self.space, self.matrix.view()).upper
    }

    pub fn apply(&self, x: &CVec) -> Result<CVec> {
        check_len(self.dim(), x.len())?;
        Ok(self.matrix.dot(x))
    }

    pub fn nearest_eigenvalue(&self, lambda: c64) -> (c64, f64) {
        self.eigenvalues
            .iter()
            .map(|&z| (z, (z - lambda).norm()))
            .fold((cplx(f64::NAN), f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }

    fn check_resolvent_point(&self, lambda: c64) -> Result<()> {
        let (z, d) = self.nearest_eigenvalue(lambda);
        if d <= SPECTRAL_PROXIMITY * self.scale.max(f64::MIN_POSITIVE) {
            return Err(Error::SpectralProximity {
                lambda,
                nearest: z,
            });
        }
        Ok(())
    }

    /// lambda I - A
    pub fn shifted_matrix(&self, lambda: c64) -> CMat {
        linalg::shifted(&self.matrix, lambda, cplx(-1.0))
    }

    pub fn resolvent_matrix(&self, lambda: c64) -> Result<CMat> {
        self.check_resolvent_point(lambda)?;
        linalg::inv(&self.shifted_matrix(lambda))
    }

    pub fn resolvent(&self, lambda: c64) -> Result<OperatorBlock> {
        OperatorBlock::new(self.space.clone(), self.space.clone(), self.resolvent_matrix(lambda)?)
    }

    /// R(lambda, A) b for a matrix right-hand side.
    pub fn resolvent_solve(&self, lambda: c64, b: &CMat) -> Result<CMat> {
        self.check_resolvent_point(lambda)?;
        linalg::solve_mat(&self.shifted_matrix(lambda), b)
    }

    /// exp(z A) for complex z; eigen route when A is near normal.
    pub fn exp_complex(&self, z: c64) -> Result<CMat> {
        if z == cplx(0.0) {
            return Ok(linalg::eye(self.dim()));
        }
        if self.is_near_normal() {
            if let Some(e) = self.eigen() {
                if e.condition() < 1e4 {
                    return Ok(e.apply_fn(|l| (z * l).exp()));
                }
            }
        }
        linalg::expm_pade(&self.matrix.mapv(|v| v * z))
    }

    pub fn semigroup(&self, t: f64) -> Result<CMat> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("semigroup time t = {t} must be >= 0")));
        }
        self.exp_complex(cplx(t))
    }

    pub fn semigroup_apply(&self, t: f64, x: &CVec) -> Result<CVec> {
        check_len(self.dim(), x.len())?;
        Ok(self.semigroup(t)?.dot(x))
    }
}

pub fn norm(space: &DiscreteSpace, x: ArrayView1<c64>) -> Result<f64> {
    space.norm(x)
}

pub fn resolvent(a: &GeneratorRep, lambda: c64) -> Result<OperatorBlock> {
    a.resolvent(lambda)
}

pub fn semigroup_apply(a: &GeneratorRep, t: f64, x: &CVec) -> Result<CVec> {
    a.semigroup_apply(t, x)
}

pub fn growth_bound(a: &GeneratorRep) -> f64 {
    a.growth_bound()
}

/// Default cap above which a sampled sector constant is treated as unbounded.
pub const SECTOR_CAP: f64 = 1e3;

/// Samples sup ||lambda R(lambda, e^{i phi}(A - s))|| for phi in (-theta, theta).
pub fn certify_sector(
    a: &GeneratorRep,
    theta: f64,
    lambda_samples: &[f64],
    phi_samples: &[f64],
) -> Result<SectorCertificate> {
    certify_sector_with_cap(a, theta, lambda_samples, phi_samples, SECTOR_CAP)
}

pub fn certify_sector_with_cap(
    a: &GeneratorRep,
    theta: f64,
    lambda_samples: &[f64],
    phi_samples: &[f64],
    cap: f64,
) -> Result<SectorCertificate> {
    if !(theta > 0.0 && theta <= PI / 2.0) {
        return Err(Error::Domain(format!("theta = {theta} not in (0, pi/2]")));
    }
    let shift = if a.growth_bound() < 0.0 {
        0.0
    } else {
        a.growth_bound() + 1.0
    };
    let base = linalg::shifted(a.matrix(), cplx(-shift), cplx(1.0));
    let space = a.space();
    let mut constant = 0.0f64;
    let mut worst = (0.0, 0.0);
    let mut max_growth = f64::NEG_INFINITY;
    for &phi in phi_samples.iter().filter(|p| p.abs() < theta) {
        let rot = c64::from_polar(1.0, phi);
        let aphi = base.mapv(|v| v * rot);
        let g = linalg::eigvals(&aphi)?
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        max_growth = max_growth.max(g);
        if g >= 0.0 {
            constant = f64::INFINITY;
            worst = (phi, g.max(0.0));
            continue;
        }
        for &lam in lambda_samples {
            let m = linalg::shifted(&aphi, cplx(lam), cplx(-1.0));
            let r = linalg::inv(&m)?.mapv(|v| v * lam);
            let v = induced_norm(space, space, r.view()).upper;
            if v > constant {
                constant = v;
                worst = (phi, lam);
            }
        }
    }
    Ok(SectorCertificate {
        theta,
        shift,
        constant,
        worst_phi: worst.0,
        worst_lambda: worst.1,
        max_rotated_growth: max_growth,
        cap,
        pass: constant.is_finite() && constant <= cap && max_growth < 0.0,
    })
}

/// Sample points strictly inside (-theta, theta), including 0 and +-0.999 theta.
pub fn phi_grid(theta: f64, k: usize) -> Vec<f64> {
    let k = k.max(1);
    let mut v = vec![0.0];
    for i in 1..=k {
        let f = 0.999 * theta * i as f64 / k as f64;
        v.push(f);
        v.push(-f);
    }
    v
}

pub fn real_vec(x: &[f64]) -> CVec {
    Array1::from_iter(x.iter().map(|&v| cplx(v)))
}
