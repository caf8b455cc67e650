//! Dense complex linear algebra helpers on top of LAPACK.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use ndarray_linalg::{Eig, EigVals, Inverse, Norm, Solve, SVD};

use crate::error::{Error, Result};

pub use ndarray_linalg::c64;

pub type CMat = Array2<c64>;
pub type CVec = Array1<c64>;

pub fn cplx(re: f64) -> c64 {
    c64::new(re, 0.0)
}

pub fn eye(n: usize) -> CMat {
    Array2::from_diag_elem(n, c64::new(1.0, 0.0))
}

pub fn to_complex(a: &Array2<f64>) -> CMat {
    a.mapv(cplx)
}

pub fn to_complex_vec(a: &[f64]) -> CVec {
    a.iter().map(|&v| cplx(v)).collect()
}

/// `shift * I + scale * a`
pub fn shifted(a: &CMat, shift: c64, scale: c64) -> CMat {
    let mut out = a.mapv(|v| v * scale);
    for i in 0..a.nrows() {
        out[[i, i]] += shift;
    }
    out
}

pub fn inv(a: &CMat) -> Result<CMat> {
    a.inv().map_err(|e| Error::Numeric(format!("matrix inverse failed: {e}")))
}

pub fn solve(a: &CMat, b: &CVec) -> Result<CVec> {
    a.solve(b).map_err(|e| Error::Numeric(format!("linear solve failed: {e}")))
}

/// Solve `a X = b` column by column through one factorization.
pub fn solve_mat(a: &CMat, b: &CMat) -> Result<CMat> {
    use ndarray_linalg::{Factorize, Solve as _};
    let f = a
        .factorize()
        .map_err(|e| Error::Numeric(format!("LU factorization failed: {e}")))?;
    let mut out = CMat::zeros(b.raw_dim());
    for (j, col) in b.axis_iter(Axis(1)).enumerate() {
        let x = f
            .solve(&col.to_owned())
            .map_err(|e| Error::Numeric(format!("LU solve failed: {e}")))?;
        out.column_mut(j).assign(&x);
    }
    Ok(out)
}

pub fn eigvals(a: &CMat) -> Result<CVec> {
    a.eigvals().map_err(|e| Error::Numeric(format!("eigensolver failed: {e}")))
}

pub fn eig(a: &CMat) -> Result<(CVec, CMat)> {
    a.eig().map_err(|e| Error::Numeric(format!("eigensolver failed: {e}")))
}

pub fn singular_values(a: &CMat) -> Result<Array1<f64>> {
    let (_, s, _) = a
        .svd(false, false)
        .map_err(|e| Error::Numeric(format!("SVD failed: {e}")))?;
    Ok(s)
}

pub fn spectral_norm(a: &CMat) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(singular_values(a)?.iter().cloned().fold(0.0, f64::max))
}

pub fn cond2(a: &CMat) -> Result<f64> {
    let s = singular_values(a)?;
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

pub fn fro(a: &CMat) -> f64 {
    a.norm_l2()
}

/// Max absolute row sum (the l-infinity induced norm).
pub fn norm_inf(a: ArrayView2<c64>) -> f64 {
    a.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Max absolute column sum (the l-1 induced norm).
pub fn norm_one(a: ArrayView2<c64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vec_norm2(x: ArrayView1<c64>) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn adjoint(a: &CMat) -> CMat {
    a.t().mapv(|v| v.conj())
}

/// ||AA* - A*A||_F / ||A||_F^2, zero for the zero matrix.
pub fn departure_from_normality(a: &CMat) -> f64 {
    let f = fro(a);
    if f == 0.0 {
        return 0.0;
    }
    let ah = adjoint(a);
    let c = a.dot(&ah) - ah.dot(a);
    fro(&c) / (f * f)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant.
pub fn expm_pade(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if n == 0 {
        return Ok(a.clone());
    }
    let nrm = norm_one(a.view());
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a.mapv(|v| v * 0.5f64.powi(s));
    let id = eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let b = |k: usize| cplx(PADE13[k]);
    let u_inner = a6.mapv(|v| v * b(13)) + a4.mapv(|v| v * b(11)) + a2.mapv(|v| v * b(9));
    let u = a.dot(
        &(a6.dot(&u_inner)
            + a6.mapv(|v| v * b(7))
            + a4.mapv(|v| v * b(5))
            + a2.mapv(|v| v * b(3))
            + id.mapv(|v| v * b(1))),
    );
    let v_inner = a6.mapv(|v| v * b(12)) + a4.mapv(|v| v * b(10)) + a2.mapv(|v| v * b(8));
    let v = a6.dot(&v_inner)
        + a6.mapv(|v| v * b(6))
        + a4.mapv(|v| v * b(4))
        + a2.mapv(|v| v * b(2))
        + id.mapv(|v| v * b(0));
    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve_mat(&q, &p)?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Eigendecomposition `A = V diag(d) V^{-1}` with the inverse stored.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub values: CVec,
    pub vectors: CMat,
    pub inverse: CMat,
}

impl EigenDecomp {
    pub fn new(a: &CMat) -> Result<Self> {
        let (values, vectors) = eig(a)?;
        let inverse = inv(&vectors)?;
        Ok(Self {
            values,
            vectors,
            inverse,
        })
    }

    /// f(A) = V diag(f(d)) V^{-1}
    pub fn apply_fn(&self, f: impl Fn(c64) -> c64) -> CMat {
        let d: CVec = self.values.mapv(f);
        let mut vd = self.vectors.clone();
        for (j, mut col) in vd.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|v| v * d[j]);
        }
        vd.dot(&self.inverse)
    }

    pub fn condition(&self) -> f64 {
        norm_one(self.vectors.view()) * norm_one(self.inverse.view())
    }
}

/// Linear interpolation of `ys` sampled at increasing `xs`, clamped at the ends.
pub fn interp1(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x).min(n - 1);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let t = (x - x0) / (x1 - x0);
    ys[k - 1] * (1.0 - t) + ys[k] * t
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1).max(1) as f64))
        .collect()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64)
        .collect()
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (slope, my - slope * mx)
}
