//! Reaction-diffusion on [0, pi] whose Neumann datum at s = 0 reads a distributed
//! delay of the solution:
//!
//! u_t = u'' + b u' + c u,  u_s(t, 0) = int_0^pi int_{-pi}^0 u(t + r, s) dmu(r) ds,  u(t, pi) = 0.
//!
//! Space uses Chebyshev-Lobatto collocation, the delay variable r in [-pi, 0]
//! a uniform grid with second-order upwinding for v_t = v_r. The history v(r)
//! enters through v(0) = f, which is the boundary operator of the delay block.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use ndarray::{s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Coefficient;
use crate::admissibility::{
    build_io_map, exp_integrator, feedback_check_matrix, ControlObsTriple, FeedbackReport, ZDescriptor,
};
use crate::boundary::{aligned_matrix, assemble_g, BoundarySystem};
use crate::error::{Error, Result};
use crate::linalg::{self, cplx, CMat, CVec};
use crate::operator_core::{trapezoid_weights, DiscreteSpace, NormKind, OperatorBlock};
use crate::report::Verdict;

/// Chebyshev-Lobatto nodes on [a, b] in ascending order with first and second
/// derivative matrices and Clenshaw-Curtis weights.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    pub nodes: Vec<f64>,
    pub d1: Array2<f64>,
    pub d2: Array2<f64>,
    pub weights: Vec<f64>,
}

pub fn chebyshev(n: usize, a: f64, b: f64) -> Result<Chebyshev> {
    if n < 2 || !(b > a) {
        return Err(Error::Domain(format!("need n >= 2 and a < b, got n = {n} on [{a}, {b}]")));
    }
    let nf = n as f64;
    let x: Vec<f64> = (0..=n).map(|j| (j as f64 * PI / nf).cos()).collect();
    let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 };
    let mut d = Array2::<f64>::zeros((n + 1, n + 1));
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                // x_i - x_j via the product formula keeps cancellation out
                let dx = 2.0 * ((i + j) as f64 * PI / (2.0 * nf)).sin() * ((j as f64 - i as f64) * PI / (2.0 * nf)).sin();
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[[i, j]] = c(i) / c(j) * sign / dx;
            }
        }
        let row_sum: f64 = (0..=n).filter(|&j| j != i).map(|j| d[[i, j]]).sum();
        d[[i, i]] = -row_sum;
    }
    // s = a + (b - a)(1 - x)/2
    let scale = -2.0 / (b - a);
    let d1 = d.mapv(|v| v * scale);
    let d2 = d1.dot(&d1);
    let nodes = x.iter().map(|xi| a + (b - a) * (1.0 - xi) / 2.0).collect();
    // Clenshaw-Curtis
    let mut w = vec![0.0; n + 1];
    let mut v = vec![1.0; n.saturating_sub(1)];
    let theta = |k: usize| k as f64 * PI / nf;
    if n.is_multiple_of(2) {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * k as f64 * theta(i + 1)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (nf * theta(i + 1)).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * k as f64 * theta(i + 1)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
    }
    for (i, vi) in v.iter().enumerate() {
        w[i + 1] = 2.0 * vi / nf;
    }
    let half = (b - a) / 2.0;
    Ok(Chebyshev { nodes, d1, d2, weights: w.iter().map(|v| v * half).collect() })
}

/// Barycentric evaluation of the Chebyshev-Lobatto interpolant at `x`.
pub fn chebyshev_interpolate(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len() - 1;
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, (&xj, &fj)) in nodes.iter().zip(values).enumerate() {
        let d = x - xj;
        if d == 0.0 {
            return fj;
        }
        let mut wj = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            wj *= 0.5;
        }
        num += wj / d * fj;
        den += wj / d;
    }
    num / den
}

/// Point mass of `weight` at r = `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub at: f64,
    pub weight: f64,
}

/// Signed measure on [-pi, 0]: atoms plus a polynomial density in r.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DelayMeasure {
    #[serde(default)]
    pub atoms: Vec<Atom>,
    /// Coefficients of r^k.
    #[serde(default)]
    pub density: Vec<f64>,
}

fn gauss_panels(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let rule = GaussLegendre::new(8).expect("degree 8 rule");
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .map(|i| rule.integrate(lo + i as f64 * h, lo + (i + 1) as f64 * h, &f))
        .sum()
}

impl DelayMeasure {
    pub fn lebesgue(scale: f64) -> Self {
        Self { atoms: vec![], density: vec![scale] }
    }

    pub fn atom(at: f64, weight: f64) -> Self {
        Self { atoms: vec![Atom { at, weight }], density: vec![] }
    }

    pub fn density_at(&self, r: f64) -> f64 {
        self.density.iter().rev().fold(0.0, |acc, c| acc * r + c)
    }

    /// |mu|[-pi, 0] = sum |w_a| + int |rho|.
    pub fn total_variation(&self) -> f64 {
        let a: f64 = self.atoms.iter().map(|a| a.weight.abs()).sum();
        a + gauss_panels(|r| self.density_at(r).abs(), -PI, 0.0, 256)
    }

    /// mu[-pi, 0]
    pub fn total_mass(&self) -> f64 {
        let a: f64 = self.atoms.iter().map(|a| a.weight).sum();
        a + gauss_panels(|r| self.density_at(r), -PI, 0.0, 16)
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.weight == 0.0) && self.density.iter().all(|&c| c == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.atoms {
            if !(-PI..=0.0).contains(&a.at) || !a.weight.is_finite() {
                return Err(Error::Config(format!("atom at r = {} outside [-pi, 0]", a.at)));
            }
        }
        if self.density.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("density coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Discrete weights on the uniform r-grid: atoms by linear interpolation,
    /// density by the trapezoid rule.
    pub fn node_weights(&self, r: &[f64]) -> Vec<f64> {
        let m = r.len() - 1;
        let h = r[1] - r[0];
        let mut w: Vec<f64> = trapezoid_weights(r).iter().zip(r).map(|(t, ri)| t * self.density_at(*ri)).collect();
        for a in &self.atoms {
            let q = (a.at - r[0]) / h;
            let i0 = (q.floor() as usize).min(m - 1);
            let frac = q - i0 as f64;
            w[i0] += a.weight * (1.0 - frac);
            w[i0 + 1] += a.weight * frac;
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdeProblem {
    pub p: f64,
    pub gamma: f64,
    #[serde(default = "Coefficient::zero")]
    pub b: Coefficient,
    #[serde(default = "Coefficient::zero")]
    pub c: Coefficient,
    #[serde(default)]
    pub mu: DelayMeasure,
    pub spatial_n: usize,
    pub delay_m: usize,
}

impl RdeProblem {
    /// p = 1.5, gamma = 0.6, b = c = 0, mu = 0.3 delta_{-1} + 0.1 dr.
    pub fn reference(spatial_n: usize, delay_m: usize) -> Self {
        Self {
            p: 1.5,
            gamma: 0.6,
            b: Coefficient::zero(),
            c: Coefficient::zero(),
            mu: DelayMeasure { atoms: vec![Atom { at: -1.0, weight: 0.3 }], density: vec![0.1] },
            spatial_n,
            delay_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p < 2.0) {
            return Err(Error::Config(format!(
                "p = {} outside [1, 2): the window (1/2, 1/p) for gamma is empty",
                self.p
            )));
        }
        if !(self.gamma > 0.5 && self.gamma < 1.0 / self.p) {
            return Err(Error::Config(format!(
                "gamma = {} outside (1/2, 1/p) = (0.5, {:.4})",
                self.gamma,
                1.0 / self.p
            )));
        }
        if self.spatial_n < 4 || self.delay_m < 4 {
            return Err(Error::Config("spatial_n and delay_m must be at least 4".into()));
        }
        self.mu.validate()
    }

    /// beta = (p - 1)/(2p), the decay order of the Dirichlet operator.
    pub fn beta(&self) -> f64 {
        (self.p - 1.0) / (2.0 * self.p)
    }
}

/// Closed-form kernel sinh(sqrt(lambda)(s - pi)) / (sqrt(lambda) cosh(pi sqrt(lambda))).
pub fn rde_dirichlet_closed_form(s: f64, lambda: f64) -> f64 {
    let r = lambda.sqrt();
    // both factors scaled by exp(-r pi) so large lambda does not overflow
    ((r * (s - 2.0 * PI)).exp() - (-r * s).exp()) / (r * (1.0 + (-2.0 * r * PI).exp()))
}

fn weighted_space(grid: Vec<f64>, w: Vec<f64>, p: f64) -> Result<DiscreteSpace> {
    let m: f64 = w.iter().sum();
    DiscreteSpace::lp_weighted(grid, p, w, m)
}

fn perturbation_rows(cheb: &Chebyshev, b: &Coefficient, c: &Coefficient, cols: usize) -> CMat {
    let n = cheb.nodes.len() - 1;
    let mut p = Array2::<f64>::zeros((n - 1, cols));
    for r in 0..n - 1 {
        let i = r + 1;
        let s = cheb.nodes[i];
        let bs = b.eval(s);
        for j in 0..=n {
            p[[r, j]] = bs * cheb.d1[[i, j]];
        }
        p[[r, i]] += c.eval(s);
    }
    linalg::to_complex(&p)
}

/// Diffusion part alone: A_m = d^2/ds^2 with f(pi) = 0, L f = f'(0), P = b d/ds + c,
/// Phi = 0. Full coordinates are the n + 1 Chebyshev nodes.
pub fn rde_diffusion_system(n: usize, p: f64, b: &Coefficient, c: &Coefficient) -> Result<BoundarySystem> {
    let cheb = chebyshev(n, 0.0, PI)?;
    let nn = n + 1;
    let full = weighted_space(cheb.nodes.clone(), cheb.weights.clone(), p)?;
    let state = weighted_space(cheb.nodes[1..n].to_vec(), cheb.weights[1..n].to_vec(), p)?;
    let am = linalg::to_complex(&cheb.d2.slice(s![1..n, ..]).to_owned());
    let l = linalg::to_complex(&cheb.d1.slice(s![0..1, ..]).to_owned());
    let mut dom = CMat::zeros((1, nn));
    dom[[0, n]] = cplx(1.0);
    BoundarySystem::new(
        full,
        state,
        DiscreteSpace::coordinates(1, NormKind::WeightedP(p))?,
        (1..n).collect(),
        am,
        l,
        dom,
        perturbation_rows(&cheb, b, c, nn),
        CMat::zeros((1, nn)),
        cplx(0.0),
    )
}

/// How the delay field is carried in the coupled system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayFiber {
    /// v(r, s) at the Chebyshev nodes s_0..s_{n-1}.
    Full,
    /// V(r) = int v(r, s) ds, which is all the boundary functional reads.
    Integrated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RdeLayout {
    pub n: usize,
    pub m: usize,
    pub fiber: DelayFiber,
    /// Values per delay node.
    pub nf: usize,
    pub s_nodes: Vec<f64>,
    pub s_weights: Vec<f64>,
    pub r_nodes: Vec<f64>,
}

impl RdeLayout {
    /// Full coordinate of v(r_i, fiber j), stored row-major in (delay, space).
    pub fn v_index(&self, i: usize, j: usize) -> usize {
        self.n + 1 + i * self.nf + j
    }

    pub fn full_dim(&self) -> usize {
        self.n + 1 + (self.m + 1) * self.nf
    }
}

#[derive(Debug, Clone)]
pub struct RdeSystem {
    pub problem: RdeProblem,
    pub sys: BoundarySystem,
    pub layout: RdeLayout,
}

/// Rows of v_t = v_r at r_0..r_{m-1}: second-order upwind, first order next to r_m.
fn upwind_rows(m: usize, h: f64) -> Vec<Vec<(usize, f64)>> {
    (0..m)
        .map(|i| {
            if i + 2 <= m {
                vec![(i, -1.5 / h), (i + 1, 2.0 / h), (i + 2, -0.5 / h)]
            } else {
                vec![(i, -1.0 / h), (i + 1, 1.0 / h)]
            }
        })
        .collect()
}

fn r_grid(m: usize) -> Vec<f64> {
    linalg::linspace(-PI, 0.0, m + 1)
}

/// Coupled generator on X x Y with X = L^p[0, pi], Y = L^p([-pi, 0], X).
pub fn rde_build(prob: &RdeProblem) -> Result<RdeSystem> {
    build_coupled(prob, DelayFiber::Full)
}

/// The same dynamics for (f, V), V(r) = int_0^pi v(r, s) ds. Exact for the
/// f-component because the transport acts fiberwise and phi reads only V.
pub fn rde_build_projected(prob: &RdeProblem) -> Result<RdeSystem> {
    build_coupled(prob, DelayFiber::Integrated)
}

fn build_coupled(prob: &RdeProblem, fiber: DelayFiber) -> Result<RdeSystem> {
    prob.validate()?;
    let n = prob.spatial_n;
    let m = prob.delay_m;
    let cheb = chebyshev(n, 0.0, PI)?;
    let nf = match fiber {
        DelayFiber::Full => n,
        DelayFiber::Integrated => 1,
    };
    let r = r_grid(m);
    let hr = PI / m as f64;
    let layout = RdeLayout {
        n,
        m,
        fiber,
        nf,
        s_nodes: cheb.nodes.clone(),
        s_weights: cheb.weights.clone(),
        r_nodes: r.clone(),
    };
    let nn = layout.full_dim();
    // fiber weights: Chebyshev weights at s_0..s_{n-1}, or 1 for the integrated field
    let fw: Vec<f64> = match fiber {
        DelayFiber::Full => cheb.weights[..n].to_vec(),
        DelayFiber::Integrated => vec![1.0],
    };
    let rw = trapezoid_weights(&r);
    let mut grid = cheb.nodes.clone();
    let mut weights = cheb.weights.clone();
    for i in 0..=m {
        for (j, w) in fw.iter().enumerate() {
            grid.push(PI + 1.0 + (r[i] + PI) + j as f64 * hr / nf as f64);
            weights.push(rw[i] * w);
        }
    }
    let interior: Vec<usize> = (1..n).chain((0..m).flat_map(|i| (0..nf).map(move |j| (i, j))).map(|(i, j)| layout.v_index(i, j))).collect();
    let full = weighted_space(grid.clone(), weights.clone(), prob.p)?;
    let state = weighted_space(
        interior.iter().map(|&i| grid[i]).collect(),
        interior.iter().map(|&i| weights[i]).collect(),
        prob.p,
    )?;
    let mut bw = vec![1.0];
    bw.extend(&fw);
    let boundary = weighted_space((0..=nf).map(|i| i as f64).collect(), bw, prob.p)?;

    let ni = interior.len();
    let mut am = CMat::zeros((ni, nn));
    for r_ in 0..n - 1 {
        for j in 0..=n {
            am[[r_, j]] = cplx(cheb.d2[[r_ + 1, j]]);
        }
    }
    for (i, row) in upwind_rows(m, hr).into_iter().enumerate() {
        for j in 0..nf {
            let out = n - 1 + i * nf + j;
            for &(k, w) in &row {
                am[[out, layout.v_index(k, j)]] += cplx(w);
            }
        }
    }
    let mut l = CMat::zeros((1 + nf, nn));
    for j in 0..=n {
        l[[0, j]] = cplx(cheb.d1[[0, j]]);
    }
    for j in 0..nf {
        l[[1 + j, layout.v_index(m, j)]] = cplx(1.0);
    }
    let mut dom = CMat::zeros((1, nn));
    dom[[0, n]] = cplx(1.0);
    let mut pm = CMat::zeros((ni, nn));
    pm.slice_mut(s![..n - 1, ..n + 1]).assign(&perturbation_rows(&cheb, &prob.b, &prob.c, n + 1));
    let mut phi = CMat::zeros((1 + nf, nn));
    let mw = prob.mu.node_weights(&r);
    for (i, wi) in mw.iter().enumerate() {
        for (j, fj) in fw.iter().enumerate() {
            phi[[0, layout.v_index(i, j)]] += cplx(wi * fj);
        }
    }
    match fiber {
        DelayFiber::Full => {
            for j in 0..n {
                phi[[1 + j, j]] = cplx(1.0);
            }
        }
        DelayFiber::Integrated => {
            for j in 0..n {
                phi[[1, j]] = cplx(cheb.weights[j]);
            }
        }
    }
    let sys = BoundarySystem::new(full, state, boundary, interior, am, l, dom, pm, phi, cplx(0.0))?;
    Ok(RdeSystem { problem: prob.clone(), sys, layout })
}

/// Delay block alone on a small fiber: D = d/dr with v(0) = 0, K v = v(0),
/// observation phi(v) = int int v dmu ds. Fiber: `nf` midpoint nodes on [0, pi].
pub struct DelaySystem {
    pub sys: BoundarySystem,
    /// phi as a 1 x N row on the full coordinates.
    pub phi_row: CMat,
}

pub fn rde_delay_system(mu: &DelayMeasure, m: usize, nf: usize, p: f64) -> Result<DelaySystem> {
    if nf == 0 {
        return Err(Error::Domain("need a nonempty fiber".into()));
    }
    delay_system_on(mu, m, &vec![PI / nf as f64; nf], p)
}

/// Delay block over a fiber with the given quadrature weights.
fn delay_system_on(mu: &DelayMeasure, m: usize, fw: &[f64], p: f64) -> Result<DelaySystem> {
    mu.validate()?;
    if m < 4 {
        return Err(Error::Domain("need m >= 4".into()));
    }
    let nf = fw.len();
    let r = r_grid(m);
    let hr = PI / m as f64;
    let rw = trapezoid_weights(&r);
    let idx = |i: usize, j: usize| i * nf + j;
    let nn = (m + 1) * nf;
    let mut grid = Vec::with_capacity(nn);
    let mut weights = Vec::with_capacity(nn);
    for i in 0..=m {
        for (j, wj) in fw.iter().enumerate() {
            grid.push(r[i] + j as f64 * hr / nf as f64);
            weights.push(rw[i] * wj);
        }
    }
    let interior: Vec<usize> = (0..m * nf).collect();
    let full = weighted_space(grid.clone(), weights.clone(), p)?;
    let state = weighted_space(grid[..m * nf].to_vec(), weights[..m * nf].to_vec(), p)?;
    let boundary = weighted_space((0..nf).map(|i| i as f64).collect(), fw.to_vec(), p)?;
    let mut am = CMat::zeros((m * nf, nn));
    for (i, row) in upwind_rows(m, hr).into_iter().enumerate() {
        for j in 0..nf {
            for &(k, w) in &row {
                am[[idx(i, j), idx(k, j)]] += cplx(w);
            }
        }
    }
    let mut l = CMat::zeros((nf, nn));
    for j in 0..nf {
        l[[j, idx(m, j)]] = cplx(1.0);
    }
    let mut phi_row = CMat::zeros((1, nn));
    for (i, wi) in mu.node_weights(&r).iter().enumerate() {
        for j in 0..nf {
            phi_row[[0, idx(i, j)]] = cplx(wi * fw[j]);
        }
    }
    let sys = BoundarySystem::new(
        full,
        state,
        boundary,
        interior,
        am,
        l,
        CMat::zeros((0, nn)),
        CMat::zeros((m * nf, nn)),
        CMat::zeros((nf, nn)),
        cplx(0.0),
    )?;
    Ok(DelaySystem { sys, phi_row })
}

/// (D, K_D, phi) with phi read on the homogeneous lift v(0) = 0.
pub fn delay_triple(d: &DelaySystem) -> Result<ControlObsTriple> {
    let sys = &d.sys;
    let j0 = sys.lift(false)?;
    let y = DiscreteSpace::coordinates(1, sys.state.kind())?;
    let b = OperatorBlock::new(sys.boundary.clone(), sys.state.clone(), sys.l_a().clone())?;
    let c = OperatorBlock::new(sys.state.clone(), y, d.phi_row.dot(&j0))?;
    ControlObsTriple::new(sys.base_generator().clone(), b, c, ZDescriptor::FullSpace)
}

/// (A, L_A, Id) for the diffusion part.
pub fn diffusion_triple(sys: &BoundarySystem) -> Result<ControlObsTriple> {
    let x = sys.state.clone();
    let b = OperatorBlock::new(sys.boundary.clone(), x.clone(), sys.l_a().clone())?;
    let c = OperatorBlock::new(x.clone(), x, linalg::eye(sys.interior.len()))?;
    ControlObsTriple::new(sys.base_generator().clone(), b, c, ZDescriptor::FullSpace)
}

/// The discrete left shift by one delay cell with zero inflow: (S v)_i = v_{i+1}, v_m = 0.
pub fn delay_shift_matrix(m: usize) -> CMat {
    let mut s = CMat::zeros((m, m));
    for i in 0..m - 1 {
        s[[i, i + 1]] = cplx(1.0);
    }
    s
}

/// Scalar input signal u(tau) = offset + linear tau + sum a sin(w tau) + sum b cos(w tau).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSignal {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub linear: f64,
    #[serde(default)]
    pub sines: Vec<(f64, f64)>,
    #[serde(default)]
    pub cosines: Vec<(f64, f64)>,
}

impl TimeSignal {
    pub fn eval(&self, t: f64) -> f64 {
        self.offset
            + self.linear * t
            + self.sines.iter().map(|(a, w)| a * (w * t).sin()).sum::<f64>()
            + self.cosines.iter().map(|(a, w)| a * (w * t).cos()).sum::<f64>()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.linear + self.sines.iter().map(|(a, w)| a * w * (w * t).cos()).sum::<f64>()
            - self.cosines.iter().map(|(a, w)| a * w * (w * t).sin()).sum::<f64>()
    }

    /// Random band-limited signal with frequencies up to `kmax` and u(0) = 0.
    pub fn random(seed: u64, kmax: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Self::default();
        for k in 1..=kmax {
            let w = k as f64;
            s.sines.push((rng.gen_range(-1.0..1.0) / w, w));
            s.cosines.push((rng.gen_range(-1.0..1.0) / w, w));
        }
        s.offset = -s.cosines.iter().map(|(a, _)| a).sum::<f64>();
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlMapCheck {
    pub t: f64,
    pub r_nodes: Vec<f64>,
    /// u(max(0, r + t))
    pub closed_form: Vec<f64>,
    /// u(t) - int_0^t 1[tau >= r + t] u'(tau) dtau, i.e. the shift semigroup
    /// applied to K_0 u' after integrating by parts; Gauss quadrature split at r + t.
    pub quadrature: Vec<f64>,
    /// Upwind semi-discretization driven by v(0) = u(t).
    pub discrete: Vec<f64>,
    pub discrepancy: f64,
    pub discrete_discrepancy: f64,
}

/// Evaluates int_0^t S_{-1}(t - tau) K_D u(tau) dtau on the r-grid with m cells.
pub fn rde_control_map_closed_form(u: &TimeSignal, t: f64, m: usize) -> Result<ControlMapCheck> {
    if u.eval(0.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("control map needs u(0) = 0, got {:.3e}", u.eval(0.0))));
    }
    if !(t > 0.0 && t <= PI) {
        return Err(Error::Domain(format!("t = {t} outside (0, pi]")));
    }
    if m < 4 {
        return Err(Error::Domain("need at least 4 delay cells".into()));
    }
    let r = r_grid(m);
    let closed_form: Vec<f64> = r.iter().map(|ri| u.eval((ri + t).max(0.0))).collect();
    let rule = GaussLegendre::new(24).expect("degree 24 rule");
    let quadrature: Vec<f64> = r
        .iter()
        .map(|ri| {
            let cut = (ri + t).max(0.0);
            // the shifted input has left the cell at r once tau > r + t
            u.eval(t) - rule.integrate(cut, t, |tau| u.derivative(tau))
        })
        .collect();
    // v' = D v + K_D u with inflow v(0) = u(t): interior nodes r_0..r_{m-1}
    let hr = PI / m as f64;
    let mut a = CMat::zeros((m, m));
    let mut b = CMat::zeros((m, 1));
    for (i, row) in upwind_rows(m, hr).into_iter().enumerate() {
        for (k, w) in row {
            if k == m {
                b[[i, 0]] += cplx(w);
            } else {
                a[[i, k]] += cplx(w);
            }
        }
    }
    let steps = 8 * m;
    let ig = exp_integrator(&a, &b, t / steps as f64)?;
    let mut v = CVec::zeros(m);
    for k in 0..steps {
        let u0 = u.eval(k as f64 * t / steps as f64);
        let u1 = u.eval((k + 1) as f64 * t / steps as f64);
        v = ig.e.dot(&v) + ig.p1.dot(&CVec::from_elem(1, cplx(u0))) + ig.p2.dot(&CVec::from_elem(1, cplx(u1 - u0)));
    }
    let mut discrete: Vec<f64> = v.iter().map(|z| z.re).collect();
    discrete.push(u.eval(t));
    let scale = closed_form.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let diff = |x: &[f64]| x.iter().zip(&closed_form).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
    Ok(ControlMapCheck {
        t,
        discrepancy: diff(&quadrature),
        discrete_discrepancy: diff(&discrete),
        r_nodes: r,
        closed_form,
        quadrature,
        discrete,
    })
}

/// f0 = cos(s/2) + kappa (s - pi) with constant history u0(r, s) = f0(s);
/// kappa = 2W / (1 + W pi^2/2), W = mu[-pi, 0], makes f0'(0) = phi(u0).
#[allow(clippy::type_complexity)]
pub fn compatible_initial(mu: &DelayMeasure) -> Result<(impl Fn(f64) -> f64 + Clone, impl Fn(f64, f64) -> f64 + Clone)> {
    let w = mu.total_mass();
    let den = 1.0 + w * PI * PI / 2.0;
    if den.abs() < 1e-8 {
        return Err(Error::Domain("total delay mass -2/pi^2 admits no compatible start of this form".into()));
    }
    let kappa = 2.0 * w / den;
    let f0 = move |s: f64| (s / 2.0).cos() + kappa * (s - PI);
    let u0 = move |_r: f64, s: f64| f0(s);
    Ok((f0, u0))
}

/// Full-coordinate vector from an initial profile f0 and history u0(r, s).
pub fn sample_initial(rs: &RdeSystem, f0: impl Fn(f64) -> f64, u0: impl Fn(f64, f64) -> f64) -> CVec {
    let lay = &rs.layout;
    let mut x = CVec::zeros(lay.full_dim());
    for (j, s) in lay.s_nodes.iter().enumerate() {
        x[j] = cplx(f0(*s));
    }
    for (i, r) in lay.r_nodes.iter().enumerate() {
        match lay.fiber {
            DelayFiber::Full => {
                for j in 0..lay.n {
                    x[lay.v_index(i, j)] = cplx(u0(*r, lay.s_nodes[j]));
                }
            }
            DelayFiber::Integrated => {
                let v: f64 = (0..lay.n).map(|j| lay.s_weights[j] * u0(*r, lay.s_nodes[j])).sum();
                x[lay.v_index(i, 0)] = cplx(v);
            }
        }
    }
    x
}

/// Max over constraint rows of |row . x| / (|row|_1 max|x|).
fn compatibility_residual(sys: &BoundarySystem, x: &CVec) -> f64 {
    let c = ndarray::concatenate![Axis(0), &sys.l - &sys.phi, sys.dom];
    let xm = x.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    c.rows()
        .into_iter()
        .map(|row| {
            let r = row.dot(x).norm();
            let s: f64 = row.iter().map(|v| v.norm()).sum();
            r / (s.max(f64::MIN_POSITIVE) * xm)
        })
        .fold(0.0, f64::max)
}

pub const COMPATIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RdeTrajectory {
    pub times: Vec<f64>,
    pub s_nodes: Vec<f64>,
    /// f on all spatial nodes, one row per time.
    pub states: Vec<Vec<f64>>,
    pub lp_norms: Vec<f64>,
    pub p: f64,
    pub constraint_residual: f64,
}

impl RdeTrajectory {
    /// Least-squares slope of log ||f(t)||_p over t in [t0, t1].
    pub fn decay_rate(&self, t0: f64, t1: f64) -> f64 {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .times
            .iter()
            .zip(&self.lp_norms)
            .filter(|(t, v)| **t >= t0 - 1e-12 && **t <= t1 + 1e-12 && **v > 0.0)
            .map(|(t, v)| (*t, v.ln()))
            .unzip();
        linalg::linear_fit(&x, &y).0
    }
}

fn lp_norm(v: &[f64], w: &[f64], p: f64) -> f64 {
    v.iter().zip(w).map(|(x, w)| w * x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Trajectory from exp(t G) of the assembled coupled generator.
pub fn solve_rde(rs: &RdeSystem, x0: &CVec, t_final: f64, steps: usize) -> Result<RdeTrajectory> {
    let sys = &rs.sys;
    let lay = &rs.layout;
    if x0.len() != lay.full_dim() {
        return Err(Error::Dimension { expected: lay.full_dim(), got: x0.len() });
    }
    if !(t_final > 0.0) || steps == 0 {
        return Err(Error::Domain("need t_final > 0 and steps >= 1".into()));
    }
    let res = compatibility_residual(sys, x0);
    if res > COMPATIBILITY_TOL {
        return Err(Error::Domain(format!(
            "initial data incompatible with v(0) = f, f(pi) = 0 and the delayed Neumann condition (residual {res:.2e})"
        )));
    }
    let pg = assemble_g(sys)?;
    let j = pg.lift.clone().expect("boundary assembly carries its lift");
    let h = t_final / steps as f64;
    let e = pg.generator.semigroup(h)?;
    let mut x: CVec = sys.interior.iter().map(|&i| x0[i]).collect();
    let mut out = RdeTrajectory {
        times: vec![],
        s_nodes: lay.s_nodes.clone(),
        states: vec![],
        lp_norms: vec![],
        p: rs.problem.p,
        constraint_residual: 0.0,
    };
    for k in 0..=steps {
        if k > 0 {
            x = e.dot(&x);
        }
        let full = if k == 0 { x0.clone() } else { j.dot(&x) };
        out.constraint_residual = out.constraint_residual.max(compatibility_residual(sys, &full));
        let f: Vec<f64> = (0..=lay.n).map(|i| full[i].re).collect();
        out.lp_norms.push(lp_norm(&f, &lay.s_weights, rs.problem.p));
        out.states.push(f);
        out.times.push(k as f64 * h);
    }
    Ok(out)
}

/// Independent reference: method of lines in s at twice the spatial resolution,
/// exponential time stepping at half the step, with the delayed Neumann datum
/// g(t) = int int u(t + r, s) dmu(r) ds read from the stored history
/// (linear in time between steps) and a fixed-point correction at the new step.
pub fn method_of_steps_oracle(
    prob: &RdeProblem,
    f0: impl Fn(f64) -> f64,
    u0: impl Fn(f64, f64) -> f64,
    t_final: f64,
    steps: usize,
) -> Result<RdeTrajectory> {
    prob.validate()?;
    let n = 2 * prob.spatial_n;
    let nsteps = 2 * steps;
    let dt = t_final / nsteps as f64;
    let cheb = chebyshev(n, 0.0, PI)?;
    // L = D2 + b D1 + c on the full grid
    let mut lop = cheb.d2.clone();
    for i in 0..=n {
        let s = cheb.nodes[i];
        let b = prob.b.eval(s);
        for j in 0..=n {
            lop[[i, j]] += b * cheb.d1[[i, j]];
        }
        lop[[i, i]] += prob.c.eval(s);
    }
    // f_0 = (g - D1[0, I] f_I) / D1[0, 0], f_n = 0
    let d00 = cheb.d1[[0, 0]];
    let ni = n - 1;
    let mut mmat = Array2::<f64>::zeros((ni, ni));
    let mut q = Array2::<f64>::zeros((ni, 1));
    for a in 0..ni {
        for b in 0..ni {
            mmat[[a, b]] = lop[[a + 1, b + 1]] - lop[[a + 1, 0]] * cheb.d1[[0, b + 1]] / d00;
        }
        q[[a, 0]] = lop[[a + 1, 0]] / d00;
    }
    let ig = exp_integrator(&linalg::to_complex(&mmat), &linalg::to_complex(&q), dt)?;
    let w = &cheb.weights;
    let edge = |fi: &CVec, g: f64| -> f64 { (g - (0..ni).map(|b| cheb.d1[[0, b + 1]] * fi[b].re).sum::<f64>()) / d00 };
    let integral = |fi: &CVec, f0v: f64| -> f64 { w[0] * f0v + (0..ni).map(|b| w[b + 1] * fi[b].re).sum::<f64>() };
    let hist = |tau: f64| -> f64 { (0..=n).map(|j| w[j] * u0(tau, cheb.nodes[j])).sum() };
    let rule = GaussLegendre::new(6).expect("degree 6 rule");
    // U at step nodes (tau = k dt >= 0)
    let mut big_u: Vec<f64> = Vec::with_capacity(nsteps + 1);
    let u_at = |big_u: &[f64], tau: f64| -> f64 {
        if tau <= 0.0 {
            return hist(tau);
        }
        let q = tau / dt;
        let k = (q.floor() as usize).min(big_u.len() - 2);
        let fr = q - k as f64;
        big_u[k] * (1.0 - fr) + big_u[k + 1] * fr
    };
    let g_at = |big_u: &[f64], t: f64| -> f64 {
        let mut g: f64 = prob.mu.atoms.iter().map(|a| a.weight * u_at(big_u, t + a.at)).sum();
        if !prob.mu.density.is_empty() {
            // history part r in [-pi, -t], solution part r in [max(-pi, -t), 0] by step cells
            g += gauss_panels(|r| prob.mu.density_at(r) * hist(t + r), -PI, (-t).min(0.0), 64);
            let lo = (t - PI).max(0.0);
            let k0 = (lo / dt).floor() as usize;
            let k1 = (t / dt).round() as usize;
            for k in k0..k1 {
                let a = (k as f64 * dt).max(lo);
                let b = (k + 1) as f64 * dt;
                if b > a {
                    g += rule.integrate(a, b, |tau| prob.mu.density_at(tau - t) * u_at(big_u, tau));
                }
            }
        }
        g
    };
    let mut fi: CVec = (1..n).map(|j| cplx(f0(cheb.nodes[j]))).collect();
    let f00 = f0(0.0);
    big_u.push(integral(&fi, f00));
    let mut g_prev = g_at(&big_u, 0.0);
    let mut out = RdeTrajectory {
        times: vec![0.0],
        s_nodes: cheb.nodes.clone(),
        states: vec![],
        lp_norms: vec![],
        p: prob.p,
        constraint_residual: 0.0,
    };
    let record = |out: &mut RdeTrajectory, fi: &CVec, f_edge: f64| {
        let mut f = vec![f_edge];
        f.extend(fi.iter().map(|v| v.re));
        f.push(0.0);
        out.lp_norms.push(lp_norm(&f, &cheb.weights, prob.p));
        out.states.push(f);
    };
    record(&mut out, &fi, edge(&fi, g_prev));
    for k in 0..nsteps {
        let t1 = (k + 1) as f64 * dt;
        let guess = if k == 0 { big_u[0] } else { 2.0 * big_u[k] - big_u[k - 1] };
        big_u.push(guess);
        let mut next = fi.clone();
        let mut g1 = g_prev;
        for _ in 0..6 {
            g1 = g_at(&big_u, t1);
            next = ig.e.dot(&fi)
                + ig.p1.dot(&CVec::from_elem(1, cplx(g_prev)))
                + ig.p2.dot(&CVec::from_elem(1, cplx(g1 - g_prev)));
            big_u[k + 1] = integral(&next, edge(&next, g1));
        }
        fi = next;
        g_prev = g1;
        if (k + 1) % 2 == 0 {
            out.times.push(t1);
            record(&mut out, &fi, edge(&fi, g1));
        }
    }
    Ok(out)
}

/// L^p distance at the final time, oracle interpolated to the trajectory's nodes.
pub fn oracle_discrepancy(main: &RdeTrajectory, oracle: &RdeTrajectory, weights: &[f64]) -> f64 {
    let a = main.states.last().expect("nonempty trajectory");
    let b = oracle.states.last().expect("nonempty trajectory");
    let d: Vec<f64> = main
        .s_nodes
        .iter()
        .zip(a)
        .map(|(s, v)| v - chebyshev_interpolate(&oracle.s_nodes, b, *s))
        .collect();
    lp_norm(&d, weights, main.p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchurPoint {
    pub t: f64,
    pub direct: FeedbackReport,
    /// Invertibility of Id - F11 and of the Schur complement.
    pub schur_inner: FeedbackReport,
    pub schur: FeedbackReport,
    pub direct_verdict: Verdict,
    pub schur_verdict: Verdict,
    /// ||F11||_2 and ||(F32 + F31 (Id - F11)^{-1} F12) F23||_2 on the aligned matrices.
    pub inner_gain: f64,
    pub outer_gain: f64,
    pub small_gain: bool,
    /// Relative 2-norm gap between the direct and the eliminated solution of
    /// (Id - F_t) x = b for a seeded b; infinite when either route fails.
    pub solution_gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchurReport {
    pub points: Vec<SchurPoint>,
    pub agree: bool,
    /// Smallest t on the grid where both gains are below 1.
    pub passing_t: Option<f64>,
}

/// The five triples of the split system.
struct DelaySplit {
    a_id_p: ControlObsTriple,
    a_la_p: ControlObsTriple,
    d_kd_phi: ControlObsTriple,
    a_id_id: ControlObsTriple,
    a_la_id: ControlObsTriple,
}

fn delay_split(prob: &RdeProblem) -> Result<DelaySplit> {
    prob.validate()?;
    let n = prob.spatial_n;
    let diff = rde_diffusion_system(n, prob.p, &prob.b, &prob.c)?;
    let j0 = diff.lift(false)?;
    let x = diff.state.clone();
    let a = diff.base_generator().clone();
    let cheb = chebyshev(n, 0.0, PI)?;
    let fiber = weighted_space(cheb.nodes[..n].to_vec(), cheb.weights[..n].to_vec(), prob.p)?;
    let id_x = OperatorBlock::new(x.clone(), x.clone(), linalg::eye(x.dim()))?;
    let la = OperatorBlock::new(diff.boundary.clone(), x.clone(), diff.l_a().clone())?;
    let pm = OperatorBlock::new(x.clone(), x.clone(), diff.p.dot(&j0))?;
    // Id : X -> fiber reads the lifted function at s_0..s_{n-1}
    let id_f = OperatorBlock::new(x.clone(), fiber, j0.slice(s![..n, ..]).to_owned())?;
    let tr = |b: &OperatorBlock, c: &OperatorBlock| ControlObsTriple::new(a.clone(), b.clone(), c.clone(), ZDescriptor::FullSpace);
    let d = delay_triple(&delay_system_on(&prob.mu, prob.delay_m, &cheb.weights[..n], prob.p)?)?;
    // phi lands in the boundary space of the diffusion part
    let d_kd_phi = ControlObsTriple::new(
        d.a.clone(),
        d.b.clone(),
        OperatorBlock::new(d.c.domain.clone(), diff.boundary.clone(), d.c.matrix.clone())?,
        ZDescriptor::FullSpace,
    )?;
    Ok(DelaySplit {
        a_id_p: tr(&id_x, &pm)?,
        a_la_p: tr(&la, &pm)?,
        d_kd_phi,
        a_id_id: tr(&id_x, &id_f)?,
        a_la_id: tr(&la, &id_f)?,
    })
}

fn schur_blocks(split: &DelaySplit, p: f64, t: f64, m: usize) -> Result<[CMat; 5]> {
    let io = |tr: &ControlObsTriple| -> Result<CMat> { Ok(aligned_matrix(&build_io_map(tr, t, m, p)?)) };
    Ok([io(&split.a_id_p)?, io(&split.a_la_p)?, io(&split.d_kd_phi)?, io(&split.a_id_id)?, io(&split.a_la_id)?])
}

/// Aligned blocks [F11, F12, F23, F31, F32] of the 3 x 3 input-output map at time t
/// with `m` time cells. Rows and columns are ordered (X, C, fiber).
pub fn rde_feedback_blocks(prob: &RdeProblem, t: f64, m: usize) -> Result<[CMat; 5]> {
    let split = delay_split(prob)?;
    schur_blocks(&split, prob.p, t, m)
}

/// (F32 + F31 (Id - F11)^{-1} F12) F23, the map whose Id - K decides invertibility
/// once Id - F11 is invertible.
pub fn schur_complement(blocks: &[CMat; 5]) -> Result<CMat> {
    let [f11, f12, f23, f31, f32] = blocks;
    let x = linalg::solve_mat(&(linalg::eye(f11.nrows()) - f11), f12)?;
    Ok((f32 + &f31.dot(&x)).dot(f23))
}

fn assemble_blocks(blocks: &[CMat; 5]) -> CMat {
    let [f11, f12, f23, f31, f32] = blocks;
    let (r1, r2, r3) = (f11.nrows(), f23.nrows(), f31.nrows());
    let (c1, c2, c3) = (f11.ncols(), f12.ncols(), f23.ncols());
    let mut big = CMat::zeros((r1 + r2 + r3, c1 + c2 + c3));
    big.slice_mut(s![..r1, ..c1]).assign(f11);
    big.slice_mut(s![..r1, c1..c1 + c2]).assign(f12);
    big.slice_mut(s![r1..r1 + r2, c1 + c2..]).assign(f23);
    big.slice_mut(s![r1 + r2.., ..c1]).assign(f31);
    big.slice_mut(s![r1 + r2.., c1..c1 + c2]).assign(f32);
    big
}

/// Solves (Id - F) x = b by eliminating x1 = (Id - F11)^{-1}(b1 + F12 x2) and
/// x2 = b2 + F23 x3, leaving (Id - K) x3 = b3 + F31 (Id - F11)^{-1} b1 + (F32 + F31 X) b2.
fn schur_solve(blocks: &[CMat; 5], b: &CVec) -> Result<CVec> {
    let [f11, f12, f23, f31, f32] = blocks;
    let (r1, r2) = (f11.nrows(), f23.nrows());
    let (b1, b2, b3) = (b.slice(s![..r1]), b.slice(s![r1..r1 + r2]), b.slice(s![r1 + r2..]));
    let inner = linalg::eye(r1) - f11;
    let x = linalg::solve_mat(&inner, f12)?;
    let y = linalg::solve(&inner, &b1.to_owned())?;
    let g = f32 + &f31.dot(&x);
    let k = g.dot(f23);
    let rhs = &b3 + &f31.dot(&y) + g.dot(&b2);
    let x3 = linalg::solve(&(linalg::eye(k.nrows()) - &k), &rhs)?;
    let x2 = &b2 + &f23.dot(&x3);
    let x1 = linalg::solve(&inner, &(&b1 + &f12.dot(&x2)))?;
    Ok(ndarray::concatenate![Axis(0), x1, x2, x3])
}

/// Invertibility of Id - F_t for the block map
/// [[F(A,Id,P), F(A,L_A,P), 0], [0, 0, F(D,K_D,phi)], [F(A,Id,Id), F(A,L_A,Id), 0]]
/// by a direct solve and by eliminating the first two block rows.
pub fn rde_feedback_schur(prob: &RdeProblem, times: &[f64], m: usize) -> Result<SchurReport> {
    let split = delay_split(prob)?;
    let mut points = Vec::with_capacity(times.len());
    for &t in times {
        let blocks = schur_blocks(&split, prob.p, t, m)?;
        let big = assemble_blocks(&blocks);
        let direct = feedback_check_matrix(&big);
        let schur_inner = feedback_check_matrix(&blocks[0]);
        let inner_gain = linalg::spectral_norm(&blocks[0])?;
        let (schur, outer_gain) = if schur_inner.verdict.is_pass() {
            let k = schur_complement(&blocks)?;
            (feedback_check_matrix(&k), linalg::spectral_norm(&k)?)
        } else {
            (schur_inner.clone(), f64::INFINITY)
        };
        let schur_verdict = schur_inner.verdict.and(schur.verdict);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5c4);
        let b: CVec = (0..big.nrows()).map(|_| cplx(rng.gen_range(-1.0..1.0))).collect();
        let solution_gap = if direct.verdict.is_pass() && schur_verdict.is_pass() {
            let xd = linalg::solve(&(linalg::eye(big.nrows()) - &big), &b)?;
            let xs = schur_solve(&blocks, &b)?;
            linalg::vec_norm2((&xd - &xs).view()) / linalg::vec_norm2(xd.view()).max(f64::MIN_POSITIVE)
        } else {
            f64::INFINITY
        };
        points.push(SchurPoint {
            t,
            direct_verdict: direct.verdict,
            schur_verdict,
            direct,
            schur_inner,
            schur,
            inner_gain,
            outer_gain,
            small_gain: inner_gain < 1.0 && outer_gain < 1.0,
            solution_gap,
        });
    }
    let agree = points.iter().all(|p| p.direct_verdict == p.schur_verdict);
    let passing_t = points
        .iter()
        .filter(|p| p.small_gain && p.direct_verdict.is_pass())
        .map(|p| p.t)
        .fold(None, |a: Option<f64>, t| Some(a.map_or(t, |a| a.min(t))));
    Ok(SchurReport { points, agree, passing_t })
}

/// Factor w such that scaling mu by w makes Id - K singular at time t.
/// K is block lower triangular in time with rank-one diagonal blocks, so its
/// only eigenvalue is the trace of the first diagonal block.
pub fn resonant_scale(prob: &RdeProblem, t: f64, m: usize) -> Result<f64> {
    let k = schur_complement(&rde_feedback_blocks(prob, t, m)?)?;
    let nf = prob.spatial_n;
    let kappa: f64 = (0..nf).map(|i| k[[i, i]].re).sum();
    if kappa.abs() < 1e-300 {
        return Err(Error::Numeric("Schur complement is nilpotent; no resonant scaling".into()));
    }
    Ok(1.0 / kappa)
}

impl DelayMeasure {
    pub fn scaled(&self, w: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|a| Atom { at: a.at, weight: a.weight * w }).collect(),
            density: self.density.iter().map(|c| c * w).collect(),
        }
    }
}

/// Random problem for the Schur cross-check: p in [1, 2), gamma mid-window,
/// one or two atoms, a constant density, small b and c.
pub fn random_rde_problem(seed: u64, spatial_n: usize, delay_m: usize) -> RdeProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.gen_range(1.0..1.9);
    let gamma = 0.5 + 0.5 * (1.0 / p - 0.5);
    let atoms = (0..rng.gen_range(1..=2))
        .map(|_| Atom { at: rng.gen_range(-PI..0.0), weight: rng.gen_range(-2.0..2.0) })
        .collect();
    RdeProblem {
        p,
        gamma,
        b: Coefficient::Constant { value: rng.gen_range(-0.5..0.5) },
        c: Coefficient::Constant { value: rng.gen_range(-1.0..1.0) },
        mu: DelayMeasure { atoms, density: vec![rng.gen_range(-1.0..1.0)] },
        spatial_n,
        delay_m,
    }
}

/// Column of L_lambda on the full Chebyshev grid from the closed form.
pub fn closed_form_column(nodes: &[f64], lambda: f64) -> Array1<f64> {
    nodes.iter().map(|s| rde_dirichlet_closed_form(*s, lambda)).collect()
}
