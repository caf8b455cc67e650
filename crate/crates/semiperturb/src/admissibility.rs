//! Control/observation admissibility, input-output maps and their feedback
//! invertibility, and a harness for the convolution inequality used to bound
//! singular Volterra kernels.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, cplx, CMat, CVec};
use crate::models::{band_limited_probes, decaying_coefficients, ProbeBasis};
use crate::operator_core::{induced_norm, DiscreteSpace, GeneratorRep, NormBracket, NormKind, OperatorBlock};
use crate::report::Verdict;
use crate::scales::{drift, PLATEAU_DRIFT};

/// Feedback verdict thresholds.
pub const FEEDBACK_COND_MAX: f64 = 1e8;
pub const FEEDBACK_RESIDUAL_MAX: f64 = 1e-6;
/// A constant growing by this factor per refinement is reported as divergent.
pub const BLOWUP_RATIO: f64 = 2.0;

/// Where the observation operator is defined.
#[derive(Debug, Clone)]
pub enum ZDescriptor {
    FullSpace,
    FractionalDomain(f64),
    GraphDomain(OperatorBlock),
}

#[derive(Debug, Clone)]
pub struct ControlObsTriple {
    pub a: GeneratorRep,
    /// U -> X_{-1}, stored in X coordinates.
    pub b: OperatorBlock,
    /// Z -> Y, stored on X coordinates.
    pub c: OperatorBlock,
    pub z: ZDescriptor,
    /// Set when B maps into X itself (not only into X_{-1}).
    pub b_bounded: bool,
}

impl ControlObsTriple {
    pub fn new(a: GeneratorRep, b: OperatorBlock, c: OperatorBlock, z: ZDescriptor) -> Result<Self> {
        if b.codomain.dim() != a.dim() {
            return Err(Error::Dimension {
                expected: a.dim(),
                got: b.codomain.dim(),
            });
        }
        if c.domain.dim() != a.dim() {
            return Err(Error::Dimension {
                expected: a.dim(),
                got: c.domain.dim(),
            });
        }
        Ok(Self {
            a,
            b,
            c,
            z,
            b_bounded: false,
        })
    }

    pub fn with_bounded_control(mut self) -> Self {
        self.b_bounded = true;
        self
    }

    pub fn c_bounded(&self) -> bool {
        matches!(self.z, ZDescriptor::FullSpace)
    }

    pub fn u_space(&self) -> &DiscreteSpace {
        &self.b.domain
    }

    pub fn y_space(&self) -> &DiscreteSpace {
        &self.c.codomain
    }

    /// ||C R(lambda, A_{-1}) B|| as a map U -> Y.
    pub fn compatibility_constant(&self, lambda: f64) -> Result<f64> {
        let rb = self.a.resolvent_solve(cplx(lambda), &self.b.matrix)?;
        let m = self.c.matrix.dot(&rb);
        Ok(induced_norm(self.u_space(), self.y_space(), m.view()).upper)
    }
}

/// Fiber weights used inside Bochner norms L^p([0,t]; V): quadrature weights
/// for weighted spaces, unit weights (l^p) for sup-norm spaces.
pub fn bochner_weights(space: &DiscreteSpace) -> Vec<f64> {
    match space.weights() {
        Some(w) => w.to_vec(),
        None => vec![1.0; space.dim()],
    }
}

fn flat_space(weights: Vec<f64>, p: f64) -> Result<DiscreteSpace> {
    let n = weights.len();
    let measure = weights.iter().sum();
    DiscreteSpace::lp_weighted((0..n).map(|i| i as f64).collect(), p, weights, measure)
}

fn bochner_norm(samples: &[CVec], time_w: &[f64], fiber_w: &[f64], p: f64) -> f64 {
    let mut acc = 0.0;
    for (x, &tw) in samples.iter().zip(time_w) {
        for (v, &fw) in x.iter().zip(fiber_w) {
            acc += tw * fw * v.norm().powf(p);
        }
    }
    acc.powf(1.0 / p)
}

/// One-step exponential integrator for x' = Ax + Bu with u linear on each step:
/// x_{k+1} = E x_k + P1 u_k + P2 (u_{k+1} - u_k).
#[derive(Debug, Clone)]
pub struct ExpIntegrator {
    pub h: f64,
    pub e: CMat,
    /// h phi1(hA) B
    pub p1: CMat,
    /// h phi2(hA) B
    pub p2: CMat,
}

/// Builds the integrator from one exponential of the augmented block matrix.
pub fn exp_integrator(a: &CMat, b: &CMat, h: f64) -> Result<ExpIntegrator> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step {h} must be positive")));
    }
    let n = a.nrows();
    let k = b.ncols();
    linalg_check(b.nrows(), n)?;
    let mut m = CMat::zeros((n + 2 * k, n + 2 * k));
    m.slice_mut(s![..n, ..n]).assign(&a.mapv(|v| v * h));
    m.slice_mut(s![..n, n..n + k]).assign(&b.mapv(|v| v * h));
    for i in 0..k {
        m[[n + i, n + k + i]] = cplx(1.0);
    }
    let e = linalg::expm_pade(&m)?;
    Ok(ExpIntegrator {
        h,
        e: e.slice(s![..n, ..n]).to_owned(),
        p1: e.slice(s![..n, n..n + k]).to_owned(),
        p2: e.slice(s![..n, n + k..]).to_owned(),
    })
}

fn linalg_check(got: usize, expected: usize) -> Result<()> {
    crate::error::check_len(expected, got)
}

/// Discrete F_t: piecewise-constant inputs on m cells, outputs at the m+1 nodes.
#[derive(Debug, Clone)]
pub struct InputOutputMap {
    pub t_final: f64,
    pub p: f64,
    pub time_grid: Vec<f64>,
    /// Input fiber dimension.
    pub ku: usize,
    /// Output fiber dimension.
    pub ly: usize,
    /// ((m+1) ly) x (m ku), block (i, j) couples output node i to input cell j.
    pub block_matrix: CMat,
    pub u_weights: Vec<f64>,
    pub y_weights: Vec<f64>,
}

impl InputOutputMap {
    pub fn steps(&self) -> usize {
        self.time_grid.len() - 1
    }

    pub fn block(&self, i: usize, j: usize) -> ndarray::ArrayView2<'_, c64> {
        self.block_matrix
            .slice(s![i * self.ly..(i + 1) * self.ly, j * self.ku..(j + 1) * self.ku])
    }

    /// True when every block (i, j) with j >= i is exactly zero.
    pub fn is_strictly_causal(&self) -> bool {
        let m = self.steps();
        (0..=m).all(|i| (i..m).all(|j| self.block(i, j).iter().all(|v| *v == cplx(0.0))))
    }

    pub fn apply(&self, u: &CVec) -> Result<CVec> {
        linalg_check(u.len(), self.block_matrix.ncols())?;
        Ok(self.block_matrix.dot(u))
    }

    fn input_space(&self) -> Result<DiscreteSpace> {
        let h = self.t_final / self.steps() as f64;
        let w = (0..self.steps())
            .flat_map(|_| self.u_weights.iter().map(move |v| v * h))
            .collect();
        flat_space(w, self.p)
    }

    fn output_space(&self) -> Result<DiscreteSpace> {
        let tw = crate::operator_core::trapezoid_weights(&self.time_grid);
        let w = tw
            .iter()
            .flat_map(|t| self.y_weights.iter().map(move |v| v * t))
            .collect();
        flat_space(w, self.p)
    }

    /// Square matrix pairing input cell j with the output at its right end node,
    /// scaled to the unweighted l^2 setting. Used for the feedback check.
    pub fn feedback_matrix(&self) -> Result<CMat> {
        if self.ku != self.ly {
            return Err(Error::Precondition(format!(
                "feedback needs U = Y, got dims {} and {}",
                self.ku, self.ly
            )));
        }
        let m = self.steps();
        let mut k = self.block_matrix.slice(s![self.ly.., ..]).to_owned();
        let su: Vec<f64> = self.u_weights.iter().map(|w| w.sqrt()).collect();
        let sy: Vec<f64> = self.y_weights.iter().map(|w| w.sqrt()).collect();
        for i in 0..m * self.ly {
            for j in 0..m * self.ku {
                k[[i, j]] *= sy[i % self.ly] / su[j % self.ku];
            }
        }
        Ok(k)
    }
}

pub fn build_io_map(triple: &ControlObsTriple, t: f64, m: usize, p: f64) -> Result<InputOutputMap> {
    if m < 8 {
        return Err(Error::Domain(format!("need at least 8 time cells, got {m}")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t = {t} must be positive")));
    }
    if p < 1.0 {
        return Err(Error::Domain(format!("p = {p} must be >= 1")));
    }
    let h = t / m as f64;
    let ig = exp_integrator(triple.a.matrix(), &triple.b.matrix, h)?;
    let ku = triple.b.matrix.ncols();
    let ly = triple.c.matrix.nrows();
    // Toeplitz blocks K_l = C E^l P1.
    let mut kern = Vec::with_capacity(m);
    let mut w = ig.p1.clone();
    for _ in 0..m {
        kern.push(triple.c.matrix.dot(&w));
        w = ig.e.dot(&w);
    }
    let mut big = CMat::zeros(((m + 1) * ly, m * ku));
    for i in 1..=m {
        for j in 0..i {
            big.slice_mut(s![i * ly..(i + 1) * ly, j * ku..(j + 1) * ku])
                .assign(&kern[i - j - 1]);
        }
    }
    Ok(InputOutputMap {
        t_final: t,
        p,
        time_grid: linalg::linspace(0.0, t, m + 1),
        ku,
        ly,
        block_matrix: big,
        u_weights: bochner_weights(triple.u_space()),
        y_weights: bochner_weights(triple.y_space()),
    })
}

/// Induced L^p -> L^p norm of the discrete map; exact for p in {1, 2}.
pub fn io_norm(f: &InputOutputMap) -> Result<NormBracket> {
    Ok(induced_norm(&f.input_space()?, &f.output_space()?, f.block_matrix.view()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub coarse: f64,
    pub fine: f64,
    pub relative_change: f64,
}

/// Upper norm estimate at m and 2m cells.
pub fn io_norm_refinement(triple: &ControlObsTriple, t: f64, m: usize, p: f64) -> Result<Refinement> {
    let coarse = io_norm(&build_io_map(triple, t, m, p)?)?.upper;
    let fine = io_norm(&build_io_map(triple, t, 2 * m, p)?)?.upper;
    Ok(Refinement {
        coarse,
        fine,
        relative_change: (fine - coarse).abs() / fine.abs().max(1e-300),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackReport {
    pub verdict: Verdict,
    pub condition: f64,
    pub residual: f64,
}

/// Invertibility of Id - F for the aligned square realization of F.
pub fn feedback_check(f: &InputOutputMap) -> Result<FeedbackReport> {
    Ok(feedback_check_matrix(&f.feedback_matrix()?))
}

/// Invertibility of Id - K for a square matrix K.
pub fn feedback_check_matrix(k: &CMat) -> FeedbackReport {
    let n = k.nrows();
    let m = linalg::eye(n) - k;
    let condition = linalg::cond2(&m).unwrap_or(f64::INFINITY);
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    let b: CVec = (0..n)
        .map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let residual = match linalg::solve(&m, &b) {
        Ok(x) if x.iter().all(|v| v.is_finite()) => {
            linalg::vec_norm2((m.dot(&x) - &b).view()) / linalg::vec_norm2(b.view())
        }
        _ => f64::INFINITY,
    };
    let ok = condition.is_finite() && condition <= FEEDBACK_COND_MAX && residual <= FEEDBACK_RESIDUAL_MAX;
    FeedbackReport {
        verdict: Verdict::from_bool(ok),
        condition,
        residual,
    }
}

/// Probe and quadrature settings for the admissibility estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub probes: usize,
    pub kmax: usize,
    pub time_steps: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            probes: 64,
            kmax: 8,
            time_steps: 128,
            seed: 0,
        }
    }
}

fn check_tp(t: f64, p: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t = {t} must be positive")));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("p = {p} must be finite and >= 1")));
    }
    Ok(())
}

/// max over random smooth inputs with u(0) = 0 of ||int_0^t T(t-s) B u(s) ds|| / ||u||_p.
pub fn control_admissibility(
    a: &GeneratorRep,
    b: &OperatorBlock,
    p: f64,
    t: f64,
    cfg: &ProbeConfig,
) -> Result<f64> {
    check_tp(t, p)?;
    let m = cfg.time_steps.max(8);
    let ig = exp_integrator(a.matrix(), &b.matrix, t / m as f64)?;
    let k = b.matrix.ncols();
    let fw = bochner_weights(&b.domain);
    let times = linalg::linspace(0.0, t, m + 1);
    let tw = crate::operator_core::trapezoid_weights(&times);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = 0.0f64;
    for _ in 0..cfg.probes {
        // u_c(s) = sum_j c_jc sin((j - 1/2) pi s / t)
        let coef: Vec<Vec<f64>> = (0..k).map(|_| decaying_coefficients(&mut rng, cfg.kmax)).collect();
        let u: Vec<CVec> = times
            .iter()
            .map(|&s| {
                coef.iter()
                    .map(|c| {
                        cplx(
                            c.iter()
                                .enumerate()
                                .map(|(j, cj)| cj * ((j as f64 + 0.5) * PI * s / t).sin())
                                .sum(),
                        )
                    })
                    .collect()
            })
            .collect();
        let mut x = CVec::zeros(a.dim());
        for i in 0..m {
            x = ig.e.dot(&x) + ig.p1.dot(&u[i]) + ig.p2.dot(&(&u[i + 1] - &u[i]));
        }
        let un = bochner_norm(&u, &tw, &fw, p);
        if un > 0.0 {
            best = best.max(a.space().norm(x.view())? / un);
        }
    }
    Ok(best)
}

/// max over smooth probes x of (int_0^t ||C T(s) x||^p ds)^{1/p} / ||x||.
pub fn observation_admissibility(
    a: &GeneratorRep,
    c: &OperatorBlock,
    p: f64,
    t: f64,
    cfg: &ProbeConfig,
) -> Result<f64> {
    check_tp(t, p)?;
    let m = cfg.time_steps.max(8);
    let grid = a.space().grid();
    let (lo, hi) = probe_interval(grid);
    let probes = band_limited_probes(grid, lo, hi, cfg.probes, cfg.kmax, ProbeBasis::Sine, cfg.seed);
    let e = a.semigroup(t / m as f64)?;
    let times = linalg::linspace(0.0, t, m + 1);
    let tw = crate::operator_core::trapezoid_weights(&times);
    let fw = bochner_weights(&c.codomain);
    let mut best = 0.0f64;
    for x in probes {
        let nx = a.space().norm(x.view())?;
        if nx == 0.0 {
            continue;
        }
        let mut ys = Vec::with_capacity(m + 1);
        let mut v = x.clone();
        for _ in 0..=m {
            ys.push(c.matrix.dot(&v));
            v = e.dot(&v);
        }
        best = best.max(bochner_norm(&ys, &tw, &fw, p) / nx);
    }
    Ok(best)
}

/// Interval on which a grid's probes vanish at both ends: one half-step outside
/// the first and last nodes.
pub(crate) fn probe_interval(grid: &[f64]) -> (f64, f64) {
    if grid.len() < 2 {
        return (grid[0] - 1.0, grid[0] + 1.0);
    }
    let h0 = grid[1] - grid[0];
    let h1 = grid[grid.len() - 1] - grid[grid.len() - 2];
    (grid[0] - h0, grid[grid.len() - 1] + h1)
}

/// Values of one constant across a mesh family with its plateau verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantSeries {
    pub values: Vec<f64>,
    pub drift: f64,
    /// Ratio of the two finest values.
    pub growth: f64,
    pub verdict: Verdict,
}

impl ConstantSeries {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len();
        let finite = values.iter().all(|v| v.is_finite());
        let (d, growth) = if n >= 2 {
            let g = if values[n - 2].abs() > 0.0 {
                values[n - 1] / values[n - 2]
            } else if values[n - 1] == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
            (drift(&values), g)
        } else {
            (f64::NAN, f64::NAN)
        };
        let verdict = if !finite || growth >= BLOWUP_RATIO {
            Verdict::Fail
        } else if n >= 2 && d <= PLATEAU_DRIFT {
            Verdict::Pass
        } else {
            Verdict::Suspect
        };
        Self {
            values,
            drift: d,
            growth,
            verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub p: f64,
    pub t: f64,
    pub meshes: Vec<usize>,
    /// (i) ||C R(lambda, A_{-1}) B||
    pub compatibility: ConstantSeries,
    /// (ii)
    pub control: ConstantSeries,
    /// (iii)
    pub observation: ConstantSeries,
    /// (iv) upper end of the discrete F_t norm bracket
    pub io_norm: ConstantSeries,
    /// (v) on the finest mesh; None when U and Y differ
    pub feedback: Option<FeedbackReport>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub probe: ProbeConfig,
    pub io_steps: usize,
    pub lambda: Option<f64>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            probe: ProbeConfig::default(),
            io_steps: 32,
            lambda: None,
        }
    }
}

/// All four constants over a mesh family of triples, plus the feedback check.
pub fn admissibility_report(
    family: &[(usize, ControlObsTriple)],
    p: f64,
    t: f64,
    cfg: &ReportConfig,
) -> Result<AdmissibilityReport> {
    check_tp(t, p)?;
    if family.is_empty() {
        return Err(Error::Precondition("empty mesh family".into()));
    }
    let rows: Vec<Result<[f64; 4]>> = family
        .par_iter()
        .map(|(_, tr)| {
            let lam = cfg.lambda.unwrap_or_else(|| tr.a.base_lambda());
            let comp = tr.compatibility_constant(lam)?;
            let ctrl = control_admissibility(&tr.a, &tr.b, p, t, &cfg.probe)?;
            let obs = observation_admissibility(&tr.a, &tr.c, p, t, &cfg.probe)?;
            let io = io_norm(&build_io_map(tr, t, cfg.io_steps, p)?)?.upper;
            Ok([comp, ctrl, obs, io])
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let col = |k: usize| ConstantSeries::from_values(rows.iter().map(|r| r[k]).collect());
    let (compatibility, control, observation, io) = (col(0), col(1), col(2), col(3));
    let last = &family[family.len() - 1].1;
    let feedback = if last.u_space().dim() == last.y_space().dim() {
        Some(feedback_check(&build_io_map(last, t, cfg.io_steps, p)?)?)
    } else {
        None
    };
    let mut verdict = compatibility
        .verdict
        .and(control.verdict)
        .and(observation.verdict)
        .and(io.verdict);
    if let Some(f) = &feedback {
        verdict = verdict.and(f.verdict);
    }
    Ok(AdmissibilityReport {
        p,
        t,
        meshes: family.iter().map(|(n, _)| *n).collect(),
        compatibility,
        control,
        observation,
        io_norm: io,
        feedback,
        verdict,
    })
}

/// Both sides of ||k * v||_r <= ||k||_q ||v||_p on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungReport {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub const YOUNG_SLACK: f64 = 0.02;

fn check_young_exponents(p: f64, q: f64, r: f64) -> Result<()> {
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    for x in [p, q, r] {
        if !(x >= 1.0) {
            return Err(Error::Domain(format!("exponent {x} < 1")));
        }
    }
    if (inv(p) + inv(q) - 1.0 - inv(r)).abs() > 1e-12 {
        return Err(Error::Domain(format!("1/{p} + 1/{q} != 1 + 1/{r}")));
    }
    Ok(())
}

/// Quadrature of f on (0, t] with panels shrinking by 4 toward 0.
struct Graded {
    rule: GaussLegendre,
    levels: usize,
}

impl Graded {
    fn new() -> Self {
        Self {
            rule: GaussLegendre::new(12).expect("degree >= 2"),
            levels: 120,
        }
    }

    fn integrate(&self, t: f64, f: impl Fn(f64) -> f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut hi = t;
        for _ in 0..self.levels {
            let lo = hi * 0.25;
            acc += self.rule.integrate(lo, hi, &f);
            hi = lo;
        }
        acc + self.rule.integrate(0.0, hi, &f)
    }
}

fn lp_on_unit(f: impl Fn(f64) -> f64 + Sync, p: f64, panels: usize) -> f64 {
    let rule = GaussLegendre::new(12).expect("degree >= 2");
    if p.is_infinite() {
        return (0..=panels * 8)
            .map(|i| f(i as f64 / (panels * 8) as f64).abs())
            .fold(0.0, f64::max);
    }
    let h = 1.0 / panels as f64;
    (0..panels)
        .map(|i| rule.integrate(i as f64 * h, (i + 1) as f64 * h, |s| f(s).abs().powf(p)))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Scalar form: k is the kernel norm profile, v a continuous function.
pub fn young_convolution_check(
    k: &(dyn Fn(f64) -> f64 + Sync),
    v: &(dyn Fn(f64) -> f64 + Sync),
    p: f64,
    q: f64,
    r: f64,
) -> Result<YoungReport> {
    check_young_exponents(p, q, r)?;
    let g = Graded::new();
    let conv = |t: f64| g.integrate(t, |tau| k(tau) * v(t - tau));
    let lhs = lp_on_unit(conv, r, 32);
    let kq = if q.is_infinite() {
        lp_on_unit(|s| k(s.max(1e-300)), q, 64)
    } else {
        g.integrate(1.0, |s| k(s).abs().powf(q)).powf(1.0 / q)
    };
    let rhs = kq * lp_on_unit(v, p, 64);
    Ok(YoungReport {
        p,
        q,
        r,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + YOUNG_SLACK),
    })
}

/// Operator form with K(t) = A T(t) on a near-normal generator: the left side
/// uses the vector convolution, the right side the kernel norms ||A T(t)||.
pub fn young_generator_check(
    a: &GeneratorRep,
    v: &(dyn Fn(f64) -> CVec + Sync),
    p: f64,
    q: f64,
    r: f64,
) -> Result<YoungReport> {
    check_young_exponents(p, q, r)?;
    let e = a
        .eigen()
        .ok_or_else(|| Error::Precondition("operator Young check needs an eigenbasis".into()))?;
    let space = a.space();
    let g = Graded::new();
    // Coefficients of v in the eigenbasis are applied through the mode-wise kernel.
    let kv = |tau: f64, x: &CVec| -> CVec {
        let c = e.inverse.dot(x);
        let d: CVec = c
            .iter()
            .zip(e.values.iter())
            .map(|(ci, mu)| ci * mu * (mu * tau).exp())
            .collect();
        e.vectors.dot(&d)
    };
    let knorm = |tau: f64| -> f64 {
        let m = e.apply_fn(|mu| mu * (mu * tau).exp());
        induced_norm(space, space, m.view()).upper
    };
    let conv_norm = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        // vector quadrature on the graded panels
        let mut acc = CVec::zeros(a.dim());
        let mut hi = t;
        for level in 0..=g.levels {
            let lo = if level == g.levels { 0.0 } else { hi * 0.25 };
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for &(x, w) in g.rule.as_node_weight_pairs() {
                let tau = mid + half * x;
                acc = acc + kv(tau, &v(t - tau)).mapv(|z| z * (w * half));
            }
            hi = lo;
        }
        space.norm(acc.view()).unwrap_or(f64::NAN)
    };
    let lhs = lp_on_unit(conv_norm, r, 16);
    let kq = g.integrate(1.0, |s| knorm(s).powf(q)).powf(1.0 / q);
    let vn = lp_on_unit(|s| space.norm(v(s).view()).unwrap_or(f64::NAN), p, 32);
    let rhs = kq * vn;
    Ok(YoungReport {
        p,
        q,
        r,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + YOUNG_SLACK),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShortcutBranch {
    /// B bounded into X: ||F_t|| <= M t^{1/p}
    BoundedControl,
    /// C bounded on X: ||F_t|| <= M t^{1 - 1/p}
    BoundedObservation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortcutReport {
    pub branch: ShortcutBranch,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub exponent: f64,
    pub required: f64,
    pub holds: bool,
    /// Whether the small-t decay is strong enough to conclude feedback invertibility.
    pub feedback_concluded: bool,
}

pub fn bounded_factor_shortcut(triple: &ControlObsTriple, p: f64, t0: f64) -> Result<ShortcutReport> {
    check_tp(t0, p)?;
    let (branch, rate) = if triple.b_bounded {
        (ShortcutBranch::BoundedControl, 1.0 / p)
    } else if triple.c_bounded() {
        (ShortcutBranch::BoundedObservation, 1.0 - 1.0 / p)
    } else {
        return Err(Error::Precondition("neither B nor C is bounded on X".into()));
    };
    let times: Vec<f64> = linalg::logspace(1e-3 * t0, t0, 7);
    let norms = times
        .par_iter()
        .map(|&t| Ok(io_norm(&build_io_map(triple, t, 32, p)?)?.upper))
        .collect::<Result<Vec<f64>>>()?;
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|v| v.max(1e-300).ln()).collect();
    let (exponent, _) = linalg::linear_fit(&lx, &ly);
    let required = rate - 0.1;
    Ok(ShortcutReport {
        branch,
        times,
        norms,
        exponent,
        required,
        holds: exponent >= required,
        feedback_concluded: rate > 0.0,
    })
}

/// Coordinate space C^k used for boundary and input spaces.
pub fn coordinate_space(k: usize, p: f64) -> Result<DiscreteSpace> {
    DiscreteSpace::coordinates(k, NormKind::WeightedP(p))
}

/// Scalar triple (a, b, c) on C^1 in the p-norm.
pub fn scalar_triple(a: f64, b: f64, c: f64, p: f64) -> Result<ControlObsTriple> {
    let x = coordinate_space(1, p)?;
    let one = |v: f64| Array2::from_elem((1, 1), cplx(v));
    let gen = GeneratorRep::new(x.clone(), one(a))?;
    ControlObsTriple::new(
        gen,
        OperatorBlock::new(x.clone(), x.clone(), one(b))?,
        OperatorBlock::new(x.clone(), x, one(c))?,
        ZDescriptor::FullSpace,
    )
    .map(|t| t.with_bounded_control())
}
