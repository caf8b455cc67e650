//! Degenerate diffusion u_t = a u'' + b u' + c u on C[0,1] with the generalized
//! Wentzell conditions (a u'')(j) = phi_j(u), j = 0, 1.
//!
//! Uniform grid with both endpoints; `a` is only evaluated at interior nodes.
//! The boundary operator reads (Am f)(j) by quadratic extrapolation of the
//! interior values a_i f''_i, which is exact on linear functions.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::admissibility::{ControlObsTriple, ZDescriptor};
use crate::boundary::{
    assemble_g, boundary_triple, equilibrated_cond, BoundarySystem, DirichletConstruction, DirichletOperator,
    BORDERED_COND_MAX,
};
use crate::error::{Error, Result};
use crate::linalg::{self, cplx, CMat, CVec};
use crate::operator_core::{DiscreteSpace, NormKind, OperatorBlock};

/// Coefficient function on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    Constant { value: f64 },
    /// scale * s^alpha0 * (1 - s)^alpha1
    Beta { scale: f64, alpha0: f64, alpha1: f64 },
    /// sum_k coef[k] s^k
    Poly { coef: Vec<f64> },
}

impl Coefficient {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Coefficient::Constant { value } => *value,
            Coefficient::Beta { scale, alpha0, alpha1 } => scale * s.powf(*alpha0) * (1.0 - s).powf(*alpha1),
            Coefficient::Poly { coef } => coef.iter().rev().fold(0.0, |acc, c| acc * s + c),
        }
    }

    /// Value at 1 - x, accurate for tiny x.
    pub fn eval_from_right(&self, x: f64) -> f64 {
        match self {
            Coefficient::Beta { scale, alpha0, alpha1 } => scale * (1.0 - x).powf(*alpha0) * x.powf(*alpha1),
            _ => self.eval(1.0 - x),
        }
    }

    pub fn zero() -> Self {
        Coefficient::Constant { value: 0.0 }
    }
}

/// c_v f(at) + c_d f'(at)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointTerm {
    pub at: f64,
    #[serde(default)]
    pub value: f64,
    #[serde(default)]
    pub derivative: f64,
}

/// Point evaluations of f and f' plus the integral against a polynomial density.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFunctional {
    #[serde(default)]
    pub terms: Vec<PointTerm>,
    /// Polynomial coefficients of the density; empty for none.
    #[serde(default)]
    pub density: Vec<f64>,
}

impl BoundaryFunctional {
    pub fn uses_derivative(&self) -> bool {
        self.terms.iter().any(|t| t.derivative != 0.0)
    }

    /// Row acting on the full grid values.
    fn row(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let n = grid.len();
        let mut r = vec![0.0; n];
        for t in &self.terms {
            if !(0.0..=1.0).contains(&t.at) {
                return Err(Error::Domain(format!("evaluation point {} outside [0, 1]", t.at)));
            }
            // Quadratic Lagrange interpolation on three neighbouring nodes.
            let h = grid[1] - grid[0];
            let c = ((t.at / h).round() as usize).clamp(1, n - 2);
            let idx = [c - 1, c, c + 1];
            for (k, &i) in idx.iter().enumerate() {
                let others: Vec<f64> = idx.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, &m)| grid[m]).collect();
                let den = (grid[i] - others[0]) * (grid[i] - others[1]);
                let val = (t.at - others[0]) * (t.at - others[1]) / den;
                let der = ((t.at - others[0]) + (t.at - others[1])) / den;
                r[i] += t.value * val + t.derivative * der;
            }
        }
        if !self.density.is_empty() {
            let w = crate::operator_core::trapezoid_weights(grid);
            let dens = Coefficient::Poly { coef: self.density.clone() };
            for (i, s) in grid.iter().enumerate() {
                r[i] += w[i] * dens.eval(*s);
            }
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WentzellProblem {
    pub a: Coefficient,
    #[serde(default = "Coefficient::zero")]
    pub b: Coefficient,
    #[serde(default = "Coefficient::zero")]
    pub c: Coefficient,
    #[serde(default)]
    pub phi0: BoundaryFunctional,
    #[serde(default)]
    pub phi1: BoundaryFunctional,
    pub holder_delta: f64,
}

impl WentzellProblem {
    /// a = sqrt(s(1-s)), b = s(1-s)/2, c = -1/2, phi_0 f = -f(0) + int f/2,
    /// phi_1 f = -f(1) + f(1/2)/2.
    pub fn reference() -> Self {
        Self {
            a: Coefficient::Beta { scale: 1.0, alpha0: 0.5, alpha1: 0.5 },
            b: Coefficient::Poly { coef: vec![0.0, 0.5, -0.5] },
            c: Coefficient::Constant { value: -0.5 },
            phi0: BoundaryFunctional {
                terms: vec![PointTerm { at: 0.0, value: -1.0, derivative: 0.0 }],
                density: vec![0.5],
            },
            phi1: BoundaryFunctional {
                terms: vec![
                    PointTerm { at: 1.0, value: -1.0, derivative: 0.0 },
                    PointTerm { at: 0.5, value: 0.5, derivative: 0.0 },
                ],
                density: vec![],
            },
            holder_delta: 0.5,
        }
    }

    /// Reference problem with first-order terms in the boundary functionals.
    pub fn with_derivative_terms() -> Self {
        let mut p = Self::reference();
        p.phi0.terms.push(PointTerm { at: 0.0, value: 0.0, derivative: 0.5 });
        p.phi1.terms.push(PointTerm { at: 1.0, value: 0.0, derivative: -0.5 });
        p
    }

    /// Constant diffusion without lower-order or boundary perturbation.
    pub fn plain(a: f64) -> Self {
        Self {
            a: Coefficient::Constant { value: a },
            b: Coefficient::zero(),
            c: Coefficient::zero(),
            phi0: BoundaryFunctional::default(),
            phi1: BoundaryFunctional::default(),
            holder_delta: 1.0,
        }
    }

    pub fn uses_derivative(&self) -> bool {
        self.phi0.uses_derivative() || self.phi1.uses_derivative()
    }

    /// Validates positivity, integrability of 1/a and the Hölder exponent.
    pub fn validate(&self) -> Result<()> {
        if !(self.holder_delta > 0.0 && self.holder_delta <= 1.0) {
            return Err(Error::Config(format!("holder_delta = {} not in (0, 1]", self.holder_delta)));
        }
        for k in 1..1000 {
            let s = k as f64 / 1000.0;
            if !(self.a.eval(s) > 0.0) {
                return Err(Error::Domain(format!("a vanishes or is negative at interior point s = {s}")));
            }
        }
        let ic = integrability_check(&self.a);
        if !ic.converged {
            return Err(Error::Domain(format!(
                "1/a is not integrable on [0,1]: quadrature changes by {:.2}% at the finest doubling",
                100.0 * ic.relative_change
            )));
        }
        let h = holder_exponent(&self.a);
        if h < self.holder_delta - 0.05 {
            return Err(Error::Domain(format!(
                "antiderivative of 1/a has empirical Hölder exponent {h:.3} < {} - 0.05",
                self.holder_delta
            )));
        }
        Ok(())
    }
}

/// Relative change allowed at the finest doubling of the integrability quadrature.
pub const INTEGRABILITY_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityCheck {
    pub coarse: f64,
    pub fine: f64,
    pub relative_change: f64,
    pub converged: bool,
}

/// int_lo^hi f over panels shrinking geometrically by 4 toward `lo`.
fn graded_toward(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, levels: usize) -> f64 {
    let rule = GaussLegendre::new(10).expect("degree 10 rule");
    let mut acc = 0.0;
    let mut b = hi - lo;
    for _ in 0..levels {
        let a = b * 0.25;
        acc += rule.integrate(a, b, |x| f(lo + x));
        b = a;
    }
    acc
}

/// int_0^1 dr / a(r) split at 1/2, with graded panels toward both ends at
/// `levels` and `2 levels` geometric levels.
pub fn integrability_check(a: &Coefficient) -> IntegrabilityCheck {
    let inv = |s: f64| 1.0 / a.eval(s);
    let inv_r = |x: f64| 1.0 / a.eval_from_right(x);
    let total = |levels: usize| graded_toward(&inv, 0.0, 0.5, levels) + graded_toward(&inv_r, 0.0, 0.5, levels);
    let coarse = total(60);
    let fine = total(120);
    let relative_change = ((fine - coarse) / fine).abs();
    IntegrabilityCheck {
        coarse,
        fine,
        relative_change,
        converged: fine.is_finite() && relative_change <= INTEGRABILITY_TOL,
    }
}

/// Smallest log-log slope of h -> int_j^{j+-h} dr / a(r) at both ends, h in [1e-6, 1e-1].
pub fn holder_exponent(a: &Coefficient) -> f64 {
    let hs = linalg::logspace(1e-6, 1e-1, 11);
    let inv = |s: f64| 1.0 / a.eval(s);
    let inv_r = |x: f64| 1.0 / a.eval_from_right(x);
    let mut worst = f64::INFINITY;
    for f in [&inv as &dyn Fn(f64) -> f64, &inv_r] {
        let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ly: Vec<f64> = hs.iter().map(|&h| graded_toward(f, 0.0, h, 40).ln()).collect();
        let (slope, _) = linalg::linear_fit(&lx, &ly);
        worst = worst.min(slope);
    }
    worst.min(1.0)
}

/// Interior row index r (node r + 1) of the second-difference operator.
fn am_row(am: &CMat, r: usize) -> ndarray::ArrayView1<'_, ndarray_linalg::c64> {
    am.row(r)
}

/// Boundary system on n interior nodes: X = C on the interior nodes (sup norm),
/// dX = C^2, L = extrapolated (Am f)(0), (Am f)(1), P = b d/ds + c, Phi from phi_0, phi_1.
pub fn wentzell_build(prob: &WentzellProblem, n: usize) -> Result<BoundarySystem> {
    prob.validate()?;
    if n < 8 {
        return Err(Error::Domain("need at least 8 interior nodes".into()));
    }
    let nn = n + 2;
    let h = 1.0 / (n + 1) as f64;
    let grid = linalg::linspace(0.0, 1.0, nn);
    let mut am = Array2::<f64>::zeros((n, nn));
    let mut p = Array2::<f64>::zeros((n, nn));
    for r in 0..n {
        let i = r + 1;
        let s = grid[i];
        let a = prob.a.eval(s);
        am[[r, i - 1]] = a / (h * h);
        am[[r, i]] = -2.0 * a / (h * h);
        am[[r, i + 1]] = a / (h * h);
        let b = prob.b.eval(s);
        p[[r, i - 1]] -= b / (2.0 * h);
        p[[r, i + 1]] += b / (2.0 * h);
        p[[r, i]] += prob.c.eval(s);
    }
    let am = linalg::to_complex(&am);
    let mut l = CMat::zeros((2, nn));
    let ext = |out: &mut CMat, row: usize, r: [usize; 3]| {
        let v = am_row(&am, r[0]).mapv(|v| v * 3.0) - am_row(&am, r[1]).mapv(|v| v * 3.0) + am_row(&am, r[2]);
        out.row_mut(row).assign(&v);
    };
    ext(&mut l, 0, [0, 1, 2]);
    ext(&mut l, 1, [n - 1, n - 2, n - 3]);
    let mut phi = Array2::<f64>::zeros((2, nn));
    phi.row_mut(0).assign(&ndarray::Array1::from(prob.phi0.row(&grid)?));
    phi.row_mut(1).assign(&ndarray::Array1::from(prob.phi1.row(&grid)?));
    let state = DiscreteSpace::sup(grid[1..=n].to_vec())?;
    BoundarySystem::new(
        DiscreteSpace::sup(grid)?,
        state,
        DiscreteSpace::coordinates(2, NormKind::Sup)?,
        (1..=n).collect(),
        am,
        l,
        CMat::zeros((0, nn)),
        linalg::to_complex(&p),
        linalg::to_complex(&phi),
        cplx(1.0),
    )
}

/// L~_0 d = d_0 (1 - s) + d_1 s on the full grid.
pub fn l_tilde0(sys: &BoundarySystem) -> CMat {
    let g = sys.full.grid();
    let mut m = CMat::zeros((g.len(), 2));
    for (i, s) in g.iter().enumerate() {
        m[[i, 0]] = cplx(1.0 - s);
        m[[i, 1]] = cplx(*s);
    }
    m
}

/// L_lambda = -(1/lambda) A_0 R(lambda, A_0) L~_0 = L~_0/lambda - R(lambda, A_0) L~_0,
/// with A_0 the diffusion whose extrapolated end values vanish.
pub fn wentzell_dirichlet(sys: &BoundarySystem, lambda: f64) -> Result<DirichletOperator> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    let nn = sys.full.dim();
    let n = nn - 2;
    let g = l_tilde0(sys);
    let mut m = CMat::zeros((nn, nn));
    let mut rhs = CMat::zeros((nn, 2));
    m.slice_mut(s![..n, ..]).assign(&sys.am.mapv(|v| -v));
    for r in 0..n {
        m[[r, r + 1]] += cplx(lambda);
        rhs.row_mut(r).assign(&g.row(r + 1));
    }
    // extrapolated end values of f vanish
    for (row, idx) in [(n, [1, 2, 3]), (n + 1, [n, n - 1, n - 2])] {
        m[[row, idx[0]]] = cplx(3.0);
        m[[row, idx[1]]] = cplx(-3.0);
        m[[row, idx[2]]] = cplx(1.0);
    }
    let condition = equilibrated_cond(&m)?;
    if !(condition <= BORDERED_COND_MAX) {
        return Err(Error::Numeric(format!("A_0 - lambda is singular (cond {condition:.2e})")));
    }
    let f = linalg::solve_mat(&m, &rhs)?;
    let full = g.mapv(|v| v / lambda) - f;
    let interior = full.select(Axis(0), &sys.interior);
    Ok(DirichletOperator {
        lambda: cplx(lambda),
        matrix: OperatorBlock::new(sys.boundary.clone(), sys.state.clone(), interior)?,
        full,
        construction: DirichletConstruction::ResolventFormula,
        condition,
    })
}

/// Derivative of the lifted function at the interior nodes (central differences
/// on the full grid), used as the Z = C^1 graph part.
pub fn derivative_block(sys: &BoundarySystem) -> Result<OperatorBlock> {
    let j = sys.lift(false)?;
    let g = sys.full.grid();
    let h = g[1] - g[0];
    let nn = g.len();
    let mut d = CMat::zeros((nn, nn));
    for i in 0..nn {
        let (lo, hi) = if i == 0 {
            (0, 1)
        } else if i == nn - 1 {
            (nn - 2, nn - 1)
        } else {
            (i - 1, i + 1)
        };
        let w = 1.0 / ((hi - lo) as f64 * h);
        d[[i, hi]] += cplx(w);
        d[[i, lo]] -= cplx(w);
    }
    OperatorBlock::new(sys.state.clone(), sys.full.clone(), d.dot(&j))
}

/// Reduced triple (A, L_A, Phi J_Phi) with Z = C^1 when Phi reads derivatives.
pub fn wentzell_triple(prob: &WentzellProblem, sys: &BoundarySystem) -> Result<ControlObsTriple> {
    let z = if prob.uses_derivative() {
        ZDescriptor::GraphDomain(derivative_block(sys)?)
    } else {
        ZDescriptor::FullSpace
    };
    boundary_triple(sys, z)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeTrajectory {
    pub times: Vec<f64>,
    pub grid: Vec<f64>,
    /// Full-grid real parts, one row per time.
    pub states: Vec<Vec<f64>>,
    pub sup_norms: Vec<f64>,
    /// max_t |(Am u)(j) - phi_j(u)| / max(1, ||u||)
    pub constraint_residual: f64,
    pub growth_rate: f64,
    pub growth_constant: f64,
}

/// Projects full-grid samples onto the discrete domain {L f = Phi f} by
/// re-solving the end values.
pub fn project_to_domain(sys: &BoundarySystem, f: &CVec) -> Result<CVec> {
    let j = sys.lift(true)?;
    let x: CVec = sys.interior.iter().map(|&i| f[i]).collect();
    Ok(j.dot(&x))
}

/// sin(pi s) + 0.3 cos(3 pi s) moved onto the constraint set.
pub fn smooth_initial(sys: &BoundarySystem) -> Result<CVec> {
    let f: CVec = sys
        .full
        .grid()
        .iter()
        .map(|s| cplx((PI * s).sin() + 0.3 * (3.0 * PI * s).cos()))
        .collect();
    project_to_domain(sys, &f)
}

fn constraint_residual(sys: &BoundarySystem, f: &CVec) -> f64 {
    let r = sys.l.dot(f) - sys.phi.dot(f);
    let scale = f.iter().map(|v| v.norm()).fold(1.0, f64::max);
    r.iter().map(|v| v.norm()).fold(0.0, f64::max) / scale
}

/// Trajectory of the Wentzell problem from a full-grid initial vector.
pub fn solve_de(sys: &BoundarySystem, f0: &CVec, t_final: f64, steps: usize) -> Result<DeTrajectory> {
    if f0.len() != sys.full.dim() {
        return Err(Error::Dimension { expected: sys.full.dim(), got: f0.len() });
    }
    if !(t_final > 0.0) || steps == 0 {
        return Err(Error::Domain("need t_final > 0 and steps >= 1".into()));
    }
    let r0 = constraint_residual(sys, f0);
    // the stencils carry 1/h^2, so measure against the operator scale
    let tol = 1e-8 * linalg::norm_inf(sys.l.view()).max(1.0);
    if r0 > tol {
        return Err(Error::Domain(format!(
            "initial value violates the boundary condition (residual {r0:.2e})"
        )));
    }
    let pg = assemble_g(sys)?;
    let j = pg.lift.clone().expect("boundary assembly carries its lift");
    let h = t_final / steps as f64;
    let e = pg.generator.semigroup(h)?;
    let mut x: CVec = sys.interior.iter().map(|&i| f0[i]).collect();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut sup_norms = Vec::with_capacity(steps + 1);
    let mut worst = 0.0f64;
    for k in 0..=steps {
        if k > 0 {
            x = e.dot(&x);
        }
        let full = if k == 0 { f0.clone() } else { j.dot(&x) };
        worst = worst.max(constraint_residual(sys, &full) / linalg::norm_inf(sys.l.view()).max(1.0));
        times.push(k as f64 * h);
        sup_norms.push(sys.full.norm(full.view())?);
        states.push(full.iter().map(|v| v.re).collect());
    }
    let growth_rate = pg.generator.growth_bound();
    let n0 = sup_norms[0].max(f64::MIN_POSITIVE);
    let growth_constant = times
        .iter()
        .zip(&sup_norms)
        .map(|(t, v)| v / n0 * (-growth_rate * t).exp())
        .fold(0.0, f64::max);
    Ok(DeTrajectory {
        times,
        grid: sys.full.grid().to_vec(),
        states,
        sup_norms,
        constraint_residual: worst,
        growth_rate,
        growth_constant,
    })
}
