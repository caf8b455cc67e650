//! Boundary-perturbed generators in reduced coordinates.
//!
//! A system lives on `N` full coordinates. The boundary rows `L` (values in
//! the boundary space) and the domain rows `dom` (always imposed, e.g. a
//! homogeneous Dirichlet end) are solved for an eliminated index set `E`,
//! leaving the state on the interior set `I`. With `Lambda = [L; dom]`:
//!
//! * `J0 = [I; -Lambda_E^{-1} Lambda_I]` lifts a state to `ker L`,
//! * `A = Am J0` is the generator with homogeneous boundary conditions,
//! * `L_A = Am_E Lambda_E^{-1} [I; 0]` is the extrapolated Dirichlet lift,
//!   independent of lambda by construction,
//! * `J_Phi` lifts onto `{L x = Phi x}` and `G = (Am + P) J_Phi`.

use ndarray::{concatenate, s, Axis};
use serde::{Deserialize, Serialize};

use crate::admissibility::{
    build_io_map, feedback_check_matrix, ControlObsTriple, FeedbackReport, InputOutputMap, ZDescriptor,
};
use crate::analytic_perturb::PerturbedGenerator;
use crate::error::{check_len, Error, Result};
use crate::linalg::{self, c64, cplx, CMat, CVec};
use crate::operator_core::{induced_norm, DiscreteSpace, GeneratorRep, NormKind, OperatorBlock};
use crate::report::Verdict;
use crate::scales::{favard_norm_on, top_decade_slope, FavardTarget, SLOPE_THRESHOLD};

/// Largest row-equilibrated condition number accepted for the bordered kernel system.
pub const BORDERED_COND_MAX: f64 = 1e10;
/// Tolerance for the Dirichlet invariants and the cross-route comparisons.
pub const DIRICHLET_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BoundarySystem {
    /// All coordinates, boundary nodes included.
    pub full: DiscreteSpace,
    /// The state space X on the interior coordinates.
    pub state: DiscreteSpace,
    pub boundary: DiscreteSpace,
    pub interior: Vec<usize>,
    pub eliminated: Vec<usize>,
    /// Maximal operator, rows at the interior coordinates (|I| x N).
    pub am: CMat,
    /// Boundary operator (k x N).
    pub l: CMat,
    /// Homogeneous constraints kept in every domain (kd x N).
    pub dom: CMat,
    /// Interior perturbation Z -> X (|I| x N).
    pub p: CMat,
    /// Boundary perturbation Z -> dX (k x N).
    pub phi: CMat,
    pub mu: c64,
    a: GeneratorRep,
    l_a: CMat,
}

fn gather_cols(m: &CMat, idx: &[usize]) -> CMat {
    m.select(Axis(1), idx)
}

impl BoundarySystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        full: DiscreteSpace,
        state: DiscreteSpace,
        boundary: DiscreteSpace,
        interior: Vec<usize>,
        am: CMat,
        l: CMat,
        dom: CMat,
        p: CMat,
        phi: CMat,
        mu: c64,
    ) -> Result<Self> {
        let n = full.dim();
        let k = boundary.dim();
        let ni = interior.len();
        check_len(ni, state.dim())?;
        if interior.iter().any(|&i| i >= n) || interior.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("interior indices must be increasing and in range".into()));
        }
        let eliminated: Vec<usize> = (0..n).filter(|i| !interior.contains(i)).collect();
        for (name, m, rows) in [("Am", &am, ni), ("L", &l, k), ("P", &p, ni), ("Phi", &phi, k)] {
            if m.dim() != (rows, n) {
                return Err(Error::Domain(format!(
                    "{name} has shape {:?}, expected ({rows}, {n})",
                    m.dim()
                )));
            }
        }
        if dom.ncols() != n && dom.nrows() > 0 {
            return Err(Error::Dimension { expected: n, got: dom.ncols() });
        }
        if k + dom.nrows() != eliminated.len() {
            return Err(Error::Domain(format!(
                "{} boundary and domain rows cannot eliminate {} coordinates",
                k + dom.nrows(),
                eliminated.len()
            )));
        }
        let dom = if dom.nrows() == 0 { CMat::zeros((0, n)) } else { dom };
        let mut sys = Self {
            full,
            state,
            boundary,
            interior,
            eliminated,
            am,
            l,
            dom,
            p,
            phi,
            mu,
            a: GeneratorRep::new(DiscreteSpace::coordinates(1, NormKind::Sup)?, CMat::zeros((1, 1)))?,
            l_a: CMat::zeros((0, 0)),
        };
        let j0 = sys.lift(false)?;
        sys.a = GeneratorRep::new(sys.state.clone(), sys.am.dot(&j0))?;
        let lam_e = gather_cols(&sys.constraints(false), &sys.eliminated);
        let mut rhs = CMat::zeros((sys.eliminated.len(), k));
        rhs.slice_mut(s![..k, ..]).assign(&linalg::eye(k));
        let z = linalg::solve_mat(&lam_e, &rhs)?;
        sys.l_a = gather_cols(&sys.am, &sys.eliminated).dot(&z);
        // Assumption on mu: the Dirichlet problem at mu must be solvable.
        dirichlet_solve(&sys, mu)?;
        Ok(sys)
    }

    /// `[L - Phi; dom]` when `perturbed`, `[L; dom]` otherwise.
    fn constraints(&self, perturbed: bool) -> CMat {
        let top = if perturbed { &self.l - &self.phi } else { self.l.clone() };
        concatenate![Axis(0), top, self.dom]
    }

    /// Lift from X onto `{L x = 0}` (or `{L x = Phi x}` when `perturbed`), N x |I|.
    pub fn lift(&self, perturbed: bool) -> Result<CMat> {
        let c = self.constraints(perturbed);
        let ce = gather_cols(&c, &self.eliminated);
        let ci = gather_cols(&c, &self.interior);
        let cond = equilibrated_cond(&ce)?;
        if cond > BORDERED_COND_MAX {
            return Err(Error::Numeric(format!(
                "boundary constraints do not determine the eliminated coordinates (cond {cond:.2e})"
            )));
        }
        let e = linalg::solve_mat(&ce, &ci)?.mapv(|v| -v);
        let mut j = CMat::zeros((self.full.dim(), self.interior.len()));
        for (r, &i) in self.interior.iter().enumerate() {
            j[[i, r]] = cplx(1.0);
        }
        for (r, &i) in self.eliminated.iter().enumerate() {
            j.row_mut(i).assign(&e.row(r));
        }
        Ok(j)
    }

    /// Generator with homogeneous boundary conditions.
    pub fn base_generator(&self) -> &GeneratorRep {
        &self.a
    }

    /// Extrapolated lift L_A = (lambda - A_{-1}) L_lambda as an |I| x k matrix.
    pub fn l_a(&self) -> &CMat {
        &self.l_a
    }

    pub fn boundary_dim(&self) -> usize {
        self.boundary.dim()
    }

    /// Same system with a different boundary perturbation.
    pub fn with_phi(&self, phi: CMat) -> Result<Self> {
        check_len(self.phi.nrows(), phi.nrows())?;
        check_len(self.phi.ncols(), phi.ncols())?;
        Ok(Self { phi, ..self.clone() })
    }

    /// Same system with a different interior perturbation.
    pub fn with_p(&self, p: CMat) -> Result<Self> {
        check_len(self.p.nrows(), p.nrows())?;
        check_len(self.p.ncols(), p.ncols())?;
        Ok(Self { p, ..self.clone() })
    }

    fn interior_rows(&self, full: &CMat) -> CMat {
        full.select(Axis(0), &self.interior)
    }
}

/// Condition number after scaling every row to unit max-norm.
pub fn equilibrated_cond(m: &CMat) -> Result<f64> {
    let mut s = m.clone();
    for mut r in s.rows_mut() {
        let mx = r.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if mx > 0.0 {
            r.mapv_inplace(|v| v / mx);
        }
    }
    linalg::cond2(&s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirichletConstruction {
    DirectKernelSolve,
    ResolventFormula,
}

#[derive(Debug, Clone)]
pub struct DirichletOperator {
    pub lambda: c64,
    /// dX -> X on the interior coordinates.
    pub matrix: OperatorBlock,
    /// Full-coordinate values, N x k.
    pub full: CMat,
    pub construction: DirichletConstruction,
    /// Row-equilibrated condition number of the system that produced it.
    pub condition: f64,
}

impl DirichletOperator {
    /// Norm as a map from the boundary space into the full-coordinate space.
    pub fn full_norm(&self, sys: &BoundarySystem) -> f64 {
        induced_norm(&sys.boundary, &sys.full, self.full.view()).upper
    }

    /// (max |L L_lambda - I|, max |(lambda - Am) L_lambda| / (||Am|| max |L_lambda|)).
    pub fn invariant_residuals(&self, sys: &BoundarySystem) -> (f64, f64) {
        let k = sys.boundary_dim();
        let trace = max_abs(&(sys.l.dot(&self.full) - linalg::eye(k)));
        let dom = max_abs(&sys.dom.dot(&self.full));
        let kern = sys.interior_rows(&self.full).mapv(|v| v * self.lambda) - sys.am.dot(&self.full);
        let scale = linalg::norm_inf(sys.am.view()) * max_abs(&self.full).max(f64::MIN_POSITIVE);
        (trace.max(dom), max_abs(&kern) / scale)
    }
}

pub(crate) fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn check_lambda(sys: &BoundarySystem, lambda: c64) -> Result<()> {
    // Refuse points on the spectrum of A; the resolvent check carries the tolerance.
    sys.a.resolvent_solve(lambda, &CMat::zeros((sys.a.dim(), 1))).map(|_| ())
}

/// Solves `(lambda - Am) x = 0, L x = d, dom x = 0` for each boundary basis vector.
pub fn dirichlet_solve(sys: &BoundarySystem, lambda: c64) -> Result<DirichletOperator> {
    check_lambda(sys, lambda)?;
    let n = sys.full.dim();
    let k = sys.boundary_dim();
    let ni = sys.interior.len();
    let mut top = sys.am.mapv(|v| -v);
    for (r, &i) in sys.interior.iter().enumerate() {
        top[[r, i]] += lambda;
    }
    let m = concatenate![Axis(0), top, sys.l, sys.dom];
    let condition = equilibrated_cond(&m)?;
    if !(condition <= BORDERED_COND_MAX) {
        return Err(Error::Numeric(format!(
            "boundary operator is not surjective on the kernel at lambda = {lambda} (cond {condition:.2e})"
        )));
    }
    let mut rhs = CMat::zeros((n, k));
    rhs.slice_mut(s![ni..ni + k, ..]).assign(&linalg::eye(k));
    let full = linalg::solve_mat(&m, &rhs)?;
    finish(sys, lambda, full, DirichletConstruction::DirectKernelSolve, condition)
}

fn finish(
    sys: &BoundarySystem,
    lambda: c64,
    full: CMat,
    construction: DirichletConstruction,
    condition: f64,
) -> Result<DirichletOperator> {
    let interior = sys.interior_rows(&full);
    Ok(DirichletOperator {
        lambda,
        matrix: OperatorBlock::new(sys.boundary.clone(), sys.state.clone(), interior)?,
        full,
        construction,
        condition,
    })
}

/// Rebuilds full coordinates from interior values of a function with trace d.
fn reconstruct(sys: &BoundarySystem, interior: &CMat) -> Result<CMat> {
    let k = sys.boundary_dim();
    let c = sys.constraints(false);
    let ce = gather_cols(&c, &sys.eliminated);
    let ci = gather_cols(&c, &sys.interior);
    let mut rhs = ci.dot(interior).mapv(|v| -v);
    for j in 0..k {
        rhs[[j, j]] += cplx(1.0);
    }
    let fe = linalg::solve_mat(&ce, &rhs)?;
    let mut full = CMat::zeros((sys.full.dim(), k));
    for (r, &i) in sys.interior.iter().enumerate() {
        full.row_mut(i).assign(&interior.row(r));
    }
    for (r, &i) in sys.eliminated.iter().enumerate() {
        full.row_mut(i).assign(&fe.row(r));
    }
    Ok(full)
}

/// L_lambda = (mu - A) R(lambda, A) L_mu with L_mu from the kernel solve.
pub fn dirichlet_from_resolvent(sys: &BoundarySystem, lambda: c64, mu: c64) -> Result<DirichletOperator> {
    check_lambda(sys, lambda)?;
    let lmu = dirichlet_solve(sys, mu)?;
    if lambda == mu {
        return Ok(DirichletOperator {
            construction: DirichletConstruction::ResolventFormula,
            ..lmu
        });
    }
    let rl = sys.a.resolvent_solve(lambda, &lmu.matrix.matrix)?;
    let interior = rl.mapv(|v| v * mu) - sys.a.matrix().dot(&rl);
    let full = reconstruct(sys, &interior)?;
    finish(sys, lambda, full, DirichletConstruction::ResolventFormula, lmu.condition)
}

/// Relative max-entry difference of two matrices.
pub fn relative_diff(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(f64::MIN_POSITIVE)
}

/// Direct solve vs resolvent formula at lambda from mu.
pub fn cross_route_residual(sys: &BoundarySystem, lambda: c64, mu: c64) -> Result<f64> {
    let d = dirichlet_solve(sys, lambda)?;
    let f = dirichlet_from_resolvent(sys, lambda, mu)?;
    Ok(relative_diff(&f.full, &d.full))
}

/// Max pairwise relative difference of (lambda - A) L_lambda over the samples,
/// with L_lambda from the kernel solve. Also compared against the closed form L_A.
pub fn la_independence(sys: &BoundarySystem, lambdas: &[c64]) -> Result<f64> {
    if lambdas.len() < 2 {
        return Err(Error::Precondition("need at least two lambda samples".into()));
    }
    let mut las = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let d = dirichlet_solve(sys, l)?;
        let x = &d.matrix.matrix;
        las.push(x.mapv(|v| v * l) - sys.a.matrix().dot(x));
    }
    let mut worst = 0.0f64;
    for i in 0..las.len() {
        worst = worst.max(relative_diff(&las[i], &sys.l_a));
        for j in 0..i {
            worst = worst.max(relative_diff(&las[i], &las[j]));
        }
    }
    Ok(worst)
}

/// G = (Am + P) on the domain {L x = Phi x, dom x = 0}.
pub fn assemble_g(sys: &BoundarySystem) -> Result<PerturbedGenerator> {
    let j = sys.lift(true).map_err(|e| Error::Numeric(format!("assembly failed: {e}")))?;
    let g = (&sys.am + &sys.p).dot(&j);
    let triple = block_encoding(sys, ZDescriptor::GraphDomain(OperatorBlock::new(
        sys.state.clone(),
        sys.full.clone(),
        j.clone(),
    )?))?;
    Ok(PerturbedGenerator {
        generator: GeneratorRep::new(sys.state.clone(), g)?,
        base: triple,
        lift: Some(j),
    })
}

/// Product space V x W with concatenated weights (sup when both are sup).
pub fn product_space(v: &DiscreteSpace, w: &DiscreteSpace) -> Result<DiscreteSpace> {
    let n = v.dim() + w.dim();
    let grid: Vec<f64> = (0..n).map(|i| i as f64).collect();
    match (v.kind(), w.kind()) {
        (NormKind::Sup, NormKind::Sup) => DiscreteSpace::sup(grid),
        (NormKind::WeightedP(p), NormKind::WeightedP(q)) if p == q => {
            let mut wt = v.weights().map(|x| x.to_vec()).unwrap_or_default();
            wt.extend_from_slice(w.weights().unwrap_or(&[]));
            let m = v.measure() + w.measure();
            DiscreteSpace::lp_weighted(grid, p, wt, m)
        }
        _ => Err(Error::Domain("product of spaces with different norms".into())),
    }
}

/// Effective observation (P; Phi) J_Phi on X coordinates.
pub fn effective_observation(sys: &BoundarySystem) -> Result<CMat> {
    let j = sys.lift(true)?;
    Ok(concatenate![Axis(0), sys.p, sys.phi].dot(&j))
}

/// Triple (A, B, C) with U = X x dX, B = (Id, L_A), C = (P; Phi) J_Phi.
///
/// Composing with the lift J_Phi gives A + B C = G exactly on the discrete level.
pub fn block_encoding(sys: &BoundarySystem, z: ZDescriptor) -> Result<ControlObsTriple> {
    let ni = sys.interior.len();
    let u = product_space(&sys.state, &sys.boundary)?;
    let b = concatenate![Axis(1), linalg::eye(ni), sys.l_a];
    let c = effective_observation(sys)?;
    ControlObsTriple::new(
        sys.a.clone(),
        OperatorBlock::new(u.clone(), sys.state.clone(), b)?,
        OperatorBlock::new(sys.state.clone(), u, c)?,
        z,
    )
}

/// Triple (A, L_A, Phi J_Phi) with U = Y = dX, the P = 0 reduction.
pub fn boundary_triple(sys: &BoundarySystem, z: ZDescriptor) -> Result<ControlObsTriple> {
    let j = sys.lift(true)?;
    ControlObsTriple::new(
        sys.a.clone(),
        OperatorBlock::new(sys.boundary.clone(), sys.state.clone(), sys.l_a.clone())?,
        OperatorBlock::new(sys.state.clone(), sys.boundary.clone(), sys.phi.dot(&j))?,
        z,
    )
}

/// Rightmost `k` eigenvalues sorted by decreasing real part, then imaginary part.
pub fn rightmost(ev: &CVec, k: usize) -> Vec<c64> {
    let mut v: Vec<c64> = ev.to_vec();
    v.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    v.truncate(k);
    v
}

/// Max relative gap between the rightmost `k` eigenvalues of two generators.
pub fn spectral_gap(a: &GeneratorRep, b: &GeneratorRep, k: usize) -> f64 {
    let ra = rightmost(a.eigenvalues(), k);
    let rb = rightmost(b.eigenvalues(), k);
    ra.iter()
        .zip(&rb)
        .map(|(x, y)| (x - y).norm() / y.norm().max(1.0))
        .fold(0.0, f64::max)
}

/// Residuals of the identity L (x - L_lambda Phi x) = L x - Phi x and of the
/// kernel membership for x in the perturbed domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionCheck {
    /// Identity residual on arbitrary full vectors with dom x = 0.
    pub identity: f64,
    /// |L (x - L_lambda Phi x)| for x = J_Phi y.
    pub kernel: f64,
}

pub fn boundary_projection_check(sys: &BoundarySystem, lambda: c64, samples: &[CVec]) -> Result<ProjectionCheck> {
    let d = dirichlet_solve(sys, lambda)?;
    let j0 = sys.lift(false)?;
    let jp = sys.lift(true)?;
    let mut identity = 0.0f64;
    let mut kernel = 0.0f64;
    for y in samples {
        check_len(sys.interior.len(), y.len())?;
        // A full vector with dom x = 0 but arbitrary trace: J0 y + a boundary lift.
        let x: CVec = j0.dot(y) + d.full.dot(&CVec::from_elem(sys.boundary_dim(), cplx(1.0)));
        let lhs = sys.l.dot(&(&x - &d.full.dot(&sys.phi.dot(&x))));
        let rhs = sys.l.dot(&x) - sys.phi.dot(&x);
        let scale = linalg::vec_norm2(rhs.view()).max(linalg::vec_norm2(sys.l.dot(&x).view())).max(1.0);
        identity = identity.max(linalg::vec_norm2((&lhs - &rhs).view()) / scale);
        let z = jp.dot(y);
        let r = sys.l.dot(&(&z - &d.full.dot(&sys.phi.dot(&z))));
        let zs = linalg::vec_norm2(sys.l.dot(&z).view()).max(1.0);
        kernel = kernel.max(linalg::vec_norm2(r.view()) / zs);
    }
    Ok(ProjectionCheck { identity, kernel })
}

/// Aligned, weight-scaled square realization of an input-output map with any fibers.
pub fn aligned_matrix(f: &InputOutputMap) -> CMat {
    let m = f.steps();
    let mut k = f.block_matrix.slice(s![f.ly.., ..]).to_owned();
    for i in 0..m * f.ly {
        for j in 0..m * f.ku {
            k[[i, j]] *= f.y_weights[i % f.ly].sqrt() / f.u_weights[j % f.ku].sqrt();
        }
    }
    k
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockFeedbackReport {
    /// Feedback on the (L_A, Phi) sub-map alone.
    pub sub: FeedbackReport,
    /// Feedback on the full 2x2 block map.
    pub full: FeedbackReport,
    /// 2-norm of F_XX + F_Xd (I - F_dd)^{-1} F_dX; below 1 the sub-map verdict carries over.
    pub remaining_gain: f64,
    pub verdict: Verdict,
}

/// Combines the four aligned blocks `[[f11, f12], [f21, f22]]` where f22 is the
/// boundary-to-boundary map.
pub fn block_feedback_from_blocks(f11: &CMat, f12: &CMat, f21: &CMat, f22: &CMat) -> Result<BlockFeedbackReport> {
    let sub = feedback_check_matrix(f22);
    let top = concatenate![Axis(1), *f11, *f12];
    let bot = concatenate![Axis(1), *f21, *f22];
    let full = feedback_check_matrix(&concatenate![Axis(0), top, bot]);
    let remaining_gain = if sub.verdict.is_pass() {
        let id = linalg::eye(f22.nrows());
        let x = linalg::solve_mat(&(id - f22), f21)?;
        linalg::spectral_norm(&(f11 + &f12.dot(&x)))?
    } else {
        f64::INFINITY
    };
    let verdict = if !sub.verdict.is_pass() || !full.verdict.is_pass() {
        Verdict::Fail
    } else if remaining_gain < 1.0 {
        Verdict::Pass
    } else {
        Verdict::Suspect
    };
    Ok(BlockFeedbackReport { sub, full, remaining_gain, verdict })
}

/// Block input-output check for U = Y = X x dX with time step t/m.
pub fn block_feedback_check(sys: &BoundarySystem, p: f64, t: f64, m: usize) -> Result<BlockFeedbackReport> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p = {p} must exceed 1")));
    }
    let ni = sys.interior.len();
    let k = sys.boundary_dim();
    let tr = block_encoding(sys, ZDescriptor::FullSpace)?;
    let f = build_io_map(&tr, t, m, p)?;
    let full = aligned_matrix(&f);
    let ku = ni + k;
    // Reorder from time-major to component-major blocks.
    let pick = |range: std::ops::Range<usize>| -> Vec<usize> {
        (0..m).flat_map(|c| range.clone().map(move |i| c * ku + i)).collect()
    };
    let xi = pick(0..ni);
    let di = pick(ni..ni + k);
    let sub = |r: &[usize], c: &[usize]| full.select(Axis(0), r).select(Axis(1), c);
    block_feedback_from_blocks(&sub(&xi, &xi), &sub(&xi, &di), &sub(&di, &xi), &sub(&di, &di))
}

/// Agreement of the three characterizations of Dirichlet-operator decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEquivalence {
    pub alpha: f64,
    pub lambdas: Vec<f64>,
    /// lambda^alpha ||L_lambda||
    pub a_values: Vec<f64>,
    /// min over boundary probes of ||d|| / (lambda^alpha ||L_lambda d||)
    pub b_values: Vec<f64>,
    /// Favard-alpha estimates of the kernel elements at mu
    pub c_values: Vec<f64>,
    pub a_verdict: Verdict,
    pub b_verdict: Verdict,
    pub c_verdict: Verdict,
    pub agree: bool,
}

fn bounded_verdict(grid: &[f64], samples: &[f64]) -> Verdict {
    if samples.iter().any(|v| !v.is_finite()) {
        return Verdict::Fail;
    }
    if top_decade_slope(grid, samples) > SLOPE_THRESHOLD {
        Verdict::Suspect
    } else {
        Verdict::Pass
    }
}

/// Evaluates (a) the decay of lambda^alpha L_lambda, (b) the lower bound of
/// ||L x|| on kernels, (c) the Favard membership of ker(mu - Am).
pub fn decay_equivalences(sys: &BoundarySystem, alpha: f64, lambdas: &[f64]) -> Result<DecayEquivalence> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} not in (0, 1]")));
    }
    let k = sys.boundary_dim();
    let mut probes: Vec<CVec> = (0..k)
        .map(|i| {
            let mut e = CVec::zeros(k);
            e[i] = cplx(1.0);
            e
        })
        .collect();
    if k > 1 {
        probes.push(CVec::from_elem(k, cplx(1.0)));
    }
    let mut a_values = Vec::with_capacity(lambdas.len());
    let mut b_values = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let d = dirichlet_solve(sys, cplx(l))?;
        a_values.push(l.powf(alpha) * d.full_norm(sys));
        let mut b = f64::INFINITY;
        for e in &probes {
            let x = d.full.dot(e);
            let lx = sys.l.dot(&x);
            let nl = sys.boundary.norm(lx.view())?;
            let nx = sys.full.norm(x.view())?;
            b = b.min(nl / (l.powf(alpha) * nx));
        }
        b_values.push(b);
    }
    let lmu = dirichlet_solve(sys, sys.mu)?;
    let mut c_values = vec![0.0f64; lambdas.len()];
    for e in &probes {
        let x = lmu.matrix.matrix.dot(e);
        let fav = favard_norm_on(&sys.a, alpha, FavardTarget::Vector(&x), lambdas)?;
        let nx = sys.state.norm(x.view())?.max(f64::MIN_POSITIVE);
        for (c, s) in c_values.iter_mut().zip(&fav.samples) {
            *c = (*c).max(s / nx);
        }
    }
    let a_verdict = bounded_verdict(lambdas, &a_values);
    let inv_b: Vec<f64> = b_values.iter().map(|v| 1.0 / v.max(f64::MIN_POSITIVE)).collect();
    let b_verdict = bounded_verdict(lambdas, &inv_b);
    let c_verdict = bounded_verdict(lambdas, &c_values);
    Ok(DecayEquivalence {
        alpha,
        lambdas: lambdas.to_vec(),
        a_values,
        b_values,
        c_values,
        agree: a_verdict == b_verdict && b_verdict == c_verdict,
        a_verdict,
        b_verdict,
        c_verdict,
    })
}

/// Restriction of a full-coordinate vector to the state coordinates.
pub fn to_state(sys: &BoundarySystem, x: &CVec) -> CVec {
    sys.interior.iter().map(|&i| x[i]).collect()
}

/// Input-output map F^{(A, L_A, Phi J_Phi)} of the reduced boundary triple.
pub fn boundary_io_map(sys: &BoundarySystem, t: f64, m: usize, p: f64) -> Result<InputOutputMap> {
    build_io_map(&boundary_triple(sys, ZDescriptor::FullSpace)?, t, m, p)
}
