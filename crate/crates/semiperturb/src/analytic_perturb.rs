//! Perturbations A_BC = (A_{-1} + B C)|_X of analytic generators: hypothesis
//! certificates, the small-time scaling of F_t, and checks of the perturbed
//! semigroup.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admissibility::{build_io_map, exp_integrator, io_norm, probe_interval, ControlObsTriple, ZDescriptor};
use crate::error::{Error, Result};
use crate::linalg::{self, cplx, CMat, CVec};
use crate::models::{band_limited_probes, ProbeBasis};
use crate::operator_core::{certify_sector, DiscreteSpace, GeneratorRep, OperatorBlock, SectorCertificate};
use crate::report::Verdict;
use crate::scales::{drift, fractional_power, favard_norm, FavardEstimate, FavardTarget, PLATEAU_DRIFT};

/// Dense realization of (A_{-1} + B C)|_X.
#[derive(Debug, Clone)]
pub struct PerturbedGenerator {
    pub base: ControlObsTriple,
    pub generator: GeneratorRep,
    /// Lift of the domain into full coordinates when the perturbation comes
    /// from boundary conditions.
    pub lift: Option<CMat>,
}

impl PerturbedGenerator {
    /// B C on X coordinates.
    pub fn perturbation(&self) -> CMat {
        self.base.b.matrix.dot(&self.base.c.matrix)
    }
}

/// A + B C; errors when U does not match between B and C.
pub fn build_perturbed(triple: &ControlObsTriple) -> Result<PerturbedGenerator> {
    if triple.b.matrix.ncols() != triple.c.matrix.nrows() {
        return Err(Error::Precondition(format!(
            "incompatible triple: B takes {} inputs, C returns {} outputs",
            triple.b.matrix.ncols(),
            triple.c.matrix.nrows()
        )));
    }
    let g = triple.a.matrix() + &triple.b.matrix.dot(&triple.c.matrix);
    Ok(PerturbedGenerator {
        base: triple.clone(),
        generator: GeneratorRep::new(triple.a.space().clone(), g)?,
        lift: None,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyticCertificate {
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Fav_{1-beta} estimate of R(lambda, A_{-1}) B.
    pub range_check: FavardEstimate,
    pub range_verdict: Verdict,
    /// sup over probes of ||x||_Z / (||(lambda - A)^gamma x|| + ||x||).
    pub domain_constant: f64,
    pub sum_ok: bool,
    /// Open interval (1/(1-beta), 1/gamma).
    pub p_range: (f64, f64),
    /// p = 1 is admissible too when beta = 0.
    pub includes_p1: bool,
}

impl AnalyticCertificate {
    pub fn admits(&self, p: f64) -> bool {
        (p > self.p_range.0 && p < self.p_range.1) || (self.includes_p1 && p == 1.0 && self.p_range.1 > 1.0)
    }

    pub fn verdict(&self) -> Verdict {
        if !self.sum_ok {
            return Verdict::Fail;
        }
        self.range_verdict
    }
}

/// Open p-interval and p = 1 flag from beta and gamma.
pub fn admissible_p_range(beta: f64, gamma: f64) -> ((f64, f64), bool) {
    let lo = if beta >= 1.0 { f64::INFINITY } else { 1.0 / (1.0 - beta) };
    ((lo, 1.0 / gamma), beta == 0.0)
}

fn z_norm(z: &ZDescriptor, a: &GeneratorRep, lambda: f64, x: &CVec) -> Result<f64> {
    let sp = a.space();
    Ok(match z {
        ZDescriptor::FullSpace => sp.norm(x.view())?,
        ZDescriptor::FractionalDomain(g) => {
            let m = fractional_power(a, lambda, *g)?;
            sp.norm(m.matrix.dot(x).view())?
        }
        ZDescriptor::GraphDomain(k) => k.codomain.norm(k.matrix.dot(x).view())? + sp.norm(x.view())?,
    })
}

fn smooth_probes(space: &DiscreteSpace, count: usize, seed: u64) -> Vec<CVec> {
    let grid = space.grid();
    let (lo, hi) = probe_interval(grid);
    band_limited_probes(grid, lo, hi, count, 8, ProbeBasis::Sine, seed)
}

/// Hypotheses (i)-(iii) for one triple.
pub fn certify(triple: &ControlObsTriple, beta: f64, gamma: f64, lambda: f64) -> Result<AnalyticCertificate> {
    let a = &triple.a;
    if !(lambda > a.growth_bound()) {
        return Err(Error::Precondition(format!(
            "lambda = {lambda} must exceed the growth bound {}",
            a.growth_bound()
        )));
    }
    if !(beta >= 0.0) {
        return Err(Error::Precondition(format!("beta = {beta} must be >= 0")));
    }
    if !(gamma > 0.0) {
        return Err(Error::Precondition(format!("gamma = {gamma} must be positive")));
    }
    let alpha = 1.0 - beta;
    let range_check = if alpha > 0.0 {
        let rb = a.resolvent_solve(cplx(lambda), &triple.b.matrix)?;
        let op = OperatorBlock::new(triple.b.domain.clone(), a.space().clone(), rb)?;
        favard_norm(a, alpha.min(1.0), FavardTarget::Operator(&op))?
    } else {
        return Err(Error::Domain(format!("beta = {beta} leaves no Favard order")));
    };
    let range_verdict = if range_check.unbounded_suspect {
        Verdict::Suspect
    } else {
        Verdict::Pass
    };
    let pow = fractional_power(a, lambda, gamma.min(1.0))?;
    let mut domain_constant = 0.0f64;
    for x in smooth_probes(a.space(), 16, 0x2a) {
        let den = a.space().norm(pow.matrix.dot(&x).view())? + a.space().norm(x.view())?;
        if den > 0.0 {
            domain_constant = domain_constant.max(z_norm(&triple.z, a, lambda, &x)? / den);
        }
    }
    let (p_range, includes_p1) = admissible_p_range(beta, gamma);
    Ok(AnalyticCertificate {
        beta,
        gamma,
        lambda,
        range_check,
        range_verdict,
        domain_constant,
        sum_ok: beta + gamma < 1.0,
        p_range,
        includes_p1,
    })
}

/// Certificates over a mesh family with plateau verdicts on both constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateFamily {
    pub meshes: Vec<usize>,
    pub certificates: Vec<AnalyticCertificate>,
    pub range_drift: f64,
    pub domain_drift: f64,
    pub verdict: Verdict,
}

pub fn certify_family(
    family: &[(usize, ControlObsTriple)],
    beta: f64,
    gamma: f64,
    lambda: f64,
) -> Result<CertificateFamily> {
    let certificates = family
        .par_iter()
        .map(|(_, t)| certify(t, beta, gamma, lambda))
        .collect::<Result<Vec<_>>>()?;
    let range_drift = drift(&certificates.iter().map(|c| c.range_check.value).collect::<Vec<_>>());
    let domain_drift = drift(&certificates.iter().map(|c| c.domain_constant).collect::<Vec<_>>());
    let mut verdict = certificates.iter().fold(Verdict::Pass, |v, c| v.and(c.verdict()));
    if verdict.is_pass() && (range_drift > PLATEAU_DRIFT || domain_drift > PLATEAU_DRIFT) {
        verdict = Verdict::Suspect;
    }
    Ok(CertificateFamily {
        meshes: family.iter().map(|(n, _)| *n).collect(),
        certificates,
        range_drift,
        domain_drift,
        verdict,
    })
}

/// Probe vectors for interpolation estimates: smooth band-limited functions
/// and nodal noise at the grid scale.
pub fn interpolation_probes(space: &DiscreteSpace, count: usize, seed: u64) -> Vec<CVec> {
    let mut out = smooth_probes(space, count, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    for _ in 0..count {
        out.push((0..space.dim()).map(|_| cplx(rng.gen_range(-1.0..1.0))).collect());
    }
    // highest grid oscillation
    out.push((0..space.dim()).map(|i| cplx(if i % 2 == 0 { 1.0 } else { -1.0 })).collect());
    out
}

/// max over probes and rho of ||K x|| / (rho^alpha ||x|| + rho^{alpha-1} ||A x||): the
/// smallest M for which the interpolation bound holds at every sampled rho.
pub fn embedding_via_interpolation_estimate(
    a: &GeneratorRep,
    k: &OperatorBlock,
    alpha: f64,
    rho_grid: &[f64],
    probes: &[CVec],
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} not in (0, 1)")));
    }
    if rho_grid.is_empty() || rho_grid.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Domain("rho grid must be positive and nonempty".into()));
    }
    if k.matrix.ncols() != a.dim() {
        return Err(Error::Dimension { expected: a.dim(), got: k.matrix.ncols() });
    }
    let sp = a.space();
    let mut m = 0.0f64;
    for x in probes {
        let nx = sp.norm(x.view())?;
        if nx == 0.0 {
            continue;
        }
        let nax = sp.norm(a.matrix().dot(x).view())?;
        let nkx = k.codomain.norm(k.matrix.dot(x).view())?;
        let best = rho_grid
            .iter()
            .map(|&r| nkx / (r.powf(alpha) * nx + r.powf(alpha - 1.0) * nax))
            .fold(0.0, f64::max);
        m = m.max(best);
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub alpha: f64,
    pub meshes: Vec<usize>,
    pub constants: Vec<f64>,
    pub drift: f64,
    pub growth: f64,
    pub verdict: Verdict,
}

/// Interpolation constant across a mesh family of (A, K) pairs.
pub fn interpolation_family(
    family: &[(usize, GeneratorRep, OperatorBlock)],
    alpha: f64,
    rho_grid: &[f64],
    seed: u64,
) -> Result<InterpolationReport> {
    let constants = family
        .par_iter()
        .map(|(_, a, k)| {
            let probes = interpolation_probes(a.space(), 16, seed);
            embedding_via_interpolation_estimate(a, k, alpha, rho_grid, &probes)
        })
        .collect::<Result<Vec<f64>>>()?;
    let series = crate::admissibility::ConstantSeries::from_values(constants.clone());
    let verdict = if series.verdict == Verdict::Suspect && series.growth >= 1.3 {
        Verdict::Fail
    } else {
        series.verdict
    };
    Ok(InterpolationReport {
        alpha,
        meshes: family.iter().map(|f| f.0).collect(),
        constants,
        drift: series.drift,
        growth: series.growth,
        verdict,
    })
}

/// Exponent tolerance for the small-time fit and the slack on the fitted bound.
pub const EXPONENT_TOL: f64 = 0.05;
pub const BOUND_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoScalingFit {
    pub eps: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub exponent: f64,
    /// exp(intercept) of the log-log fit
    pub constant: f64,
    pub bound_holds: bool,
    pub verdict: Verdict,
}

/// Fits ||F_t|| ~ M t^e over `times`; PASS iff e >= eps - 0.05 and
/// ||F_t|| <= (1 + 0.1) M t^eps at every sample.
pub fn fit_io_scaling(
    triple: &ControlObsTriple,
    cert: &AnalyticCertificate,
    p: f64,
    eps: f64,
    times: &[f64],
    steps: usize,
) -> Result<IoScalingFit> {
    if !cert.sum_ok {
        return Err(Error::Precondition("certificate has beta + gamma >= 1".into()));
    }
    let room = 1.0 - (cert.beta + cert.gamma);
    if !(eps > 0.0 && eps < room) {
        return Err(Error::Domain(format!("eps = {eps} not in (0, {room})")));
    }
    if !cert.admits(p) {
        return Err(Error::Domain(format!("p = {p} outside the certified range {:?}", cert.p_range)));
    }
    if times.len() < 2 || times.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::Domain("times must lie in (0, 1]".into()));
    }
    let norms = times
        .par_iter()
        .map(|&t| Ok(io_norm(&build_io_map(triple, t, steps, p)?)?.upper))
        .collect::<Result<Vec<f64>>>()?;
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|v| v.max(1e-300).ln()).collect();
    let (exponent, intercept) = linalg::linear_fit(&lx, &ly);
    let constant = intercept.exp();
    let bound_holds = times
        .iter()
        .zip(&norms)
        .all(|(t, v)| *v <= (1.0 + BOUND_SLACK) * constant * t.powf(eps));
    let verdict = Verdict::from_bool(exponent >= eps - EXPONENT_TOL && bound_holds);
    Ok(IoScalingFit {
        eps,
        times: times.to_vec(),
        norms,
        exponent,
        constant,
        bound_holds,
        verdict,
    })
}

/// Probes in D(G^2): x = (lambda0 - G)^{-2} y for smooth y, normalized.
pub fn domain_probes(pg: &PerturbedGenerator, count: usize, seed: u64) -> Result<Vec<CVec>> {
    let g = &pg.generator;
    let l0 = cplx(g.base_lambda());
    let ys = smooth_probes(g.space(), count, seed);
    let mut out = Vec::with_capacity(count);
    for y in ys {
        let ymat = y.insert_axis(ndarray::Axis(1));
        let x = g.resolvent_solve(l0, &g.resolvent_solve(l0, &ymat)?)?;
        let x = x.column(0).to_owned();
        let n = g.space().norm(x.view())?;
        if n > 0.0 {
            out.push(x.mapv(|v| v / n));
        }
    }
    Ok(out)
}

/// max over probes and grid nodes of
/// ||T^{BC}(t_k) x - T(t_k) x - int_0^{t_k} T(t_k - s) BC T^{BC}(s) x ds|| / ||x||,
/// with the integral evaluated by the exponential rule for piecewise-linear
/// integrands on `steps` uniform cells.
pub fn verify_vop_formula(pg: &PerturbedGenerator, t: f64, steps: usize, probes: &[CVec]) -> Result<f64> {
    if !(t > 0.0) || steps == 0 {
        return Err(Error::Domain("need t > 0 and at least one step".into()));
    }
    let h = t / steps as f64;
    let k = pg.perturbation();
    let a = pg.base.a.matrix();
    let ig = exp_integrator(a, &k, h)?;
    let eg = pg.generator.semigroup(h)?;
    let sp = pg.generator.space();
    let mut worst = 0.0f64;
    for x in probes {
        let nx = sp.norm(x.view())?;
        if nx == 0.0 {
            continue;
        }
        let mut y = x.clone(); // T^{BC}(s_j) x
        let mut z = x.clone(); // right-hand side
        for _ in 0..steps {
            let y1 = eg.dot(&y);
            z = ig.e.dot(&z) + ig.p1.dot(&y) + ig.p2.dot(&(&y1 - &y));
            y = y1;
            worst = worst.max(sp.norm((&y - &z).view())? / nx);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VopConvergence {
    pub steps: Vec<usize>,
    pub residuals: Vec<f64>,
    /// residual(m) / residual(2m)
    pub ratios: Vec<f64>,
}

/// Residuals for m, 2m, 4m, ... cells.
pub fn vop_convergence(pg: &PerturbedGenerator, t: f64, steps: &[usize], probes: &[CVec]) -> Result<VopConvergence> {
    let residuals = steps
        .par_iter()
        .map(|&m| verify_vop_formula(pg, t, m, probes))
        .collect::<Result<Vec<f64>>>()?;
    let ratios = residuals.windows(2).map(|w| w[0] / w[1].max(1e-300)).collect();
    Ok(VopConvergence {
        steps: steps.to_vec(),
        residuals,
        ratios,
    })
}

/// Sampled sector check of the perturbed generator at the base angle.
pub fn verify_perturbed_analytic(
    pg: &PerturbedGenerator,
    theta: f64,
    lambda_samples: &[f64],
    phi_samples: &[f64],
) -> Result<SectorCertificate> {
    match pg.base.a.sector_angle() {
        Some(t) if t >= theta => {}
        _ => {
            return Err(Error::Precondition(format!(
                "base generator carries no sector certificate of angle {theta}"
            )))
        }
    }
    if pg.perturbation().iter().all(|v| *v == cplx(0.0)) {
        // unperturbed: the base certificate carries over
        return certify_sector(&pg.base.a, theta, lambda_samples, phi_samples);
    }
    certify_sector(&pg.generator, theta, lambda_samples, phi_samples)
}
