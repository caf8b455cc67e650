//! Experiment configuration (TOML). See `docs/config.md` for the schema.

use std::path::{Path, PathBuf};

use semiperturb::examples::rde::RdeProblem;
use semiperturb::examples::wentzell::WentzellProblem;
use semiperturb::suite::IdentityTolerances;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    AdmissibilityAudit,
    AnalyticCertificate,
    WentzellSolve,
    RdeSolve,
    IdentitySuite,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AdmissibilityAudit => "admissibility-audit",
            Self::AnalyticCertificate => "analytic-certificate",
            Self::WentzellSolve => "wentzell-solve",
            Self::RdeSolve => "rde-solve",
            Self::IdentitySuite => "identity-suite",
        }
    }

    fn needs_plateau(self) -> bool {
        matches!(self, Self::AdmissibilityAudit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeGrid {
    pub t_final: f64,
    pub steps: usize,
    /// Horizon of the admissibility and IO-map checks.
    pub t_audit: f64,
    pub io_steps: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { t_final: 1.0, steps: 40, t_audit: 0.5, io_steps: 32 }
    }
}

// flatten rules out deny_unknown_fields here
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    #[serde(flatten)]
    pub identities: IdentityTolerances,
    /// Relative drift of an admissibility constant across the mesh family.
    pub plateau_drift: f64,
    /// Boundary constraint residual along trajectories.
    pub constraint: f64,
    /// L^p distance to the method-of-steps oracle at the final time.
    pub oracle: f64,
    /// Spread of the sampled sector constant.
    pub sector_constant: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identities: IdentityTolerances::default(),
            plateau_drift: 0.2,
            constraint: 1e-5,
            oracle: 1e-3,
            sector_constant: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WentzellPreset {
    /// a = sqrt(s(1 - s)), point and density functionals.
    Reference,
    /// Reference plus f'(0), f'(1) terms.
    Derivative,
    /// a = 1, no perturbation.
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct WentzellSection {
    pub preset: Option<WentzellPreset>,
    pub problem: Option<WentzellProblem>,
}

impl WentzellSection {
    pub fn resolve(&self) -> Result<WentzellProblem, ConfigError> {
        match (&self.preset, &self.problem) {
            (Some(_), Some(_)) => Err(invalid("wentzell", "give either `preset` or `problem`, not both")),
            (_, Some(p)) => Ok(p.clone()),
            (Some(WentzellPreset::Derivative), None) => Ok(WentzellProblem::with_derivative_terms()),
            (Some(WentzellPreset::Plain), None) => Ok(WentzellProblem::plain(1.0)),
            (Some(WentzellPreset::Reference), None) | (None, None) => Ok(WentzellProblem::reference()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RdeSection {
    /// Defaults to the reference problem at 64 x 64.
    pub problem: Option<RdeProblem>,
    /// Also run the method-of-steps oracle and report the discrepancy.
    pub oracle: bool,
}

impl RdeSection {
    pub fn resolve(&self) -> RdeProblem {
        self.problem.clone().unwrap_or_else(|| RdeProblem::reference(64, 64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditTarget {
    /// Boundary triple of the Wentzell problem, sup norm.
    Wentzell,
    /// (A, L_A, Id) of the RDE diffusion part on L^p.
    RdeDiffusion,
    /// (D, K_D, phi) of the RDE delay block; mesh sizes are delay cells.
    RdeDelay,
    /// Point observation of the L^1 heat semigroup (negative control).
    PointObservation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSection {
    pub target: AuditTarget,
    pub p: f64,
    pub probes: usize,
}

impl Default for AuditSection {
    fn default() -> Self {
        Self { target: AuditTarget::Wentzell, p: 2.0, probes: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateSection {
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
    pub eps: f64,
    pub theta: f64,
}

impl Default for CertificateSection {
    fn default() -> Self {
        Self { beta: 0.0, gamma: 0.25, p: 2.0, eps: 0.2, theta: std::f64::consts::FRAC_PI_2 - 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub trajectory: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_mesh")]
    pub mesh_family: Vec<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_young")]
    pub young_configs: usize,
    #[serde(default)]
    pub time: TimeGrid,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub wentzell: WentzellSection,
    #[serde(default)]
    pub rde: RdeSection,
    #[serde(default)]
    pub audit: AuditSection,
    #[serde(default)]
    pub certificate: CertificateSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_mesh() -> Vec<usize> {
    vec![32, 64, 128]
}

fn default_young() -> usize {
    50
}

impl ExperimentConfig {
    /// Defaults for `kind` with the given seed.
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            mesh_family: default_mesh(),
            workers: None,
            young_configs: default_young(),
            time: TimeGrid::default(),
            tolerances: Tolerances::default(),
            wentzell: WentzellSection::default(),
            rde: RdeSection::default(),
            audit: AuditSection::default(),
            certificate: CertificateSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    /// Field-level checks, including the problem invariants of the chosen kind.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.mesh_family.is_empty() {
            return Err(invalid("mesh_family", "must not be empty"));
        }
        if self.mesh_family.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("mesh_family", "must be strictly ascending"));
        }
        if self.mesh_family[0] < 8 {
            return Err(invalid("mesh_family", "sizes below 8 are not supported"));
        }
        if self.kind.needs_plateau() && self.mesh_family.len() < 2 {
            return Err(invalid("mesh_family", "a plateau verdict needs at least two sizes"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        let t = &self.time;
        if !(t.t_final > 0.0) || !(t.t_audit > 0.0) {
            return Err(invalid("time", "t_final and t_audit must be positive"));
        }
        if t.steps == 0 || t.io_steps < 8 {
            return Err(invalid("time", "need steps >= 1 and io_steps >= 8"));
        }
        self.tolerances
            .identities
            .validate()
            .map_err(|e| invalid("tolerances", e.to_string()))?;
        let tol = &self.tolerances;
        for (name, v) in [
            ("plateau_drift", tol.plateau_drift),
            ("constraint", tol.constraint),
            ("oracle", tol.oracle),
            ("sector_constant", tol.sector_constant),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(&format!("tolerances.{name}"), "must be positive"));
            }
        }
        match self.kind {
            ExperimentKind::WentzellSolve | ExperimentKind::AnalyticCertificate => {
                self.wentzell.resolve()?.validate().map_err(|e| invalid("wentzell", e.to_string()))?;
            }
            ExperimentKind::RdeSolve => {
                self.rde.resolve().validate().map_err(|e| invalid("rde", e.to_string()))?;
            }
            ExperimentKind::AdmissibilityAudit => {
                let a = &self.audit;
                if !(a.p >= 1.0 && a.p.is_finite()) {
                    return Err(invalid("audit.p", "must be finite and >= 1"));
                }
                if a.probes == 0 {
                    return Err(invalid("audit.probes", "must be at least 1"));
                }
                match a.target {
                    AuditTarget::Wentzell => {
                        self.wentzell.resolve()?.validate().map_err(|e| invalid("wentzell", e.to_string()))?
                    }
                    AuditTarget::RdeDiffusion | AuditTarget::RdeDelay => {
                        let mut prob = self.rde.resolve();
                        prob.p = a.p;
                        prob.validate().map_err(|e| invalid("rde", e.to_string()))?
                    }
                    AuditTarget::PointObservation => {}
                }
            }
            ExperimentKind::IdentitySuite => {}
        }
        Ok(())
    }
}
