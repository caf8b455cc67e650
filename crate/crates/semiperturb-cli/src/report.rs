//! Run reports, their CSV summaries and report comparison.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use semiperturb::{CheckRecord, Verdict};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    pub workers: usize,
}

impl Environment {
    pub fn current(workers: usize) -> Self {
        Self {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            workers,
        }
    }
}

/// Fields that differ between otherwise identical runs. Excluded from comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub timestamp_unix: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub pass: usize,
    pub suspect: usize,
    pub fail: usize,
}

impl Tally {
    pub fn of(records: &[CheckRecord]) -> Self {
        let mut t = Self::default();
        for r in records {
            match r.verdict {
                Verdict::Pass => t.pass += 1,
                Verdict::Suspect => t.suspect += 1,
                Verdict::Fail => t.fail += 1,
            }
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub environment: Environment,
    pub records: Vec<CheckRecord>,
    pub tally: Tally,
    pub timing: RunTiming,
}

impl RunReport {
    pub fn verdict(&self) -> Verdict {
        self.records.iter().fold(Verdict::Pass, |v, r| v.and(r.verdict))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the timing block blanked, for byte comparison of reruns.
    pub fn reproducible_json(&self) -> String {
        let mut r = self.clone();
        r.timing = RunTiming { timestamp_unix: 0, wall_time_s: 0.0 };
        r.to_json()
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn read_json(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|e| ReportError::Io(path.display().to_string(), e))?;
        let r: Self = serde_json::from_str(&text).map_err(|e| ReportError::Parse(path.display().to_string(), e))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(ReportError::Schema(r.schema_version));
        }
        Ok(r)
    }

    /// One row per recorded quantity: name, anchor, verdict, quantity, value.
    pub fn write_summary_csv(&self, w: impl Write) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["name", "anchor", "verdict", "quantity", "value"])?;
        for r in &self.records {
            let v = r.verdict.to_string();
            let qs: Vec<(String, f64)> = r
                .constants
                .iter()
                .map(|(k, x)| (k.clone(), *x))
                .chain(r.residuals.iter().map(|(k, x)| (format!("residual:{k}"), *x)))
                .collect();
            if qs.is_empty() {
                out.write_record([r.name.as_str(), r.anchor.as_str(), v.as_str(), "", ""])?;
            }
            for (k, x) in qs {
                out.write_record([r.name.as_str(), r.anchor.as_str(), v.as_str(), k.as_str(), &format!("{x:e}")])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error("malformed report {0}: {1}")]
    Parse(String, serde_json::Error),
    #[error("unsupported report schema version {0}")]
    Schema(u32),
    #[error("experiment kinds differ: baseline {0}, candidate {1}")]
    KindMismatch(&'static str, &'static str),
}

/// Time series of grid snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    /// Header `time, s=<grid...>`, then one row per snapshot.
    pub fn write_csv(&self, w: impl Write) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["time".to_string()];
        header.extend(self.grid.iter().map(|s| format!("s={s:.8}")));
        out.write_record(&header)?;
        for (t, row) in self.times.iter().zip(&self.states) {
            let mut rec = vec![format!("{t:e}")];
            rec.extend(row.iter().map(|v| format!("{v:e}")));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "change", rename_all = "snake_case")]
pub enum DiffEntry {
    VerdictFlip { name: String, baseline: Verdict, candidate: Verdict },
    Drift { name: String, quantity: String, baseline: f64, candidate: f64, relative: f64 },
    Missing { name: String },
    Added { name: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportDiff {
    pub entries: Vec<DiffEntry>,
}

impl ReportDiff {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn verdict_flips(&self) -> usize {
        self.entries.iter().filter(|e| matches!(e, DiffEntry::VerdictFlip { .. })).count()
    }

    /// Largest relative drift over all compared quantities.
    pub fn max_drift(&self) -> f64 {
        self.entries
            .iter()
            .filter_map(|e| match e {
                DiffEntry::Drift { relative, .. } => Some(*relative),
                _ => None,
            })
            .fold(0.0, f64::max)
    }
}

fn quantities(r: &CheckRecord) -> BTreeMap<String, f64> {
    r.constants
        .iter()
        .map(|(k, v)| (k.clone(), *v))
        .chain(r.residuals.iter().map(|(k, v)| (format!("residual:{k}"), *v)))
        .collect()
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b || (a.is_nan() && b.is_nan()) {
        return 0.0;
    }
    let scale = a.abs().max(b.abs());
    if !scale.is_finite() {
        return f64::INFINITY;
    }
    (a - b).abs() / scale
}

/// Verdict flips, missing or added checks, and quantities whose relative change
/// exceeds `rel_tol`. The timing block is never compared.
pub fn compare_reports(baseline: &RunReport, candidate: &RunReport, rel_tol: f64) -> Result<ReportDiff, ReportError> {
    if baseline.kind != candidate.kind {
        return Err(ReportError::KindMismatch(baseline.kind.as_str(), candidate.kind.as_str()));
    }
    let cand: BTreeMap<&str, &CheckRecord> = candidate.records.iter().map(|r| (r.name.as_str(), r)).collect();
    let base: BTreeMap<&str, &CheckRecord> = baseline.records.iter().map(|r| (r.name.as_str(), r)).collect();
    let mut entries = Vec::new();
    for (name, b) in &base {
        let Some(c) = cand.get(name) else {
            entries.push(DiffEntry::Missing { name: name.to_string() });
            continue;
        };
        if b.verdict != c.verdict {
            entries.push(DiffEntry::VerdictFlip { name: name.to_string(), baseline: b.verdict, candidate: c.verdict });
        }
        let (qb, qc) = (quantities(b), quantities(c));
        for (k, vb) in &qb {
            let vc = qc.get(k).copied().unwrap_or(f64::NAN);
            let rel = if qc.contains_key(k) { relative(*vb, vc) } else { f64::INFINITY };
            if rel > rel_tol {
                entries.push(DiffEntry::Drift {
                    name: name.to_string(),
                    quantity: k.clone(),
                    baseline: *vb,
                    candidate: vc,
                    relative: rel,
                });
            }
        }
    }
    for name in cand.keys().filter(|n| !base.contains_key(*n)) {
        entries.push(DiffEntry::Added { name: name.to_string() });
    }
    Ok(ReportDiff { entries })
}
