//! Verdicts and check records shared by every module and the report writer.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Suspect,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Worst of two verdicts.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Suspect, _) | (_, Suspect) => Suspect,
            _ => Pass,
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Suspect => "SUSPECT",
            Verdict::Fail => "FAIL",
        })
    }
}

/// One check in a run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Pointer into the theory the check exercises.
    pub anchor: String,
    pub verdict: Verdict,
    pub constants: BTreeMap<String, f64>,
    pub residuals: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, anchor: impl Into<String>, verdict: Verdict) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            verdict,
            constants: BTreeMap::new(),
            residuals: BTreeMap::new(),
            note: None,
        }
    }

    pub fn constant(mut self, key: impl Into<String>, v: f64) -> Self {
        self.constants.insert(key.into(), v);
        self
    }

    pub fn residual(mut self, key: impl Into<String>, v: f64) -> Self {
        self.residuals.insert(key.into(), v);
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.note = Some(s.into());
        self
    }

    pub fn failed(name: impl Into<String>, anchor: impl Into<String>, err: impl fmt::Display) -> Self {
        Self::new(name, anchor, Verdict::Fail).note(format!("error: {err}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_serializes_uppercase() {
        assert_eq!(serde_json::to_string(&Verdict::Suspect).unwrap(), "\"SUSPECT\"");
        assert_eq!(Verdict::Pass.and(Verdict::Suspect), Verdict::Suspect);
        assert_eq!(Verdict::Suspect.and(Verdict::Fail), Verdict::Fail);
    }
}
