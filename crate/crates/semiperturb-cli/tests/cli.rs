use std::process::Command;
use std::time::Instant;

use semiperturb::Verdict;
use semiperturb_cli::config::{AuditTarget, ConfigError, ExperimentConfig, ExperimentKind};
use semiperturb_cli::report::{compare_reports, DiffEntry, ReportError, RunReport};
use semiperturb_cli::run;

fn audit_config(seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ExperimentKind::AdmissibilityAudit, seed);
    c.mesh_family = vec![32, 64];
    c.audit.target = AuditTarget::Wentzell;
    c.audit.probes = 8;
    c
}

#[test]
fn non_integrable_coefficient_is_rejected() {
    let text = r#"
        kind = "wentzell-solve"
        seed = 3
        [wentzell.problem]
        a = { kind = "poly", coef = [0.0, 1.0] }
        holder_delta = 0.5
    "#;
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let err = run(&cfg).unwrap_err();
    match &err {
        ConfigError::Invalid { field, message } => {
            assert_eq!(field, "wentzell");
            assert!(message.contains("not integrable"), "{message}");
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn rde_at_p2_has_no_gamma_window() {
    let text = r#"
        kind = "rde-solve"
        seed = 3
        [rde.problem]
        p = 2.0
        gamma = 0.6
        spatial_n = 32
        delay_m = 32
    "#;
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    assert!(matches!(run(&cfg), Err(ConfigError::Invalid { field, .. }) if field == "rde"));
}

#[test]
fn config_validation_names_fields() {
    let mut c = ExperimentConfig::new(ExperimentKind::AdmissibilityAudit, 1);
    c.mesh_family = vec![64, 32];
    assert!(matches!(c.validate(), Err(ConfigError::Invalid { field, .. }) if field == "mesh_family"));
    c.mesh_family = vec![64];
    assert!(matches!(c.validate(), Err(ConfigError::Invalid { field, .. }) if field == "mesh_family"));
    c.mesh_family = vec![32, 64];
    c.tolerances.plateau_drift = 0.0;
    assert!(matches!(c.validate(), Err(ConfigError::Invalid { field, .. }) if field.contains("plateau_drift")));
    assert!(ExperimentConfig::from_toml("kind = \"identity-suite\"").is_err(), "seed is mandatory");
    assert!(ExperimentConfig::from_toml("kind = \"identity-suite\"\nseed = 1\nmesh = [8]").is_err());
}

#[test]
fn identity_suite_is_fast_passing_and_deterministic() {
    let mut c = ExperimentConfig::new(ExperimentKind::IdentitySuite, 11);
    c.mesh_family = vec![64];
    let t0 = Instant::now();
    let a = run(&c).unwrap().report;
    assert!(t0.elapsed().as_secs_f64() < 60.0);
    assert!(a.records.iter().all(|r| r.verdict == Verdict::Pass), "{:#?}", a.records);
    let b = run(&c).unwrap().report;
    assert_eq!(a.reproducible_json(), b.reproducible_json());
    let d = compare_reports(&a, &b, 0.0).unwrap();
    assert!(d.is_empty(), "{d:?}");
}

#[test]
fn widened_tolerances_keep_verdicts() {
    let mut c = ExperimentConfig::new(ExperimentKind::IdentitySuite, 5);
    c.mesh_family = vec![32];
    let a = run(&c).unwrap().report;
    c.tolerances.identities.dirichlet *= 10.0;
    c.tolerances.identities.rotated_power *= 10.0;
    let b = run(&c).unwrap().report;
    let d = compare_reports(&a, &b, 1e-12).unwrap();
    assert_eq!(d.verdict_flips(), 0);
    assert!(d.entries.iter().any(|e| matches!(e, DiffEntry::Drift { quantity, .. } if quantity == "tolerance")));
}

#[test]
fn seed_change_stays_in_noise_band() {
    let a = run(&audit_config(1)).unwrap().report;
    let b = run(&audit_config(2)).unwrap().report;
    let d = compare_reports(&a, &b, 1e-12).unwrap();
    assert_eq!(d.verdict_flips(), 0, "{d:?}");
    for e in &d.entries {
        if let DiffEntry::Drift { baseline, candidate, quantity, .. } = e {
            if quantity.starts_with("n=") {
                let ratio = baseline.max(*candidate) / baseline.min(*candidate);
                assert!(ratio <= 2.0, "{e:?}");
            }
        }
    }
}

#[test]
fn kind_mismatch_is_an_error() {
    let mut c = ExperimentConfig::new(ExperimentKind::IdentitySuite, 1);
    c.mesh_family = vec![16];
    c.young_configs = 4;
    let a = run(&c).unwrap().report;
    let mut b = a.clone();
    b.kind = ExperimentKind::RdeSolve;
    assert!(matches!(compare_reports(&a, &b, 0.0), Err(ReportError::KindMismatch(..))));
}

#[test]
fn negative_control_is_reported() {
    let mut c = audit_config(1);
    c.audit.target = AuditTarget::PointObservation;
    c.audit.p = 1.0;
    let r = run(&c).unwrap().report;
    let nc = r.records.iter().find(|r| r.name == "negative_control").unwrap();
    assert!(nc.constants.contains_key("max_growth"));
}

#[test]
fn binary_writes_outputs_and_diffs() {
    let dir = tempfile::tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_semiperturb");
    let out = dir.path().join("run");
    let status = Command::new(exe)
        .args(["solve-de", "--seed", "4", "--mesh-family", "16,32,64", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report = RunReport::read_json(&out.join("report.json")).unwrap();
    assert_eq!(report.kind, ExperimentKind::WentzellSolve);
    let csv = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(csv.starts_with("name,anchor,verdict,quantity,value"));
    assert!(!out.join("trajectory.csv").exists());

    let cfg_path = dir.path().join("rde.toml");
    std::fs::write(
        &cfg_path,
        "kind = \"rde-solve\"\nseed = 9\nmesh_family = [64]\n[rde.problem]\np = 1.5\ngamma = 0.6\nspatial_n = 16\ndelay_m = 16\n[output]\ntrajectory = true\n",
    )
    .unwrap();
    let out2 = dir.path().join("rde");
    let status = Command::new(exe).args(["solve-rde", "--config"]).arg(&cfg_path).arg("--out").arg(&out2).status().unwrap();
    assert!(status.success());
    let traj = std::fs::read_to_string(out2.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 42, "header plus steps + 1 rows");

    let wrong = Command::new(exe).args(["audit", "--config"]).arg(&cfg_path).output().unwrap();
    assert_eq!(wrong.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&wrong.stderr).contains("subcommand expects"));

    let same = Command::new(exe).arg("diff").arg(out.join("report.json")).arg(out.join("report.json")).status().unwrap();
    assert!(same.success());
    let other = Command::new(exe).arg("diff").arg(out.join("report.json")).arg(out2.join("report.json")).output().unwrap();
    assert_eq!(other.status.code(), Some(1));
}

#[test]
fn shipped_configs_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}

#[test]
fn wentzell_sample_matches_reference_preset() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let cfg = ExperimentConfig::load(&dir.join("wentzell.toml")).unwrap();
    assert_eq!(cfg.wentzell.resolve().unwrap(), semiperturb::examples::wentzell::WentzellProblem::reference());
}
