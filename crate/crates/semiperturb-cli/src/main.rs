use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semiperturb::Verdict;
use semiperturb_cli::config::{ExperimentConfig, ExperimentKind};
use semiperturb_cli::report::{compare_reports, RunReport};

#[derive(Parser)]
#[command(name = "semiperturb", version, about = "Run boundary-perturbation experiments and compare reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Admissibility constants across a mesh family.
    Audit(RunArgs),
    /// Sector and analytic-perturbation certificates for the Wentzell problem.
    Certify(RunArgs),
    /// Solve the Wentzell problem.
    SolveDe(RunArgs),
    /// Solve the retarded diffusion equation.
    SolveRde(RunArgs),
    /// Roundoff-level identities and the Young harness.
    Identities(RunArgs),
    /// Compare two report.json files.
    Diff(DiffArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; its `kind` must match the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Required unless the config file sets it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: config `output.dir`, else the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated mesh sizes, e.g. 32,64,128.
    #[arg(long, value_delimiter = ',')]
    mesh_family: Option<Vec<usize>>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct DiffArgs {
    baseline: PathBuf,
    candidate: PathBuf,
    /// Relative change above which a quantity is reported.
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
}

fn load_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path).map_err(|e| e.to_string())?;
            if cfg.kind != kind {
                return Err(format!("config kind is {}, subcommand expects {}", cfg.kind.as_str(), kind.as_str()));
            }
            cfg
        }
        None => {
            let seed = args.seed.ok_or("--seed is required without --config")?;
            ExperimentConfig::new(kind, seed)
        }
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = &args.mesh_family {
        cfg.mesh_family = m.clone();
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    if let Some(o) = &args.out {
        cfg.output.dir = Some(o.clone());
    }
    Ok(cfg)
}

fn write_outputs(dir: &Path, out: &semiperturb_cli::RunOutput, with_trajectory: bool) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let report_path = dir.join("report.json");
    out.report.write_json(&report_path).map_err(|e| format!("cannot write {}: {e}", report_path.display()))?;
    let csv_path = dir.join("summary.csv");
    let f = File::create(&csv_path).map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
    out.report.write_summary_csv(f).map_err(|e| e.to_string())?;
    if with_trajectory {
        if let Some(t) = &out.trajectory {
            let p = dir.join("trajectory.csv");
            let f = File::create(&p).map_err(|e| format!("cannot write {}: {e}", p.display()))?;
            t.write_csv(f).map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

fn run_kind(kind: ExperimentKind, args: &RunArgs) -> Result<ExitCode, String> {
    let cfg = load_config(kind, args)?;
    let out = semiperturb_cli::run(&cfg).map_err(|e| e.to_string())?;
    let dir = cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("."));
    write_outputs(&dir, &out, cfg.output.trajectory)?;
    for r in &out.report.records {
        println!("{:<7} {}", r.verdict.to_string(), r.name);
    }
    let t = out.report.tally;
    println!(
        "{} pass, {} suspect, {} fail in {:.1} s -> {}",
        t.pass,
        t.suspect,
        t.fail,
        out.report.timing.wall_time_s,
        dir.join("report.json").display()
    );
    Ok(if out.report.verdict() == Verdict::Fail { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn diff(args: &DiffArgs) -> Result<ExitCode, String> {
    let base = RunReport::read_json(&args.baseline).map_err(|e| e.to_string())?;
    let cand = RunReport::read_json(&args.candidate).map_err(|e| e.to_string())?;
    let d = compare_reports(&base, &cand, args.rel_tol).map_err(|e| e.to_string())?;
    println!("{}", serde_json::to_string_pretty(&d).expect("diff serializes"));
    Ok(if d.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Audit(a) => run_kind(ExperimentKind::AdmissibilityAudit, a),
        Command::Certify(a) => run_kind(ExperimentKind::AnalyticCertificate, a),
        Command::SolveDe(a) => run_kind(ExperimentKind::WentzellSolve, a),
        Command::SolveRde(a) => run_kind(ExperimentKind::RdeSolve, a),
        Command::Identities(a) => run_kind(ExperimentKind::IdentitySuite, a),
        Command::Diff(a) => diff(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
