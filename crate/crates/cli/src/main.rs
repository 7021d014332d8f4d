mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use stochheat::control::{ControlGeometry, ControlProblem};
use stochheat::domain::{Ball, HeatKernelWeight};
use stochheat::export::{binary_dump, csv_table, trace_csv, tree_field_csv};
use stochheat::forward::solve_forward;
use stochheat::frequency::{compute_hdn, Localization};
use stochheat::noise::build_tree;
use stochheat::noise::TimeMesh;
use stochheat::observability::MeasurableTimeSet;
use stochheat::report::RunReport;
use stochheat::suite::{run_suite, Experiment, SuiteConfig};

#[derive(Parser)]
#[command(name = "stochheat", version, about = "Experiments for the stochastic heat equation with multiplicative noise")]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `tree`, `mc`, `mc:M` or `sampled:M`.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Output directory; defaults to `out/<experiment>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Multiplier on every discretization allowance.
    #[arg(long = "tol-scale", global = true)]
    tol_scale: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Forward ensembles and the deterministic and exponential oracles.
    Simulate,
    /// Frequency function identity and bound.
    Frequency,
    /// Quantitative unique continuation and the three-ball inequality.
    Ucp,
    /// Density sequences and the observability inequality.
    Observe,
    /// Backward duality, null and approximate control.
    Control,
    /// Every acceptance criterion.
    Verify,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Simulate => Experiment::Simulate,
            Command::Frequency => Experiment::Frequency,
            Command::Ucp => Experiment::Ucp,
            Command::Observe => Experiment::Observe,
            Command::Control => Experiment::Control,
            Command::Verify => Experiment::Verify,
        }
    }
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn load_config(cli: &Cli) -> Result<SuiteConfig, String> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            config::parse(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => SuiteConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = &cli.mode {
        cfg.mode = config::parse_mode(m).map_err(|e| format!("--mode: {e}"))?;
    }
    if let Some(t) = cli.tol_scale {
        config::apply(&mut cfg, "tolerance.scale", &t.to_string(), None).map_err(|e| format!("--tol-scale: {e}"))?;
    }
    config::check(&cfg).map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn config_hash(cfg: &SuiteConfig) -> String {
    hex::encode(Sha256::digest(config::canonical(cfg).as_bytes()))
}

fn write(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> anyhow::Result<()> {
    let p = dir.join(name);
    fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
}

/// Data products beyond the report.
fn artifacts(cmd: Command, cfg: &SuiteConfig, dir: &Path) -> anyhow::Result<()> {
    let grid = cfg.grid()?;
    let case = cfg.base_case();
    match cmd {
        Command::Simulate | Command::Frequency => {
            let noise = cfg.noise(cfg.depth, case.seed)?;
            let coeffs = case.coefficients(&grid, noise.mesh())?;
            let ens = solve_forward(&case.initial(&grid)?, &coeffs, &noise, &grid)?;
            if let Command::Simulate = cmd {
                write(dir, "trajectories.bin", binary_dump(&ens))?;
                let times = ens.mesh().times();
                let coords = grid.coords();
                let rows = (0..=ens.steps()).flat_map(|k| {
                    let mean = ens.mean_field(k);
                    let t = times[k];
                    coords.iter().zip(mean).map(move |(x, m)| vec![t, x[0], m]).collect::<Vec<_>>()
                });
                write(dir, "mean.csv", csv_table(&["t", "x", "mean"], rows))?;
            } else {
                let w = HeatKernelWeight::new(cfg.horizon, cfg.lambda, cfg.center(), 1)?;
                write(dir, "trace.csv", trace_csv(&compute_hdn(&ens, &Localization::Identity, &coeffs, &w)?))?;
            }
        }
        Command::Control => {
            let d = &cfg.control;
            let g = stochheat::domain::SpatialGrid::interval(cfg.extent.0, cfg.extent.1, d.nodes)?;
            let tree = build_tree(TimeMesh::new(d.horizon, d.depth)?, cfg.tree_cap)?;
            let coeffs = case.coefficients(&g, tree.mesh())?;
            let e1 = MeasurableTimeSet::new(d.e1.clone(), d.horizon)?;
            let geo = ControlGeometry::new(&g, &tree, &Ball::interval(d.g0.0, d.g0.1)?, &e1)?;
            let p = ControlProblem::new(g, tree, coeffs, geo)?;
            let (eta, r) = p.null_control(&p.random_leaf_field(cfg.seed.wrapping_add(1000)), d.cg_tol, d.max_iter)?;
            write(dir, "control.csv", tree_field_csv(&eta, p.grid(), p.tree().mesh()))?;
            let rows = r.residuals.iter().enumerate().map(|(i, v)| vec![i as f64, *v]);
            write(dir, "cr_history.csv", csv_table(&["iteration", "residual"], rows))?;
        }
        Command::Ucp | Command::Observe | Command::Verify => {}
    }
    Ok(())
}

/// Columns `name, lhs, rhs, margin, pass`.
fn records_csv(report: &RunReport) -> String {
    let mut s = String::from("name,lhs,rhs,margin,pass\n");
    for r in &report.records {
        s.push_str(&format!("{},{},{},{},{}\n", r.name, r.lhs, r.rhs, r.margin, u8::from(r.pass)));
    }
    s
}

fn print_summary(report: &RunReport) {
    if let Some(serde_json::Value::Array(rows)) = report.tables.get("criteria") {
        for row in rows {
            let pass = row["pass"].as_bool().unwrap_or(false);
            println!("[{}] criterion {:>2}: {}", if pass { "PASS" } else { "FAIL" }, row["id"], row["title"].as_str().unwrap_or(""));
        }
    }
    for r in report.failures() {
        println!("  failed: {} (lhs {:e}, rhs {:e}){}", r.name, r.lhs, r.rhs, r.note.as_ref().map(|n| format!(" {n}")).unwrap_or_default());
    }
}

fn run(cli: &Cli, cfg: &SuiteConfig) -> anyhow::Result<bool> {
    let exp = cli.command.experiment();
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out").join(exp.name()));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut report = run_suite(cfg, exp, &config_hash(cfg))?;
    report.table("config", cfg);
    write(&dir, "report.json", report.to_json())?;
    write(&dir, "records.csv", records_csv(&report))?;
    artifacts(cli.command, cfg, &dir)?;
    print_summary(&report);
    println!("report: {}", dir.join("report.json").display());
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&cli, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
