//! Batch command-line front end: parses layered TOML configuration,
//! dispatches the drivers, and prints machine-greppable summaries.
//!
//! Exit codes are a stable contract: 0 success, 1 configuration errors,
//! 2 runtime failures (positivity loss included), 3 verification
//! failures, 4 I/O and on-disk format problems.

use clap::{Parser, Subcommand};
use sefv::config::{self, ReferenceChoice, Resolved, RunConfig};
use sefv::diagnostics::{self, energy_inequality_report};
use sefv::ensemble::{
    self, convergence_study, coupled_refinement_run, ConvergenceTable, LevelError,
    Reference,
};
use sefv::error::Error;
use sefv::io;
use sefv::scheme::{self, RunStatus, Trajectory};
use sefv::state::State;
use sefv::verify;
use sefv::Mesh;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sefv",
    version,
    about = "Finite-volume solver and verification harness for stochastically forced barotropic flow",
    after_help = "Any --section.key=value argument overrides the matching config entry,\n\
                  e.g. --scheme.cfl=0.3 or --noise.k_modes=0."
)]
struct Cli {
    /// TOML configuration file; every setting has a default when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every random stream (shorthand for
    /// --ensemble.master_seed=N).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (shorthand for --outputs.dir=DIR).
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory; write snapshots, energy ledger and manifest.
    Run,
    /// Monte Carlo ensemble of independent Wiener paths.
    Ensemble,
    /// Refinement family on nested meshes with observed convergence orders.
    Converge,
    /// Cesaro means of a common-noise refinement family.
    Cesaro,
    /// Run every verification suite and print the pass/fail table.
    Verify,
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let (rest, mut overrides) = config::extract_dotted_overrides(&raw[1..]);
    let argv = std::iter::once(raw[0].clone()).chain(rest);
    let cli = Cli::parse_from(argv);
    if let Some(seed) = cli.seed {
        overrides.push(("ensemble.master_seed".into(), seed.to_string()));
    }
    if let Some(out) = &cli.out {
        overrides.push(("outputs.dir".into(), out.clone()));
    }

    if let Ok(threads) = std::env::var("SEFV_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            if n >= 1 {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
            }
        }
    }

    match dispatch(&cli.command, cli.config.as_deref(), &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(
    command: &Command,
    config_path: Option<&std::path::Path>,
    overrides: &[(String, String)],
) -> sefv::Result<()> {
    let cfg = config::load(config_path, overrides)?;
    match command {
        Command::Run => cmd_run(&cfg),
        Command::Ensemble => cmd_ensemble(&cfg),
        Command::Converge => cmd_converge(&cfg),
        Command::Cesaro => cmd_cesaro(&cfg),
        Command::Verify => cmd_verify(),
    }
}

/// Min density over a whole trajectory: initial state plus every ledger row.
fn trajectory_min_rho(traj: &Trajectory) -> f64 {
    let mut min = traj
        .snapshots
        .first()
        .map(|(_, s)| s.min_rho())
        .unwrap_or(f64::INFINITY);
    for row in &traj.ledger.rows {
        min = min.min(row.min_rho);
    }
    min
}

/// Translate an aborted run into the typed error carrying its exit class.
fn abort_error(traj: &Trajectory) -> Option<Error> {
    match &traj.status {
        RunStatus::Completed => None,
        RunStatus::Aborted { t, reason } => {
            eprintln!("run aborted at t = {t}: {reason}");
            Some(if reason.contains("non-finite") {
                Error::NonFinite { t: *t }
            } else {
                Error::PositivityLost { t: *t, min_rho: trajectory_min_rho(traj) }
            })
        }
    }
}

fn cmd_run(cfg: &RunConfig) -> sefv::Result<()> {
    let r = cfg.resolve()?;
    config::write_echo(cfg, &r.outdir)?;
    let times = scheme::uniform_output_times(r.scheme.t_end, r.snapshots);
    let init = r.init.build(&r.mesh)?;
    let mass0 = init.total_mass(&r.mesh);
    let traj = scheme::run(
        &r.mesh,
        &r.eos,
        &r.scheme,
        &r.noise,
        init,
        &times,
        r.ensemble.master_seed,
        r.coupled.path,
    )?;
    io::save_run(
        &r.outdir,
        &r.mesh,
        &r.eos,
        &traj,
        &[
            ("seed".into(), r.ensemble.master_seed.to_string()),
            ("path".into(), r.coupled.path.to_string()),
        ],
    )?;

    let mass_drift =
        (traj.final_state().total_mass(&r.mesh) - mass0).abs() / mass0.abs().max(1e-300);
    let slack_min = if traj.ledger.rows.is_empty() {
        0.0
    } else {
        energy_inequality_report(&traj.ledger)?.min_slack
    };
    println!(
        "run: {} steps to t = {}, {} snapshots -> {}",
        traj.steps,
        traj.final_time(),
        traj.snapshots.len(),
        r.outdir.display()
    );
    println!("MASS_DRIFT={mass_drift:e}");
    println!("ENERGY_SLACK_MIN={slack_min:e}");
    println!("MIN_RHO={:e}", trajectory_min_rho(&traj));

    match abort_error(&traj) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_ensemble(cfg: &RunConfig) -> sefv::Result<()> {
    let r = cfg.resolve()?;
    config::write_echo(cfg, &r.outdir)?;
    let init = r.init.build(&r.mesh)?;
    let result =
        ensemble::run_ensemble(&r.mesh, &r.eos, &r.scheme, &r.noise, &init, &r.ensemble)?;
    ensemble::save_ensemble(&r.outdir, &r.mesh, &r.eos, &result, &r.ensemble)?;

    let mass0 = init.total_mass(&r.mesh);
    let mut mass_drift: f64 = 0.0;
    let mut min_rho = f64::INFINITY;
    let mut slack_min = f64::INFINITY;
    for (traj, summary) in result.trajectories.iter().zip(&result.summaries) {
        min_rho = min_rho.min(trajectory_min_rho(traj));
        slack_min = slack_min.min(summary.min_slack);
        if summary.completed {
            let drift = (traj.final_state().total_mass(&r.mesh) - mass0).abs()
                / mass0.abs().max(1e-300);
            mass_drift = mass_drift.max(drift);
        }
    }
    println!(
        "ensemble: {} paths ({} failed{}), {} snapshot times -> {}",
        r.ensemble.n_paths,
        result.failed_paths,
        if result.degraded { ", DEGRADED" } else { "" },
        r.snapshots,
        r.outdir.display()
    );
    println!("MASS_DRIFT={mass_drift:e}");
    println!("ENERGY_SLACK_MIN={slack_min:e}");
    println!("MIN_RHO={min_rho:e}");
    Ok(())
}

/// Density-only observed order between the last two rows of a table.
fn last_rho_rate(levels: &[LevelError]) -> Option<f64> {
    let pair = levels.windows(2).last()?;
    let (a, b) = (&pair[0], &pair[1]);
    if a.l1_rho > 0.0 && b.l1_rho > 0.0 {
        Some((a.l1_rho / b.l1_rho).log2() / (a.h / b.h).log2())
    } else {
        None
    }
}

fn render_table(table: &ConvergenceTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6} {:>12} {:>13} {:>13} {:>13} {:>13} {:>8}",
        "n", "h", "l1", "l1_rho", "nat_rho", "nat_mom", "rate"
    );
    for lvl in &table.levels {
        let _ = writeln!(
            out,
            "{:>6} {:>12.6e} {:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e} {:>8}",
            lvl.n,
            lvl.h,
            lvl.l1_space_time,
            lvl.l1_rho,
            lvl.natural_rho,
            lvl.natural_mom,
            lvl.rate_l1.map(|r| format!("{r:.2}")).unwrap_or_else(|| "-".into()),
        );
    }
    out
}

fn write_table_csv(path: &std::path::Path, table: &ConvergenceTable) -> sefv::Result<()> {
    let mut text = String::from("n,h,l1_space_time,l1_rho,natural_rho,natural_mom,rate_l1\n");
    for lvl in &table.levels {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            lvl.n,
            lvl.h,
            lvl.l1_space_time,
            lvl.l1_rho,
            lvl.natural_rho,
            lvl.natural_mom,
            lvl.rate_l1.map(|r| r.to_string()).unwrap_or_default(),
        );
    }
    std::fs::write(path, text).map_err(|e| Error::IoFailure {
        path: path.display().to_string(),
        source: e,
    })
}

fn run_family(r: &Resolved) -> sefv::Result<Vec<(Mesh, Trajectory)>> {
    let coupled = coupled_refinement_run(
        r.mesh.dim(),
        r.mesh.edge_length(),
        &r.eos,
        &r.scheme,
        &r.noise,
        &r.init,
        &r.coupled,
    )?;
    for (mesh, traj) in &coupled.levels {
        if let Some(e) = abort_error(traj) {
            eprintln!("level n = {} failed", mesh.cells_per_axis());
            return Err(e);
        }
    }
    Ok(coupled.levels)
}

fn cmd_converge(cfg: &RunConfig) -> sefv::Result<()> {
    let r = cfg.resolve()?;
    config::write_echo(cfg, &r.outdir)?;

    let table = if r.coupled.levels.len() == 1 && r.reference == ReferenceChoice::Finest {
        // A single level is its own reference: zero errors, no rates.
        let n = r.coupled.levels[0];
        let mesh = Mesh::new(r.mesh.dim(), n, r.mesh.edge_length())?;
        let init = r.init.build(&mesh)?;
        let times = scheme::uniform_output_times(r.scheme.t_end, r.snapshots);
        let traj = scheme::run(
            &mesh,
            &r.eos,
            &r.scheme,
            &r.noise,
            init,
            &times,
            r.ensemble.master_seed,
            r.coupled.path,
        )?;
        if let Some(e) = abort_error(&traj) {
            return Err(e);
        }
        ConvergenceTable {
            levels: vec![LevelError {
                n,
                h: mesh.h(),
                l1_space_time: 0.0,
                l1_rho: 0.0,
                natural_rho: 0.0,
                natural_mom: 0.0,
                rate_l1: None,
            }],
            reference_label: "finest-level (self)".into(),
        }
    } else {
        let runs = run_family(&r)?;
        match &r.reference {
            ReferenceChoice::Finest => convergence_study(&runs, &r.eos, Reference::FinestLevel)?,
            ReferenceChoice::External(dir) => {
                convergence_study(&runs, &r.eos, Reference::External(dir))?
            }
        }
    };

    write_table_csv(&r.outdir.join("convergence.csv"), &table)?;
    print!("{}", render_table(&table));
    println!("reference: {}", table.reference_label);
    if let Some(rate) = last_rho_rate(&table.levels) {
        println!("RATE_L1_RHO={rate:e}");
    }
    Ok(())
}

fn cmd_cesaro(cfg: &RunConfig) -> sefv::Result<()> {
    let r = cfg.resolve()?;
    config::write_echo(cfg, &r.outdir)?;
    let runs = run_family(&r)?;
    let finals: Vec<(Mesh, State)> = runs
        .iter()
        .map(|(m, t)| (m.clone(), t.final_state().clone()))
        .collect();
    let target = finals.last().expect("validated non-empty").0.clone();
    let ces = diagnostics::cesaro_mean(&finals, &target)?;

    let mut text = String::from("levels_used,l1_update\n");
    for (i, d) in ces.update_sizes.iter().enumerate() {
        let _ = writeln!(text, "{},{}", i + 2, d);
    }
    let csv = r.outdir.join("cesaro.csv");
    std::fs::write(&csv, text).map_err(|e| Error::IoFailure {
        path: csv.display().to_string(),
        source: e,
    })?;
    io::write_snapshot(
        &r.outdir.join("cesaro_mean.sefv"),
        &target,
        &r.eos,
        r.scheme.t_end,
        &ces.mean,
    )?;

    println!(
        "cesaro: {} levels, updates [{}] -> {}",
        runs.len(),
        ces.update_sizes
            .iter()
            .map(|d| format!("{d:.3e}"))
            .collect::<Vec<_>>()
            .join(", "),
        r.outdir.display()
    );
    Ok(())
}

fn cmd_verify() -> sefv::Result<()> {
    let report = verify::run_all()?;
    print!("{}", report.render());
    if report.all_passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        Err(Error::VerificationFailed(failed.join(", ")))
    }
}
