//! Monte Carlo driver, common-noise refinement studies, and ensemble
//! persistence.
//!
//! Paths are embarrassingly parallel: each one is a pure function of
//! `(master_seed, path index)`, so the per-path runs execute on a rayon
//! pool and the aggregates are folded sequentially in path order —
//! results are bitwise independent of the worker count. Refinement
//! studies couple their levels through one Wiener path realised on the
//! finest time grid; coarser levels consume exact sums of the fine
//! increments, never resampled ones.

use crate::diagnostics::{
    self, empirical_marginal, energy_inequality_report, MarginalSummary,
};
use crate::error::{Error, Result};
use crate::io;
use crate::mesh::{self, Mesh};
use crate::physics::EosParams;
use crate::scheme::{
    self, InitSpec, RunStatus, SchemeConfig, Trajectory,
};
use crate::state::State;
use rayon::prelude::*;
use std::path::{Path, PathBuf};

/// Where and when to sample one-point statistics across the ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    /// Requested time; resolved to the nearest stored snapshot.
    pub t: f64,
    /// Linear cell index on the run mesh.
    pub cell: usize,
}

/// Monte Carlo ensemble parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n_paths: usize,
    pub master_seed: u64,
    /// Uniform snapshot times in `(0, t_end]`.
    pub snapshot_count: usize,
    pub probes: Vec<Probe>,
}

impl EnsembleSpec {
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.n_paths < 1 {
            return Err(Error::ValidationError {
                field: "ensemble.n_paths".into(),
                reason: "need at least one path".into(),
            });
        }
        if self.snapshot_count < 1 {
            return Err(Error::ValidationError {
                field: "ensemble.snapshot_count".into(),
                reason: "need at least one snapshot time".into(),
            });
        }
        for p in &self.probes {
            if p.cell >= mesh.num_cells() {
                return Err(Error::ValidationError {
                    field: "ensemble.probes".into(),
                    reason: format!(
                        "cell {} out of range ({} cells)",
                        p.cell,
                        mesh.num_cells()
                    ),
                });
            }
        }
        Ok(())
    }
}

/// One row of the per-path report.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    pub path: u64,
    pub completed: bool,
    pub steps: usize,
    /// Energy of the last recorded state.
    pub final_energy: f64,
    /// Total realised martingale increment of the energy balance.
    pub noise_work: f64,
    /// Total Ito correction.
    pub ito_correction_total: f64,
    /// Smallest energy-balance slack along the path (0 when no step ran).
    pub min_slack: f64,
    pub abort_reason: Option<String>,
}

/// Cellwise mean and unbiased variance over completed paths at one
/// snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldStats {
    pub t: f64,
    pub mean: State,
    pub var_rho: Vec<f64>,
    pub var_mom: Vec<Vec<f64>>,
    /// Mean of the per-path total energies at this time.
    pub mean_energy: f64,
    /// Standard error of that mean (0 with fewer than two paths).
    pub se_energy: f64,
}

/// One-point marginals at a probe, sampled across completed paths.
#[derive(Debug, Clone)]
pub struct ProbeMarginals {
    /// Snapshot time the probe resolved to.
    pub t: f64,
    pub cell: usize,
    pub rho: MarginalSummary,
    pub mom: Vec<MarginalSummary>,
}

#[derive(Debug)]
pub struct EnsembleResult {
    /// One trajectory per path, aborted ones included.
    pub trajectories: Vec<Trajectory>,
    pub summaries: Vec<PathSummary>,
    /// Statistics at each common snapshot time (completed paths only).
    pub field_stats: Vec<FieldStats>,
    pub probe_marginals: Vec<ProbeMarginals>,
    pub failed_paths: usize,
    /// More than 10% of paths failed.
    pub degraded: bool,
}

/// Everything the sequential fold derives from the raw trajectories:
/// per-path summaries, per-time field statistics, probe marginals, the
/// failed-path count, and the degraded flag.
type Aggregates = (Vec<PathSummary>, Vec<FieldStats>, Vec<ProbeMarginals>, usize, bool);

/// Fold trajectories into summaries and statistics. Pure and sequential,
/// so aggregation is reproducible bit for bit regardless of how the
/// trajectories were produced.
fn aggregate(
    eos: &EosParams,
    mesh: &Mesh,
    trajectories: &[Trajectory],
    probes: &[Probe],
) -> Result<Aggregates> {
    let mut summaries = Vec::with_capacity(trajectories.len());
    let mut failed = 0usize;
    for (path, traj) in trajectories.iter().enumerate() {
        let completed = traj.status == RunStatus::Completed;
        if !completed {
            failed += 1;
        }
        let noise_work: f64 = traj.ledger.rows.iter().map(|r| r.ito_increment).sum();
        let corr: f64 = traj.ledger.rows.iter().map(|r| r.ito_correction).sum();
        let min_slack = if traj.ledger.rows.is_empty() {
            0.0
        } else {
            energy_inequality_report(&traj.ledger)?.min_slack
        };
        let final_energy = traj
            .ledger
            .rows
            .last()
            .map(|r| r.energy)
            .unwrap_or(traj.ledger.e0);
        summaries.push(PathSummary {
            path: path as u64,
            completed,
            steps: traj.steps,
            final_energy,
            noise_work,
            ito_correction_total: corr,
            min_slack,
            abort_reason: match &traj.status {
                RunStatus::Completed => None,
                RunStatus::Aborted { reason, .. } => Some(reason.clone()),
            },
        });
    }
    let degraded = failed * 10 > trajectories.len();

    let complete: Vec<&Trajectory> = trajectories
        .iter()
        .filter(|t| t.status == RunStatus::Completed)
        .collect();
    let mut field_stats = Vec::new();
    if let Some(first) = complete.first() {
        let snaps = first.snapshots.len();
        for c in &complete {
            if c.snapshots.len() != snaps {
                return Err(Error::IncompatibleTimeGrids(format!(
                    "paths with {} vs {} snapshots",
                    c.snapshots.len(),
                    snaps
                )));
            }
        }
        let n = complete.len();
        let dim = mesh.dim();
        let cells = mesh.num_cells();
        for j in 0..snaps {
            let t = first.snapshots[j].0;
            let mut mean_rho = vec![0.0; cells];
            let mut mean_mom = vec![vec![0.0; cells]; dim];
            for c in &complete {
                let s = &c.snapshots[j].1;
                for (m, v) in mean_rho.iter_mut().zip(&s.rho) {
                    *m += v;
                }
                for (mc, sc) in mean_mom.iter_mut().zip(&s.mom) {
                    for (m, v) in mc.iter_mut().zip(sc) {
                        *m += v;
                    }
                }
            }
            let inv = 1.0 / n as f64;
            for m in &mut mean_rho {
                *m *= inv;
            }
            for mc in &mut mean_mom {
                for m in mc.iter_mut() {
                    *m *= inv;
                }
            }
            let mut var_rho = vec![0.0; cells];
            let mut var_mom = vec![vec![0.0; cells]; dim];
            if n >= 2 {
                for c in &complete {
                    let s = &c.snapshots[j].1;
                    for k in 0..cells {
                        let d = s.rho[k] - mean_rho[k];
                        var_rho[k] += d * d;
                        for jj in 0..dim {
                            let d = s.mom[jj][k] - mean_mom[jj][k];
                            var_mom[jj][k] += d * d;
                        }
                    }
                }
                let inv = 1.0 / (n as f64 - 1.0);
                for v in &mut var_rho {
                    *v *= inv;
                }
                for vc in &mut var_mom {
                    for v in vc.iter_mut() {
                        *v *= inv;
                    }
                }
            }

            let energies: Vec<f64> = complete
                .iter()
                .map(|c| c.snapshots[j].1.total_energy(mesh, eos))
                .collect::<Result<_>>()?;
            let mean_energy = energies.iter().sum::<f64>() / n as f64;
            let se_energy = if n >= 2 {
                let var = energies
                    .iter()
                    .map(|e| (e - mean_energy) * (e - mean_energy))
                    .sum::<f64>()
                    / (n as f64 - 1.0);
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            field_stats.push(FieldStats {
                t,
                mean: State::new(mean_rho, mean_mom)?,
                var_rho,
                var_mom,
                mean_energy,
                se_energy,
            });
        }
    }

    let mut probe_marginals = Vec::new();
    if !complete.is_empty() {
        let first = complete[0];
        for probe in probes {
            let (j, &(t, _)) = first
                .snapshots
                .iter()
                .enumerate()
                .min_by(|(_, (ta, _)), (_, (tb, _))| {
                    (ta - probe.t)
                        .abs()
                        .partial_cmp(&(tb - probe.t).abs())
                        .unwrap()
                })
                .expect("at least the initial snapshot");
            let rho_samples: Vec<f64> =
                complete.iter().map(|c| c.snapshots[j].1.rho[probe.cell]).collect();
            let rho = empirical_marginal(&rho_samples)?;
            let mut mom = Vec::with_capacity(mesh.dim());
            for comp in 0..mesh.dim() {
                let samples: Vec<f64> = complete
                    .iter()
                    .map(|c| c.snapshots[j].1.mom[comp][probe.cell])
                    .collect();
                mom.push(empirical_marginal(&samples)?);
            }
            probe_marginals.push(ProbeMarginals { t, cell: probe.cell, rho, mom });
        }
    }

    Ok((summaries, field_stats, probe_marginals, failed, degraded))
}

/// Run `n_paths` independent trajectories from a common initial state and
/// aggregate them. Hard errors (bad config, I/O) abort the ensemble;
/// positivity or finiteness failures mark the path failed and are
/// reported, not fatal.
pub fn run_ensemble(
    mesh: &Mesh,
    eos: &EosParams,
    cfg: &SchemeConfig,
    noise: &crate::noise::NoiseModel,
    init: &State,
    spec: &EnsembleSpec,
) -> Result<EnsembleResult> {
    spec.validate(mesh)?;
    let times = scheme::uniform_output_times(cfg.t_end, spec.snapshot_count);
    let trajectories: Vec<Trajectory> = (0..spec.n_paths as u64)
        .into_par_iter()
        .map(|path| {
            scheme::run(mesh, eos, cfg, noise, init.clone(), &times, spec.master_seed, path)
        })
        .collect::<Result<_>>()?;

    let (summaries, field_stats, probe_marginals, failed_paths, degraded) =
        aggregate(eos, mesh, &trajectories, &spec.probes)?;
    Ok(EnsembleResult {
        trajectories,
        summaries,
        field_stats,
        probe_marginals,
        failed_paths,
        degraded,
    })
}

/// A family of runs on dyadically nested meshes driven by one Wiener
/// path.
#[derive(Debug)]
pub struct CoupledRun {
    /// `(mesh, trajectory)` per level, coarsest first.
    pub levels: Vec<(Mesh, Trajectory)>,
    /// Fine-grid step all levels' steps are multiples of.
    pub dt_fine: f64,
    pub fine_steps: usize,
}

/// Parameters of a coupled refinement run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSpec {
    /// Cells per axis, strictly increasing, each dividing the next.
    pub levels: Vec<usize>,
    pub master_seed: u64,
    pub path: u64,
    /// Snapshots on the common output grid.
    pub snapshot_count: usize,
    /// Wave-speed headroom when sizing the fixed time grid (>= 1).
    pub dt_safety: f64,
}

/// Integrate every level on a fixed common time grid: the fine step is
/// sized from the finest level's initial CFL condition with `dt_safety`
/// headroom (and the noise step cap), then rounded so that every level's
/// step count and the snapshot grid divide evenly. Level `k` advances
/// with `r_k = n_finest / n_k` fine steps at a time, consuming the
/// bit-exact sum of that window's fine-grid Wiener increments, so all
/// levels experience the same realised path. Fixed steps cannot react to
/// wave-speed growth, so each trajectory's `max_cfl_ratio` reports the
/// worst Courant number actually encountered.
pub fn coupled_refinement_run(
    dim: usize,
    ell: f64,
    eos: &EosParams,
    cfg: &SchemeConfig,
    noise: &crate::noise::NoiseModel,
    init: &InitSpec,
    spec: &CoupledSpec,
) -> Result<CoupledRun> {
    if spec.levels.len() < 2 {
        return Err(Error::TooFewSamples { need: 2, found: spec.levels.len() });
    }
    for w in spec.levels.windows(2) {
        if w[1] <= w[0] || w[1] % w[0] != 0 {
            return Err(Error::NonNestedMeshes { coarse: w[0], fine: w[1] });
        }
    }
    if !(spec.dt_safety >= 1.0) {
        return Err(Error::ValidationError {
            field: "coupled.dt_safety".into(),
            reason: format!("must be >= 1, got {}", spec.dt_safety),
        });
    }
    if spec.snapshot_count < 1 {
        return Err(Error::ValidationError {
            field: "coupled.snapshot_count".into(),
            reason: "need at least one snapshot".into(),
        });
    }
    if !(cfg.t_end > 0.0) {
        return Err(Error::ValidationError {
            field: "scheme.t_end".into(),
            reason: "a refinement family needs a positive horizon".into(),
        });
    }

    let n_finest = *spec.levels.last().unwrap();
    let meshes: Vec<Mesh> = spec
        .levels
        .iter()
        .map(|&n| Mesh::new(dim, n, ell))
        .collect::<Result<_>>()?;
    let inits: Vec<State> =
        meshes.iter().map(|m| init.build(m)).collect::<Result<_>>()?;

    // Fine step from the finest level's initial wave speeds, with
    // headroom, capped by the noise step bound.
    let fine_mesh = meshes.last().unwrap();
    let lambda0 = inits.last().unwrap().global_lambda(eos)? * cfg.lambda_multiplier;
    let dt_cfl = if lambda0 > 0.0 {
        cfg.cfl * fine_mesh.h() / (lambda0 * spec.dt_safety)
    } else {
        cfg.noise_dt_cap
    };
    let dt_target = dt_cfl.min(cfg.noise_dt_cap);
    let r0 = (n_finest / spec.levels[0]) as u64;
    let block = spec.snapshot_count as u64 * r0;
    let raw_steps = (cfg.t_end / dt_target).ceil().max(1.0) as u64;
    let fine_steps = raw_steps.div_ceil(block) * block;
    let dt_fine = cfg.t_end / fine_steps as f64;

    let mut levels = Vec::with_capacity(spec.levels.len());
    for (mesh, state0) in meshes.into_iter().zip(inits) {
        let r = (n_finest / mesh.cells_per_axis()) as u64;
        let steps = (fine_steps / r) as usize;
        let snap_every = steps / spec.snapshot_count;
        let traj = scheme::run_fixed(
            &mesh,
            eos,
            cfg,
            noise,
            state0,
            spec.master_seed,
            spec.path,
            dt_fine,
            r,
            steps,
            snap_every,
        )?;
        levels.push((mesh, traj));
    }
    Ok(CoupledRun { levels, dt_fine, fine_steps: fine_steps as usize })
}

/// What the convergence errors are measured against.
pub enum Reference<'a> {
    /// Closed-form fields `(t, x) -> rho` and `(t, x) -> m`, projected
    /// onto each level's mesh at each snapshot time.
    Manufactured {
        rho: &'a dyn Fn(f64, &[f64]) -> f64,
        mom: &'a dyn Fn(f64, &[f64]) -> [f64; 3],
    },
    /// The last (finest) run of the family, restricted to each coarser
    /// mesh; the finest level itself is excluded from the table.
    FinestLevel,
    /// A run directory saved by [`io::save_run`] on a mesh nested above
    /// every level.
    External(&'a Path),
}

/// Errors of one refinement level against the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelError {
    pub n: usize,
    pub h: f64,
    /// Space-time L1 distance (trapezoid over common snapshot times).
    pub l1_space_time: f64,
    /// Density-only part of the space-time L1 distance.
    pub l1_rho: f64,
    /// Largest L^gamma density distance over snapshot times.
    pub natural_rho: f64,
    /// Largest L^(2 gamma / (gamma + 1)) momentum distance over times.
    pub natural_mom: f64,
    /// Observed L1 order against the previous (coarser) level.
    pub rate_l1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub levels: Vec<LevelError>,
    pub reference_label: String,
}

fn check_common_times(runs: &[(Mesh, Trajectory)]) -> Result<Vec<f64>> {
    let first: Vec<f64> = runs[0].1.snapshots.iter().map(|(t, _)| *t).collect();
    let scale = first.last().copied().unwrap_or(1.0).max(1e-300);
    for (_, traj) in &runs[1..] {
        if traj.snapshots.len() != first.len() {
            return Err(Error::IncompatibleTimeGrids(format!(
                "levels with {} vs {} snapshots",
                traj.snapshots.len(),
                first.len()
            )));
        }
        for ((ta, _), tb) in traj.snapshots.iter().zip(&first) {
            if (ta - tb).abs() > 1e-9 * scale {
                return Err(Error::IncompatibleTimeGrids(format!(
                    "snapshot times {ta} vs {tb}"
                )));
            }
        }
    }
    Ok(first)
}

fn restrict_state(fine: &Mesh, coarse: &Mesh, s: &State) -> Result<State> {
    let rho = mesh::restrict(fine, coarse, &s.rho)?;
    let mut mom = Vec::with_capacity(s.mom.len());
    for comp in &s.mom {
        mom.push(mesh::restrict(fine, coarse, comp)?);
    }
    State::new(rho, mom)
}

/// Per-level errors of a refinement family against a reference, in L1
/// (space-time) and the natural norms, with observed orders between
/// consecutive levels.
pub fn convergence_study(
    runs: &[(Mesh, Trajectory)],
    eos: &EosParams,
    reference: Reference<'_>,
) -> Result<ConvergenceTable> {
    if runs.is_empty() {
        return Err(Error::TooFewSamples { need: 1, found: 0 });
    }
    for w in runs.windows(2) {
        let (na, nb) = (w[0].0.cells_per_axis(), w[1].0.cells_per_axis());
        if nb <= na || nb % na != 0 {
            return Err(Error::NonNestedMeshes { coarse: na, fine: nb });
        }
    }
    let times = check_common_times(runs)?;
    let p_mom = 2.0 * eos.gamma / (eos.gamma + 1.0);

    // Reference states per level per time.
    let external = match &reference {
        Reference::External(dir) => Some(io::load_run(dir)?),
        _ => None,
    };
    let (label, compared): (String, &[(Mesh, Trajectory)]) = match &reference {
        Reference::Manufactured { .. } => ("manufactured".into(), runs),
        Reference::FinestLevel => {
            if runs.len() < 2 {
                return Err(Error::MissingReference(
                    "finest-level reference needs at least two levels".into(),
                ));
            }
            ("finest-level".into(), &runs[..runs.len() - 1])
        }
        Reference::External(dir) => (format!("external:{}", dir.display()), runs),
    };

    let reference_states = |mesh: &Mesh| -> Result<Vec<State>> {
        match &reference {
            Reference::Manufactured { rho, mom } => times
                .iter()
                .map(|&t| {
                    let r = mesh::project(mesh, |x| rho(t, x));
                    let mut m = Vec::with_capacity(mesh.dim());
                    for j in 0..mesh.dim() {
                        m.push(mesh::project(mesh, |x| mom(t, x)[j]));
                    }
                    State::new(r, m)
                })
                .collect(),
            Reference::FinestLevel => {
                let (fine_mesh, fine_traj) = runs.last().unwrap();
                fine_traj
                    .snapshots
                    .iter()
                    .map(|(_, s)| restrict_state(fine_mesh, mesh, s))
                    .collect()
            }
            Reference::External(_) => {
                let loaded = external.as_ref().unwrap();
                let lt: Vec<f64> =
                    loaded.trajectory.snapshots.iter().map(|(t, _)| *t).collect();
                if lt.len() != times.len()
                    || lt
                        .iter()
                        .zip(&times)
                        .any(|(a, b)| (a - b).abs() > 1e-9 * times.last().unwrap().max(1e-300))
                {
                    return Err(Error::IncompatibleTimeGrids(
                        "external reference stores different snapshot times".into(),
                    ));
                }
                loaded
                    .trajectory
                    .snapshots
                    .iter()
                    .map(|(_, s)| restrict_state(&loaded.mesh, mesh, s))
                    .collect()
            }
        }
    };

    let mut levels = Vec::with_capacity(compared.len());
    let mut prev: Option<(f64, f64)> = None;
    for (mesh, traj) in compared {
        let refs = reference_states(mesh)?;
        let mut l1_series = Vec::with_capacity(times.len());
        let mut l1_rho_series = Vec::with_capacity(times.len());
        let mut nat_rho: f64 = 0.0;
        let mut nat_mom: f64 = 0.0;
        for ((_, s), r) in traj.snapshots.iter().zip(&refs) {
            l1_series.push(diagnostics::l1_distance(mesh, s, r)?);
            l1_rho_series.push(diagnostics::lp_distance_scalar(mesh, &s.rho, &r.rho, 1.0)?);
            nat_rho = nat_rho
                .max(diagnostics::lp_distance_scalar(mesh, &s.rho, &r.rho, eos.gamma)?);
            nat_mom =
                nat_mom.max(diagnostics::lp_distance_vector(mesh, &s.mom, &r.mom, p_mom)?);
        }
        let trapezoid = |series: &[f64]| -> f64 {
            times
                .windows(2)
                .zip(series.windows(2))
                .map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] - t[0]))
                .sum()
        };
        let l1_space_time = trapezoid(&l1_series);
        let l1_rho = trapezoid(&l1_rho_series);
        let h = mesh.h();
        let rate_l1 = prev.and_then(|(ph, pe)| {
            if pe > 0.0 && l1_space_time > 0.0 {
                Some((pe / l1_space_time).log2() / (ph / h).log2())
            } else {
                None
            }
        });
        prev = Some((h, l1_space_time));
        levels.push(LevelError {
            n: mesh.cells_per_axis(),
            h,
            l1_space_time,
            l1_rho,
            natural_rho: nat_rho,
            natural_mom: nat_mom,
            rate_l1,
        });
    }
    Ok(ConvergenceTable { levels, reference_label: label })
}

/// Mean and standard error of per-path level errors under common-noise
/// coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStats {
    pub n: usize,
    pub h: f64,
    pub mean_l1: f64,
    pub se_l1: f64,
    pub mean_natural_rho: f64,
    pub mean_natural_mom: f64,
    /// Observed order computed from the mean L1 errors.
    pub rate_l1: Option<f64>,
}

/// Aggregate per-path convergence tables (one per coupled path) into
/// mean +- SE rows. All tables must list the same levels.
pub fn aggregate_tables(tables: &[ConvergenceTable]) -> Result<Vec<LevelStats>> {
    let first = tables.first().ok_or(Error::TooFewSamples { need: 1, found: 0 })?;
    for t in tables {
        if t.levels.len() != first.levels.len()
            || t.levels
                .iter()
                .zip(&first.levels)
                .any(|(a, b)| a.n != b.n)
        {
            return Err(Error::IncompatibleTimeGrids(
                "convergence tables list different levels".into(),
            ));
        }
    }
    let n_paths = tables.len() as f64;
    let mut out = Vec::with_capacity(first.levels.len());
    let mut prev: Option<(f64, f64)> = None;
    for (i, lvl) in first.levels.iter().enumerate() {
        let l1s: Vec<f64> = tables.iter().map(|t| t.levels[i].l1_space_time).collect();
        let mean_l1 = l1s.iter().sum::<f64>() / n_paths;
        let se_l1 = if tables.len() >= 2 {
            let var = l1s.iter().map(|e| (e - mean_l1) * (e - mean_l1)).sum::<f64>()
                / (n_paths - 1.0);
            (var / n_paths).sqrt()
        } else {
            0.0
        };
        let mean_natural_rho =
            tables.iter().map(|t| t.levels[i].natural_rho).sum::<f64>() / n_paths;
        let mean_natural_mom =
            tables.iter().map(|t| t.levels[i].natural_mom).sum::<f64>() / n_paths;
        let rate_l1 = prev.and_then(|(ph, pe)| {
            if pe > 0.0 && mean_l1 > 0.0 {
                Some((pe / mean_l1).log2() / (ph / lvl.h).log2())
            } else {
                None
            }
        });
        prev = Some((lvl.h, mean_l1));
        out.push(LevelStats {
            n: lvl.n,
            h: lvl.h,
            mean_l1,
            se_l1,
            mean_natural_rho,
            mean_natural_mom,
            rate_l1,
        });
    }
    Ok(out)
}

const SUMMARY_NAME: &str = "paths.csv";
const SUMMARY_HEADER: &str =
    "path,completed,steps,final_energy,noise_work,ito_correction_total,min_slack";

fn path_dir_name(path: u64) -> String {
    format!("path_{path:04}")
}

/// Persist an ensemble: one run directory per path, a per-path summary
/// CSV, and a top-level manifest whose checksums chain to every file
/// (each path directory carries its own checksummed manifest, and the
/// top manifest records those manifests' checksums). Returns the
/// top-level manifest path.
pub fn save_ensemble(
    dir: &Path,
    mesh: &Mesh,
    eos: &EosParams,
    result: &EnsembleResult,
    spec: &EnsembleSpec,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::IoFailure {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut manifest = io::Manifest::default();
    manifest.set("format_version", io::FORMAT_VERSION);
    manifest.set("ensemble.n_paths", spec.n_paths);
    manifest.set("ensemble.master_seed", spec.master_seed);
    manifest.set("ensemble.snapshot_count", spec.snapshot_count);
    manifest.set("ensemble.failed_paths", result.failed_paths);
    manifest.set("ensemble.degraded", result.degraded);
    manifest.set("probe.count", spec.probes.len());
    for (i, p) in spec.probes.iter().enumerate() {
        manifest.set(&format!("probe.{i}.t"), p.t);
        manifest.set(&format!("probe.{i}.cell"), p.cell);
    }

    for (i, traj) in result.trajectories.iter().enumerate() {
        let sub = path_dir_name(i as u64);
        io::save_run(
            &dir.join(&sub),
            mesh,
            eos,
            traj,
            &[("path".into(), i.to_string())],
        )?;
        manifest.add_checksum(dir, &format!("{sub}/{}", io::MANIFEST_NAME))?;
    }

    let rows: Vec<Vec<f64>> = result
        .summaries
        .iter()
        .map(|s| {
            vec![
                s.path as f64,
                if s.completed { 1.0 } else { 0.0 },
                s.steps as f64,
                s.final_energy,
                s.noise_work,
                s.ito_correction_total,
                s.min_slack,
            ]
        })
        .collect();
    io::write_csv_table(&dir.join(SUMMARY_NAME), SUMMARY_HEADER, &rows)?;
    manifest.add_checksum(dir, SUMMARY_NAME)?;
    manifest.set(
        "created_unix",
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    );
    let mpath = dir.join(io::MANIFEST_NAME);
    manifest.write(&mpath)?;
    Ok(mpath)
}

/// Load an ensemble directory written by [`save_ensemble`]: verifies the
/// chained checksums, loads every path trajectory bit-exactly, and
/// recomputes the aggregates with the same pure fold used at save time.
pub fn load_ensemble(dir: &Path, eos: &EosParams) -> Result<(Mesh, EnsembleResult, EnsembleSpec)> {
    let mpath = dir.join(io::MANIFEST_NAME);
    let manifest = io::Manifest::read(&mpath)?;
    manifest.verify(dir)?;
    let need = |k: &str| -> Result<&str> {
        manifest.get(k).ok_or_else(|| {
            Error::ParseError(format!("{}: missing manifest key {k}", mpath.display()))
        })
    };
    let n_paths: usize = need("ensemble.n_paths")?
        .parse()
        .map_err(|_| Error::ParseError("bad ensemble.n_paths".into()))?;
    let master_seed: u64 = need("ensemble.master_seed")?
        .parse()
        .map_err(|_| Error::ParseError("bad ensemble.master_seed".into()))?;
    let snapshot_count: usize = need("ensemble.snapshot_count")?
        .parse()
        .map_err(|_| Error::ParseError("bad ensemble.snapshot_count".into()))?;
    let probe_count: usize = need("probe.count")?
        .parse()
        .map_err(|_| Error::ParseError("bad probe.count".into()))?;
    let mut probes = Vec::with_capacity(probe_count);
    for i in 0..probe_count {
        probes.push(Probe {
            t: need(&format!("probe.{i}.t"))?
                .parse()
                .map_err(|_| Error::ParseError(format!("bad probe.{i}.t")))?,
            cell: need(&format!("probe.{i}.cell"))?
                .parse()
                .map_err(|_| Error::ParseError(format!("bad probe.{i}.cell")))?,
        });
    }
    let spec = EnsembleSpec { n_paths, master_seed, snapshot_count, probes };

    let mut mesh: Option<Mesh> = None;
    let mut trajectories = Vec::with_capacity(n_paths);
    for i in 0..n_paths as u64 {
        let loaded = io::load_run(&dir.join(path_dir_name(i)))?;
        if let Some(m) = &mesh {
            if *m != loaded.mesh {
                return Err(Error::ParseError(format!(
                    "{}: paths stored on different meshes",
                    dir.display()
                )));
            }
        } else {
            mesh = Some(loaded.mesh);
        }
        trajectories.push(loaded.trajectory);
    }
    let mesh = mesh.ok_or_else(|| {
        Error::ParseError(format!("{}: ensemble with zero paths", dir.display()))
    })?;
    let (summaries, field_stats, probe_marginals, failed_paths, degraded) =
        aggregate(eos, &mesh, &trajectories, &spec.probes)?;
    Ok((
        mesh,
        EnsembleResult {
            trajectories,
            summaries,
            field_stats,
            probe_marginals,
            failed_paths,
            degraded,
        },
        spec,
    ))
}
