//! Cross-module checks of the space operator and the time stepper: the
//! face-flux and stencil assemblies of the drift agree, time stepping
//! conserves what the flux form promises, the momentum balance splits
//! exactly into drift and noise parts, and a zero horizon degenerates
//! gracefully.

use sefv::flux;
use sefv::noise::{build_noise, CoeffSpec, NoiseModel};
use sefv::scheme::{self, InitSpec, RunStatus, SchemeConfig};
use sefv::verify::random_trig_state;
use sefv::{EosParams, Mesh};

fn standard_eos() -> EosParams {
    EosParams::new(1.4, 1.0).unwrap()
}

fn no_noise() -> NoiseModel {
    build_noise(0, 0.0, 2.0, CoeffSpec::DefaultLinear, true).unwrap()
}

/// Largest magnitude in a rate table, for relative comparisons.
fn sup(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

#[test]
fn face_flux_and_stencil_assemblies_agree() {
    // The face-flux sum and the explicit divergence/Laplacian stencil are
    // the same operator written two ways; on random smooth states in one,
    // two, and three dimensions they must agree to rounding.
    let eos = standard_eos();
    let cfg = SchemeConfig::default();
    let lf = flux::create_or_err(&cfg.flux_name).unwrap();
    for (dim, n) in [(1usize, 48usize), (2, 12), (3, 6)] {
        let mesh = Mesh::new(dim, n, 1.0).unwrap();
        for sample in 0..25u64 {
            let state = random_trig_state(&mesh, 11 + dim as u64, sample);
            let by_faces = scheme::drift(&mesh, &eos, &cfg, lf.as_ref(), &state).unwrap();
            let by_stencil =
                scheme::drift_explicit(&mesh, &eos, &state, by_faces.lambda).unwrap();

            let rho_scale = sup(&by_faces.rho_rate).max(1.0);
            for (a, b) in by_faces.rho_rate.iter().zip(&by_stencil.rho_rate) {
                assert!(
                    (a - b).abs() <= 1e-11 * rho_scale,
                    "density rate mismatch {a} vs {b} (dim {dim}, sample {sample})"
                );
            }
            for axis in 0..dim {
                let mom_scale = sup(&by_faces.mom_rate[axis]).max(1.0);
                for (a, b) in by_faces.mom_rate[axis].iter().zip(&by_stencil.mom_rate[axis]) {
                    assert!(
                        (a - b).abs() <= 1e-11 * mom_scale,
                        "momentum rate mismatch {a} vs {b} (dim {dim}, axis {axis})"
                    );
                }
            }
        }
    }
}

#[test]
fn unforced_runs_conserve_mass_and_momentum() {
    let eos = standard_eos();
    let mesh = Mesh::new(2, 12, 1.0).unwrap();
    let init = InitSpec::Sine { base: 1.0, amplitude: 0.15, velocity: vec![0.5, -0.25] }
        .build(&mesh)
        .unwrap();
    let mass0 = init.total_mass(&mesh);
    let mom0 = init.total_momentum(&mesh);
    let cfg = SchemeConfig { t_end: 0.1, cfl: 0.2, ..Default::default() };
    let traj = scheme::run(&mesh, &eos, &cfg, &no_noise(), init, &[cfg.t_end], 0, 0).unwrap();
    assert_eq!(traj.status, RunStatus::Completed);

    let fin = traj.final_state();
    assert!((fin.total_mass(&mesh) - mass0).abs() <= 1e-13 * mass0.abs());
    let fin_mom = fin.total_momentum(&mesh);
    for (axis, (a, b)) in fin_mom.iter().zip(&mom0).take(2).enumerate() {
        let drift = (a - b).abs();
        assert!(drift <= 1e-12, "momentum component {axis} drifted by {drift}");
    }
}

#[test]
fn forced_runs_still_conserve_mass_exactly() {
    // The stochastic forcing acts on momentum only, and the density
    // update stays in flux form, so mass conservation survives the noise.
    let eos = standard_eos();
    let mesh = Mesh::new(1, 64, 1.0).unwrap();
    let noise = build_noise(3, 0.2, 2.0, CoeffSpec::DefaultLinear, true).unwrap();
    let init = InitSpec::Sine { base: 1.0, amplitude: 0.1, velocity: vec![0.5] }
        .build(&mesh)
        .unwrap();
    let mass0 = init.total_mass(&mesh);
    let cfg = SchemeConfig { t_end: 0.2, ..Default::default() };
    let traj = scheme::run(&mesh, &eos, &cfg, &noise, init, &[cfg.t_end], 7, 0).unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    assert!(traj.steps >= 20);
    let drift = (traj.final_state().total_mass(&mesh) - mass0).abs() / mass0.abs();
    assert!(drift <= 1e-13, "relative mass drift {drift}");
}

#[test]
fn momentum_change_equals_the_accumulated_noise_kicks() {
    // Fixed-grid run with a snapshot after every step: the deterministic
    // drift conserves total momentum exactly, so the whole change must be
    // the volume-summed noise kicks evaluated at the pre-step states.
    let eos = standard_eos();
    let mesh = Mesh::new(1, 32, 1.0).unwrap();
    let noise = build_noise(3, 0.2, 2.0, CoeffSpec::DefaultLinear, true).unwrap();
    let init = InitSpec::Sine { base: 1.0, amplitude: 0.2, velocity: vec![0.4] }
        .build(&mesh)
        .unwrap();
    let mom0 = init.total_momentum(&mesh)[0];
    let cfg = SchemeConfig { t_end: 0.02, ..Default::default() };
    let steps = 20usize;
    let dt = cfg.t_end / steps as f64;
    let traj = scheme::run_fixed(
        &mesh,
        &eos,
        &cfg,
        &noise,
        init,
        42,
        0,
        dt,
        1,
        steps,
        1,
    )
    .unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    assert_eq!(traj.snapshots.len(), steps + 1);
    assert_eq!(traj.floored_cells, 0);

    let vol = mesh.cell_volume();
    let mut predicted = 0.0;
    for (j, (_, state)) in traj.snapshots.iter().take(steps).enumerate() {
        let inc = noise.aggregated_increments(42, 0, j as u64, 1, dt);
        let kick = noise.momentum_increment(&mesh, state, &inc).unwrap();
        predicted += vol * kick[0].iter().sum::<f64>();
    }
    let actual = traj.final_state().total_momentum(&mesh)[0] - mom0;
    assert!(
        (actual - predicted).abs() <= 1e-12 * predicted.abs().max(1.0),
        "momentum change {actual} vs accumulated kicks {predicted}"
    );
}

#[test]
fn zero_horizon_runs_return_only_the_initial_state() {
    let eos = standard_eos();
    let mesh = Mesh::new(1, 16, 1.0).unwrap();
    let init = InitSpec::Sine { base: 1.0, amplitude: 0.1, velocity: vec![0.5] }
        .build(&mesh)
        .unwrap();
    let cfg = SchemeConfig { t_end: 0.0, ..Default::default() };
    let traj =
        scheme::run(&mesh, &eos, &cfg, &no_noise(), init.clone(), &[], 0, 0).unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    assert_eq!(traj.steps, 0);
    assert_eq!(traj.snapshots.len(), 1);
    assert_eq!(traj.snapshots[0].0, 0.0);
    assert_eq!(traj.snapshots[0].1, init);
    assert!(traj.ledger.rows.is_empty());
}
