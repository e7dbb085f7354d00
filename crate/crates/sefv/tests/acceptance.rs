//! Acceptance gate: one test per release criterion, each printing one
//! `ACCEPTANCE <n> <name>: PASS|FAIL` line with the measured numbers
//! before asserting, so the console record and the test verdict agree.
//!
//! The numeric tolerances and runtime budgets live inside the library's
//! verification checks; every test here fails if its check reports
//! anything but a pass.

use std::process::Command;
use std::time::Instant;

use sefv::verify::{self, CheckOutcome};
use sefv::Result;

/// Print the one-line verdict for a criterion, then enforce it.
fn gate(number: usize, name: &str, outcome: Result<CheckOutcome>) {
    match outcome {
        Ok(check) => {
            let verdict = if check.passed { "PASS" } else { "FAIL" };
            println!(
                "ACCEPTANCE {number} {name}: {verdict} ({} in {:.2} s)",
                check.details, check.seconds
            );
            assert!(check.passed, "{name}: {}", check.details);
        }
        Err(err) => {
            println!("ACCEPTANCE {number} {name}: FAIL (error: {err})");
            panic!("{name}: {err}");
        }
    }
}

#[test]
fn acceptance_01_mass_conservation() {
    // Relative mass drift at most 1e-12 over at least a thousand steps
    // of a stochastic 1D run finishing within one second, and the same
    // drift bound in 2D.
    gate(1, "mass-conservation", verify::mass_conservation());
}

#[test]
fn acceptance_02_flux_consistency() {
    // The numerical flux on equal neighbour states reproduces the
    // physical flux within 1e-13 on ten thousand random states.
    gate(2, "flux-consistency", verify::flux_consistency());
}

#[test]
fn acceptance_03_entropy_stability() {
    // The semi-discrete energy production is non-positive (up to
    // 1e-10 of the pairing scale) on a thousand random fields; any
    // violation is reported with its sample index.
    gate(3, "entropy-stability", verify::entropy_stability());
}

#[test]
fn acceptance_04_deterministic_energy_decay() {
    // Without noise the discrete energy decays within ledger slack, and
    // the explicit-Euler energy excess above the semi-discrete rate
    // shrinks linearly in the step size (halving ratio within a factor
    // 1.5 of one half).
    gate(4, "deterministic-energy-decay", verify::deterministic_energy_decay());
}

#[test]
fn acceptance_05_pathwise_energy_inequality() {
    // Two hundred stochastic paths: every path satisfies the energy
    // inequality within slack, no path fails, the mean realised noise
    // work sits within four standard errors of zero, all inside a
    // minute.
    gate(5, "pathwise-energy-inequality", verify::pathwise_energy_inequality());
}

#[test]
fn acceptance_06_consistency_rates() {
    // Weak-form residuals of the discrete operators vanish under
    // refinement with log-log slope at least one and fit quality at
    // least 0.98 across four dyadic levels.
    gate(6, "consistency-rates", verify::consistency_rates());
}

#[test]
fn acceptance_07_relative_energy() {
    // The relative energy reproduces a hand-computed value to 1e-12,
    // vanishes exactly on coincident pairs, and is strictly positive on
    // ten thousand distinct pairs.
    gate(7, "relative-energy", verify::relative_energy_checks());
}

#[test]
fn acceptance_08_refinement_convergence() {
    // The smooth deterministic test case: space-time L1 errors against
    // the restricted finest level decrease strictly at every refinement,
    // separately in the density and momentum parts, within thirty
    // seconds. No convergence rate is asserted.
    gate(8, "refinement-convergence", verify::refinement_convergence());
}

#[test]
fn acceptance_09_cesaro_stabilization() {
    // Running Cesàro means of a common-noise refinement family
    // stabilise: consecutive mean updates shrink monotonically.
    gate(9, "cesaro-stabilization", verify::cesaro_stabilization());
}

#[test]
fn acceptance_10_reproducibility_and_verify_command() {
    // Two identically seeded runs produce byte-identical artifacts, and
    // the shipped `verify` command reports success end to end within
    // five minutes.
    gate(10, "reproducibility", verify::reproducibility());

    let clock = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_sefv"))
        .arg("verify")
        .output()
        .expect("binary runs");
    let elapsed = clock.elapsed().as_secs_f64();
    let ok = out.status.success() && elapsed <= 300.0;
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE 10 verify-command: {verdict} (exit {:?} in {elapsed:.2} s)", out.status.code());
    assert!(
        ok,
        "verify exited with {:?} after {elapsed:.2} s\nstdout:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout)
    );
}
