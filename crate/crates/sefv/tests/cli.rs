//! The command-line surface: exit codes by failure class, the stable
//! machine-readable output prefixes, dotted overrides, the `--seed`
//! shorthand, and the degenerate runs the interface promises to handle.

use std::path::Path;
use std::process::{Command, Output};

use sefv::config;
use sefv::io;

fn sefv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sefv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_prints_stable_prefixes_and_writes_the_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = sefv(&[
        "run",
        "--mesh.n=16",
        "--scheme.t_end=0.02",
        "--outputs.snapshots=2",
        "--noise.k_modes=2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    for prefix in ["MASS_DRIFT=", "ENERGY_SLACK_MIN=", "MIN_RHO="] {
        assert!(text.contains(prefix), "missing {prefix} in:\n{text}");
    }

    for name in [io::MANIFEST_NAME, io::LEDGER_NAME, config::ECHO_NAME] {
        assert!(out_dir.join(name).is_file(), "missing {name}");
    }
    // Initial state plus two snapshot times.
    for idx in 0..3 {
        assert!(out_dir.join(io::snapshot_name(idx)).is_file());
    }

    // The echoed configuration is a complete, reparseable document.
    let echoed = std::fs::read_to_string(out_dir.join(config::ECHO_NAME)).unwrap();
    let cfg = config::parse_str(&echoed, &[]).unwrap();
    assert_eq!(cfg.mesh.n, 16);
    assert_eq!(cfg.outputs.dir, out_dir.to_str().unwrap());
}

#[test]
fn configuration_errors_exit_with_code_one() {
    let out = sefv(&["run", "--physics.gamma=0.9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("physics.gamma"), "stderr: {}", stderr(&out));
}

#[test]
fn runtime_failures_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = sefv(&[
        "run",
        "--scheme.init.amplitude=1.5",
        "--out",
        dir.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
}

#[test]
fn zero_horizon_runs_emit_only_the_initial_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("r");
    let out = sefv(&[
        "run",
        "--mesh.n=16",
        "--scheme.t_end=0.0",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(out_dir.join(io::snapshot_name(0)).is_file());
    assert!(!out_dir.join(io::snapshot_name(1)).exists());
    let loaded = io::load_run(&out_dir).unwrap();
    assert_eq!(loaded.trajectory.snapshots.len(), 1);
    assert_eq!(loaded.trajectory.steps, 0);
}

#[test]
fn converge_with_one_level_prints_a_rateless_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = sefv(&[
        "converge",
        "--ensemble.levels=[32]",
        "--scheme.t_end=0.05",
        "--out",
        dir.path().join("c").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("32"), "table missing the level:\n{text}");
    assert!(
        !text.contains("RATE_L1_RHO="),
        "a single level must not report a rate:\n{text}"
    );
    assert!(dir.path().join("c").join("convergence.csv").is_file());
}

#[test]
fn seed_flag_is_shorthand_for_the_master_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |extra: &[&str], sub: &str| -> Vec<u8> {
        let out_dir = dir.path().join(sub);
        let mut args = vec![
            "run",
            "--mesh.n=16",
            "--scheme.t_end=0.02",
            "--outputs.snapshots=1",
            "--noise.k_modes=2",
        ];
        args.extend_from_slice(extra);
        let out_str = out_dir.to_str().unwrap().to_string();
        let mut owned: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        owned.push("--out".into());
        owned.push(out_str);
        let refs: Vec<&str> = owned.iter().map(String::as_str).collect();
        let out = sefv(&refs);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        std::fs::read(out_dir.join(io::snapshot_name(1))).unwrap()
    };
    let a = run(&["--seed", "5"], "a");
    let b = run(&["--ensemble.master_seed=5"], "b");
    let c = run(&["--seed", "6"], "c");
    assert_eq!(a, b, "--seed and the dotted key must agree");
    assert_ne!(a, c, "different seeds must change the realisation");
}

#[test]
fn thread_cap_env_var_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("e");
    let out = Command::new(env!("CARGO_BIN_EXE_sefv"))
        .env("SEFV_THREADS", "1")
        .args([
            "ensemble",
            "--mesh.n=16",
            "--scheme.t_end=0.02",
            "--ensemble.n_paths=3",
            "--outputs.snapshots=1",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(Path::new(&out_dir).join("paths.csv").is_file());
}
