//! Deterministic persistence: binary field snapshots, CSV energy
//! ledgers, and a checksummed key-value manifest per run directory.
//!
//! Field file layout (all little-endian): magic `SEFV`, format version
//! (u32), spatial dimension (u64), cells per axis (u64), the two
//! pressure-law parameters and the snapshot time (f64 each), then the
//! density array followed by one array per momentum component, each
//! `n^dim` f64 values in row-major cell order. The torus edge length and
//! everything else about the run live in the manifest.
//!
//! Floats in text files are printed with Rust's shortest round-trip
//! formatting, so `load` after `save` reproduces every bit. The manifest
//! records a SHA-256 checksum per data file; `created_unix` is the one
//! key excluded from determinism comparisons.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::physics::EosParams;
use crate::scheme::{EnergyLedger, LedgerRow, RunStatus, Trajectory};
use crate::state::State;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};

pub const MAGIC: [u8; 4] = *b"SEFV";
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.txt";
pub const LEDGER_NAME: &str = "ledger.csv";

/// CSV column order of the energy ledger.
pub const LEDGER_HEADER: &str =
    "t,dt,energy,ito_increment,ito_correction,sup_u,min_rho,lambda";

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::IoFailure { path: path.display().to_string(), source }
}

/// A field file as stored on disk; the mesh edge length is not part of
/// the header, so reconstruction into a [`Mesh`] needs it supplied.
#[derive(Debug, Clone)]
pub struct RawSnapshot {
    pub dim: usize,
    pub n: usize,
    pub gamma: f64,
    pub a: f64,
    pub t: f64,
    pub rho: Vec<f64>,
    pub mom: Vec<Vec<f64>>,
}

impl RawSnapshot {
    /// Rebuild mesh, pressure law and state given the torus edge length.
    pub fn unpack(self, ell: f64) -> Result<(Mesh, EosParams, f64, State)> {
        let mesh = Mesh::new(self.dim, self.n, ell)?;
        let eos = EosParams::new(self.gamma, self.a)?;
        let state = State::new(self.rho, self.mom)?;
        state.matches(&mesh)?;
        Ok((mesh, eos, self.t, state))
    }
}

pub fn write_snapshot(
    path: &Path,
    mesh: &Mesh,
    eos: &EosParams,
    t: f64,
    state: &State,
) -> Result<()> {
    state.matches(mesh)?;
    let cells = mesh.num_cells();
    let mut buf =
        Vec::with_capacity(4 + 4 + 16 + 24 + 8 * cells * (1 + mesh.dim()));
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(mesh.dim() as u64).to_le_bytes());
    buf.extend_from_slice(&(mesh.cells_per_axis() as u64).to_le_bytes());
    buf.extend_from_slice(&eos.gamma.to_le_bytes());
    buf.extend_from_slice(&eos.a.to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    for v in &state.rho {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for comp in &state.mom {
        for v in comp {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, buf).map_err(|e| io_err(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<RawSnapshot> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let mut cur = std::io::Cursor::new(&bytes);
    let mut take = |n: usize| -> Result<Vec<u8>> {
        let mut b = vec![0u8; n];
        cur.read_exact(&mut b).map_err(|_| Error::ParseError(format!(
            "{}: truncated field file",
            path.display()
        )))?;
        Ok(b)
    };
    let magic = take(4)?;
    if magic != MAGIC {
        return Err(Error::ParseError(format!(
            "{}: bad magic {:02x?}",
            path.display(),
            magic
        )));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            path: path.display().to_string(),
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let dim = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    if !(1..=3).contains(&dim) || !(2..=1 << 20).contains(&n) {
        return Err(Error::ParseError(format!(
            "{}: implausible header dim {dim}, n {n}",
            path.display()
        )));
    }
    let gamma = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let a = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let t = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let cells = n.pow(dim as u32);
    let mut field = |name: &str| -> Result<Vec<f64>> {
        let raw = take(8 * cells).map_err(|_| {
            Error::ParseError(format!("{}: truncated {name} array", path.display()))
        })?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };
    let rho = field("density")?;
    let mut mom = Vec::with_capacity(dim);
    for j in 0..dim {
        mom.push(field(&format!("momentum[{j}]"))?);
    }
    Ok(RawSnapshot { dim, n, gamma, a, t, rho, mom })
}

pub fn write_ledger_csv(path: &Path, ledger: &EnergyLedger) -> Result<()> {
    let mut out = String::new();
    out.push_str(LEDGER_HEADER);
    out.push('\n');
    // Initial row: time zero, no step taken, energy of the initial state.
    out.push_str(&format!("0,0,{},0,0,0,0,0\n", ledger.e0));
    for r in &ledger.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.t, r.dt, r.energy, r.ito_increment, r.ito_correction, r.sup_u, r.min_rho, r.lambda
        ));
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_ledger_csv(path: &Path) -> Result<EnergyLedger> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != LEDGER_HEADER {
        return Err(Error::ParseError(format!(
            "{}: unexpected ledger header {header:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    let mut e0 = None;
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::ParseError(format!(
                        "{}: line {}: bad number {f:?}",
                        path.display(),
                        lineno + 2
                    ))
                })
            })
            .collect::<Result<_>>()?;
        if fields.len() != 8 {
            return Err(Error::ParseError(format!(
                "{}: line {}: expected 8 fields, got {}",
                path.display(),
                lineno + 2,
                fields.len()
            )));
        }
        if e0.is_none() {
            if fields[0] != 0.0 || fields[1] != 0.0 {
                return Err(Error::ParseError(format!(
                    "{}: first data row must be the t = 0 row",
                    path.display()
                )));
            }
            e0 = Some(fields[2]);
            continue;
        }
        rows.push(LedgerRow {
            t: fields[0],
            dt: fields[1],
            energy: fields[2],
            ito_increment: fields[3],
            ito_correction: fields[4],
            sup_u: fields[5],
            min_rho: fields[6],
            lambda: fields[7],
        });
    }
    let e0 = e0.ok_or(Error::EmptyLedger)?;
    Ok(EnergyLedger { e0, rows })
}

/// Ordered key-value manifest with per-file checksums.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn require(&self, key: &str, path: &Path) -> Result<&str> {
        self.get(key).ok_or_else(|| {
            Error::ParseError(format!("{}: missing manifest key {key}", path.display()))
        })
    }

    fn require_f64(&self, key: &str, path: &Path) -> Result<f64> {
        self.require(key, path)?.parse().map_err(|_| {
            Error::ParseError(format!("{}: key {key} is not a number", path.display()))
        })
    }

    /// Record the checksum of `dir/rel` under `checksum.<rel>`.
    pub fn add_checksum(&mut self, dir: &Path, rel: &str) -> Result<()> {
        let digest = sha256_file(&dir.join(rel))?;
        self.set(&format!("checksum.{rel}"), digest);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| io_err(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| {
                Error::ParseError(format!(
                    "{}: line {}: expected `key = value`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            entries.insert(k.to_string(), v.to_string());
        }
        Ok(Self { entries })
    }

    /// Verify the recorded format version and every `checksum.*` entry
    /// against the files in `dir`.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        let mpath = dir.join(MANIFEST_NAME);
        let found: u32 = self
            .require("format_version", &mpath)?
            .parse()
            .map_err(|_| Error::ParseError(format!("{}: bad format_version", mpath.display())))?;
        if found != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                path: mpath.display().to_string(),
                found,
                supported: FORMAT_VERSION,
            });
        }
        for (k, v) in &self.entries {
            if let Some(rel) = k.strip_prefix("checksum.") {
                let actual = sha256_file(&dir.join(rel))?;
                if &actual != v {
                    return Err(Error::ChecksumMismatch {
                        path: dir.join(rel).display().to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| io_err(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    Ok(hex)
}

/// Canonical file name of the `idx`-th snapshot in a run directory.
pub fn snapshot_name(idx: usize) -> String {
    format!("snap_{idx:04}.sefv")
}

/// Write a complete run directory: every snapshot, the energy ledger,
/// and a manifest with run metadata, extra key-value pairs supplied by
/// the caller, and checksums. Returns the manifest path.
pub fn save_run(
    dir: &Path,
    mesh: &Mesh,
    eos: &EosParams,
    traj: &Trajectory,
    extra: &[(String, String)],
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut manifest = Manifest::default();
    manifest.set("format_version", FORMAT_VERSION);
    manifest.set("mesh.dim", mesh.dim());
    manifest.set("mesh.cells_per_axis", mesh.cells_per_axis());
    manifest.set("mesh.edge_length", mesh.edge_length());
    manifest.set("eos.gamma", eos.gamma);
    manifest.set("eos.a", eos.a);
    manifest.set("run.steps", traj.steps);
    manifest.set("run.floored_cells", traj.floored_cells);
    manifest.set("run.max_cfl_ratio", traj.max_cfl_ratio);
    match &traj.status {
        RunStatus::Completed => manifest.set("run.status", "completed"),
        RunStatus::Aborted { t, reason } => {
            manifest.set("run.status", "aborted");
            manifest.set("run.abort_time", t);
            manifest.set("run.abort_reason", reason);
        }
    }
    manifest.set("snapshot.count", traj.snapshots.len());
    for (k, v) in extra {
        manifest.set(k, v);
    }
    manifest.set(
        "created_unix",
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    );

    for (idx, (t, state)) in traj.snapshots.iter().enumerate() {
        let name = snapshot_name(idx);
        write_snapshot(&dir.join(&name), mesh, eos, *t, state)?;
        manifest.add_checksum(dir, &name)?;
    }
    write_ledger_csv(&dir.join(LEDGER_NAME), &traj.ledger)?;
    manifest.add_checksum(dir, LEDGER_NAME)?;

    let mpath = dir.join(MANIFEST_NAME);
    manifest.write(&mpath)?;
    Ok(mpath)
}

/// A run directory read back: mesh, pressure law, trajectory, and the
/// manifest for callers that need the extra keys.
#[derive(Debug)]
pub struct LoadedRun {
    pub mesh: Mesh,
    pub eos: EosParams,
    pub trajectory: Trajectory,
    pub manifest: Manifest,
}

/// Load a run directory written by [`save_run`], verifying the format
/// version and every checksum first.
pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let mpath = dir.join(MANIFEST_NAME);
    let manifest = Manifest::read(&mpath)?;
    manifest.verify(dir)?;

    let ell = manifest.require_f64("mesh.edge_length", &mpath)?;
    let count: usize = manifest
        .require("snapshot.count", &mpath)?
        .parse()
        .map_err(|_| Error::ParseError(format!("{}: bad snapshot.count", mpath.display())))?;
    if count == 0 {
        return Err(Error::ParseError(format!(
            "{}: a run needs at least the initial snapshot",
            mpath.display()
        )));
    }

    let mut mesh_eos: Option<(Mesh, EosParams)> = None;
    let mut snapshots = Vec::with_capacity(count);
    for idx in 0..count {
        let path = dir.join(snapshot_name(idx));
        let raw = read_snapshot(&path)?;
        let (mesh, eos, t, state) = raw.unpack(ell)?;
        if let Some((m0, e0)) = &mesh_eos {
            if *m0 != mesh || e0.gamma != eos.gamma || e0.a != eos.a {
                return Err(Error::ParseError(format!(
                    "{}: snapshot disagrees with the run's mesh or pressure law",
                    path.display()
                )));
            }
        } else {
            mesh_eos = Some((mesh, eos));
        }
        snapshots.push((t, state));
    }
    let (mesh, eos) = mesh_eos.expect("count >= 1");
    let ledger = read_ledger_csv(&dir.join(LEDGER_NAME))?;

    let status = match manifest.require("run.status", &mpath)? {
        "completed" => RunStatus::Completed,
        "aborted" => RunStatus::Aborted {
            t: manifest.require_f64("run.abort_time", &mpath)?,
            reason: manifest.require("run.abort_reason", &mpath)?.to_string(),
        },
        other => {
            return Err(Error::ParseError(format!(
                "{}: unknown run.status {other:?}",
                mpath.display()
            )))
        }
    };
    let steps: usize = manifest
        .require("run.steps", &mpath)?
        .parse()
        .map_err(|_| Error::ParseError(format!("{}: bad run.steps", mpath.display())))?;
    let floored_cells: usize = manifest
        .require("run.floored_cells", &mpath)?
        .parse()
        .map_err(|_| Error::ParseError(format!("{}: bad run.floored_cells", mpath.display())))?;
    let max_cfl_ratio = manifest.require_f64("run.max_cfl_ratio", &mpath)?;

    Ok(LoadedRun {
        mesh,
        eos,
        trajectory: Trajectory {
            snapshots,
            ledger,
            status,
            steps,
            floored_cells,
            max_cfl_ratio,
        },
        manifest,
    })
}

/// Write a CSV table: a header row, then one row per record, columns
/// joined with commas using shortest round-trip float formatting.
pub fn write_csv_table(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Append one line to a text report, creating the file if needed.
pub fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_err(path, e))?;
    writeln!(f, "{line}").map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_state() -> (Mesh, EosParams, State) {
        let mesh = Mesh::new(2, 4, 1.0).unwrap();
        let eos = EosParams::new(1.4, 1.0).unwrap();
        let cells = mesh.num_cells();
        let rho: Vec<f64> = (0..cells).map(|k| 1.0 + 0.01 * (k as f64).sin()).collect();
        let mx: Vec<f64> = (0..cells).map(|k| 0.1 * (k as f64).cos()).collect();
        let my: Vec<f64> = (0..cells).map(|k| -0.05 * (k as f64 * 0.7).sin()).collect();
        (mesh, eos, State::new(rho, vec![mx, my]).unwrap())
    }

    #[test]
    fn snapshot_round_trips_bitwise() {
        let (mesh, eos, state) = sample_state();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.sefv");
        write_snapshot(&path, &mesh, &eos, 0.125, &state).unwrap();
        let raw = read_snapshot(&path).unwrap();
        let (mesh2, eos2, t, state2) = raw.unpack(1.0).unwrap();
        assert_eq!(mesh, mesh2);
        assert_eq!(eos.gamma.to_bits(), eos2.gamma.to_bits());
        assert_eq!(t.to_bits(), 0.125f64.to_bits());
        assert_eq!(state, state2);
    }

    #[test]
    fn snapshot_header_is_the_documented_layout() {
        let mesh = Mesh::new(1, 2, 1.0).unwrap();
        let eos = EosParams::new(2.0, 1.0).unwrap();
        let state = State::new(vec![1.0, 2.0], vec![vec![3.0, 4.0]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.sefv");
        write_snapshot(&path, &mesh, &eos, 0.5, &state).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"SEFV");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), 2.0);
        assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(bytes[40..48].try_into().unwrap()), 0.5);
        assert_eq!(f64::from_le_bytes(bytes[48..56].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(bytes[64..72].try_into().unwrap()), 3.0);
        assert_eq!(bytes.len(), 48 + 4 * 8);
    }

    #[test]
    fn version_bump_is_rejected() {
        let (mesh, eos, state) = sample_state();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.sefv");
        write_snapshot(&path, &mesh, &eos, 0.0, &state).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 9;
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_snapshot(&path),
            Err(Error::VersionMismatch { found: 9, supported: 1, .. })
        ));
    }

    #[test]
    fn ledger_csv_round_trips_bitwise() {
        let ledger = EnergyLedger {
            e0: 1.25,
            rows: vec![
                LedgerRow {
                    t: 0.1,
                    dt: 0.1,
                    energy: 1.2499999999999998,
                    ito_increment: -3.2e-5,
                    ito_correction: 1.7e-6,
                    sup_u: 0.51,
                    min_rho: 0.8999999999,
                    lambda: 1.9,
                },
                LedgerRow {
                    t: 0.2,
                    dt: 0.1,
                    energy: 1.2499999999999996,
                    ito_increment: 4.0e-5,
                    ito_correction: 1.69e-6,
                    sup_u: 0.52,
                    min_rho: 0.9,
                    lambda: 1.91,
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.csv");
        write_ledger_csv(&path, &ledger).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(LEDGER_HEADER));
        let back = read_ledger_csv(&path).unwrap();
        assert_eq!(ledger, back);
    }

    #[test]
    fn save_and_load_run_round_trip_and_detect_tampering() {
        let (mesh, eos, state) = sample_state();
        let traj = Trajectory {
            snapshots: vec![(0.0, state.clone()), (0.25, state)],
            ledger: EnergyLedger {
                e0: 2.0,
                rows: vec![LedgerRow {
                    t: 0.25,
                    dt: 0.25,
                    energy: 1.99,
                    ito_increment: 0.0,
                    ito_correction: 0.0,
                    sup_u: 0.3,
                    min_rho: 0.99,
                    lambda: 1.5,
                }],
            },
            status: RunStatus::Completed,
            steps: 1,
            floored_cells: 0,
            max_cfl_ratio: 0.4,
        };
        let dir = tempfile::tempdir().unwrap();
        save_run(dir.path(), &mesh, &eos, &traj, &[("seed".into(), "7".into())]).unwrap();

        let loaded = load_run(dir.path()).unwrap();
        assert_eq!(loaded.mesh, mesh);
        assert_eq!(loaded.trajectory.snapshots, traj.snapshots);
        assert_eq!(loaded.trajectory.ledger, traj.ledger);
        assert_eq!(loaded.trajectory.status, RunStatus::Completed);
        assert_eq!(loaded.manifest.get("seed"), Some("7"));

        // Flip one byte of a field file: checksum verification must fail.
        let victim = dir.path().join("snap_0001.sefv");
        let mut bytes = std::fs::read(&victim).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x01;
        std::fs::write(&victim, bytes).unwrap();
        assert!(matches!(load_run(dir.path()), Err(Error::ChecksumMismatch { .. })));
    }

    #[test]
    fn missing_field_file_is_reported() {
        let (mesh, eos, state) = sample_state();
        let traj = Trajectory {
            snapshots: vec![(0.0, state)],
            ledger: EnergyLedger { e0: 1.0, rows: vec![] },
            status: RunStatus::Completed,
            steps: 0,
            floored_cells: 0,
            max_cfl_ratio: 0.0,
        };
        let dir = tempfile::tempdir().unwrap();
        save_run(dir.path(), &mesh, &eos, &traj, &[]).unwrap();
        std::fs::remove_file(dir.path().join("snap_0000.sefv")).unwrap();
        assert!(matches!(load_run(dir.path()), Err(Error::IoFailure { .. })));
    }

    #[test]
    fn manifests_written_twice_differ_only_in_timestamp() {
        let (mesh, eos, state) = sample_state();
        let traj = Trajectory {
            snapshots: vec![(0.0, state)],
            ledger: EnergyLedger { e0: 1.0, rows: vec![] },
            status: RunStatus::Completed,
            steps: 0,
            floored_cells: 0,
            max_cfl_ratio: 0.0,
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        save_run(d1.path(), &mesh, &eos, &traj, &[]).unwrap();
        save_run(d2.path(), &mesh, &eos, &traj, &[]).unwrap();
        let m1 = Manifest::read(&d1.path().join(MANIFEST_NAME)).unwrap();
        let m2 = Manifest::read(&d2.path().join(MANIFEST_NAME)).unwrap();
        let strip = |m: &Manifest| {
            let mut e = m.entries.clone();
            e.remove("created_unix");
            e
        };
        assert_eq!(strip(&m1), strip(&m2));
    }
}
