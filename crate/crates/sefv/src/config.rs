//! Layered run configuration: a TOML file overlaid with dotted
//! command-line overrides, validated early, and resolved into the module
//! objects the drivers consume.
//!
//! Every knob of every module is expressible here and has a documented
//! default (an empty config is a complete, runnable one). Unknown keys
//! are rejected by name. The effective configuration serializes back to
//! TOML that re-parses to the identical value, so the echo written next
//! to a run's outputs is a replayable record of it.

use crate::ensemble::{CoupledSpec, EnsembleSpec, Probe};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::noise::{build_noise, CoeffSpec, ModeCoeffs, NoiseModel};
use crate::physics::EosParams;
use crate::scheme::{InitSpec, LambdaMode, PositivityPolicy, SchemeConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Complete run configuration; sections mirror the solver modules.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mesh: MeshSection,
    pub physics: PhysicsSection,
    pub noise: NoiseSection,
    pub scheme: SchemeSection,
    pub outputs: OutputsSection,
    pub ensemble: EnsembleSection,
}

/// Torus discretization: `n^dim` cells on `[0, ell)^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    pub dim: usize,
    pub n: usize,
    pub ell: f64,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self { dim: 1, n: 64, ell: 1.0 }
    }
}

/// Pressure law `p = a rho^gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub gamma: f64,
    pub a: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self { gamma: 1.4, a: 1.0 }
    }
}

/// Per-mode gains, mirroring the noise model's coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModeGains {
    /// Scalar gain on the density part of the mode.
    pub a: f64,
    /// Matrix gain on the momentum part.
    pub b: [[f64; 3]; 3],
}

impl Default for ModeGains {
    fn default() -> Self {
        let c = ModeCoeffs::identity();
        Self { a: c.a, b: c.b }
    }
}

/// Truncated multiplicative noise: `k_modes` modes with amplitudes
/// `beta0 (k+1)^-q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    /// Number of modes; 0 gives the deterministic scheme.
    pub k_modes: usize,
    pub beta0: f64,
    /// Amplitude decay exponent, > 1.
    pub q: f64,
    /// Modulate each mode by a cosine in its assigned direction.
    pub spatial_modulation: bool,
    /// Optional explicit per-mode gains; length must equal `k_modes`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<ModeGains>>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { k_modes: 8, beta0: 0.1, q: 2.0, spatial_modulation: true, modes: None }
    }
}

/// Initial data profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    /// "sine" (density wave in x1) or "constant".
    pub profile: String,
    pub base: f64,
    /// Density wave amplitude; ignored by the constant profile.
    pub amplitude: f64,
    /// Velocity components; missing trailing components are zero.
    pub velocity: Vec<f64>,
}

impl Default for InitSection {
    fn default() -> Self {
        Self { profile: "sine".into(), base: 1.0, amplitude: 0.1, velocity: vec![0.5] }
    }
}

/// Time stepping and flux knobs plus the initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    pub cfl: f64,
    pub lambda: LambdaMode,
    pub lambda_multiplier: f64,
    pub noise_dt_cap: f64,
    pub t_end: f64,
    pub positivity: PositivityPolicy,
    pub rho_floor: f64,
    pub m_floor: f64,
    /// Registry name of the numerical flux.
    pub flux: String,
    pub init: InitSection,
}

impl Default for SchemeSection {
    fn default() -> Self {
        let base = SchemeConfig::default();
        Self {
            cfl: base.cfl,
            lambda: base.lambda_mode,
            lambda_multiplier: base.lambda_multiplier,
            noise_dt_cap: base.noise_dt_cap,
            t_end: base.t_end,
            positivity: base.positivity,
            rho_floor: base.rho_floor,
            m_floor: base.m_floor,
            flux: base.flux_name,
            init: InitSection::default(),
        }
    }
}

/// Where results land and how densely trajectories are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsSection {
    pub dir: String,
    /// Uniform snapshot times per run.
    pub snapshots: usize,
}

impl Default for OutputsSection {
    fn default() -> Self {
        Self { dir: "out".into(), snapshots: 50 }
    }
}

/// A point statistic to histogram across the ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub t: f64,
    pub cell: usize,
}

/// Monte Carlo and refinement-study parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub n_paths: usize,
    /// Root of every random stream in the process.
    pub master_seed: u64,
    /// Wiener path index used by single runs and refinement families.
    pub path: u64,
    /// Cells per axis of the refinement family, coarse to fine, dyadic.
    pub levels: Vec<usize>,
    /// "finest" or the directory of a saved run to compare against.
    pub reference: String,
    /// Wave-speed headroom when sizing a common time grid.
    pub dt_safety: f64,
    pub probes: Vec<ProbeSection>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            n_paths: 8,
            master_seed: 0,
            path: 0,
            levels: vec![32, 64, 128, 256],
            reference: "finest".into(),
            dt_safety: 1.5,
            probes: Vec::new(),
        }
    }
}

/// What a refinement study measures errors against.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceChoice {
    /// The finest level of the family itself.
    Finest,
    /// A saved run directory on a mesh nested above every level.
    External(PathBuf),
}

/// Module objects ready for the drivers, all cross-validated.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub mesh: Mesh,
    pub eos: EosParams,
    pub noise: NoiseModel,
    pub scheme: SchemeConfig,
    pub init: InitSpec,
    pub outdir: PathBuf,
    pub snapshots: usize,
    pub ensemble: EnsembleSpec,
    pub coupled: CoupledSpec,
    pub reference: ReferenceChoice,
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::ValidationError { field: field.into(), reason: reason.into() }
}

impl RunConfig {
    /// Field-by-field sanity checks; every error names the offending
    /// dotted key.
    pub fn validate(&self) -> Result<()> {
        let m = &self.mesh;
        if m.dim < 1 || m.dim > 3 {
            return Err(invalid("mesh.dim", format!("must be 1, 2 or 3, got {}", m.dim)));
        }
        if m.n < 2 {
            return Err(invalid("mesh.n", format!("needs at least 2 cells per axis, got {}", m.n)));
        }
        if !(m.ell > 0.0) || !m.ell.is_finite() {
            return Err(invalid("mesh.ell", format!("must be finite and > 0, got {}", m.ell)));
        }

        let p = &self.physics;
        if !(p.gamma > 1.0) || !p.gamma.is_finite() {
            return Err(invalid("physics.gamma", "must exceed 1"));
        }
        if !(p.a > 0.0) || !p.a.is_finite() {
            return Err(invalid("physics.a", format!("must be finite and > 0, got {}", p.a)));
        }

        let no = &self.noise;
        if !(no.beta0 >= 0.0) || !no.beta0.is_finite() {
            return Err(invalid("noise.beta0", format!("must be finite and >= 0, got {}", no.beta0)));
        }
        if !(no.q > 1.0) || !no.q.is_finite() {
            return Err(invalid("noise.q", "must exceed 1"));
        }
        if let Some(modes) = &no.modes {
            if modes.len() != no.k_modes {
                return Err(invalid(
                    "noise.modes",
                    format!("{} entries for k_modes = {}", modes.len(), no.k_modes),
                ));
            }
        }

        self.scheme_config().validate()?;
        let init = &self.scheme.init;
        match init.profile.as_str() {
            "sine" | "constant" => {}
            other => {
                return Err(invalid(
                    "scheme.init.profile",
                    format!("unknown profile {other:?}; expected \"sine\" or \"constant\""),
                ));
            }
        }
        if !(init.base > 0.0) || !init.base.is_finite() {
            return Err(invalid("scheme.init.base", format!("must be finite and > 0, got {}", init.base)));
        }
        if !(init.amplitude >= 0.0) || !init.amplitude.is_finite() {
            return Err(invalid(
                "scheme.init.amplitude",
                format!("must be finite and >= 0, got {}", init.amplitude),
            ));
        }
        if init.velocity.len() > 3 {
            return Err(invalid(
                "scheme.init.velocity",
                format!("at most 3 components, got {}", init.velocity.len()),
            ));
        }

        if self.outputs.snapshots < 1 {
            return Err(invalid("outputs.snapshots", "need at least one snapshot time"));
        }
        if self.outputs.dir.is_empty() {
            return Err(invalid("outputs.dir", "must not be empty"));
        }

        let e = &self.ensemble;
        if e.n_paths < 1 {
            return Err(invalid("ensemble.n_paths", "need at least one path"));
        }
        if e.levels.is_empty() {
            return Err(invalid("ensemble.levels", "need at least one level"));
        }
        for &n in &e.levels {
            if n < 2 {
                return Err(invalid("ensemble.levels", format!("level {n} is below 2 cells")));
            }
        }
        for w in e.levels.windows(2) {
            if w[1] <= w[0] || w[1] % w[0] != 0 {
                return Err(invalid(
                    "ensemble.levels",
                    format!("levels must be strictly increasing and nested, got {} then {}", w[0], w[1]),
                ));
            }
        }
        if !(e.dt_safety >= 1.0) || !e.dt_safety.is_finite() {
            return Err(invalid("ensemble.dt_safety", format!("must be >= 1, got {}", e.dt_safety)));
        }
        if e.reference.is_empty() {
            return Err(invalid("ensemble.reference", "must not be empty"));
        }
        Ok(())
    }

    fn scheme_config(&self) -> SchemeConfig {
        let s = &self.scheme;
        SchemeConfig {
            cfl: s.cfl,
            lambda_mode: s.lambda,
            lambda_multiplier: s.lambda_multiplier,
            noise_dt_cap: s.noise_dt_cap,
            t_end: s.t_end,
            positivity: s.positivity,
            rho_floor: s.rho_floor,
            m_floor: s.m_floor,
            flux_name: s.flux.clone(),
        }
    }

    /// Validate, then build the module objects.
    pub fn resolve(&self) -> Result<Resolved> {
        self.validate()?;
        let mesh = Mesh::new(self.mesh.dim, self.mesh.n, self.mesh.ell)?;
        let eos = EosParams::new(self.physics.gamma, self.physics.a)?;
        let coeffs = match &self.noise.modes {
            None => CoeffSpec::DefaultLinear,
            Some(modes) => CoeffSpec::Table(
                modes.iter().map(|m| ModeCoeffs { a: m.a, b: m.b }).collect(),
            ),
        };
        let noise = build_noise(
            self.noise.k_modes,
            self.noise.beta0,
            self.noise.q,
            coeffs,
            self.noise.spatial_modulation,
        )?;
        let init = match self.scheme.init.profile.as_str() {
            "sine" => InitSpec::Sine {
                base: self.scheme.init.base,
                amplitude: self.scheme.init.amplitude,
                velocity: self.scheme.init.velocity.clone(),
            },
            _ => InitSpec::Constant {
                base: self.scheme.init.base,
                velocity: self.scheme.init.velocity.clone(),
            },
        };
        let ensemble = EnsembleSpec {
            n_paths: self.ensemble.n_paths,
            master_seed: self.ensemble.master_seed,
            snapshot_count: self.outputs.snapshots,
            probes: self
                .ensemble
                .probes
                .iter()
                .map(|p| Probe { t: p.t, cell: p.cell })
                .collect(),
        };
        ensemble.validate(&mesh)?;
        let coupled = CoupledSpec {
            levels: self.ensemble.levels.clone(),
            master_seed: self.ensemble.master_seed,
            path: self.ensemble.path,
            snapshot_count: self.outputs.snapshots,
            dt_safety: self.ensemble.dt_safety,
        };
        let reference = match self.ensemble.reference.as_str() {
            "finest" => ReferenceChoice::Finest,
            dir => ReferenceChoice::External(PathBuf::from(dir)),
        };
        Ok(Resolved {
            mesh,
            eos,
            noise,
            scheme: self.scheme_config(),
            init,
            outdir: PathBuf::from(&self.outputs.dir),
            snapshots: self.outputs.snapshots,
            ensemble,
            coupled,
            reference,
        })
    }
}

/// Split command-line arguments into dotted `--section.key=value`
/// overrides and everything else (returned in order for the argument
/// parser proper).
pub fn extract_dotted_overrides(args: &[String]) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        let dotted = arg.strip_prefix("--").and_then(|body| {
            let (key, value) = body.split_once('=')?;
            if key.contains('.') && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_') {
                Some((key.to_string(), value.to_string()))
            } else {
                None
            }
        });
        match dotted {
            Some(kv) => overrides.push(kv),
            None => rest.push(arg.clone()),
        }
    }
    (rest, overrides)
}

/// Interpret an override value: any valid TOML literal (number, bool,
/// array, quoted string) keeps its type; anything else is a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut table) => table.remove("v").expect("mini-document defines v"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::ParseError(format!("override {key}: empty path segment")));
    }
    let mut cursor = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry.as_table_mut().ok_or_else(|| {
            Error::ParseError(format!("override {key}: {part} is not a table"))
        })?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), parse_override_value(raw));
    Ok(())
}

/// Parse configuration text plus dotted overrides into a validated
/// [`RunConfig`]. Empty text yields the documented defaults.
pub fn parse_str(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut table = text
        .parse::<toml::Table>()
        .map_err(|e| Error::ParseError(format!("config: {e}")))?;
    for (key, raw) in overrides {
        apply_override(&mut table, key, raw)?;
    }
    let config: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::ParseError(format!("config: {e}")))?;
    config.validate()?;
    Ok(config)
}

/// Load a config file (or the defaults when `path` is `None`) and apply
/// overrides.
pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::IoFailure {
            path: p.display().to_string(),
            source: e,
        })?,
        None => String::new(),
    };
    parse_str(&text, overrides)
}

/// The effective configuration as TOML text that re-parses to the same
/// value.
pub fn echo_string(config: &RunConfig) -> Result<String> {
    toml::to_string_pretty(config)
        .map_err(|e| Error::ParseError(format!("config echo: {e}")))
}

/// Name of the effective-config echo file inside an output directory.
pub const ECHO_NAME: &str = "effective.toml";

/// Write the effective configuration next to a run's outputs.
pub fn write_echo(config: &RunConfig, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::IoFailure {
        path: dir.display().to_string(),
        source: e,
    })?;
    let path = dir.join(ECHO_NAME);
    std::fs::write(&path, echo_string(config)?).map_err(|e| Error::IoFailure {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(path)
}
