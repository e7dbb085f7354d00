//! Crate-wide error type.
//!
//! One enum covers every failure the library can report; the CLI maps
//! variants onto its exit-code contract via [`Error::exit_code`].

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Spatial dimension outside {1, 2, 3}.
    #[error("invalid spatial dimension {0} (must be 1, 2 or 3)")]
    InvalidDim(usize),

    /// Fewer than two cells per axis.
    #[error("too few cells per axis: {0} (need at least 2)")]
    TooFewCells(usize),

    /// A field's length does not match the mesh it is used with.
    #[error("dimension mismatch: field has {found} values, mesh has {expected} cells")]
    DimensionMismatch { expected: usize, found: usize },

    /// Non-positive density handed to a pointwise thermodynamic map.
    #[error("negative or zero density {0}")]
    NegativeDensity(f64),

    /// Density at or below the vacuum floor where a positive one is required.
    #[error("vacuum state: density {rho} at or below floor {floor}")]
    VacuumState { rho: f64, floor: f64 },

    /// Vacuum cell carrying non-negligible momentum; no velocity is defined.
    #[error("vacuum cell with momentum |m| = {momentum} above floor; velocity undefined")]
    VacuumMomentum { momentum: f64 },

    /// Noise mode index outside the truncation.
    #[error("noise mode {k} out of range (model has {modes} modes)")]
    ModeOutOfRange { k: usize, modes: usize },

    /// Mode-amplitude decay exponent must exceed 1 for a summable series.
    #[error("bad amplitude decay exponent q = {0} (need q > 1)")]
    BadDecay(f64),

    /// Negative base amplitude for the noise family.
    #[error("negative noise amplitude beta0 = {0}")]
    NegativeAmplitude(f64),

    /// Density left the admissible set during time stepping.
    #[error("positivity lost at t = {t}: min density {min_rho}")]
    PositivityLost { t: f64, min_rho: f64 },

    /// NaN or infinity appeared in the state.
    #[error("non-finite value in state at t = {t}")]
    NonFinite { t: f64 },

    /// Initial density not strictly positive.
    #[error("initial density not strictly positive (min sampled value {0})")]
    NonPositiveInitialDensity(f64),

    /// Energy ledger queried before any step was recorded.
    #[error("energy ledger is empty")]
    EmptyLedger,

    /// Mesh family is not nested (dyadic refinements of a common coarse mesh).
    #[error("meshes not nested: {coarse} cells does not divide {fine} cells dyadically")]
    NonNestedMeshes { coarse: usize, fine: usize },

    /// Too few Monte Carlo samples for the requested statistic.
    #[error("too few samples: {found} (need at least {need})")]
    TooFewSamples { need: usize, found: usize },

    /// Convergence study asked for a reference that is not available.
    #[error("missing reference solution: {0}")]
    MissingReference(String),

    /// Coupled runs require a common fine time grid dividing every level's steps.
    #[error("incompatible time grids: {0}")]
    IncompatibleTimeGrids(String),

    /// Underlying I/O failure.
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// On-disk format version not supported by this build.
    #[error("format version mismatch in {path}: found {found}, supported {supported}")]
    VersionMismatch {
        path: String,
        found: u32,
        supported: u32,
    },

    /// A recorded checksum does not match the file on disk.
    #[error("checksum mismatch for {path}")]
    ChecksumMismatch { path: String },

    /// Config file or override could not be parsed.
    #[error("config parse error: {0}")]
    ParseError(String),

    /// Config parsed but a field failed validation.
    #[error("invalid config: {field}: {reason}")]
    ValidationError { field: String, reason: String },

    /// A verification suite reported failures.
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl Error {
    /// Exit code the CLI reports for this error: 1 config, 2 runtime,
    /// 3 verification, 4 I/O and on-disk format problems.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            ParseError(_) | ValidationError { .. } | InvalidDim(_) | TooFewCells(_)
            | BadDecay(_) | NegativeAmplitude(_) | ModeOutOfRange { .. } => 1,
            PositivityLost { .. } | NonFinite { .. } | VacuumState { .. }
            | VacuumMomentum { .. } | NegativeDensity(_) | NonPositiveInitialDensity(_)
            | DimensionMismatch { .. } | EmptyLedger | NonNestedMeshes { .. }
            | TooFewSamples { .. } | MissingReference(_) | IncompatibleTimeGrids(_) => 2,
            VerificationFailed(_) => 3,
            IoFailure { .. } | VersionMismatch { .. } | ChecksumMismatch { .. } => 4,
        }
    }
}
