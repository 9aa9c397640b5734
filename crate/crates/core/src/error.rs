use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: need at least 3 points per side, got {0}")]
    InvalidGrid(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bump centred at ({x}, {y}) with width {width} does not fit inside the support disk of radius {radius}")]
    BumpOutsideSupport {
        x: f64,
        y: f64,
        width: f64,
        radius: f64,
    },

    #[error("frequency xi must be non-zero")]
    ZeroFrequency,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "resonant wavenumber k = {k}: smallest discrete eigenvalue |{min_eigenvalue:.3e}| is below \
         1e-10 of the operator scale; perturb k slightly"
    )]
    ResonantWavenumber { k: f64, min_eigenvalue: f64 },

    #[error("Picard iteration did not converge after {iterations} iterations (last relative update {last_update:.3e}); coefficients or boundary data too large for the linearized regime")]
    NonConvergence { iterations: usize, last_update: f64 },

    #[error("evanescent boundary data growth {growth:.3} exceeds the cap {cap:.3}")]
    EvanescentGrowth { growth: f64, cap: f64 },

    #[error(
        "measurement failed at ell = {ell}, xi = ({xi_x}, {xi_y}), subset {subset:?}: {source}"
    )]
    Measurement {
        ell: usize,
        xi_x: f64,
        xi_y: f64,
        subset: Vec<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("frequency ({xi_x}, {xi_y}) lies outside the stored band of radius {radius}")]
    OutOfBand { xi_x: f64, xi_y: f64, radius: f64 },

    #[error("correction query for ell = {ell}, xi = ({xi_x}, {xi_y}), alpha = {alpha:?} left the band of table {target}")]
    CorrectionOutOfBand {
        ell: usize,
        target: usize,
        xi_x: f64,
        xi_y: f64,
        alpha: Vec<u32>,
    },

    #[error("spectrum table for ell = {0} has an empty band")]
    EmptyBand(usize),

    #[error("subset enumeration refused for ell = {0} (cap is 20)")]
    SubsetCap(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::BumpOutsideSupport { .. } => "bump_outside_support",
            Error::ZeroFrequency => "zero_frequency",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::ResonantWavenumber { .. } => "resonant_wavenumber",
            Error::NonConvergence { .. } => "non_convergence",
            Error::EvanescentGrowth { .. } => "evanescent_growth",
            Error::Measurement { .. } => "measurement",
            Error::OutOfBand { .. } => "out_of_band",
            Error::CorrectionOutOfBand { .. } => "correction_out_of_band",
            Error::EmptyBand(_) => "empty_band",
            Error::SubsetCap(_) => "subset_cap",
            Error::Config(_) => "config",
            Error::Format { .. } => "format",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
