//! Recovery of the polynomial coefficients `c_1..c_m` in
//! `Δu + k²u = Σ c_l u^l` from linearized Dirichlet-to-Neumann data.
//!
//! Data `d_l(ξ)` come from signed subset sums of boundary integrals against
//! complex plane waves; the Fourier modes of each `c_l` are then recovered
//! top level first by back substitution.

// Negated float comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod combinatorics;
mod dst;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod inversion;
pub mod io;
pub mod measurement;
pub mod solver;
pub mod spectral;
pub mod verify;
pub mod wavevectors;

pub use boundary::{BoundaryGeometry, BoundaryTrace};
pub use combinatorics::{MultiIndex, QPolynomial, SignedSubset};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, Mode, RunSummary};
pub use grid::{Bump, Grid2D, ScalarField2D, SupportSpec};
pub use inversion::{
    DataTables, LevelResult, ReconstructionPlan, ReconstructionResult, RelativeError,
};
pub use measurement::{Measurement, MeasurementOptions, Provenance};
pub use solver::{HelmholtzOperator, NeumannStencil, PicardOptions, PicardOutcome};
pub use spectral::{DcPolicy, FrequencyGrid, Interpolation, SpectrumTable};
pub use verify::{Suite, VerifyReport};
pub use wavevectors::{WaveVector, WaveVectorSet};

pub use num_complex::Complex64;
