//! Exact quantum Fisher information, optimal probes and canonical phase
//! measurements for spin-j ensembles under collective dephasing.

// `!(x >= 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod clustering;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod operator_series;
pub mod optimizer;
pub mod oracle;
pub mod qfi;
pub mod spin;
pub mod validation;

pub use error::{Error, Result};
pub use qfi::{build_density, DephasedDensity, NoiseSetting, QfiReport, QfiSolver};
pub use spin::{ProbeState, SpinDim, StateKind};
