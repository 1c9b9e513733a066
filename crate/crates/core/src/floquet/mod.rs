//! Floquet exponents of linear periodic DDEs from the continued-fraction
//! matrix `M(λ)`: `det M(λ) = 0` on the fundamental strip.

mod ladder;
mod mode;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::ModelError;
use crate::numerics::NumericsError;

pub(crate) use ladder::{eliminate, BlockOperator, Primal, Transposed};
pub use ladder::{assemble_m, ladder_operators, Elimination, LadderSet};
pub(crate) use mode::det_measure;
pub use mode::{det_m, extract_mode, find_exponents, refine_root, scan_shifts, FindOptions, FloquetMode, Spectrum, Stall};

#[derive(Debug, Error)]
pub enum FloquetError {
    #[error("continued fraction broke down: singular block at level {level}")]
    CfBreakdown { level: i64 },
    #[error("no Floquet exponents found in the search box ({stalled} Newton seeds stalled)")]
    NoRootsInBox { stalled: usize },
    #[error("Newton iteration stalled from seed {seed}: {reason}")]
    NewtonStall { seed: Complex64, reason: String },
    #[error("null space at λ = {lambda} is not one-dimensional (σ ratio {ratio:.3e})")]
    NullSpaceAmbiguous { lambda: Complex64, ratio: f64 },
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
