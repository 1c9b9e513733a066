//! Brute-force reference computations used to validate the spectral methods:
//! method-of-steps integration, the discretized monodromy operator and
//! characteristic roots of constant-coefficient problems.

mod characteristic;
mod monodromy;
mod mos;
mod residual;

use thiserror::Error;

pub use characteristic::characteristic_roots;
pub use monodromy::{monodromy_exponents, monodromy_matrix, MonodromyExponent, MonodromyOptions, MonodromySpectrum};
pub use mos::{integrate_mos, DelayField, DensityField, SegmentState, SystemField, Trajectory, MIN_GRID};
pub use residual::orbit_residual;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("step {step} exceeds the admissible {limit}")]
    StepTooLarge { step: f64, limit: f64 },
    #[error("segment grid {grid} below the minimum {minimum}")]
    GridTooSmall { grid: usize, minimum: usize },
    #[error("solution blew up at ξ = {xi}")]
    BlowUp { xi: f64 },
    #[error("multipliers moved by {shift:.3e} under grid refinement (tolerance {tol:.1e})")]
    GridTooCoarse { shift: f64, tol: f64 },
    #[error("monodromy oracle needs a real density (reality defect {0:.3e})")]
    ComplexDensity(f64),
    #[error("no characteristic roots found in the box ({stalled} Newton seeds stalled)")]
    NoRootsInBox { stalled: usize },
}
