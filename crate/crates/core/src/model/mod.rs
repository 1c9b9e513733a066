//! DDE systems, linearization densities and the `L_{k,n}(λ)` matrices.

mod density;
mod file;
mod system;

pub use density::{build_l, linearize_about_orbit, FourierMatrixDensity, LMatrixTable, BANDWIDTH_TRIM};
pub use file::{parse_density, parse_problem, parse_system, ProblemFile, DENSITY_FORMAT, SYSTEM_FORMAT};
pub use system::{rescale, DdeSystem, Monomial, Slot};

use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("frequency must be positive, got {0}")]
    NonpositiveFrequency(f64),
    #[error("exponent overflow: Re λ = {lambda_re} at delay θ = {theta}")]
    Overflow { lambda_re: f64, theta: f64 },
    #[error("{line}:{column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid system: {0}")]
    Invalid(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
