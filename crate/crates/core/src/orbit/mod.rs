//! Periodic reference orbits of the delayed driven oscillator.

mod expansion;
mod oscillator;

pub use expansion::{expand_pl, expand_shohat, orbit_to_state, OrbitExpansion, OrbitOptions, Scheme};
pub use oscillator::{ForcingTerm, Oscillator};

use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OrbitError {
    #[error("not an oscillator system: {0}")]
    NotOscillator(String),
    #[error("solvability system singular at order {order}")]
    SecularSystemSingular { order: usize },
    #[error("amplitude iteration did not converge at order {order} after {iterations} iterations")]
    NonconvergentAmplitude { order: usize, iterations: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
