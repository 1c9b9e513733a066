//! Dense complex linear algebra and truncated Fourier arithmetic.

mod fourier;
mod matrix;

pub use fourier::{fourier_product, fourier_product_with, FourierSeries, DEFAULT_TAIL_FRACTION};
pub(crate) use matrix::smallest_singular;
pub use matrix::{determinant, solve_linear, solve_matrix, ComplexMatrix, LinearSolution, Lu, PIVOT_RTOL};

pub use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("singular matrix: pivot at elimination step {step} below {threshold:.3e}")]
    SingularMatrix { step: usize, threshold: f64 },
    #[error("shape mismatch: {rows}x{cols} matrix with right-hand side of {rhs} rows")]
    ShapeMismatch { rows: usize, cols: usize, rhs: usize },
    #[error("incompatible series dimensions {left} and {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cutoff {cutoff} drops tail of norm {dropped:.3e} (total {total:.3e})")]
    CutoffTooSmall { cutoff: usize, dropped: f64, total: f64 },
}

/// `i` as a complex constant.
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
