use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::mos::{integrate_mos, DensityField, SegmentState, MIN_GRID};
use super::OracleError;
use crate::model::FourierMatrixDensity;

#[derive(Clone, Debug)]
pub struct MonodromyOptions {
    /// Grid points per delay interval `M_g`.
    pub grid: usize,
    /// Multipliers with `|ρ|` below this are dropped (default `e^{−6π}`, i.e. `Re λ < −3`).
    pub min_modulus: f64,
    /// Largest admissible exponent shift between `M_g` and `2M_g`.
    pub richardson_tol: f64,
}

impl Default for MonodromyOptions {
    fn default() -> Self {
        Self { grid: 400, min_modulus: (-6.0 * PI).exp(), richardson_tol: 1e-5 }
    }
}

#[derive(Clone, Debug)]
pub struct MonodromyExponent {
    /// `ln ρ / 2π` on the principal branch (`Im ∈ (−½, ½]`).
    pub lambda: Complex64,
    pub multiplier: Complex64,
    /// `|ρ(2M_g) − ρ(M_g)|` for the matched multiplier.
    pub refinement_shift: f64,
}

#[derive(Clone, Debug)]
pub struct MonodromySpectrum {
    pub grid: usize,
    pub exponents: Vec<MonodromyExponent>,
    /// Largest refinement shift among retained multipliers.
    pub max_shift: f64,
}

/// Period-`2π` map of history segments, built column by column from unit
/// impulses. Returned row-major `(M_g+1)n × (M_g+1)n`.
pub fn monodromy_matrix(density: &FourierMatrixDensity, grid: usize) -> Result<DMatrix<f64>, OracleError> {
    let span = -density.delays().iter().copied().fold(0.0, f64::min);
    if span <= 0.0 {
        return Err(OracleError::GridTooSmall { grid: 0, minimum: MIN_GRID });
    }
    let n = density.dim();
    let size = (grid + 1) * n;
    let h = span / grid as f64;
    let field = DensityField::new(density)?.tabulated(h, 2.0 * PI);
    let columns: Vec<Result<Vec<f64>, OracleError>> = (0..size)
        .into_par_iter()
        .map(|c| {
            let mut flat = vec![0.0; size];
            flat[c] = 1.0;
            let seg = SegmentState::from_flat(span, n, &flat);
            let traj = integrate_mos(&field, &seg, 2.0 * PI, h)?;
            Ok(traj.final_segment().flatten())
        })
        .collect();
    let mut m = DMatrix::zeros(size, size);
    for (c, col) in columns.into_iter().enumerate() {
        for (r, v) in col?.into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    Ok(m)
}

fn multipliers(density: &FourierMatrixDensity, grid: usize, min_modulus: f64) -> Result<Vec<Complex64>, OracleError> {
    let m = monodromy_matrix(density, grid)?;
    let mut rho: Vec<Complex64> = m.complex_eigenvalues().iter().copied().filter(|z| z.norm() > min_modulus).collect();
    rho.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(a.im.total_cmp(&b.im)));
    Ok(rho)
}

/// Floquet exponents from the eigenvalues of the discretized monodromy
/// operator at `M_g`, with a refinement check against `2M_g`.
pub fn monodromy_exponents(density: &FourierMatrixDensity, opts: &MonodromyOptions) -> Result<MonodromySpectrum, OracleError> {
    if opts.grid < MIN_GRID {
        return Err(OracleError::GridTooSmall { grid: opts.grid, minimum: MIN_GRID });
    }
    let coarse = multipliers(density, opts.grid, opts.min_modulus)?;
    let fine = multipliers(density, 2 * opts.grid, opts.min_modulus * 0.5)?;
    let mut exponents = Vec::with_capacity(coarse.len());
    let mut max_shift: f64 = 0.0;
    for rho in coarse {
        let shift = fine.iter().map(|f| (f - rho).norm()).fold(f64::INFINITY, f64::min);
        max_shift = max_shift.max(shift);
        exponents.push(MonodromyExponent { lambda: rho.ln() / (2.0 * PI), multiplier: rho, refinement_shift: shift });
    }
    if max_shift > opts.richardson_tol {
        return Err(OracleError::GridTooCoarse { shift: max_shift, tol: opts.richardson_tol });
    }
    exponents.sort_by(|a, b| b.lambda.re.total_cmp(&a.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
    Ok(MonodromySpectrum { grid: opts.grid, exponents, max_shift })
}
