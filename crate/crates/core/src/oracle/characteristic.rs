use num_complex::Complex64;

use super::OracleError;
use crate::numerics::{determinant, ComplexMatrix};
use crate::roots::{find_roots, NewtonOptions, SearchBox};

/// `det((a + b e^{−λωτ})/ω − λI)` and the size of its terms.
fn characteristic(a: &ComplexMatrix, b: &ComplexMatrix, omega: f64, tau: f64, lambda: Complex64) -> (Complex64, f64) {
    let e = (-lambda * omega * tau).exp();
    let mut m = &a.scale(Complex64::new(1.0 / omega, 0.0)) + &b.scale(e / omega);
    let scale: f64 = (0..m.rows()).map(|i| 1.0 + m.row_norm(i) + lambda.norm()).product();
    for i in 0..m.rows() {
        m[(i, i)] -= lambda;
    }
    (determinant(&m), scale)
}

/// Roots of the constant-coefficient characteristic equation in `bx` (raw
/// coordinates, not reduced to the strip) with relative residual `< 1e−12`.
pub fn characteristic_roots(a: &ComplexMatrix, b: &ComplexMatrix, omega: f64, tau: f64, bx: &SearchBox) -> Result<Vec<Complex64>, OracleError> {
    let f = |z: Complex64| {
        let (d, _) = characteristic(a, b, omega, tau, z);
        (d.re.is_finite() && d.im.is_finite()).then_some(d)
    };
    let (roots, stalls) = find_roots(bx, f, &NewtonOptions::default(), 1e-9);
    let roots: Vec<Complex64> = roots
        .into_iter()
        .filter(|&z| {
            let (d, s) = characteristic(a, b, omega, tau, z);
            d.norm() < 1e-12 * s
        })
        .collect();
    if roots.is_empty() {
        return Err(OracleError::NoRootsInBox { stalled: stalls.len() });
    }
    Ok(roots)
}
