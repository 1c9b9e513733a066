//! Reference problems used throughout the tests and by `verify`.
//!
//! * `delay_oscillator` — `q' = −(π/2) q(t−1)`, neutral pair `±iπ/2`.
//! * `van_der_pol` — `q'' + q = μ (1 − q²) q'(t−τ)` and its limit cycle.
//! * `parametric` — `dq/dξ = (a + c cos ξ) q + b q(ξ−τ)` at `ω = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::model::{linearize_about_orbit, DdeSystem, FourierMatrixDensity, ModelError, Monomial};
use crate::numerics::ComplexMatrix;
use crate::orbit::{expand_pl, orbit_to_state, OrbitError, OrbitExpansion, OrbitOptions, Oscillator};
use crate::numerics::FourierSeries;

fn scalar(v: f64) -> ComplexMatrix {
    ComplexMatrix::from_real(1, 1, &[v])
}

/// Scalar `q' = a q + b q(t−τ)`.
pub fn scalar_linear(a: f64, b: f64, tau: f64) -> DdeSystem {
    DdeSystem::new(1, tau, 0.0, vec![Monomial::new(a, 0, vec![1], vec![0]), Monomial::new(b, 0, vec![0], vec![1])])
        .expect("valid scalar system")
}

/// Constant-coefficient density of `q' = a q + b q(t−τ)` at `ω`.
pub fn scalar_density(a: f64, b: f64, tau: f64, omega: f64) -> FourierMatrixDensity {
    FourierMatrixDensity::constant(&scalar(a), &scalar(b), omega, tau).expect("valid density")
}

pub fn delay_oscillator() -> DdeSystem {
    scalar_linear(0.0, -PI / 2.0, 1.0)
}

pub fn delay_oscillator_density() -> FourierMatrixDensity {
    scalar_density(0.0, -PI / 2.0, 1.0, 1.0)
}

/// `dq/dξ = (a + c cos ξ) q(ξ) + b q(ξ − τ)`, already in rescaled time (`ω = 1`).
pub fn parametric_density(a: f64, c: f64, b: f64, tau: f64) -> FourierMatrixDensity {
    let half = Complex64::new(c / 2.0, 0.0);
    let now = vec![ComplexMatrix::diagonal(&[half]), scalar(a), ComplexMatrix::diagonal(&[half])];
    let del = vec![scalar(0.0), scalar(b), scalar(0.0)];
    FourierMatrixDensity::new(1, 1.0, vec![(-tau, del), (0.0, now)]).expect("valid density")
}

/// The parametric reference case `a = −0.3`, `c = 0.1`, `b = −0.5`, `τ = 1`.
pub fn parametric_reference() -> FourierMatrixDensity {
    parametric_density(-0.3, 0.1, -0.5, 1.0)
}

/// Delayed van der Pol limit cycle: the expansion, the first-order state
/// `(q, q')` in `ξ`, and the frequency.
pub struct LimitCycle {
    pub system: DdeSystem,
    pub expansion: OrbitExpansion,
    pub state: FourierSeries,
    pub omega: f64,
}

impl LimitCycle {
    pub fn density(&self) -> Result<FourierMatrixDensity, ModelError> {
        linearize_about_orbit(&self.system, &self.state, self.omega, None)
    }
}

pub fn van_der_pol(tau: f64, mu: f64, order: usize) -> Result<LimitCycle, OrbitError> {
    let osc = Oscillator::van_der_pol(1.0, tau);
    let expansion = expand_pl(&osc, mu, order, &OrbitOptions::default())?;
    let (state, omega) = orbit_to_state(&expansion);
    Ok(LimitCycle { system: osc.to_system(mu), expansion, state, omega })
}
