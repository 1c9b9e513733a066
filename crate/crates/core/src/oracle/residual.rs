use crate::model::DdeSystem;
use crate::numerics::FourierSeries;

/// RMS over `samples` uniform phases of `ω q'(ξ) − N(q(ξ), q(ξ−ωτ))` for a
/// candidate periodic state `q` of the physical-time system.
///
/// Evaluated pointwise, independently of the convolution machinery used to
/// build the orbit.
pub fn orbit_residual(system: &DdeSystem, state: &FourierSeries, omega: f64, samples: usize) -> f64 {
    let n = system.dim;
    let dq = state.derivative();
    let lag = omega * system.tau;
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for j in 0..samples {
        let xi = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
        let now = state.evaluate_real(xi);
        let del = state.evaluate_real(xi - lag);
        let d = dq.evaluate_real(xi);
        system.rhs(&now, &del, &mut out);
        acc += d.iter().zip(&out).map(|(a, b)| (omega * a - b).powi(2)).sum::<f64>();
    }
    (acc / samples as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Monomial;
    use std::f64::consts::PI;

    #[test]
    fn exact_cosine_has_zero_residual() {
        // q' = −(π/2) q(t−1) is solved by cos(πt/2): ω = π/2.
        let sys = DdeSystem::new(1, 1.0, 0.0, vec![Monomial::new(-PI / 2.0, 0, vec![0], vec![1])]).unwrap();
        let r = orbit_residual(&sys, &FourierSeries::trig(1, 1.0, 0.0), PI / 2.0, 64);
        assert!(r < 1e-14, "{r}");
        let bad = orbit_residual(&sys, &FourierSeries::trig(1, 1.0, 0.0), 1.0, 64);
        assert!(bad > 0.1);
    }
}
