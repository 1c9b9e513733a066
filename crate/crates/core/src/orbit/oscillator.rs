use crate::model::{DdeSystem, Monomial};

use super::OrbitError;

/// One term `coeff · q^q · (q')^dq · q(t−τ)^q_del · q'(t−τ)^dq_del` of the forcing `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcingTerm {
    pub coeff: f64,
    pub q: u32,
    pub dq: u32,
    pub q_del: u32,
    pub dq_del: u32,
}

impl ForcingTerm {
    pub fn new(coeff: f64, q: u32, dq: u32, q_del: u32, dq_del: u32) -> Self {
        Self { coeff, q, dq, q_del, dq_del }
    }

    pub fn degree(&self) -> u32 {
        self.q + self.dq + self.q_del + self.dq_del
    }

    pub fn evaluate(&self, q: f64, dq: f64, q_del: f64, dq_del: f64) -> f64 {
        self.coeff * q.powi(self.q as i32) * dq.powi(self.dq as i32) * q_del.powi(self.q_del as i32) * dq_del.powi(self.dq_del as i32)
    }
}

/// Delayed driven oscillator `q'' + ω₀² q = μ f(q, q', q(t−τ), q'(t−τ))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Oscillator {
    pub omega0: f64,
    pub tau: f64,
    pub forcing: Vec<ForcingTerm>,
}

impl Oscillator {
    /// Delayed van der Pol forcing `f = (1 − q²) q'(t−τ)`.
    pub fn van_der_pol(omega0: f64, tau: f64) -> Self {
        Self {
            omega0,
            tau,
            forcing: vec![ForcingTerm::new(1.0, 0, 0, 0, 1), ForcingTerm::new(-1.0, 2, 0, 0, 1)],
        }
    }

    pub fn forcing_degree(&self) -> u32 {
        self.forcing.iter().map(ForcingTerm::degree).max().unwrap_or(0)
    }

    pub fn forcing_value(&self, q: f64, dq: f64, q_del: f64, dq_del: f64) -> f64 {
        self.forcing.iter().map(|t| t.evaluate(q, dq, q_del, dq_del)).sum()
    }

    /// First-order form `q₁' = q₂`, `q₂' = −ω₀² q₁ + μ f`.
    pub fn to_system(&self, mu: f64) -> DdeSystem {
        let mut terms = vec![
            Monomial::new(1.0, 0, vec![0, 1], vec![0, 0]),
            Monomial::new(-self.omega0 * self.omega0, 1, vec![1, 0], vec![0, 0]),
        ];
        for t in &self.forcing {
            terms.push(Monomial::new(t.coeff, 1, vec![t.q, t.dq], vec![t.q_del, t.dq_del]).with_mu_power(1));
        }
        DdeSystem { dim: 2, tau: self.tau, mu, terms, time_scale: 1.0 }
    }

    /// Recognizes the first-order form produced by [`Oscillator::to_system`].
    pub fn from_system(system: &DdeSystem) -> Result<Self, OrbitError> {
        let bad = |m: &str| Err(OrbitError::NotOscillator(m.to_string()));
        if system.dim != 2 {
            return bad("oscillator form needs dim = 2");
        }
        if system.time_scale != 1.0 {
            return bad("system is already rescaled");
        }
        let mut velocity = 0.0;
        let mut stiffness = 0.0;
        let mut forcing = Vec::new();
        for t in &system.terms {
            let key = (t.now[0], t.now[1], t.delayed[0], t.delayed[1]);
            match (t.target, t.mu_power) {
                (0, 0) if key == (0, 1, 0, 0) => velocity += t.coeff,
                (0, _) => return bad("first component must be exactly q1' = q2"),
                (1, 0) if key == (1, 0, 0, 0) => stiffness += t.coeff,
                (1, 0) => return bad("unperturbed part of q2' must be -w0^2 q1"),
                (1, 1) => forcing.push(ForcingTerm::new(t.coeff, key.0, key.1, key.2, key.3)),
                _ => return bad("forcing terms must carry exactly one power of mu"),
            }
        }
        if velocity != 1.0 {
            return bad("first component must be exactly q1' = q2");
        }
        if !(stiffness < 0.0) {
            return bad("need a restoring term -w0^2 q1 with w0 > 0");
        }
        Ok(Self { omega0: (-stiffness).sqrt(), tau: system.tau, forcing })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_system() {
        let osc = Oscillator::van_der_pol(1.5, 0.8);
        let sys = osc.to_system(0.3);
        assert!(sys.validate().is_ok());
        assert_eq!(Oscillator::from_system(&sys).unwrap(), osc);
    }

    #[test]
    fn rejects_non_oscillator() {
        let sys = DdeSystem::new(1, 1.0, 0.0, vec![Monomial::new(-1.0, 0, vec![0], vec![1])]).unwrap();
        assert!(matches!(Oscillator::from_system(&sys), Err(OrbitError::NotOscillator(_))));
    }
}
