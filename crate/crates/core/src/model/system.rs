use super::ModelError;

/// One polynomial term `coeff · μ^mu_power · Π q_i(t)^now_i · Π q_i(t−τ)^delayed_i`
/// contributing to component `target` of the vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub target: usize,
    pub now: Vec<u32>,
    pub delayed: Vec<u32>,
    pub mu_power: u32,
}

/// Which argument of `N(q(t), q(t−τ))` a partial derivative is taken in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Now,
    Delayed,
}

impl Monomial {
    pub fn new(coeff: f64, target: usize, now: Vec<u32>, delayed: Vec<u32>) -> Self {
        Self { coeff, target, now, delayed, mu_power: 0 }
    }

    pub fn with_mu_power(mut self, p: u32) -> Self {
        self.mu_power = p;
        self
    }

    pub fn degree(&self) -> u32 {
        self.now.iter().sum::<u32>() + self.delayed.iter().sum::<u32>()
    }

    fn powers(&self, slot: Slot) -> &[u32] {
        match slot {
            Slot::Now => &self.now,
            Slot::Delayed => &self.delayed,
        }
    }

    /// Exact partial derivative with respect to component `var` of `slot`.
    pub fn derivative(&self, slot: Slot, var: usize) -> Option<Monomial> {
        let p = self.powers(slot)[var];
        if p == 0 {
            return None;
        }
        let mut d = self.clone();
        d.coeff *= p as f64;
        match slot {
            Slot::Now => d.now[var] -= 1,
            Slot::Delayed => d.delayed[var] -= 1,
        }
        Some(d)
    }

    /// Value of the monomial with its `μ` factor applied.
    pub fn evaluate(&self, mu: f64, now: &[f64], delayed: &[f64]) -> f64 {
        let mut v = self.coeff * mu.powi(self.mu_power as i32);
        for (x, &p) in now.iter().zip(&self.now) {
            v *= x.powi(p as i32);
        }
        for (x, &p) in delayed.iter().zip(&self.delayed) {
            v *= x.powi(p as i32);
        }
        v
    }
}

/// Autonomous polynomial DDE `dq/dt = N(q(t), q(t−τ))`.
///
/// After [`rescale`], `tau` holds the delay in the rescaled time and
/// `time_scale` the frequency that was divided out.
#[derive(Clone, Debug, PartialEq)]
pub struct DdeSystem {
    pub dim: usize,
    pub tau: f64,
    pub mu: f64,
    pub terms: Vec<Monomial>,
    pub time_scale: f64,
}

impl DdeSystem {
    pub fn new(dim: usize, tau: f64, mu: f64, terms: Vec<Monomial>) -> Result<Self, ModelError> {
        let sys = Self { dim, tau, mu, terms, time_scale: 1.0 };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.dim == 0 {
            return Err(ModelError::Invalid("dim must be positive".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(ModelError::Invalid(format!("delay must be positive and finite, got {}", self.tau)));
        }
        if !self.mu.is_finite() {
            return Err(ModelError::Invalid("mu must be finite".into()));
        }
        for (k, t) in self.terms.iter().enumerate() {
            if t.target >= self.dim {
                return Err(ModelError::Invalid(format!("term {k}: target {} outside dim {}", t.target, self.dim)));
            }
            if t.now.len() != self.dim || t.delayed.len() != self.dim {
                return Err(ModelError::Invalid(format!("term {k}: power lists must have length {}", self.dim)));
            }
            if !t.coeff.is_finite() {
                return Err(ModelError::Invalid(format!("term {k}: non-finite coefficient")));
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// True when every term is of degree ≤ 1 (constant Jacobians).
    pub fn is_linear(&self) -> bool {
        self.degree() <= 1
    }

    pub fn rhs(&self, now: &[f64], delayed: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for t in &self.terms {
            out[t.target] += t.evaluate(self.mu, now, delayed);
        }
    }

    /// Jacobian `∂N/∂q(t)` or `∂N/∂q(t−τ)` at a point, row-major `dim × dim`.
    pub fn jacobian(&self, slot: Slot, now: &[f64], delayed: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut j = vec![0.0; n * n];
        for t in &self.terms {
            for var in 0..n {
                if let Some(d) = t.derivative(slot, var) {
                    j[t.target * n + var] += d.evaluate(self.mu, now, delayed);
                }
            }
        }
        j
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..self.clone() }
    }
}

/// Rescales time by `ξ = ωt`: `dq/dξ = N(q(ξ), q(ξ−ωτ))/ω`.
pub fn rescale(system: &DdeSystem, omega: f64) -> Result<DdeSystem, ModelError> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(ModelError::NonpositiveFrequency(omega));
    }
    let terms = system
        .terms
        .iter()
        .map(|t| Monomial { coeff: t.coeff / omega, ..t.clone() })
        .collect();
    Ok(DdeSystem { tau: system.tau * omega, terms, time_scale: system.time_scale * omega, ..system.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescale_unit_frequency_is_identity() {
        let s = DdeSystem::new(1, 1.3, 0.0, vec![Monomial::new(-1.0, 0, vec![0], vec![1])]).unwrap();
        assert_eq!(rescale(&s, 1.0).unwrap(), s);
    }

    #[test]
    fn rescale_scalar_delay_equation() {
        let s = DdeSystem::new(1, 0.7, 0.0, vec![Monomial::new(-1.0, 0, vec![0], vec![1])]).unwrap();
        let r = rescale(&s, 2.0).unwrap();
        assert_eq!(r.tau, 1.4);
        assert_eq!(r.terms[0].coeff, -0.5);
    }

    #[test]
    fn rescale_rejects_nonpositive() {
        let s = DdeSystem::new(1, 1.0, 0.0, vec![]).unwrap();
        assert!(matches!(rescale(&s, 0.0), Err(ModelError::NonpositiveFrequency(_))));
        assert!(matches!(rescale(&s, -1.0), Err(ModelError::NonpositiveFrequency(_))));
    }

    #[test]
    fn monomial_derivative_is_exact() {
        // 3 x^2 y_τ
        let m = Monomial::new(3.0, 0, vec![2, 0], vec![0, 1]);
        let dx = m.derivative(Slot::Now, 0).unwrap();
        assert_eq!((dx.coeff, dx.now.clone(), dx.delayed.clone()), (6.0, vec![1, 0], vec![0, 1]));
        assert!(m.derivative(Slot::Now, 1).is_none());
        let dy = m.derivative(Slot::Delayed, 1).unwrap();
        assert_eq!(dy.evaluate(0.0, &[2.0, 0.0], &[0.0, 5.0]), 12.0);
    }

    #[test]
    fn invalid_target_rejected() {
        let r = DdeSystem::new(1, 1.0, 0.0, vec![Monomial::new(1.0, 1, vec![1], vec![0])]);
        assert!(matches!(r, Err(ModelError::Invalid(_))));
    }
}
