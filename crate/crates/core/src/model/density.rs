use num_complex::Complex64;

use super::system::{DdeSystem, Slot};
use super::ModelError;
use crate::numerics::{fourier_product, ComplexMatrix, FourierSeries};

/// Trim threshold for automatically chosen bandwidths.
pub const BANDWIDTH_TRIM: f64 = 1e-12;

/// Largest exponent accepted in `e^{(λ+in)θ}` before reporting overflow.
const EXP_LIMIT: f64 = 700.0;

/// Point-delay linearization kernel
/// `Ω_ξ(θ) = Σ_j Σ_{|k|≤K} C_{k,j} e^{ikξ} δ(θ − θ_j)` in rescaled time.
#[derive(Clone, Debug)]
pub struct FourierMatrixDensity {
    dim: usize,
    omega: f64,
    delays: Vec<f64>,
    bandwidth: usize,
    /// `coeffs[j][k + K]`.
    coeffs: Vec<Vec<ComplexMatrix>>,
    dropped_tail: f64,
}

impl FourierMatrixDensity {
    /// Builds a density from `(θ_j, [C_{-K,j}, …, C_{K,j}])` slots. A zero
    /// undelayed slot is appended when no `θ = 0` entry is given.
    pub fn new(dim: usize, omega: f64, slots: Vec<(f64, Vec<ComplexMatrix>)>) -> Result<Self, ModelError> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(ModelError::NonpositiveFrequency(omega));
        }
        let width = slots.first().map_or(1, |s| s.1.len());
        if width.is_multiple_of(2) {
            return Err(ModelError::Invalid("coefficient lists must have odd length 2K+1".into()));
        }
        let bandwidth = width / 2;
        let mut delays = Vec::new();
        let mut coeffs = Vec::new();
        for (theta, cs) in slots {
            if !(theta <= 0.0 && theta.is_finite()) {
                return Err(ModelError::Invalid(format!("delay position {theta} must be finite and ≤ 0")));
            }
            if cs.len() != width {
                return Err(ModelError::Invalid("all delay slots need the same bandwidth".into()));
            }
            if cs.iter().any(|c| c.rows() != dim || c.cols() != dim || !c.is_finite()) {
                return Err(ModelError::Invalid(format!("coefficients must be finite {dim}x{dim} matrices")));
            }
            delays.push(theta);
            coeffs.push(cs);
        }
        if !delays.contains(&0.0) {
            delays.push(0.0);
            coeffs.push(vec![ComplexMatrix::zeros(dim, dim); width]);
        }
        Ok(Self { dim, omega, delays, bandwidth, coeffs, dropped_tail: 0.0 })
    }

    /// Constant-coefficient density of `dq/dt = a q(t) + b q(t−τ)` at frequency `ω`.
    pub fn constant(a: &ComplexMatrix, b: &ComplexMatrix, omega: f64, tau: f64) -> Result<Self, ModelError> {
        let s = Complex64::new(1.0 / omega, 0.0);
        Self::new(a.rows(), omega, vec![(-omega * tau, vec![b.scale(s)]), (0.0, vec![a.scale(s)])])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    /// `K`, the harmonic bandwidth.
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Norm of the harmonics discarded when the bandwidth was fixed.
    pub fn dropped_tail(&self) -> f64 {
        self.dropped_tail
    }

    /// Length of the history segment, `max_j |θ_j|`.
    pub fn span(&self) -> f64 {
        self.delays.iter().fold(0.0, |m, t| m.max(-t))
    }

    /// `Σ_{k,d} ‖C_{k,d}‖ e^{re0·θ_d}`. For a mode with `Re λ ≥ re0` whose
    /// largest component is `φ_n`, the recurrence gives `|λ + in| ≤` this bound.
    pub fn harmonic_bound(&self, re0: f64) -> f64 {
        let mut total = 0.0;
        for (slot, &theta) in self.delays.iter().enumerate() {
            let weight = (re0 * theta).exp();
            total += weight * self.coeffs[slot].iter().map(ComplexMatrix::norm).sum::<f64>();
        }
        total
    }

    pub fn coeff(&self, k: i64, slot: usize) -> Option<&ComplexMatrix> {
        if k.unsigned_abs() as usize > self.bandwidth {
            None
        } else {
            Some(&self.coeffs[slot][(k + self.bandwidth as i64) as usize])
        }
    }

    /// `C_j(ξ) = Σ_k C_{k,j} e^{ikξ}`.
    pub fn evaluate(&self, slot: usize, xi: f64) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        let kk = self.bandwidth as i64;
        for k in -kk..=kk {
            let c = &self.coeffs[slot][(k + kk) as usize];
            out += &c.scale(Complex64::from_polar(1.0, k as f64 * xi));
        }
        out
    }

    /// Largest violation of `C_{-k,j} = conj(C_{k,j})`.
    pub fn reality_defect(&self) -> f64 {
        let kk = self.bandwidth as i64;
        let mut d: f64 = 0.0;
        for slot in 0..self.delays.len() {
            for k in 0..=kk {
                let a = self.coeff(-k, slot).unwrap();
                let b = self.coeff(k, slot).unwrap().conj();
                d = d.max((a - &b).max_abs());
            }
        }
        d
    }

    pub fn is_real(&self) -> bool {
        self.reality_defect() <= 1e-14 * (1.0 + self.max_coeff())
    }

    fn max_coeff(&self) -> f64 {
        self.coeffs.iter().flatten().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    /// Copy restricted to `|k| ≤ k_new`, recording the dropped norm.
    pub fn truncated(&self, k_new: usize) -> Self {
        let k_new = k_new.min(self.bandwidth);
        let kk = self.bandwidth as i64;
        let mut dropped = self.dropped_tail.powi(2);
        let coeffs = self
            .coeffs
            .iter()
            .map(|cs| {
                let mut kept = Vec::new();
                for k in -kk..=kk {
                    let c = &cs[(k + kk) as usize];
                    if k.unsigned_abs() as usize <= k_new {
                        kept.push(c.clone());
                    } else {
                        dropped += c.norm().powi(2);
                    }
                }
                kept
            })
            .collect();
        Self { bandwidth: k_new, coeffs, dropped_tail: dropped.sqrt(), ..self.clone() }
    }

    /// Smallest bandwidth whose discarded tail is below `rel · total norm`.
    pub fn trimmed(&self, rel: f64) -> Self {
        let total: f64 = self.coeffs.iter().flatten().map(|c| c.norm().powi(2)).sum::<f64>().sqrt();
        let kk = self.bandwidth as i64;
        let tail_above = |k_keep: i64| -> f64 {
            let mut s = 0.0;
            for cs in &self.coeffs {
                for k in -kk..=kk {
                    if k.abs() > k_keep {
                        s += cs[(k + kk) as usize].norm().powi(2);
                    }
                }
            }
            s.sqrt()
        };
        let k_keep = (0..=kk).find(|&k| tail_above(k) <= rel * total).unwrap_or(kk);
        self.truncated(k_keep as usize)
    }
}

/// Table of `L_{k,n}(λ) = Σ_j C_{k,j} e^{(λ+in)θ_j}` for `|k| ≤ K`, `|n| ≤ N`.
#[derive(Clone, Debug)]
pub struct LMatrixTable {
    lambda: Complex64,
    bandwidth: usize,
    n_max: usize,
    entries: Vec<ComplexMatrix>,
}

impl LMatrixTable {
    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `L_{k,n}`, `None` for `|k| > K`. Panics when `|n| > N`.
    pub fn get(&self, k: i64, n: i64) -> Option<&ComplexMatrix> {
        assert!(n.unsigned_abs() as usize <= self.n_max, "n = {n} outside table range {}", self.n_max);
        if k.unsigned_abs() as usize > self.bandwidth {
            return None;
        }
        let row = (k + self.bandwidth as i64) as usize;
        Some(&self.entries[row * (2 * self.n_max + 1) + (n + self.n_max as i64) as usize])
    }
}

/// Builds the `L` table; fails with `Overflow` if some `Re(λ)θ_j` leaves the
/// representable exponent range.
pub fn build_l(density: &FourierMatrixDensity, lambda: Complex64, n_win: usize) -> Result<LMatrixTable, ModelError> {
    for &theta in &density.delays {
        if lambda.re * theta > EXP_LIMIT {
            return Err(ModelError::Overflow { lambda_re: lambda.re, theta });
        }
    }
    let kk = density.bandwidth as i64;
    let nn = n_win as i64;
    let dim = density.dim;
    let phases: Vec<Vec<Complex64>> = (-nn..=nn)
        .map(|n| density.delays.iter().map(|&t| ((lambda + Complex64::new(0.0, n as f64)) * t).exp()).collect())
        .collect();
    let mut entries = Vec::with_capacity((2 * density.bandwidth + 1) * (2 * n_win + 1));
    for k in -kk..=kk {
        for ph in &phases {
            let mut m = ComplexMatrix::zeros(dim, dim);
            for (slot, e) in ph.iter().enumerate() {
                let c = &density.coeffs[slot][(k + kk) as usize];
                for i in 0..dim {
                    for j in 0..dim {
                        m[(i, j)] += c[(i, j)] * e;
                    }
                }
            }
            entries.push(m);
        }
    }
    Ok(LMatrixTable { lambda, bandwidth: density.bandwidth, n_max: n_win, entries })
}

/// Density of the linearization about a periodic orbit `q⁰(ξ)` of frequency
/// `ω`: `C_{k,1}`, `C_{k,2}` are the harmonics of `∂N/∂q(t−τ)/ω` and
/// `∂N/∂q(t)/ω` on the orbit, at `θ₁ = −ωτ`, `θ₂ = 0`.
///
/// `k_cut = None` keeps the smallest bandwidth whose dropped tail is below
/// [`BANDWIDTH_TRIM`]; `Some(K)` truncates and records the dropped norm.
pub fn linearize_about_orbit(
    system: &DdeSystem,
    orbit: &FourierSeries,
    omega: f64,
    k_cut: Option<usize>,
) -> Result<FourierMatrixDensity, ModelError> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(ModelError::NonpositiveFrequency(omega));
    }
    if orbit.dim() != system.dim {
        return Err(ModelError::Invalid(format!("orbit dimension {} differs from system dimension {}", orbit.dim(), system.dim)));
    }
    let n = system.dim;
    let d = omega * system.tau;
    let delayed = orbit.shifted(-d);
    let comps_now: Vec<FourierSeries> = (0..n).map(|i| orbit.component(i)).collect();
    let comps_del: Vec<FourierSeries> = (0..n).map(|i| delayed.component(i)).collect();

    let mut jac: [Vec<Option<FourierSeries>>; 2] = [vec![None; n * n], vec![None; n * n]];
    for (si, slot) in [Slot::Delayed, Slot::Now].into_iter().enumerate() {
        for term in &system.terms {
            for var in 0..n {
                let Some(dm) = term.derivative(slot, var) else { continue };
                let c = dm.coeff * system.mu.powi(dm.mu_power as i32) / omega;
                if c == 0.0 {
                    continue;
                }
                let mut prod = FourierSeries::constant(&[Complex64::new(c, 0.0)]);
                for (comps, pows) in [(&comps_now, &dm.now), (&comps_del, &dm.delayed)] {
                    for (x, &p) in comps.iter().zip(pows) {
                        for _ in 0..p {
                            let cut = prod.cutoff() + x.cutoff();
                            prod = fourier_product(&prod, x, cut)?;
                        }
                    }
                }
                let entry = &mut jac[si][term.target * n + var];
                *entry = Some(match entry.take() {
                    Some(acc) => acc.add(&prod),
                    None => prod,
                });
            }
        }
    }

    let full_k = jac.iter().flatten().flatten().map(FourierSeries::cutoff).max().unwrap_or(0);
    let kk = full_k as i64;
    let slots = [-d, 0.0]
        .into_iter()
        .zip(&jac)
        .map(|(theta, entries)| {
            let mats = (-kk..=kk)
                .map(|k| {
                    ComplexMatrix::from_fn(n, n, |i, j| {
                        entries[i * n + j].as_ref().map_or(Complex64::new(0.0, 0.0), |s| s.coeff(k, 0))
                    })
                })
                .collect();
            (theta, mats)
        })
        .collect();
    let full = FourierMatrixDensity::new(n, omega, slots)?;
    Ok(match k_cut {
        Some(k) => full.truncated(k),
        None => full.trimmed(BANDWIDTH_TRIM),
    })
}
