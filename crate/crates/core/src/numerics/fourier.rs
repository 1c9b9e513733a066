use std::f64::consts::PI;

use num_complex::Complex64;

use super::NumericsError;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default bound on the relative norm a truncating product may discard.
pub const DEFAULT_TAIL_FRACTION: f64 = 1e-12;

/// Truncated two-sided Fourier series `f(ξ) = Σ_{|n|≤N} c_n e^{inξ}` with
/// vector coefficients `c_n ∈ ℂ^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    dim: usize,
    cutoff: usize,
    /// Harmonic-major: `coeffs[(n + N) * dim + i]`.
    coeffs: Vec<Complex64>,
}

impl FourierSeries {
    pub fn zeros(dim: usize, cutoff: usize) -> Self {
        Self { dim, cutoff, coeffs: vec![ZERO; dim * (2 * cutoff + 1)] }
    }

    pub fn constant(values: &[Complex64]) -> Self {
        Self { dim: values.len(), cutoff: 0, coeffs: values.to_vec() }
    }

    /// Builds from a closure over `(n, component)`.
    pub fn from_fn(dim: usize, cutoff: usize, mut f: impl FnMut(i64, usize) -> Complex64) -> Self {
        let mut s = Self::zeros(dim, cutoff);
        for n in -(cutoff as i64)..=cutoff as i64 {
            for i in 0..dim {
                let o = s.offset(n) + i;
                s.coeffs[o] = f(n, i);
            }
        }
        s
    }

    /// Builds a real-valued series, enforcing `c_{-n} = conj(c_n)` by
    /// symmetrizing the supplied coefficients.
    pub fn real_from_fn(dim: usize, cutoff: usize, f: impl FnMut(i64, usize) -> Complex64) -> Self {
        Self::from_fn(dim, cutoff, f).symmetrized()
    }

    /// Scalar `a cos(kξ) + b sin(kξ)`.
    pub fn trig(k: usize, a: f64, b: f64) -> Self {
        let mut s = Self::zeros(1, k);
        if k == 0 {
            s.coeffs[0] = Complex64::new(a, 0.0);
        } else {
            let cp = Complex64::new(a / 2.0, -b / 2.0);
            s.set(k as i64, 0, cp);
            s.set(-(k as i64), 0, cp.conj());
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn offset(&self, n: i64) -> usize {
        (n + self.cutoff as i64) as usize * self.dim
    }

    /// Coefficient `c_n[i]`; zero outside the stored band.
    pub fn coeff(&self, n: i64, i: usize) -> Complex64 {
        if n.unsigned_abs() as usize > self.cutoff {
            ZERO
        } else {
            self.coeffs[self.offset(n) + i]
        }
    }

    pub fn harmonic(&self, n: i64) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.coeff(n, i)).collect()
    }

    pub fn set(&mut self, n: i64, i: usize, value: Complex64) {
        assert!(n.unsigned_abs() as usize <= self.cutoff, "harmonic {n} outside cutoff {}", self.cutoff);
        let o = self.offset(n);
        self.coeffs[o + i] = value;
    }

    pub fn add_to(&mut self, n: i64, i: usize, value: Complex64) {
        let o = self.offset(n);
        self.coeffs[o + i] += value;
    }

    pub fn component(&self, i: usize) -> FourierSeries {
        Self::from_fn(1, self.cutoff, |n, _| self.coeff(n, i))
    }

    /// Stacks scalar series into a vector-valued one.
    pub fn stack(parts: &[FourierSeries]) -> Self {
        let cutoff = parts.iter().map(|p| p.cutoff).max().unwrap_or(0);
        Self::from_fn(parts.len(), cutoff, |n, i| parts[i].coeff(n, 0))
    }

    pub fn evaluate(&self, xi: f64) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim];
        for n in -(self.cutoff as i64)..=self.cutoff as i64 {
            let e = Complex64::from_polar(1.0, n as f64 * xi);
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.coeffs[self.offset(n) + i] * e;
            }
        }
        out
    }

    /// Real parts of `evaluate`, for real-valued series.
    pub fn evaluate_real(&self, xi: f64) -> Vec<f64> {
        self.evaluate(xi).into_iter().map(|z| z.re).collect()
    }

    pub fn derivative(&self) -> Self {
        Self::from_fn(self.dim, self.cutoff, |n, i| Complex64::new(0.0, n as f64) * self.coeff(n, i))
    }

    /// The series of `ξ ↦ f(ξ + δ)`.
    pub fn shifted(&self, delta: f64) -> Self {
        Self::from_fn(self.dim, self.cutoff, |n, i| self.coeff(n, i) * Complex64::from_polar(1.0, n as f64 * delta))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { dim: self.dim, cutoff: self.cutoff, coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    /// Re-banded copy; dropped harmonics are discarded silently.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        Self::from_fn(self.dim, cutoff, |n, i| self.coeff(n, i))
    }

    pub fn add(&self, other: &FourierSeries) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let cutoff = self.cutoff.max(other.cutoff);
        Self::from_fn(self.dim, cutoff, |n, i| self.coeff(n, i) + other.coeff(n, i))
    }

    pub fn sub(&self, other: &FourierSeries) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// `sqrt(Σ |c_n|²)`, the L2 norm over one period divided by √(2π).
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Norm of the harmonics with `|n| > k`.
    pub fn tail_norm(&self, k: usize) -> f64 {
        let mut s = 0.0;
        for n in -(self.cutoff as i64)..=self.cutoff as i64 {
            if n.unsigned_abs() as usize > k {
                s += (0..self.dim).map(|i| self.coeff(n, i).norm_sqr()).sum::<f64>();
            }
        }
        s.sqrt()
    }

    /// Largest deviation from `c_{-n} = conj(c_n)`.
    pub fn reality_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for n in 0..=self.cutoff as i64 {
            for i in 0..self.dim {
                d = d.max((self.coeff(-n, i) - self.coeff(n, i).conj()).norm());
            }
        }
        d
    }

    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.dim, self.cutoff, |n, i| 0.5 * (self.coeff(n, i) + self.coeff(-n, i).conj()))
    }

    /// Discrete projection of `M` uniform samples `f(2πj/M)` onto harmonics
    /// `|n| ≤ cutoff`; needs `M > 2·cutoff` to avoid aliasing.
    pub fn project_samples(samples: &[Vec<Complex64>], cutoff: usize) -> Self {
        let m = samples.len();
        assert!(m > 2 * cutoff, "{m} samples alias harmonics up to {cutoff}");
        let dim = samples[0].len();
        Self::from_fn(dim, cutoff, |n, i| {
            samples
                .iter()
                .enumerate()
                .map(|(j, s)| s[i] * Complex64::from_polar(1.0, -2.0 * PI * (n * j as i64) as f64 / m as f64))
                .sum::<Complex64>()
                / m as f64
        })
    }

    pub fn sample(&self, m: usize) -> Vec<Vec<Complex64>> {
        (0..m).map(|j| self.evaluate(2.0 * PI * j as f64 / m as f64)).collect()
    }
}

/// Convolution product truncated at `out_cutoff`, rejecting truncations that
/// discard more than [`DEFAULT_TAIL_FRACTION`] of the norm.
pub fn fourier_product(f: &FourierSeries, g: &FourierSeries, out_cutoff: usize) -> Result<FourierSeries, NumericsError> {
    fourier_product_with(f, g, out_cutoff, DEFAULT_TAIL_FRACTION)
}

/// As [`fourier_product`] with an explicit tail fraction.
///
/// Supported shapes: scalar·vector, vector·scalar and componentwise for
/// equal dimensions.
pub fn fourier_product_with(
    f: &FourierSeries,
    g: &FourierSeries,
    out_cutoff: usize,
    max_tail_fraction: f64,
) -> Result<FourierSeries, NumericsError> {
    let dim = match (f.dim, g.dim) {
        (1, d) | (d, 1) => d,
        (a, b) if a == b => a,
        (a, b) => return Err(NumericsError::DimensionMismatch { left: a, right: b }),
    };
    let full = f.cutoff + g.cutoff;
    let fi = |i: usize| if f.dim == 1 { 0 } else { i };
    let gi = |i: usize| if g.dim == 1 { 0 } else { i };
    let mut out = FourierSeries::zeros(dim, full);
    for m in -(f.cutoff as i64)..=f.cutoff as i64 {
        for k in -(g.cutoff as i64)..=g.cutoff as i64 {
            for i in 0..dim {
                let a = f.coeff(m, fi(i));
                if a == ZERO {
                    continue;
                }
                out.add_to(m + k, i, a * g.coeff(k, gi(i)));
            }
        }
    }
    if out_cutoff >= full {
        return Ok(out.with_cutoff(out_cutoff));
    }
    let dropped = out.tail_norm(out_cutoff);
    let total = out.norm();
    if dropped > max_tail_fraction * total {
        return Err(NumericsError::CutoffTooSmall { cutoff: out_cutoff, dropped, total });
    }
    Ok(out.with_cutoff(out_cutoff))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &FourierSeries, b: &FourierSeries, tol: f64) -> bool {
        a.sub(b).norm() < tol
    }

    #[test]
    fn cos_squared() {
        let c = FourierSeries::trig(1, 1.0, 0.0);
        let p = fourier_product(&c, &c, 2).unwrap();
        let expect = FourierSeries::trig(0, 0.5, 0.0).add(&FourierSeries::trig(2, 0.5, 0.0));
        assert!(close(&p, &expect, 1e-15));
    }

    #[test]
    fn exponential_times_one() {
        let mut e = FourierSeries::zeros(1, 1);
        e.set(1, 0, Complex64::new(1.0, 0.0));
        let one = FourierSeries::constant(&[Complex64::new(1.0, 0.0)]);
        assert!(close(&fourier_product(&e, &one, 1).unwrap(), &e, 1e-300));
    }

    #[test]
    fn cos_cubed() {
        let c = FourierSeries::trig(1, 1.0, 0.0);
        let c3 = fourier_product(&fourier_product(&c, &c, 2).unwrap(), &c, 3).unwrap();
        let expect = FourierSeries::trig(1, 0.75, 0.0).add(&FourierSeries::trig(3, 0.25, 0.0));
        assert!(close(&c3, &expect, 1e-15));
    }

    #[test]
    fn truncation_guard() {
        let c = FourierSeries::trig(1, 1.0, 0.0);
        assert!(matches!(fourier_product(&c, &c, 1), Err(NumericsError::CutoffTooSmall { .. })));
    }

    #[test]
    fn periodic_and_real() {
        let s = FourierSeries::real_from_fn(2, 3, |n, i| Complex64::new(1.0 / (1 + n.abs() + i as i64) as f64, 0.3 * n as f64));
        assert!(s.reality_defect() < 1e-16);
        let a = s.evaluate(0.7);
        let b = s.evaluate(0.7 + 2.0 * PI);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-13);
            assert!(x.im.abs() < 1e-14);
        }
    }

    #[test]
    fn shift_matches_evaluation() {
        let s = FourierSeries::trig(2, 0.4, -1.1).add(&FourierSeries::trig(1, 1.0, 0.2).with_cutoff(2));
        let d = -0.83;
        assert!((s.shifted(d).evaluate(0.4)[0] - s.evaluate(0.4 + d)[0]).norm() < 1e-14);
    }

    #[test]
    fn scalar_times_vector() {
        let v = FourierSeries::stack(&[FourierSeries::trig(1, 1.0, 0.0), FourierSeries::trig(1, 0.0, 1.0)]);
        let c = FourierSeries::trig(1, 1.0, 0.0);
        let p = fourier_product(&c, &v, 2).unwrap();
        let x = 0.37;
        let got = p.evaluate(x);
        assert!((got[0].re - x.cos() * x.cos()).abs() < 1e-15);
        assert!((got[1].re - x.cos() * x.sin()).abs() < 1e-15);
    }
}
