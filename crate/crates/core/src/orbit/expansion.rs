//! Order-by-order Lindstedt-type expansions in a small parameter `ε`.
//!
//! Both schemes solve `ω² ẍ + ω₀² x = g(ε) f` with `x = Σ εᵐ xₘ`,
//! `ω = Σ εᵐ wₘ`, `w₀ = ω₀`:
//! Poincaré–Lindstedt uses `ε = μ`, `g = ε`; Shohat uses `ε = ρ = μ/(1+μ)`,
//! `g = ρ/(1−ρ)`. Quantities are power series in `ε` whose coefficients are
//! Fourier series ("jets"); the delayed argument `x(ξ − ωτ)` is shifted
//! exactly in Fourier space.

use num_complex::Complex64;

use super::oscillator::Oscillator;
use super::OrbitError;
use crate::numerics::{fourier_product, FourierSeries};

type Jet = Vec<FourierSeries>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    PoincareLindstedt,
    Shohat,
}

#[derive(Clone, Debug)]
pub struct OrbitOptions {
    /// Fourier cutoff; `None` picks one large enough that no product is truncated.
    pub cutoff: Option<usize>,
    /// Preferred leading amplitude when several limit cycles exist.
    pub amplitude_guess: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self { cutoff: None, amplitude_guess: 1.0, max_iter: 50, tol: 1e-13 }
    }
}

/// Periodic orbit as a truncated series in `ε`.
#[derive(Clone, Debug)]
pub struct OrbitExpansion {
    pub scheme: Scheme,
    pub order: usize,
    pub mu: f64,
    /// Expansion parameter: `μ` (PL) or `ρ(μ)` (Shohat).
    pub epsilon: f64,
    pub omega0: f64,
    pub tau: f64,
    /// `xₘ` (PL) or `Xₘ` (Shohat), `m = 0..=P`.
    pub orders: Vec<FourierSeries>,
    /// `ωₘ` (PL) or `Ωₘ` (Shohat).
    pub frequencies: Vec<f64>,
    /// `Aₘ = xₘ(0)`.
    pub amplitudes: Vec<f64>,
    /// `|c₁(Iₘ)|` after each solvability solve, `m = 1..=P`.
    pub secular_residuals: Vec<f64>,
    /// Orders whose solvability conditions were vacuous (amplitude left free).
    pub flagged: Vec<usize>,
}

impl OrbitExpansion {
    /// Frequency increments `wₘ` of `ω = Σ εᵐ wₘ`.
    pub fn increments(&self) -> Vec<f64> {
        match self.scheme {
            Scheme::PoincareLindstedt => self.frequencies.clone(),
            Scheme::Shohat => (0..self.frequencies.len())
                .map(|m| self.frequencies[m] - if m == 0 { 0.0 } else { self.frequencies[m - 1] })
                .collect(),
        }
    }

    /// Summed frequency `ω(μ)`.
    pub fn frequency(&self) -> f64 {
        self.increments().iter().rev().fold(0.0, |acc, w| acc * self.epsilon + w)
    }

    /// Summed orbit `x(ξ) = Σ εᵐ xₘ(ξ)`.
    pub fn orbit(&self) -> FourierSeries {
        let mut acc = FourierSeries::zeros(1, 0);
        for x in self.orders.iter().rev() {
            acc = acc.scale(Complex64::new(self.epsilon, 0.0)).add(x);
        }
        acc
    }
}

/// State `(x, ω dx/dξ)` of the first-order system, and `ω`.
pub fn orbit_to_state(exp: &OrbitExpansion) -> (FourierSeries, f64) {
    let omega = exp.frequency();
    let x = exp.orbit();
    let v = x.derivative().scale(Complex64::new(omega, 0.0));
    (FourierSeries::stack(&[x, v]), omega)
}

pub fn expand_pl(osc: &Oscillator, mu: f64, order: usize, opts: &OrbitOptions) -> Result<OrbitExpansion, OrbitError> {
    expand(osc, Scheme::PoincareLindstedt, mu, order, opts)
}

pub fn expand_shohat(osc: &Oscillator, mu: f64, order: usize, opts: &OrbitOptions) -> Result<OrbitExpansion, OrbitError> {
    if !(mu >= 0.0) {
        return Err(OrbitError::InvalidParameter(format!("Shohat expansion needs mu >= 0, got {mu}")));
    }
    expand(osc, Scheme::Shohat, mu, order, opts)
}

fn expand(osc: &Oscillator, scheme: Scheme, mu: f64, order: usize, opts: &OrbitOptions) -> Result<OrbitExpansion, OrbitError> {
    if !(osc.omega0 > 0.0) || !(osc.tau >= 0.0) || !mu.is_finite() {
        return Err(OrbitError::InvalidParameter("need w0 > 0, tau >= 0 and finite mu".into()));
    }
    let deg = osc.forcing_degree().max(1) as usize;
    let cutoff = opts.cutoff.unwrap_or(deg * (order + 2) + 1).max(1);
    let top = order + 1;
    let gain: Vec<f64> = (0..=top)
        .map(|m| match (scheme, m) {
            (_, 0) => 0.0,
            (Scheme::PoincareLindstedt, 1) => 1.0,
            (Scheme::PoincareLindstedt, _) => 0.0,
            (Scheme::Shohat, _) => 1.0,
        })
        .collect();
    let engine = Engine { osc, gain, cutoff };
    let epsilon = match scheme {
        Scheme::PoincareLindstedt => mu,
        Scheme::Shohat => mu / (1.0 + mu),
    };

    let mut xs: Jet = Vec::new();
    let mut particular = FourierSeries::zeros(1, cutoff);
    let mut ws = vec![osc.omega0];
    let mut amplitudes = Vec::new();
    let mut residuals = Vec::new();
    let mut flagged = Vec::new();

    for m in 1..=top {
        let solved = engine.secular_solve(m, &xs, &particular, &ws, opts)?;
        if solved.vacuous {
            flagged.push(m - 1);
        }
        xs.push(closed(&particular, solved.amplitude, cutoff));
        amplitudes.push(solved.amplitude);
        if m == top {
            break;
        }
        ws.push(solved.omega);
        let mut trial = xs.clone();
        trial.push(FourierSeries::zeros(1, cutoff));
        let inh = engine.inhomogeneity(&trial, &ws)?;
        residuals.push(inh.coeff(1, 0).norm());
        particular = FourierSeries::from_fn(1, cutoff, |n, _| {
            if n.abs() == 1 {
                Complex64::new(0.0, 0.0)
            } else {
                inh.coeff(n, 0) / (1.0 - (n * n) as f64)
            }
        });
    }

    let frequencies = match scheme {
        Scheme::PoincareLindstedt => ws.clone(),
        Scheme::Shohat => ws.iter().scan(0.0, |s, w| {
            *s += w;
            Some(*s)
        })
        .collect(),
    };
    Ok(OrbitExpansion {
        scheme,
        order,
        mu,
        epsilon,
        omega0: osc.omega0,
        tau: osc.tau,
        orders: xs,
        frequencies,
        amplitudes,
        secular_residuals: residuals,
        flagged,
    })
}

/// `p + α cos ξ + β sin ξ` with `x(0) = a`, `ẋ(0) = 0`.
fn closed(p: &FourierSeries, a: f64, cutoff: usize) -> FourierSeries {
    let p0 = p.evaluate(0.0)[0].re;
    let dp0 = p.derivative().evaluate(0.0)[0].re;
    p.add(&FourierSeries::trig(1, a - p0, -dp0)).with_cutoff(cutoff)
}

struct Secular {
    omega: f64,
    amplitude: f64,
    vacuous: bool,
}

struct Engine<'a> {
    osc: &'a Oscillator,
    gain: Vec<f64>,
    cutoff: usize,
}

impl Engine<'_> {
    fn mul(&self, a: &[FourierSeries], b: &[FourierSeries]) -> Result<Jet, OrbitError> {
        let top = a.len().min(b.len());
        let mut out = vec![FourierSeries::zeros(1, self.cutoff); top];
        for (i, ai) in a.iter().enumerate().take(top) {
            if ai.norm() == 0.0 {
                continue;
            }
            for (j, bj) in b.iter().enumerate().take(top - i) {
                out[i + j] = out[i + j].add(&fourier_product(ai, bj, self.cutoff)?);
            }
        }
        Ok(out)
    }

    fn scalar_mul(s: &[f64], a: &[FourierSeries]) -> Jet {
        (0..a.len())
            .map(|k| {
                (0..=k).fold(FourierSeries::zeros(1, 0), |acc, i| acc.add(&a[k - i].scale(Complex64::new(s[i], 0.0))))
            })
            .collect()
    }

    /// `x(ξ − ωτ)` as a jet, with the frequency series `ws`.
    fn delayed(&self, x: &[FourierSeries], ws: &[f64]) -> Jet {
        let top = x.len();
        let tau = self.osc.tau;
        let nn = self.cutoff as i64;
        let mut out = vec![FourierSeries::zeros(1, self.cutoff); top];
        for n in -nn..=nn {
            // exp(−inτ Σ_{j≥1} w_j εʲ) as a power series.
            let a: Vec<Complex64> = (0..top).map(|j| if j == 0 { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, -(n as f64) * tau * ws[j]) }).collect();
            let mut e = vec![Complex64::new(1.0, 0.0); top];
            for k in 1..top {
                e[k] = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum::<Complex64>() / k as f64;
            }
            let base = Complex64::from_polar(1.0, -(n as f64) * ws[0] * tau);
            for m in 0..top {
                let v: Complex64 = (0..=m).map(|i| x[i].coeff(n, 0) * e[m - i]).sum();
                out[m].set(n, 0, base * v);
            }
        }
        out
    }

    /// The order-`m` coefficient of `ω² ẍ + ω₀² x − g f` where `m = x.len() − 1`
    /// and `ws` holds `w₀..w_m`.
    fn lhs_top(&self, x: &[FourierSeries], ws: &[f64]) -> Result<FourierSeries, OrbitError> {
        let m = x.len() - 1;
        let dx: Jet = x.iter().map(FourierSeries::derivative).collect();
        let ddx: Jet = dx.iter().map(FourierSeries::derivative).collect();
        let v = Self::scalar_mul(ws, &dx);
        let xd = self.delayed(x, ws);
        let vd = Self::scalar_mul(ws, &self.delayed(&dx, ws));

        let mut f: Jet = vec![FourierSeries::zeros(1, self.cutoff); m + 1];
        for t in &self.osc.forcing {
            let mut prod: Jet = (0..=m)
                .map(|k| FourierSeries::constant(&[Complex64::new(if k == 0 { t.coeff } else { 0.0 }, 0.0)]))
                .collect();
            for (base, p) in [(x, t.q), (&v[..], t.dq), (&xd[..], t.q_del), (&vd[..], t.dq_del)] {
                for _ in 0..p {
                    prod = self.mul(&prod, base)?;
                }
            }
            for (fk, pk) in f.iter_mut().zip(&prod) {
                *fk = fk.add(pk);
            }
        }

        let w2: Vec<f64> = (0..=m).map(|k| (0..=k).map(|i| ws[i] * ws[k - i]).sum()).collect();
        let mut out = Self::scalar_mul(&w2, &ddx).pop().unwrap();
        out = out.add(&x[m].scale(Complex64::new(self.osc.omega0.powi(2), 0.0)));
        let gf = Self::scalar_mul(&self.gain, &f).pop().unwrap();
        Ok(out.sub(&gf).with_cutoff(self.cutoff))
    }

    /// `I_m` for a trial jet whose last entry is the (zero) unknown `x_m`.
    fn inhomogeneity(&self, x: &[FourierSeries], ws: &[f64]) -> Result<FourierSeries, OrbitError> {
        let lhs = self.lhs_top(x, ws)?;
        Ok(lhs.scale(Complex64::new(-1.0 / self.osc.omega0.powi(2), 0.0)))
    }

    /// `(Re c₁, Im c₁)` of `I_m` for trial `(w_m, A_{m−1})`.
    fn residual(&self, m: usize, xs: &[FourierSeries], p: &FourierSeries, ws: &[f64], w: f64, a: f64) -> Result<[f64; 2], OrbitError> {
        let mut x = xs[..m - 1].to_vec();
        x.push(closed(p, a, self.cutoff));
        x.push(FourierSeries::zeros(1, self.cutoff));
        let mut wv = ws[..m].to_vec();
        wv.push(w);
        let c1 = self.inhomogeneity(&x, &wv)?.coeff(1, 0);
        Ok([c1.re, c1.im])
    }

    fn jacobian(&self, m: usize, xs: &[FourierSeries], p: &FourierSeries, ws: &[f64], w: f64, a: f64) -> Result<[[f64; 2]; 2], OrbitError> {
        let r0 = self.residual(m, xs, p, ws, w, a)?;
        let r1 = self.residual(m, xs, p, ws, w + 1.0, a)?;
        let central = |h: f64| -> Result<[f64; 2], OrbitError> {
            let rp = self.residual(m, xs, p, ws, w, a + h)?;
            let rm = self.residual(m, xs, p, ws, w, a - h)?;
            Ok([(rp[0] - rm[0]) / (2.0 * h), (rp[1] - rm[1]) / (2.0 * h)])
        };
        let h = 1e-3 * a.abs().max(1.0);
        let d1 = central(h)?;
        let d2 = central(h / 2.0)?;
        let da = [(4.0 * d2[0] - d1[0]) / 3.0, (4.0 * d2[1] - d1[1]) / 3.0];
        Ok([[r1[0] - r0[0], da[0]], [r1[1] - r0[1], da[1]]])
    }

    fn secular_solve(&self, m: usize, xs: &[FourierSeries], p: &FourierSeries, ws: &[f64], opts: &OrbitOptions) -> Result<Secular, OrbitError> {
        let scale = 1.0 + p.norm() + xs.iter().map(FourierSeries::norm).sum::<f64>();
        let (mut w, mut a) = (0.0, if m == 1 { opts.amplitude_guess } else { 0.0 });
        if m == 1 {
            match self.bracket_amplitude(xs, p, ws, opts.amplitude_guess)? {
                Some(root) => a = root,
                None => return self.vacuous(m, xs, p, ws, a),
            }
        }
        for _ in 0..opts.max_iter {
            let r = self.residual(m, xs, p, ws, w, a)?;
            if r[0].hypot(r[1]) <= opts.tol * scale {
                return Ok(Secular { omega: w, amplitude: a, vacuous: false });
            }
            let j = self.jacobian(m, xs, p, ws, w, a)?;
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let jn = j.iter().flatten().map(|v| v * v).sum::<f64>();
            if det.abs() <= 1e-12 * jn {
                if r[1].abs() <= opts.tol * scale && j[1][1].abs() <= 1e-12 * jn.sqrt() {
                    return self.vacuous(m, xs, p, ws, a);
                }
                return Err(OrbitError::SecularSystemSingular { order: m });
            }
            w -= (j[1][1] * r[0] - j[0][1] * r[1]) / det;
            a -= (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
            if !(w.is_finite() && a.is_finite()) {
                break;
            }
        }
        Err(OrbitError::NonconvergentAmplitude { order: m, iterations: opts.max_iter })
    }

    /// Amplitude left free: `w_m` from the cosine condition if possible.
    fn vacuous(&self, m: usize, xs: &[FourierSeries], p: &FourierSeries, ws: &[f64], a: f64) -> Result<Secular, OrbitError> {
        let r0 = self.residual(m, xs, p, ws, 0.0, a)?;
        let r1 = self.residual(m, xs, p, ws, 1.0, a)?;
        let slope = r1[0] - r0[0];
        let omega = if slope.abs() > 1e-14 { -r0[0] / slope } else { 0.0 };
        Ok(Secular { omega, amplitude: a, vacuous: true })
    }

    /// Sign changes of the sine condition over positive amplitudes (it does
    /// not involve `w₁`); returns the root closest to `guess` in log scale.
    fn bracket_amplitude(&self, xs: &[FourierSeries], p: &FourierSeries, ws: &[f64], guess: f64) -> Result<Option<f64>, OrbitError> {
        let s = |a: f64| self.residual(1, xs, p, ws, 0.0, a).map(|r| r[1]);
        let grid: Vec<f64> = (0..=240).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 240.0)).collect();
        let vals = grid.iter().map(|&a| s(a)).collect::<Result<Vec<_>, _>>()?;
        let peak = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak <= 1e-14 {
            return Ok(None);
        }
        let mut best: Option<f64> = None;
        for k in 0..grid.len() - 1 {
            if vals[k] == 0.0 || vals[k].signum() != vals[k + 1].signum() {
                let (mut lo, mut hi, mut flo) = (grid[k], grid[k + 1], vals[k]);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let fm = s(mid)?;
                    if fm == 0.0 || fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                let root = 0.5 * (lo + hi);
                let d = (root / guess.abs().max(1e-300)).ln().abs();
                if best.is_none_or(|b| d < (b / guess.abs().max(1e-300)).ln().abs()) {
                    best = Some(root);
                }
            }
        }
        match best {
            Some(b) => Ok(Some(b)),
            None => Err(OrbitError::NonconvergentAmplitude { order: 1, iterations: 0 }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unperturbed_limit() {
        let osc = Oscillator::van_der_pol(1.0, 1.0);
        let e = expand_pl(&osc, 0.0, 0, &OrbitOptions::default()).unwrap();
        assert!((e.frequency() - 1.0).abs() < 1e-15);
        let x = e.orbit();
        assert!((x.coeff(1, 0).re - e.amplitudes[0] / 2.0).abs() < 1e-15);
        assert!(x.tail_norm(1) < 1e-15 && x.coeff(0, 0).norm() < 1e-15);
    }

    #[test]
    fn first_order_van_der_pol_closed_form() {
        // First harmonic of f₀ = −A(1 − A²cos²ξ) sin(ξ−τ):
        //   sin part A cos τ (A²/4 − 1)  ⇒ A₀ = 2,
        //   cos part A sin τ (1 − 3A²/4) + 2ω₁A = 0  ⇒ ω₁ = sin τ.
        for tau in [1.0f64, 0.7] {
            let osc = Oscillator::van_der_pol(1.0, tau);
            let e = expand_pl(&osc, 0.1, 1, &OrbitOptions::default()).unwrap();
            assert!((e.amplitudes[0] - 2.0).abs() < 1e-10, "A0 = {}", e.amplitudes[0]);
            assert!((e.frequencies[1] - tau.sin()).abs() < 1e-10, "w1 = {}", e.frequencies[1]);
        }
    }
}
