//! Adjoint Floquet modes, the delay bilinear form, biorthonormalization and
//! the Fredholm alternative for periodically forced problems.
//!
//! Adjoint components are row vectors `ψ_j` with
//! `Σ_k ψ_{j+k} [L_{k,j} − δ_{k0}(λ+ij)] = 0`; the adjoint segment is
//! `ψ_ξ(s) = Σ_j ψ_j e^{−(λ+ij)s} e^{−ijξ}`, `0 ≤ s ≤ ωτ`.

use num_complex::Complex64;
use thiserror::Error;

use crate::floquet::{det_measure, eliminate, ladder_operators, BlockOperator, FloquetError, FloquetMode, Transposed};
use crate::model::{build_l, FourierMatrixDensity, LMatrixTable};
use crate::numerics::{smallest_singular, solve_linear, solve_matrix, ComplexMatrix, NumericsError};
use crate::roots::strip_map;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error)]
pub enum AdjointError {
    #[error("pairing {value:.3e} vanishes: defective or mismatched mode pair")]
    ZeroPairing { value: f64 },
    #[error("forcing is resonant with the Floquet exponent {lambda}: solvability defect {defect}")]
    ResonantForcing { lambda: Complex64, defect: Complex64 },
    #[error(transparent)]
    Floquet(#[from] FloquetError),
}

impl From<NumericsError> for AdjointError {
    fn from(e: NumericsError) -> Self {
        Self::Floquet(e.into())
    }
}

impl From<crate::model::ModelError> for AdjointError {
    fn from(e: crate::model::ModelError) -> Self {
        Self::Floquet(e.into())
    }
}

/// How the adjoint ladders were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdjointRoute {
    /// Only the pivot component is coupled (`K = 0`).
    Decoupled,
    /// `Z` from the primal ladders via `L_{k,n−k} S^{−k}_n = Z^{−k}_n L_{−k,n}`.
    Prescription,
    /// Direct elimination of the transposed recurrence.
    Direct,
    /// The prescription needed a singular `L_{∓1,n}`; direct elimination used.
    DirectFallback,
}

#[derive(Clone, Debug)]
pub struct AdjointMode {
    /// Strip representative.
    pub lambda: Complex64,
    pub raw_lambda: Complex64,
    /// Strip index of `components[0]`.
    pub first_index: i64,
    /// Row vectors `ψ_j`.
    pub components: Vec<Vec<Complex64>>,
    /// Largest adjoint recurrence residual over `|j| ≤ N_win − K`.
    pub residual: f64,
    pub route: AdjointRoute,
    /// `max ‖L_{k,n−k}S^{−k}_n − Z^{−k}_n L_{−k,n}‖` with `Z` from direct
    /// elimination, `K = 1` only.
    pub prescription_defect: Option<f64>,
}

impl AdjointMode {
    pub fn last_index(&self) -> i64 {
        self.first_index + self.components.len() as i64 - 1
    }

    pub fn component(&self, j: i64) -> Option<&[Complex64]> {
        if j < self.first_index || j > self.last_index() {
            None
        } else {
            Some(&self.components[(j - self.first_index) as usize])
        }
    }

    /// `ψ_ξ(s)`.
    pub fn segment(&self, xi: f64, s: f64) -> Vec<Complex64> {
        let dim = self.components.first().map_or(0, Vec::len);
        let mut out = vec![ZERO; dim];
        for (k, c) in self.components.iter().enumerate() {
            let j = (self.first_index + k as i64) as f64;
            let e = (-(self.lambda + Complex64::new(0.0, j)) * s).exp() * Complex64::from_polar(1.0, -j * xi);
            for (o, v) in out.iter_mut().zip(c) {
                *o += v * e;
            }
        }
        out
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut m = self.clone();
        for c in m.components.iter_mut().flatten() {
            *c *= s;
        }
        m
    }
}

/// Adjoint mode at a root `lambda` (raw coordinates, as used for the primal
/// mode) with window `N_win` and depth `D`.
pub fn adjoint_modes(density: &FourierMatrixDensity, lambda: Complex64, n_win: usize, depth: usize) -> Result<AdjointMode, AdjointError> {
    let window = n_win + depth;
    let dim = density.dim();
    let kk = density.bandwidth();
    let ladders = ladder_operators(density, lambda, n_win, depth)?;
    let m = ladders.closure();
    let sv = smallest_singular(m);
    if dim >= 2 && sv.sigma[dim - 2] < 10.0 * sv.sigma[dim - 1] {
        let ratio = sv.sigma[dim - 2] / sv.sigma[dim - 1].max(f64::MIN_POSITIVE);
        return Err(FloquetError::NullSpaceAmbiguous { lambda, ratio }.into());
    }
    let psi0 = sv.left.clone();
    let table = &ladders.table;
    let nw = n_win as i64;

    let direct = || -> Result<Vec<Vec<Complex64>>, FloquetError> {
        let elim = eliminate(&Transposed { table, dim }, window, None)?;
        Ok((-nw..=nw).map(|j| elim.s0(j).mul_vec(&psi0)).collect())
    };

    let (raw_components, route, prescription_defect) = match kk {
        0 => {
            let mut c = vec![vec![ZERO; dim]; 2 * n_win + 1];
            c[n_win] = psi0.clone();
            (c, AdjointRoute::Decoupled, None)
        }
        1 => {
            let elim_t = eliminate(&Transposed { table, dim }, window, None)?;
            let defect = prescription_defect_k1(&ladders, table, &elim_t, nw);
            match prescription_components(&ladders, table, &psi0, nw) {
                Ok(c) => (c, AdjointRoute::Prescription, Some(defect)),
                Err(_) => (direct()?, AdjointRoute::DirectFallback, Some(defect)),
            }
        }
        _ => (direct()?, AdjointRoute::Direct, None),
    };

    let mut comps = raw_components;
    let norm = comps.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let peak = comps.iter().flatten().fold((0.0, Complex64::new(1.0, 0.0)), |acc, z| if z.norm() > acc.0 { (z.norm(), *z) } else { acc });
    let phase = peak.1.conj() / peak.1.norm() / norm;
    for z in comps.iter_mut().flatten() {
        *z *= phase;
    }
    let op = Transposed { table, dim };
    let residual = adjoint_residual(&op, &comps, nw, kk as i64);
    let (strip, shift) = strip_map(lambda);
    Ok(AdjointMode { lambda: strip, raw_lambda: lambda, first_index: -nw + shift, components: comps, residual, route, prescription_defect })
}

/// Adjoint mode matching a primal mode's root and truncation.
pub fn adjoint_for(density: &FourierMatrixDensity, mode: &FloquetMode) -> Result<AdjointMode, AdjointError> {
    adjoint_modes(density, mode.raw_lambda, mode.n_win, mode.depth)
}

fn adjoint_residual(op: &Transposed<'_>, comps: &[Vec<Complex64>], nw: i64, kk: i64) -> f64 {
    let mut worst: f64 = 0.0;
    for j in -(nw - kk)..=(nw - kk) {
        let mut acc = vec![ZERO; op.dim()];
        for k in -kk..=kk {
            // Σ_k (A_{j+k,j})ᵀ ψ_{j+k}ᵀ
            if let Some(b) = op.block(j, j + k) {
                for (s, v) in acc.iter_mut().zip(b.mul_vec(&comps[(j + k + nw) as usize])) {
                    *s += v;
                }
            }
        }
        worst = worst.max(acc.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    worst
}

/// `X` with `X b = a`, i.e. `a b⁻¹`.
fn right_divide(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    Ok(solve_matrix(&b.transpose(), &a.transpose())?.transpose())
}

/// `ψ_{n+1} = ψ_n Z^{+1}_n`, `Z^{+1}_n = L_{−1,n+1} S^{+1}_n L_{1,n}⁻¹`, and the mirror image.
fn prescription_components(
    ladders: &crate::floquet::LadderSet,
    table: &LMatrixTable,
    psi0: &[Complex64],
    nw: i64,
) -> Result<Vec<Vec<Complex64>>, NumericsError> {
    let dim = psi0.len();
    let mut out = vec![vec![ZERO; dim]; (2 * nw + 1) as usize];
    out[nw as usize] = psi0.to_vec();
    for n in 0..nw {
        let s = ladders.step(n, true).expect("tridiagonal ladder");
        let z = right_divide(&(table.get(-1, n + 1).unwrap() * s), table.get(1, n).unwrap())?;
        out[(n + 1 + nw) as usize] = z.vec_mul(&out[(n + nw) as usize]);
    }
    for n in (-nw + 1..=0).rev() {
        let s = ladders.step(n, false).expect("tridiagonal ladder");
        let z = right_divide(&(table.get(1, n - 1).unwrap() * s), table.get(-1, n).unwrap())?;
        out[(n - 1 + nw) as usize] = z.vec_mul(&out[(n + nw) as usize]);
    }
    Ok(out)
}

fn prescription_defect_k1(
    ladders: &crate::floquet::LadderSet,
    table: &LMatrixTable,
    elim_t: &crate::floquet::Elimination,
    nw: i64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for n in 0..nw {
        // Row-vector ladder from the transposed sweep: Z = Tᵀ.
        let z = elim_t.upper(n + 1, 1).transpose();
        let lhs = table.get(-1, n + 1).unwrap() * ladders.step(n, true).unwrap();
        let rhs = &z * table.get(1, n).unwrap();
        worst = worst.max((&lhs - &rhs).max_abs());
    }
    for n in -nw + 1..=0 {
        let z = elim_t.lower(n - 1, 1).transpose();
        let lhs = table.get(1, n - 1).unwrap() * ladders.step(n, false).unwrap();
        let rhs = &z * table.get(-1, n).unwrap();
        worst = worst.max((&lhs - &rhs).max_abs());
    }
    worst
}

/// `∫_0^θ e^{βs} ds = (e^{βθ} − 1)/β`.
pub(crate) fn exp_integral(beta: Complex64, theta: f64) -> Complex64 {
    let z = beta * theta;
    if z.norm() < 1e-3 {
        // θ (1 + z/2 + z²/6 + z³/24 + z⁴/120)
        theta * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0))))
    } else {
        (z.exp() - 1.0) / beta
    }
}

/// The bilinear form induced by a density, evaluated in closed form over its
/// point delays.
#[derive(Clone, Debug)]
pub struct BilinearContext {
    density: FourierMatrixDensity,
}

impl BilinearContext {
    pub fn new(density: &FourierMatrixDensity) -> Self {
        Self { density: density.clone() }
    }

    pub fn density(&self) -> &FourierMatrixDensity {
        &self.density
    }

    /// `(ψ^λ_ξ, φ^μ_ξ)_ξ = ⟨ψ_ξ(0), φ_ξ(0)⟩ − Σ_d ∫_{θ_d}^0 ⟨ψ_ξ(s−θ_d), Ω_{ξ+s−θ_d,d} φ_ξ(s)⟩ ds`.
    pub fn pairing(&self, psi: &AdjointMode, phi: &FloquetMode, xi: f64) -> Complex64 {
        let d = &self.density;
        let kk = d.bandwidth() as i64;
        let (lam, mu) = (psi.lambda, phi.lambda);
        let mut total = ZERO;
        for j in psi.first_index..=psi.last_index() {
            let pj = psi.component(j).unwrap();
            for n in phi.first_index..=phi.last_index() {
                let fnv = phi.component(n).unwrap();
                total += dot(pj, fnv) * Complex64::from_polar(1.0, (n - j) as f64 * xi);
                for k in -kk..=kk {
                    let shift = n + k - j;
                    let beta = mu - lam + Complex64::new(0.0, shift as f64);
                    let phase = Complex64::from_polar(1.0, shift as f64 * xi);
                    for (slot, &theta) in d.delays().iter().enumerate() {
                        if theta == 0.0 {
                            continue;
                        }
                        let c = d.coeff(k, slot).unwrap();
                        let w = ((lam + Complex64::new(0.0, (j - k) as f64)) * theta).exp() * exp_integral(beta, theta);
                        total -= phase * w * dot(pj, &c.mul_vec(fnv));
                    }
                }
            }
        }
        total
    }

    /// `Σ_j ψ_j φ_j − Σ_{j,n} ψ_j [Σ_d θ_d e^{(λ+in)θ_d} C_{j−n,d}] φ_n` — the
    /// phase-independent value of the pairing of an eigenpair.
    pub fn self_pairing(&self, psi: &AdjointMode, phi: &FloquetMode) -> Complex64 {
        let d = &self.density;
        let kk = d.bandwidth() as i64;
        let lam = phi.lambda;
        let mut total = ZERO;
        for j in psi.first_index..=psi.last_index() {
            let pj = psi.component(j).unwrap();
            if let Some(f) = phi.component(j) {
                total += dot(pj, f);
            }
            for n in (j - kk).max(phi.first_index)..=(j + kk).min(phi.last_index()) {
                let f = phi.component(n).unwrap();
                for (slot, &theta) in d.delays().iter().enumerate() {
                    if theta == 0.0 {
                        continue;
                    }
                    let c = d.coeff(j - n, slot).unwrap();
                    total -= theta * ((lam + Complex64::new(0.0, n as f64)) * theta).exp() * dot(pj, &c.mul_vec(f));
                }
            }
        }
        total
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn bilinear(ctx: &BilinearContext, psi: &AdjointMode, phi: &FloquetMode, xi: f64) -> Complex64 {
    ctx.pairing(psi, phi, xi)
}

/// Scales both members by `N_λ = P^{−1/2}` (principal branch) so that the
/// pairing becomes 1.
pub fn normalize(ctx: &BilinearContext, psi: &AdjointMode, phi: &FloquetMode) -> Result<(AdjointMode, FloquetMode), AdjointError> {
    let p = ctx.self_pairing(psi, phi);
    let scale = norm_of(&psi.components) * norm_of(&phi.components);
    if p.norm() < 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(AdjointError::ZeroPairing { value: p.norm() });
    }
    let n = p.sqrt().inv();
    Ok((psi.scaled(n), phi.scaled(n)))
}

fn norm_of(c: &[Vec<Complex64>]) -> f64 {
    c.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `G_{ab} = (ψ^a, φ^b)_ξ`.
pub fn gram(ctx: &BilinearContext, pairs: &[(AdjointMode, FloquetMode)], xi: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(pairs.len(), pairs.len(), |a, b| ctx.pairing(&pairs[a].0, &pairs[b].1, xi))
}

/// Periodic forcing segment `χ_ξ(θ) = Σ_r a_r e^{γ_r θ} e^{i n_r ξ}`.
#[derive(Clone, Debug, Default)]
pub struct PeriodicSegment {
    pub terms: Vec<(i64, Complex64, Vec<Complex64>)>,
}

impl PeriodicSegment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_term(mut self, harmonic: i64, gamma: Complex64, amplitude: Vec<Complex64>) -> Self {
        self.terms.push((harmonic, gamma, amplitude));
        self
    }

    /// The forcing `χ_ξ = φ_ξ` built from an eigenmode's own segment.
    pub fn from_mode(mode: &FloquetMode) -> Self {
        let mut s = Self::new();
        for n in mode.first_index..=mode.last_index() {
            let c = mode.component(n).unwrap();
            if c.iter().any(|z| *z != ZERO) {
                s = s.with_term(n, mode.lambda + Complex64::new(0.0, n as f64), c.to_vec());
            }
        }
        s
    }

    pub fn evaluate(&self, xi: f64, theta: f64) -> Vec<Complex64> {
        let dim = self.terms.first().map_or(0, |t| t.2.len());
        let mut out = vec![ZERO; dim];
        for (n, g, a) in &self.terms {
            let e = (g * theta).exp() * Complex64::from_polar(1.0, *n as f64 * xi);
            for (o, v) in out.iter_mut().zip(a) {
                *o += v * e;
            }
        }
        out
    }
}

/// Particular solution `φ_n(0)`, `|n| ≤ N_win` (indices relative to `lambda`).
#[derive(Clone, Debug)]
pub struct InhomogeneousSolution {
    pub lambda: Complex64,
    pub first_index: i64,
    pub components: Vec<Vec<Complex64>>,
    /// Largest recurrence residual over `|n| ≤ N_win − K`.
    pub residual: f64,
}

/// `r_n = χ_n(0) − Σ_{k,d} C_{k,d} e^{(λ+i(n−k))θ_d} ∫_0^{θ_d} e^{−(λ+i(n−k))s} χ_{n−k}(s) ds`.
fn forcing_rhs(density: &FourierMatrixDensity, lambda: Complex64, chi: &PeriodicSegment, n: i64) -> Vec<Complex64> {
    let dim = density.dim();
    let kk = density.bandwidth() as i64;
    let mut r = vec![ZERO; dim];
    for (h, gamma, a) in &chi.terms {
        if *h == n {
            for (x, y) in r.iter_mut().zip(a) {
                *x += y;
            }
        }
        let k = n - h;
        if k.abs() > kk {
            continue;
        }
        let s = lambda + Complex64::new(0.0, *h as f64);
        for (slot, &theta) in density.delays().iter().enumerate() {
            if theta == 0.0 {
                continue;
            }
            let w = (s * theta).exp() * exp_integral(gamma - s, theta);
            for (x, y) in r.iter_mut().zip(density.coeff(k, slot).unwrap().mul_vec(a)) {
                *x -= w * y;
            }
        }
    }
    r
}

/// Solves `Σ_k A_{n,n−k} φ_{n−k}(0) = r_n` by the ladder elimination with a
/// particular-solution sweep. At a Floquet exponent (`root_tol` on the
/// relative determinant) the forcing is refused with the solvability defect
/// `Σ_n ψ_n r_n`.
pub fn solve_inhomogeneous(
    density: &FourierMatrixDensity,
    lambda: Complex64,
    chi: &PeriodicSegment,
    n_win: usize,
    depth: usize,
    root_tol: f64,
) -> Result<InhomogeneousSolution, AdjointError> {
    let window = n_win + depth;
    let dim = density.dim();
    let table = build_l(density, lambda, window)?;
    let rhs = |n: i64| forcing_rhs(density, lambda, chi, n);
    let op = crate::floquet::Primal { table: &table, dim };
    let elim = eliminate(&op, window, Some(&rhs))?;
    if det_measure(elim.closure(), lambda) <= root_tol {
        let psi = adjoint_modes(density, lambda, n_win, depth)?;
        let defect = (psi.first_index..=psi.last_index())
            .map(|j| dot(psi.component(j).unwrap(), &rhs(j - psi.first_index - n_win as i64)))
            .sum();
        return Err(AdjointError::ResonantForcing { lambda, defect });
    }
    let phi0 = solve_linear(elim.closure(), elim.closure_rhs())?.x;
    let all = elim.components(&phi0);
    let (w, nw) = (window as i64, n_win as i64);
    let components: Vec<Vec<Complex64>> = all[(w - nw) as usize..=(w + nw) as usize].to_vec();
    let kk = density.bandwidth() as i64;
    let mut residual: f64 = 0.0;
    for n in -(nw - kk)..=(nw - kk) {
        let mut acc = rhs(n).iter().map(|z| -z).collect::<Vec<_>>();
        for k in -kk..=kk {
            let b = op.block(n, n - k).unwrap();
            for (s, v) in acc.iter_mut().zip(b.mul_vec(&components[(n - k + nw) as usize])) {
                *s += v;
            }
        }
        residual = residual.max(acc.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    Ok(InhomogeneousSolution { lambda, first_index: -nw, components, residual })
}
