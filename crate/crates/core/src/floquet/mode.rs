use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::ladder::{eliminate, BlockOperator, Primal};
use super::FloquetError;
use crate::model::{build_l, FourierMatrixDensity};
use crate::numerics::{smallest_singular, ComplexMatrix};
use crate::roots::{deflation_sweep, newton, scan_seeds, sort_spectrum, strip_distance, strip_map, NewtonOptions, NewtonOutcome, SearchBox};

/// Floquet eigensolution `e^{λξ} Σ_n φ_n e^{inξ}` with `λ` in the strip.
#[derive(Clone, Debug)]
pub struct FloquetMode {
    /// Strip representative, `Im λ ∈ (−½, ½]`.
    pub lambda: Complex64,
    /// The Newton root the mode was computed at (`lambda + i·shift`).
    pub raw_lambda: Complex64,
    /// Strip index of `components[0]`.
    pub first_index: i64,
    pub components: Vec<Vec<Complex64>>,
    /// Largest recurrence residual over `|n| ≤ N_win − K` (unit-norm mode);
    /// NaN when `K ≥ N_win` leaves no complete row to check.
    pub residual: f64,
    pub n_win: usize,
    pub depth: usize,
    pub bandwidth: usize,
    /// `|λ(N_win+2, D+2) − λ(N_win, D)|`.
    pub truncation_shift: f64,
    pub converged: bool,
    /// `|det M| / Π_i (1 + ‖row_i(M + λI)‖ + |λ|)` at the root.
    pub det_measure: f64,
    /// `|φ_pivot| / max_n |φ_n|` of the raw computation.
    pub centering: f64,
}

impl FloquetMode {
    /// Integer `m` with `raw_lambda = lambda + i m`.
    pub fn shift(&self) -> i64 {
        (self.raw_lambda.im - self.lambda.im).round() as i64
    }

    pub fn multiplier(&self) -> Complex64 {
        (2.0 * PI * self.lambda).exp()
    }

    pub fn last_index(&self) -> i64 {
        self.first_index + self.components.len() as i64 - 1
    }

    pub fn component(&self, n: i64) -> Option<&[Complex64]> {
        if n < self.first_index || n > self.last_index() {
            None
        } else {
            Some(&self.components[(n - self.first_index) as usize])
        }
    }

    /// Segment value `φ_ξ(θ) = Σ_n φ_n e^{(λ+in)θ} e^{inξ}`.
    pub fn segment(&self, xi: f64, theta: f64) -> Vec<Complex64> {
        let dim = self.components.first().map_or(0, Vec::len);
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (k, c) in self.components.iter().enumerate() {
            let n = (self.first_index + k as i64) as f64;
            let e = ((self.lambda + Complex64::new(0.0, n)) * theta).exp() * Complex64::from_polar(1.0, n * xi);
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

#[derive(Clone, Debug)]
pub struct FindOptions {
    /// Root position tolerance; deduplication radius is `10·tol`.
    pub tol: f64,
    /// Acceptance threshold on `|det M| / Π row norms`.
    pub root_tol: f64,
    /// Minimum index shift scanned (box translated by `i·m`, `|m| ≤ shifts`).
    /// The scan widens to cover every root allowed by
    /// [`scan_shifts`], up to `max_shifts`.
    pub shifts: usize,
    pub max_shifts: usize,
    pub max_iter: usize,
    /// Truncation-shift threshold for the convergence flag.
    pub conv_tol: f64,
}

impl Default for FindOptions {
    fn default() -> Self {
        Self { tol: 1e-10, root_tol: 1e-8, shifts: 2, max_shifts: 64, max_iter: 60, conv_tol: 1e-8 }
    }
}

/// Unconverged Newton seed.
#[derive(Clone, Debug)]
pub struct Stall {
    pub seed: Complex64,
    pub last: Complex64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub modes: Vec<FloquetMode>,
    pub stalls: Vec<Stall>,
    /// Distinct raw Newton roots before strip mapping.
    pub raw_roots: Vec<Complex64>,
}

impl Spectrum {
    pub fn exponents(&self) -> Vec<Complex64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }
}

/// `|det M| / Π_i (1 + ‖row_i(M + λI)‖ + |λ|)` — the determinant relative to
/// the size of the terms that cancel at a root.
pub(crate) fn det_measure(m: &ComplexMatrix, lambda: Complex64) -> f64 {
    let d = crate::numerics::determinant(m).norm();
    let mut shifted = m.clone();
    for i in 0..m.rows() {
        shifted[(i, i)] += lambda;
    }
    let scale: f64 = (0..m.rows()).map(|i| 1.0 + shifted.row_norm(i) + lambda.norm()).product();
    d / scale
}

/// `det M(λ)`; `None` on breakdown or overflow.
pub fn det_m(density: &FourierMatrixDensity, lambda: Complex64, n_win: usize, depth: usize) -> Option<Complex64> {
    super::assemble_m(density, lambda, n_win, depth).ok().map(|m| crate::numerics::determinant(&m))
}

pub fn extract_mode(density: &FourierMatrixDensity, lambda: Complex64, n_win: usize, depth: usize) -> Result<FloquetMode, FloquetError> {
    let window = n_win + depth;
    let table = build_l(density, lambda, window)?;
    let op = Primal { table: &table, dim: density.dim() };
    let elim = eliminate(&op, window, None)?;
    let m = &elim.closure;
    let sv = smallest_singular(m);
    let n = density.dim();
    if n >= 2 && sv.sigma[n - 2] < 10.0 * sv.sigma[n - 1] {
        return Err(FloquetError::NullSpaceAmbiguous { lambda, ratio: sv.sigma[n - 2] / sv.sigma[n - 1].max(f64::MIN_POSITIVE) });
    }
    let all = elim.components(&sv.right);
    let w = window as i64;
    let nw = n_win as i64;
    let mut comps: Vec<Vec<Complex64>> = all[(w - nw) as usize..=(w + nw) as usize].to_vec();
    let norm = comps.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let peak = comps.iter().flatten().fold((0.0, Complex64::new(1.0, 0.0)), |acc, z| if z.norm() > acc.0 { (z.norm(), *z) } else { acc });
    let phase = peak.1.conj() / peak.1.norm() / norm;
    for z in comps.iter_mut().flatten() {
        *z *= phase;
    }
    let mag = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let pivot = mag(&comps[n_win]);
    let biggest = comps.iter().map(|c| mag(c)).fold(0.0, f64::max);
    let residual = recurrence_residual(&op, &comps, nw);
    let (strip, shift) = strip_map(lambda);
    Ok(FloquetMode {
        lambda: strip,
        raw_lambda: lambda,
        first_index: -nw + shift,
        components: comps,
        residual,
        n_win,
        depth,
        bandwidth: density.bandwidth(),
        truncation_shift: f64::NAN,
        converged: false,
        det_measure: det_measure(m, lambda),
        centering: if biggest > 0.0 { pivot / biggest } else { 0.0 },
    })
}

/// `max_{|n| ≤ N−K} ‖Σ_k A_{n,n−k} φ_{n−k}‖` for raw-indexed components `|n| ≤ N`.
fn recurrence_residual(op: &dyn BlockOperator, comps: &[Vec<Complex64>], nw: i64) -> f64 {
    let kk = op.bandwidth() as i64;
    if kk >= nw {
        return f64::NAN;
    }
    let mut worst: f64 = 0.0;
    for n in -(nw - kk)..=(nw - kk) {
        let mut acc = vec![Complex64::new(0.0, 0.0); op.dim()];
        for k in -kk..=kk {
            if let Some(a) = op.block(n, n - k) {
                for (s, v) in acc.iter_mut().zip(a.mul_vec(&comps[(n - k + nw) as usize])) {
                    *s += v;
                }
            }
        }
        worst = worst.max(acc.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    worst
}

/// Newton on `det M` from a seed.
pub fn refine_root(density: &FourierMatrixDensity, seed: Complex64, n_win: usize, depth: usize, max_iter: usize) -> NewtonOutcome {
    let opts = NewtonOptions { max_iter, ..NewtonOptions::default() };
    newton(|z| det_m(density, z, n_win, depth), seed, &opts)
}

/// Shifts needed so that every mode with `Re λ ≥ bx.re[0]` is seen with its
/// largest component at the window centre: `|Im λ_raw| ≤ harmonic_bound`.
pub fn scan_shifts(density: &FourierMatrixDensity, bx: &SearchBox, opts: &FindOptions) -> usize {
    let reach = density.harmonic_bound(bx.re[0]) + bx.im[0].abs().max(bx.im[1].abs());
    let needed = if reach.is_finite() { reach.ceil() as usize } else { opts.max_shifts };
    opts.shifts.max(needed.min(opts.max_shifts))
}

/// Floquet exponents in `bx` (strip coordinates). Every index shift
/// `|m| ≤ shifts` is scanned so that modes with a vanishing pivot component
/// are seen through a neighbouring pivot; duplicates are merged keeping the
/// best-centred computation.
pub fn find_exponents(
    density: &FourierMatrixDensity,
    bx: &SearchBox,
    n_win: usize,
    depth: usize,
    opts: &FindOptions,
) -> Result<Spectrum, FloquetError> {
    if !bx.is_valid() {
        return Err(FloquetError::InvalidTruncation("degenerate search box".into()));
    }
    let s = scan_shifts(density, bx, opts) as i64;
    let mut seeds: Vec<(Complex64, SearchBox)> = Vec::new();
    for m in -s..=s {
        let b = bx.translated(m as f64);
        let measure = |z: Complex64| -> Option<f64> {
            let m = super::assemble_m(density, z, n_win, depth).ok()?;
            Some(det_measure(&m, z).ln())
        };
        for seed in scan_seeds(&b, measure) {
            seeds.push((seed, b.clone()));
        }
    }
    let outcomes: Vec<(NewtonOutcome, SearchBox)> = seeds
        .par_iter()
        .map(|(seed, b)| (refine_root(density, *seed, n_win, depth, opts.max_iter), b.clone()))
        .collect();

    let mut raw: Vec<Complex64> = Vec::new();
    let mut stalls = Vec::new();
    for (o, b) in outcomes {
        match o {
            NewtonOutcome::Converged { root, .. } => {
                if b.contains(root, 1.0) && raw.iter().all(|r| (r - root).norm() > 10.0 * opts.tol) {
                    raw.push(root);
                }
            }
            NewtonOutcome::Stalled { seed, last, reason } => stalls.push(Stall { seed, last, reason }),
        }
    }
    let nopts = NewtonOptions { max_iter: opts.max_iter, ..NewtonOptions::default() };
    deflation_sweep(&seeds, &mut raw, |z| det_m(density, z, n_win, depth), &nopts, 2.0 * bx.diameter().max(1.0), 10.0 * opts.tol);
    sort_spectrum(&mut raw);

    let candidates: Vec<Result<FloquetMode, FloquetError>> = raw
        .par_iter()
        .map(|&root| {
            let mut mode = extract_mode(density, root, n_win, depth)?;
            let finer = refine_root(density, root, n_win + 2, depth + 2, opts.max_iter);
            mode.truncation_shift = match finer {
                NewtonOutcome::Converged { root: r2, .. } => (r2 - root).norm(),
                NewtonOutcome::Stalled { .. } => f64::INFINITY,
            };
            mode.converged = mode.truncation_shift <= opts.conv_tol;
            Ok(mode)
        })
        .collect();

    let mut pool = Vec::new();
    for c in candidates {
        match c {
            Ok(m) if m.det_measure <= opts.root_tol => pool.push(m),
            Ok(_) => {}
            Err(FloquetError::NullSpaceAmbiguous { lambda, ratio }) => stalls.push(Stall {
                seed: lambda,
                last: lambda,
                reason: format!("null space ambiguous (singular value ratio {ratio:.2e})"),
            }),
            Err(e) => return Err(e),
        }
    }
    // Best-centred first; weak-pivot duplicates of an accepted mode are dropped.
    pool.sort_by(|a, b| b.centering.total_cmp(&a.centering).then(b.raw_lambda.im.abs().total_cmp(&a.raw_lambda.im.abs()).reverse()));
    let mut modes: Vec<FloquetMode> = Vec::new();
    for m in pool {
        let in_box = m.lambda.re >= bx.re[0] - 1e-9 && m.lambda.re <= bx.re[1] + 1e-9;
        let dup = modes.iter().any(|a| {
            let d = strip_distance(a.lambda, m.lambda);
            d <= 10.0 * opts.tol || (m.centering < 0.1 && d <= 1e-6)
        });
        if in_box && !dup {
            modes.push(m);
        }
    }
    modes.sort_by(|a, b| b.lambda.re.total_cmp(&a.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
    if modes.is_empty() {
        return Err(FloquetError::NoRootsInBox { stalled: stalls.len() });
    }
    Ok(Spectrum { modes, stalls, raw_roots: raw })
}
