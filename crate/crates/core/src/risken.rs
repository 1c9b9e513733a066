//! Tridiagonal reformulation: consecutive Fourier components are stacked into
//! blocks `Φ_n = (φ_{wn}, …, φ_{wn+w−1})` so that any banded recurrence of
//! bandwidth `K ≤ w` becomes block tridiagonal,
//! `Q_{−1,n+1}Φ_{n+1} + Q_{0,n}Φ_n + Q_{1,n−1}Φ_{n−1} = 0`, and is closed with
//! the ladder operators `R^±_n`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::floquet::{det_measure, FindOptions, FloquetError, Stall};
use crate::model::{build_l, FourierMatrixDensity, LMatrixTable};
use crate::numerics::{determinant, smallest_singular, solve_matrix, ComplexMatrix, NumericsError};
use crate::roots::{deflation_sweep, newton, scan_seeds, strip_distance, strip_map, NewtonOptions, NewtonOutcome, SearchBox};

/// Stacked blocks of the truncated recurrence `|n| ≤ W`; components outside
/// the window are pinned to zero by identity rows.
#[derive(Clone, Debug)]
pub struct TridiagonalBlocks {
    pub lambda: Complex64,
    /// Components per block.
    pub width: usize,
    pub dim: usize,
    /// Component window `W`.
    pub window: i64,
    /// Block range `first..=last`.
    pub first: i64,
    pub last: i64,
    diag: Vec<ComplexMatrix>,
    upper: Vec<ComplexMatrix>,
    lower: Vec<ComplexMatrix>,
}

impl TridiagonalBlocks {
    fn at(&self, n: i64) -> usize {
        (n - self.first) as usize
    }

    /// `Q_{k,n}`: the block coupling `Φ_n` into block row `n + k`.
    pub fn q(&self, k: i64, n: i64) -> Option<&ComplexMatrix> {
        let row = n + k;
        if row < self.first || row > self.last {
            return None;
        }
        match k {
            0 => Some(&self.diag[self.at(row)]),
            -1 => Some(&self.upper[self.at(row)]),
            1 => Some(&self.lower[self.at(row)]),
            _ => None,
        }
    }

    /// Component indices of block `n`.
    pub fn indices(&self, n: i64) -> std::ops::Range<i64> {
        let w = self.width as i64;
        n * w..n * w + w
    }

    /// Splits a block vector into its components.
    pub fn unstack(&self, phi: &[Complex64]) -> Vec<Vec<Complex64>> {
        phi.chunks(self.dim).map(<[Complex64]>::to_vec).collect()
    }
}

/// Block width `max(2, K)`: wide enough for nearest-block coupling and at
/// least the even/odd pairing.
pub fn block_width(bandwidth: usize) -> usize {
    bandwidth.max(2)
}

pub fn assemble_blocks(density: &FourierMatrixDensity, lambda: Complex64, n_win: usize, depth: usize) -> Result<TridiagonalBlocks, FloquetError> {
    let window = n_win + depth;
    let table = build_l(density, lambda, window)?;
    Ok(blocks_from_table(&table, density.dim(), window as i64))
}

fn blocks_from_table(table: &LMatrixTable, dim: usize, window: i64) -> TridiagonalBlocks {
    let kk = table.bandwidth() as i64;
    let width = block_width(table.bandwidth());
    let w = width as i64;
    let first = (-window).div_euclid(w);
    let last = window.div_euclid(w);
    let size = width * dim;
    let lambda = table.lambda();
    // A_{row,col} restricted to the window; identity rows pin the padding.
    let entry = |row: i64, col: i64| -> Option<ComplexMatrix> {
        let inside = |i: i64| i.abs() <= window;
        if !inside(row) || !inside(col) {
            return (row == col).then(|| ComplexMatrix::identity(dim));
        }
        if (row - col).abs() > kk {
            return None;
        }
        let mut b = table.get(row - col, col)?.clone();
        if row == col {
            let s = lambda + Complex64::new(0.0, row as f64);
            for i in 0..dim {
                b[(i, i)] -= s;
            }
        }
        Some(b)
    };
    let block = |r: i64, c: i64| {
        let mut q = ComplexMatrix::zeros(size, size);
        for (a, row) in (r * w..r * w + w).enumerate() {
            for (b, col) in (c * w..c * w + w).enumerate() {
                if let Some(e) = entry(row, col) {
                    q.set_block(a * dim, b * dim, &e);
                }
            }
        }
        q
    };
    let range = first..=last;
    TridiagonalBlocks {
        lambda,
        width,
        dim,
        window,
        first,
        last,
        diag: range.clone().map(|n| block(n, n)).collect(),
        upper: range.clone().map(|n| block(n, n + 1)).collect(),
        lower: range.map(|n| block(n, n - 1)).collect(),
    }
}

/// Closure of the block recurrence at `Φ₀`.
#[derive(Clone, Debug)]
pub struct RiskenClosure {
    pub matrix: ComplexMatrix,
    /// `R⁺_n` for `n = 0..last` (maps `Φ_n → Φ_{n+1}`).
    pub r_plus: Vec<ComplexMatrix>,
    /// `R⁻_n` for `n = 0..−first` as `r_minus[|n|]` (maps `Φ_n → Φ_{n−1}`).
    pub r_minus: Vec<ComplexMatrix>,
}

fn breakdown(level: i64, e: NumericsError) -> FloquetError {
    match e {
        NumericsError::SingularMatrix { .. } => FloquetError::CfBreakdown { level },
        other => FloquetError::Numerics(other),
    }
}

/// Iterates `R⁺_n = −[Q_{−1,n+2}R⁺_{n+1} + Q_{0,n+1}]⁻¹ Q_{1,n}` (and the
/// mirror image) from `R := 0` beyond the outermost block, and returns
/// `Q_{−1,1}R⁺₀ + Q_{0,0} + Q_{1,−1}R⁻₀`.
pub fn tridiagonal_closure(blocks: &TridiagonalBlocks) -> Result<RiskenClosure, FloquetError> {
    let size = blocks.width * blocks.dim;
    let q = |k: i64, n: i64| blocks.q(k, n).expect("block inside range");
    let mut r_plus = vec![ComplexMatrix::zeros(size, size); (blocks.last + 1) as usize];
    for n in (0..blocks.last).rev() {
        let mut g = q(0, n + 1).clone();
        if n + 1 < blocks.last {
            g.add_product(q(-1, n + 2), &r_plus[(n + 1) as usize]);
        }
        r_plus[n as usize] = solve_matrix(&g, q(1, n)).map_err(|e| breakdown(n + 1, e))?.scale(Complex64::new(-1.0, 0.0));
    }
    let depth_minus = (-blocks.first) as usize;
    let mut r_minus = vec![ComplexMatrix::zeros(size, size); depth_minus + 1];
    for m in (0..depth_minus).rev() {
        let n = -(m as i64);
        let mut g = q(0, n - 1).clone();
        if m + 1 < depth_minus {
            g.add_product(q(1, n - 2), &r_minus[m + 1]);
        }
        r_minus[m] = solve_matrix(&g, q(-1, n)).map_err(|e| breakdown(n - 1, e))?.scale(Complex64::new(-1.0, 0.0));
    }
    let mut matrix = q(0, 0).clone();
    if blocks.last > 0 {
        matrix.add_product(q(-1, 1), &r_plus[0]);
    }
    if blocks.first < 0 {
        matrix.add_product(q(1, -1), &r_minus[0]);
    }
    Ok(RiskenClosure { matrix, r_plus, r_minus })
}

pub fn closure_matrix(density: &FourierMatrixDensity, lambda: Complex64, n_win: usize, depth: usize) -> Result<ComplexMatrix, FloquetError> {
    Ok(tridiagonal_closure(&assemble_blocks(density, lambda, n_win, depth)?)?.matrix)
}

/// A root of `det` of the tridiagonal closure with its stacked null vector.
#[derive(Clone, Debug)]
pub struct RiskenRoot {
    pub lambda: Complex64,
    pub raw_lambda: Complex64,
    /// Null vector of the closure, `Φ₀ = (φ₀, …, φ_{w−1})` in raw indexing.
    pub phi0: Vec<Vec<Complex64>>,
    pub det_measure: f64,
}

#[derive(Clone, Debug)]
pub struct RiskenSpectrum {
    pub roots: Vec<RiskenRoot>,
    pub stalls: Vec<Stall>,
}

impl RiskenSpectrum {
    pub fn exponents(&self) -> Vec<Complex64> {
        self.roots.iter().map(|r| r.lambda).collect()
    }
}

/// Roots of the tridiagonal closure in `bx` (strip coordinates), scanned over
/// the same index shifts as the banded route.
pub fn spectrum(
    density: &FourierMatrixDensity,
    bx: &SearchBox,
    n_win: usize,
    depth: usize,
    opts: &FindOptions,
) -> Result<RiskenSpectrum, FloquetError> {
    if !bx.is_valid() {
        return Err(FloquetError::InvalidTruncation("degenerate search box".into()));
    }
    let det = |z: Complex64| closure_matrix(density, z, n_win, depth).ok().map(|m| determinant(&m));
    let s = crate::floquet::scan_shifts(density, bx, opts) as i64;
    let mut seeds = Vec::new();
    for m in -s..=s {
        let b = bx.translated(m as f64);
        let found = scan_seeds(&b, |z| closure_matrix(density, z, n_win, depth).ok().map(|m| det_measure(&m, z).ln()));
        seeds.extend(found.into_iter().map(|z| (z, b.clone())));
    }
    let nopts = NewtonOptions { max_iter: opts.max_iter, ..NewtonOptions::default() };
    let outcomes: Vec<_> = seeds.par_iter().map(|(z, b)| (newton(det, *z, &nopts), b.clone())).collect();
    let mut raw = Vec::new();
    let mut stalls = Vec::new();
    for (o, b) in outcomes {
        match o {
            NewtonOutcome::Converged { root, .. } => {
                if b.contains(root, 1.0) && raw.iter().all(|r: &Complex64| (r - root).norm() > 10.0 * opts.tol) {
                    raw.push(root);
                }
            }
            NewtonOutcome::Stalled { seed, last, reason } => stalls.push(Stall { seed, last, reason }),
        }
    }
    deflation_sweep(&seeds, &mut raw, det, &nopts, 2.0 * bx.diameter().max(1.0), 10.0 * opts.tol);
    // Smallest |shift| first so the retained representative is the one
    // computed closest to the centre of the window.
    raw.sort_by(|a, b| strip_map(*a).1.abs().cmp(&strip_map(*b).1.abs()).then(b.re.total_cmp(&a.re)).then(a.im.total_cmp(&b.im)));
    let mut roots: Vec<RiskenRoot> = Vec::new();
    for z in raw {
        let (lambda, _) = strip_map(z);
        if lambda.re < bx.re[0] - 1e-9 || lambda.re > bx.re[1] + 1e-9 || roots.iter().any(|r| strip_distance(r.lambda, lambda) <= 1e-6) {
            continue;
        }
        let blocks = assemble_blocks(density, z, n_win, depth)?;
        let m = tridiagonal_closure(&blocks)?.matrix;
        let dm = det_measure(&m, z);
        if dm > opts.root_tol {
            continue;
        }
        let sv = smallest_singular(&m);
        roots.push(RiskenRoot { lambda, raw_lambda: z, phi0: blocks.unstack(&sv.right), det_measure: dm });
    }
    roots.sort_by(|a, b| b.lambda.re.total_cmp(&a.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
    if roots.is_empty() {
        return Err(FloquetError::NoRootsInBox { stalled: stalls.len() });
    }
    Ok(RiskenSpectrum { roots, stalls })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{parametric_reference, scalar_density};

    #[test]
    fn constant_case_is_block_diagonal() {
        let d = scalar_density(-0.4, 0.2, 1.0, 1.0);
        let lam = Complex64::new(-0.3, 0.1);
        let b = assemble_blocks(&d, lam, 4, 4).unwrap();
        let c = tridiagonal_closure(&b).unwrap().matrix;
        let l = build_l(&d, lam, 1).unwrap();
        assert!((c[(0, 0)] - (l.get(0, 0).unwrap()[(0, 0)] - lam)).norm() < 1e-15);
        assert!((c[(1, 1)] - (l.get(0, 1).unwrap()[(0, 0)] - lam - Complex64::new(0.0, 1.0))).norm() < 1e-15);
        assert_eq!(c[(0, 1)], Complex64::new(0.0, 0.0));
        assert_eq!(c[(1, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn blocks_reproduce_l_entries() {
        let d = parametric_reference();
        let lam = Complex64::new(-0.5, 0.2);
        let b = assemble_blocks(&d, lam, 6, 6).unwrap();
        let l = build_l(&d, lam, 12).unwrap();
        // Q_{−1,1} row 1 (φ₁) couples φ₂ through L_{−1,2}.
        assert_eq!(b.q(-1, 1).unwrap()[(1, 0)], l.get(-1, 2).unwrap()[(0, 0)]);
        // Q_{1,−1} row 0 (φ₀) couples φ_{−1} through L_{1,−1}.
        assert_eq!(b.q(1, -1).unwrap()[(0, 1)], l.get(1, -1).unwrap()[(0, 0)]);
        assert_eq!(b.q(0, 0).unwrap()[(0, 1)], l.get(-1, 1).unwrap()[(0, 0)]);
        assert_eq!(b.q(0, 0).unwrap()[(1, 0)], l.get(1, 0).unwrap()[(0, 0)]);
        assert_eq!(b.indices(1), 2..4);
    }
}
