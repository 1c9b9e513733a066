//! Matrix continued fractions for block-banded Fourier recurrences.
//!
//! The recurrence `Σ_k A_{n,n−k} φ_{n−k} = r_n`, `|k| ≤ K`, is truncated to
//! `|n| ≤ W = N_win + D` (`φ = 0` beyond). Sweeping inward from both ends
//! eliminates the outer components, leaving relations
//! `φ_p = Σ_{j=1}^{K} T_{p,j} φ_{p−j} + t_p` (upper side) and the mirror
//! image below. Closing them at the pivot `n = 0` yields
//! `M φ₀ = r₀ − Σ A_{0,k} o_k`, the continued-fraction matrix; for `K = 1`
//! the sweep is exactly `S^{+1}_n = −[A_{n+1,n+1} + L_{−1,n+2}S^{+1}_{n+1}]^{−1} L_{1,n}`.

use num_complex::Complex64;

use super::FloquetError;
use crate::model::{build_l, FourierMatrixDensity, LMatrixTable};
use crate::numerics::{solve_matrix, ComplexMatrix, NumericsError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Block access `A_{row,col}` of a banded operator.
pub(crate) trait BlockOperator {
    fn dim(&self) -> usize;
    fn bandwidth(&self) -> usize;
    /// `None` when `|row − col| > K`.
    fn block(&self, row: i64, col: i64) -> Option<ComplexMatrix>;
}

/// `A_{n,n−k} = L_{k,n−k} − δ_{k0}(λ + in) I`.
pub(crate) struct Primal<'a> {
    pub table: &'a LMatrixTable,
    pub dim: usize,
}

impl BlockOperator for Primal<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn bandwidth(&self) -> usize {
        self.table.bandwidth()
    }

    fn block(&self, row: i64, col: i64) -> Option<ComplexMatrix> {
        let mut b = self.table.get(row - col, col)?.clone();
        if row == col {
            let s = self.table.lambda() + Complex64::new(0.0, row as f64);
            for i in 0..self.dim {
                b[(i, i)] -= s;
            }
        }
        Some(b)
    }
}

/// Transposed operator `(Aᵀ)_{j,i} = (A_{i,j})ᵀ`; its homogeneous solutions
/// are the adjoint components `ψ_j` as column vectors.
pub(crate) struct Transposed<'a> {
    pub table: &'a LMatrixTable,
    pub dim: usize,
}

impl BlockOperator for Transposed<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn bandwidth(&self) -> usize {
        self.table.bandwidth()
    }

    fn block(&self, row: i64, col: i64) -> Option<ComplexMatrix> {
        Primal { table: self.table, dim: self.dim }.block(col, row).map(|b| b.transpose())
    }
}

/// Result of eliminating everything but the pivot component.
#[derive(Clone, Debug)]
pub struct Elimination {
    pub(crate) window: i64,
    pub(crate) bandwidth: usize,
    /// `upper[q−1][j−1] = T_{q,j}` for `q = 1..=W`.
    pub(crate) upper: Vec<Vec<ComplexMatrix>>,
    /// `lower[q−1][j−1] = B_{−q,j}`: `φ_{−q} = Σ_j B_{−q,j} φ_{−q+j} + b_{−q}`.
    pub(crate) lower: Vec<Vec<ComplexMatrix>>,
    /// `S^m_0` for `m = −W..=W` (index `m + W`).
    pub(crate) centre: Vec<ComplexMatrix>,
    /// Particular offsets `o_m` (all zero for homogeneous problems).
    pub(crate) offsets: Vec<Vec<Complex64>>,
    /// The closure matrix `M(λ)`.
    pub(crate) closure: ComplexMatrix,
    /// Right-hand side of the closed pivot equation.
    pub(crate) closure_rhs: Vec<Complex64>,
}

impl Elimination {
    pub fn closure(&self) -> &ComplexMatrix {
        &self.closure
    }

    /// Right-hand side of `M φ₀ = r₀ − Σ_k A_{0,k} o_k`.
    pub fn closure_rhs(&self) -> &[Complex64] {
        &self.closure_rhs
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    /// `S^m_0`, the map from the pivot component to component `m`.
    pub fn s0(&self, m: i64) -> &ComplexMatrix {
        &self.centre[(m + self.window) as usize]
    }

    pub fn offset(&self, m: i64) -> &[Complex64] {
        &self.offsets[(m + self.window) as usize]
    }

    /// Upper tail relation `T_{p,j}` (`p ≥ 1`).
    pub fn upper(&self, p: i64, j: usize) -> &ComplexMatrix {
        &self.upper[(p - 1) as usize][j - 1]
    }

    /// Lower tail relation `B_{p,j}` (`p ≤ −1`).
    pub fn lower(&self, p: i64, j: usize) -> &ComplexMatrix {
        &self.lower[(-p - 1) as usize][j - 1]
    }

    /// All components `φ_m = S^m_0 φ₀ + o_m` for `|m| ≤ W`.
    pub fn components(&self, phi0: &[Complex64]) -> Vec<Vec<Complex64>> {
        (-self.window..=self.window)
            .map(|m| {
                let mut v = self.s0(m).mul_vec(phi0);
                for (a, b) in v.iter_mut().zip(self.offset(m)) {
                    *a += b;
                }
                v
            })
            .collect()
    }
}

fn breakdown(level: i64, e: NumericsError) -> FloquetError {
    match e {
        NumericsError::SingularMatrix { .. } => FloquetError::CfBreakdown { level },
        other => FloquetError::Numerics(other),
    }
}

struct Tail {
    rel: Vec<Vec<ComplexMatrix>>,
    off: Vec<Vec<Complex64>>,
}

/// One-sided inward sweep; `s = +1` eliminates `p = W..1`, `s = −1` the mirror.
fn sweep(op: &dyn BlockOperator, window: i64, s: i64, rhs: Option<&dyn Fn(i64) -> Vec<Complex64>>) -> Result<Tail, FloquetError> {
    let n = op.dim();
    let kk = op.bandwidth();
    let zero_m = ComplexMatrix::zeros(n, n);
    // u[i−1][j]: φ_{p+s·i} = Σ_{j<K} u[i−1][j] φ_{p−s·j} + v[i−1]; rows beyond W are absent.
    let mut u: Vec<Vec<ComplexMatrix>> = Vec::new();
    let mut v: Vec<Vec<Complex64>> = Vec::new();
    let mut rel = vec![Vec::new(); window as usize];
    let mut off = vec![Vec::new(); window as usize];
    for q in (1..=window).rev() {
        let p = s * q;
        let mut g = op.block(p, p).expect("diagonal block");
        let mut h: Vec<ComplexMatrix> = (1..=kk as i64).map(|j| op.block(p, p - s * j).unwrap_or_else(|| zero_m.clone())).collect();
        let mut r = rhs.map_or_else(|| vec![ZERO; n], |f| f(p));
        for (i, (ui, vi)) in u.iter().zip(&v).enumerate() {
            let Some(a) = op.block(p, p + s * (i as i64 + 1)) else { continue };
            g.add_product(&a, &ui[0]);
            for j in 1..kk {
                h[j - 1].add_product(&a, &ui[j]);
            }
            for (rr, av) in r.iter_mut().zip(a.mul_vec(vi)) {
                *rr -= av;
            }
        }
        // [T_{p,1} … T_{p,K} | t_p] = G⁻¹ [−H_1 … −H_K | r]
        let mut stacked = ComplexMatrix::zeros(n, n * kk + 1);
        for (j, hj) in h.iter().enumerate() {
            stacked.set_block(0, j * n, &hj.scale(Complex64::new(-1.0, 0.0)));
        }
        for (i, ri) in r.iter().enumerate() {
            stacked[(i, n * kk)] = *ri;
        }
        let sol = solve_matrix(&g, &stacked).map_err(|e| breakdown(p, e))?;
        let t: Vec<ComplexMatrix> = (0..kk).map(|j| sol.block(0, j * n, n, n)).collect();
        let tp: Vec<Complex64> = sol.column(n * kk);

        let mut nu = Vec::with_capacity(kk);
        let mut nv = Vec::with_capacity(kk);
        if kk > 0 {
            nu.push(t.clone());
            nv.push(tp.clone());
        }
        for i in 1..kk.min(u.len() + 1) {
            let prev = &u[i - 1];
            let row: Vec<ComplexMatrix> = (0..kk)
                .map(|j| {
                    let mut m = if j + 1 < kk { prev[j + 1].clone() } else { zero_m.clone() };
                    m.add_product(&prev[0], &t[j]);
                    m
                })
                .collect();
            let mut vv = prev[0].mul_vec(&tp);
            for (a, b) in vv.iter_mut().zip(&v[i - 1]) {
                *a += b;
            }
            nu.push(row);
            nv.push(vv);
        }
        u = nu;
        v = nv;
        rel[(q - 1) as usize] = t;
        off[(q - 1) as usize] = tp;
    }
    Ok(Tail { rel, off })
}

/// Full elimination onto the pivot; `window = W ≥ K` is required.
pub(crate) fn eliminate(op: &dyn BlockOperator, window: usize, rhs: Option<&dyn Fn(i64) -> Vec<Complex64>>) -> Result<Elimination, FloquetError> {
    let n = op.dim();
    let kk = op.bandwidth();
    let w = window as i64;
    if kk > window {
        return Err(FloquetError::InvalidTruncation(format!("window {window} smaller than bandwidth {kk}")));
    }
    let (upper, lower) = if kk == 0 {
        // Decoupled levels: only offsets, no inversion of the homogeneous blocks.
        let side = |s: i64| -> Result<Tail, FloquetError> {
            let mut off = Vec::new();
            for q in 1..=w {
                let p = s * q;
                let r = rhs.map_or_else(|| vec![ZERO; n], |f| f(p));
                if r.iter().all(|z| *z == ZERO) {
                    off.push(r);
                } else {
                    let g = op.block(p, p).expect("diagonal block");
                    off.push(crate::numerics::solve_linear(&g, &r).map_err(|e| breakdown(p, e))?.x);
                }
            }
            Ok(Tail { rel: vec![Vec::new(); window], off })
        };
        (side(1)?, side(-1)?)
    } else {
        (sweep(op, w, 1, rhs)?, sweep(op, w, -1, rhs)?)
    };

    let mut centre = vec![ComplexMatrix::zeros(n, n); 2 * window + 1];
    let mut offsets = vec![vec![ZERO; n]; 2 * window + 1];
    let idx = |m: i64| (m + w) as usize;
    centre[idx(0)] = ComplexMatrix::identity(n);

    if kk >= 2 {
        // Dense solve for the inner ring 0 < |m| < K.
        let c = kk as i64 - 1;
        let slot = |m: i64| -> usize { if m > 0 { (m - 1) as usize } else { (c - m - 1) as usize } };
        let size = 2 * (kk - 1) * n;
        let mut a = ComplexMatrix::identity(size);
        let mut b = ComplexMatrix::zeros(size, n + 1);
        for m in (-c..=c).filter(|&m| m != 0) {
            let (rels, off, sgn) = if m > 0 {
                (&upper.rel[(m - 1) as usize], &upper.off[(m - 1) as usize], 1)
            } else {
                (&lower.rel[(-m - 1) as usize], &lower.off[(-m - 1) as usize], -1)
            };
            let row0 = slot(m) * n;
            for (j, t) in rels.iter().enumerate() {
                let target = m - sgn * (j as i64 + 1);
                if target == 0 {
                    b.add_block(row0, 0, t);
                } else {
                    a.add_block(row0, slot(target) * n, &t.scale(Complex64::new(-1.0, 0.0)));
                }
            }
            for (i, o) in off.iter().enumerate() {
                b[(row0 + i, n)] += o;
            }
        }
        let x = solve_matrix(&a, &b).map_err(|e| breakdown(0, e))?;
        for m in (-c..=c).filter(|&m| m != 0) {
            centre[idx(m)] = x.block(slot(m) * n, 0, n, n);
            offsets[idx(m)] = (0..n).map(|i| x[(slot(m) * n + i, n)]).collect();
        }
    }

    for q in kk.max(1) as i64..=w {
        for (sgn, tail) in [(1i64, &upper), (-1i64, &lower)] {
            let m = sgn * q;
            let mut s = ComplexMatrix::zeros(n, n);
            let mut o = tail.off[(q - 1) as usize].clone();
            for (j, t) in tail.rel[(q - 1) as usize].iter().enumerate() {
                let src = m - sgn * (j as i64 + 1);
                s.add_product(t, &centre[idx(src)]);
                for (a, b) in o.iter_mut().zip(t.mul_vec(&offsets[idx(src)])) {
                    *a += b;
                }
            }
            centre[idx(m)] = s;
            offsets[idx(m)] = o;
        }
    }

    let mut closure = ComplexMatrix::zeros(n, n);
    let mut closure_rhs = rhs.map_or_else(|| vec![ZERO; n], |f| f(0));
    for k in -(kk as i64)..=kk as i64 {
        if k.abs() > w {
            continue;
        }
        let Some(a) = op.block(0, k) else { continue };
        closure.add_product(&a, &centre[idx(k)]);
        for (r, av) in closure_rhs.iter_mut().zip(a.mul_vec(&offsets[idx(k)])) {
            *r -= av;
        }
    }
    Ok(Elimination {
        window: w,
        bandwidth: kk,
        upper: upper.rel,
        lower: lower.rel,
        centre,
        offsets,
        closure,
        closure_rhs,
    })
}

/// Ladder data at `λ` for truncation `(N_win, D)`.
#[derive(Clone, Debug)]
pub struct LadderSet {
    pub lambda: Complex64,
    pub n_win: usize,
    pub depth: usize,
    pub table: LMatrixTable,
    pub elimination: Elimination,
}

impl LadderSet {
    /// `S^m_0`.
    pub fn s0(&self, m: i64) -> &ComplexMatrix {
        self.elimination.s0(m)
    }

    /// `S^{+1}_n = T_{n+1,1}` for `n ≥ 0` and `S^{−1}_n = B_{n−1,1}` for
    /// `n ≤ 0` — the nearest-neighbour ladders of a tridiagonal (`K = 1`) problem.
    pub fn step(&self, n: i64, up: bool) -> Option<&ComplexMatrix> {
        if self.elimination.bandwidth != 1 {
            return None;
        }
        let w = self.elimination.window;
        match up {
            true if n >= 0 && n < w => Some(self.elimination.upper(n + 1, 1)),
            false if n <= 0 && n > -w => Some(self.elimination.lower(n - 1, 1)),
            _ => None,
        }
    }

    pub fn closure(&self) -> &ComplexMatrix {
        &self.elimination.closure
    }
}

pub fn ladder_operators(density: &FourierMatrixDensity, lambda: Complex64, n_win: usize, depth: usize) -> Result<LadderSet, FloquetError> {
    let window = n_win + depth;
    let table = build_l(density, lambda, window)?;
    let elimination = eliminate(&Primal { table: &table, dim: density.dim() }, window, None)?;
    Ok(LadderSet { lambda, n_win, depth, table, elimination })
}

/// `M(λ) = Σ_k L_{k,−k} S^{−k}_0 − λI`.
pub fn assemble_m(density: &FourierMatrixDensity, lambda: Complex64, n_win: usize, depth: usize) -> Result<ComplexMatrix, FloquetError> {
    let window = n_win + depth;
    let table = build_l(density, lambda, window)?;
    Ok(eliminate(&Primal { table: &table, dim: density.dim() }, window, None)?.closure)
}
