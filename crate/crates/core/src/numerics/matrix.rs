use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use super::NumericsError;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative pivot threshold: a pivot below `PIVOT_RTOL * max row norm` is singular.
pub const PIVOT_RTOL: f64 = 1e-13;

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices; panics on ragged input.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.concat() }
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols);
        Self { rows, cols, data: values.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_row_norm(&self) -> f64 {
        (0..self.rows).fold(0.0, |m, i| m.max(self.row_norm(i)))
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols, "dimension mismatch in mul_vec");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Row vector times matrix: `x^T A` (no conjugation).
    pub fn vec_mul(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.rows, "dimension mismatch in vec_mul");
        let mut out = vec![ZERO; self.cols];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &ComplexMatrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    pub fn add_block(&mut self, r0: usize, c0: usize, b: &ComplexMatrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] += b[(i, j)];
            }
        }
    }

    /// `self += a * b` without allocating the product.
    pub fn add_product(&mut self, a: &ComplexMatrix, b: &ComplexMatrix) {
        assert!(a.cols == b.rows && self.rows == a.rows && self.cols == b.cols);
        for i in 0..a.rows {
            for k in 0..a.cols {
                let aik = a[(i, k)];
                if aik == ZERO {
                    continue;
                }
                let brow = b.row(k);
                let out = &mut self.data[i * self.cols..(i + 1) * self.cols];
                for (o, bkj) in out.iter_mut().zip(brow) {
                    *o += aik * bkj;
                }
            }
        }
    }

    pub fn lu(&self) -> Lu {
        Lu::factor(self)
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        out.add_product(self, rhs);
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-ONE)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
///
/// Factoring never fails; singularity is judged against the pivot threshold
/// only when solving.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    sign: f64,
    threshold: f64,
    /// First elimination step whose pivot fell below the threshold.
    small_pivot: Option<usize>,
}

impl Lu {
    pub fn factor(a: &ComplexMatrix) -> Self {
        assert!(a.is_square(), "LU of non-square matrix");
        let n = a.rows;
        let threshold = PIVOT_RTOL * a.max_row_norm();
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut small_pivot = None;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            if pmax <= threshold && small_pivot.is_none() {
                small_pivot = Some(k);
            }
            let pivot = lu[k * n + k];
            if pivot == ZERO {
                continue;
            }
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Self { n, lu, perm, sign, threshold, small_pivot }
    }

    pub fn is_singular(&self) -> bool {
        self.small_pivot.is_some()
    }

    pub fn determinant(&self) -> Complex64 {
        let mut d = Complex64::new(self.sign, 0.0);
        for k in 0..self.n {
            d *= self.lu[k * self.n + k];
        }
        d
    }

    /// `(ln|det|, arg det)`; `ln|det| = -inf` for an exactly singular matrix.
    pub fn log_determinant(&self) -> (f64, f64) {
        let mut ln = 0.0;
        let mut arg = if self.sign < 0.0 { std::f64::consts::PI } else { 0.0 };
        for k in 0..self.n {
            let p = self.lu[k * self.n + k];
            ln += p.norm().ln();
            arg += p.arg();
        }
        (ln, arg.sin().atan2(arg.cos()))
    }

    /// Ratio of the largest to the smallest pivot magnitude — a cheap
    /// lower bound on the condition number.
    pub fn condition_estimate(&self) -> f64 {
        let mags = (0..self.n).map(|k| self.lu[k * self.n + k].norm());
        let (lo, hi) = mags.fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    fn check(&self) -> Result<(), NumericsError> {
        match self.small_pivot {
            Some(k) => Err(NumericsError::SingularMatrix { step: k, threshold: self.threshold }),
            None => Ok(()),
        }
    }

    fn substitute(&self, x: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
        assert_eq!(b.len(), self.n, "rhs length mismatch");
        self.check()?;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        self.substitute(&mut x);
        Ok(x)
    }

    pub fn solve_matrix(&self, b: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
        assert_eq!(b.rows, self.n, "rhs rows mismatch");
        self.check()?;
        let mut out = ComplexMatrix::zeros(b.rows, b.cols);
        let mut col = vec![ZERO; self.n];
        for j in 0..b.cols {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(self.perm[i], j)];
            }
            self.substitute(&mut col);
            for (i, c) in col.iter().enumerate() {
                out[(i, j)] = *c;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<ComplexMatrix, NumericsError> {
        self.solve_matrix(&ComplexMatrix::identity(self.n))
    }
}

/// Solution of a dense linear system together with a conditioning hint.
#[derive(Clone, Debug)]
pub struct LinearSolution {
    pub x: Vec<Complex64>,
    pub condition_estimate: f64,
}

pub fn solve_linear(a: &ComplexMatrix, b: &[Complex64]) -> Result<LinearSolution, NumericsError> {
    if !a.is_square() || b.len() != a.rows {
        return Err(NumericsError::ShapeMismatch { rows: a.rows, cols: a.cols, rhs: b.len() });
    }
    let lu = a.lu();
    let x = lu.solve_vec(b)?;
    Ok(LinearSolution { x, condition_estimate: lu.condition_estimate() })
}

/// `A^{-1} B` for a square `A`.
pub fn solve_matrix(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    if !a.is_square() || b.rows != a.rows {
        return Err(NumericsError::ShapeMismatch { rows: a.rows, cols: a.cols, rhs: b.rows });
    }
    a.lu().solve_matrix(b)
}

/// LU determinant; zero pivots give an exact zero.
pub fn determinant(a: &ComplexMatrix) -> Complex64 {
    if a.rows == 0 {
        return ONE;
    }
    a.lu().determinant()
}

/// Singular values (descending) and the corresponding right/left singular
/// vectors of the smallest one.
pub(crate) struct SmallestSingular {
    pub sigma: Vec<f64>,
    /// Unit `v` with `A v ≈ σ_min u`.
    pub right: Vec<Complex64>,
    /// Unit row `w` with `w A ≈ σ_min v^H` (i.e. `w = u^H`).
    pub left: Vec<Complex64>,
}

pub(crate) fn smallest_singular(a: &ComplexMatrix) -> SmallestSingular {
    let svd = nalgebra::linalg::SVD::new(a.to_nalgebra(), true, true);
    let n = a.rows;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let k = *order.last().expect("empty matrix");
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let right = (0..n).map(|j| v_t[(k, j)].conj()).collect();
    let left = (0..n).map(|i| u[(i, k)].conj()).collect();
    SmallestSingular { sigma, right, left }
}
