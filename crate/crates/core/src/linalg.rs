//! Dense complex matrices and the Hermitian positive-definite machinery the
//! estimator needs: weighted Gram products, Cholesky factorization,
//! triangular solves and explicit inverses.
//!
//! Storage is column-major so that every hot loop is an `axpy` over a
//! contiguous column.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct CMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors, all of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<Complex<T>>]) -> Self {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            assert_eq!(c.len(), rows, "column length mismatch");
            data.extend_from_slice(c);
        }
        Self {
            rows,
            cols: columns.len(),
            data,
        }
    }

    pub fn diag(d: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[Complex<T>] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [Complex<T>] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&mut self, s: Complex<T>) {
        for z in &mut self.data {
            *z = *z * s;
        }
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (k, &b) in other.col(j).iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                axpy(b, self.col(k), dst);
            }
        }
        out
    }

    /// `selfᴴ · other`, without forming the adjoint.
    pub fn adjoint_matmul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "row dimension mismatch");
        Self::from_fn(self.cols, other.cols, |i, j| dotc(self.col(i), other.col(j)))
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len(), "vector length mismatch");
        let mut out = vec![Complex::zero(); self.rows];
        for (k, &b) in v.iter().enumerate() {
            if !b.is_zero() {
                axpy(b, self.col(k), &mut out);
            }
        }
        out
    }

    /// `selfᴴ · v`.
    pub fn adjoint_mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.rows, v.len(), "vector length mismatch");
        (0..self.cols).map(|j| dotc(self.col(j), v)).collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    /// Largest deviation of `self` from its own adjoint.
    pub fn hermitian_defect(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let mut worst = T::zero();
        for j in 0..self.cols {
            for i in 0..=j {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Replaces the matrix by `(A + Aᴴ)/2`.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        let half = T::lit(0.5);
        for j in 0..self.cols {
            let d = self[(j, j)].re;
            self[(j, j)] = Complex::new(d, T::zero());
            for i in j + 1..self.rows {
                let avg = (self[(i, j)] + self[(j, i)].conj()).scale(half);
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
        }
    }
}

impl<T> Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[j * self.rows + i]
    }
}

impl<T> IndexMut<(usize, usize)> for CMat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[j * self.rows + i]
    }
}

/// `y += a·x`
#[inline]
pub fn axpy<T: Real>(a: Complex<T>, x: &[Complex<T>], y: &mut [Complex<T>]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * *xi;
    }
}

/// `xᴴ·y`, accumulated in four lanes to keep the reduction pipelined.
#[inline]
pub fn dotc<T: Real>(x: &[Complex<T>], y: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = [Complex::<T>::zero(); 4];
    let mut xc = x.chunks_exact(4);
    let mut yc = y.chunks_exact(4);
    for (a, b) in (&mut xc).zip(&mut yc) {
        for l in 0..4 {
            acc[l] += a[l].conj() * b[l];
        }
    }
    for (a, b) in xc.remainder().iter().zip(yc.remainder()) {
        acc[0] += a.conj() * *b;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// `shift·I + Φ·diag(w)·Φᴴ`, formed from the lower triangle and mirrored.
pub fn weighted_gram<T: Real>(phi: &CMat<T>, weights: &[T], shift: T) -> CMat<T> {
    assert_eq!(phi.cols(), weights.len());
    let n = phi.rows();
    let mut out = CMat::zeros(n, n);
    for (j, &w) in weights.iter().enumerate() {
        if w == T::zero() {
            continue;
        }
        let col = phi.col(j);
        for q in 0..n {
            let s = col[q].conj().scale(w);
            let dst = &mut out.data[q * n + q..(q + 1) * n];
            axpy(s, &col[q..], dst);
        }
    }
    for q in 0..n {
        out[(q, q)] = Complex::new(out[(q, q)].re + shift, T::zero());
        for p in q + 1..n {
            out[(q, p)] = out[(p, q)].conj();
        }
    }
    out
}

/// Lower Cholesky factor `L` of a Hermitian positive-definite matrix, `A = L·Lᴴ`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: CMat<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factorizes `a`, reading only its lower triangle.
    pub fn new(mut a: CMat<T>) -> Result<Self> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "Cholesky needs a square matrix");
        for k in 0..n {
            let d = a[(k, k)].re;
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: k, value: d.as_f64() });
            }
            let lkk = d.sqrt();
            a[(k, k)] = Complex::new(lkk, T::zero());
            let inv = lkk.recip();
            for i in k + 1..n {
                a[(i, k)] = a[(i, k)].scale(inv);
            }
            // trailing update: a[j.., j] -= conj(l[j,k]) * l[j.., k]
            let (head, tail) = a.data.split_at_mut((k + 1) * n);
            let lk = &head[k * n..];
            for j in k + 1..n {
                let s = -lk[j].conj();
                let off = (j - k - 1) * n;
                axpy(s, &lk[j..n], &mut tail[off + j..off + n]);
            }
        }
        // zero the strict upper triangle so `factor()` is a clean L
        for j in 1..n {
            for i in 0..j {
                a[(i, j)] = Complex::zero();
            }
        }
        Ok(Self { l: a })
    }

    pub fn factor(&self) -> &CMat<T> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Overwrites `b` with `L⁻¹·b`.
    pub fn solve_lower_in_place(&self, b: &mut [Complex<T>]) {
        assert_eq!(b.len(), self.dim());
        self.solve_lower_from(b, 0);
    }

    /// Forward substitution assuming `b[..start]` is zero.
    fn solve_lower_from(&self, b: &mut [Complex<T>], start: usize) {
        let n = self.dim();
        for k in start..n {
            let col = self.l.col(k);
            b[k] = b[k].unscale(col[k].re);
            let bk = -b[k];
            let (_, rest) = b.split_at_mut(k + 1);
            axpy(bk, &col[k + 1..], rest);
        }
    }

    /// Overwrites `b` with `L⁻ᴴ·b`.
    pub fn solve_upper_in_place(&self, b: &mut [Complex<T>]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        for k in (0..n).rev() {
            let col = self.l.col(k);
            let s = dotc(&col[k + 1..], &b[k + 1..]);
            b[k] = (b[k] - s).unscale(col[k].re);
        }
    }

    /// `A⁻¹·b`.
    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `L⁻¹·B` for every column of `B`.
    pub fn solve_lower_matrix(&self, b: &CMat<T>) -> CMat<T> {
        let mut out = b.clone();
        for j in 0..out.cols() {
            self.solve_lower_in_place(out.col_mut(j));
        }
        out
    }

    /// Explicit `A⁻¹`, Hermitian by construction.
    pub fn inverse(&self) -> CMat<T> {
        let n = self.dim();
        // L⁻¹ is lower triangular: column j is zero above row j.
        let mut linv = CMat::identity(n);
        for j in 0..n {
            self.solve_lower_from(linv.col_mut(j), j);
        }
        // A⁻¹ = (L⁻¹)ᴴ L⁻¹ ; entry (i,j) = <col_i(L⁻¹), col_j(L⁻¹)>
        let mut out = CMat::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = dotc(&linv.col(i)[j..], &linv.col(j)[j..]);
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
            out[(j, j)] = Complex::new(out[(j, j)].re, T::zero());
        }
        out
    }
}
