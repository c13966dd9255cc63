//! Dense complex matrices and vectors.

use crate::error::Error;
use crate::scalar::RealScalar;
use num_complex::Complex;

/// Dense complex matrix, row-major storage: entry `(r, c)` at `r * cols + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T: RealScalar> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

/// Dense complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector<T: RealScalar> {
    data: Vec<Complex<T>>,
}

impl<T: RealScalar> ComplexVector<T> {
    pub fn new(data: Vec<Complex<T>>) -> Result<Self, Error> {
        for (k, z) in data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: k, col: 0 });
            }
        }
        Ok(Self { data })
    }

    pub fn zeros(len: usize) -> Self {
        Self { data: vec![Complex::new(T::zero(), T::zero()); len] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }
}

impl<T: RealScalar> std::ops::Index<usize> for ComplexVector<T> {
    type Output = Complex<T>;
    fn index(&self, k: usize) -> &Complex<T> {
        &self.data[k]
    }
}

impl<T: RealScalar> ComplexMatrix<T> {
    /// Checked constructor: rejects non-finite entries and shape mismatches.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self, Error> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        for (k, z) in data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: k / cols, col: k % cols });
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from rows of f64 pairs (re, im); convenience for tests and fixed operators.
    pub fn from_rows(rows: &[&[(f64, f64)]]) -> Self {
        let nr = rows.len();
        let nc = if nr == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(nr * nc);
        for row in rows {
            assert_eq!(row.len(), nc, "ragged rows");
            for &(re, im) in *row {
                data.push(Complex::new(T::of(re), T::of(im)));
            }
        }
        Self { rows: nr, cols: nc, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.data[k * n + k] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex<T>) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn trace(&self) -> Complex<T> {
        let n = self.rows.min(self.cols);
        (0..n).map(|k| self.data[k * self.cols + k]).fold(
            Complex::new(T::zero(), T::zero()),
            |acc, z| acc + z,
        )
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Matrix product, `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = vec![Complex::new(T::zero(), T::zero()); m * n];
        // i-k-j order: streams over contiguous rows of `other` and `out`.
        for i in 0..m {
            for p in 0..k {
                let a = self.data[i * k + p];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let brow = &other.data[p * n..(p + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o = *o + a * b;
                }
            }
        }
        Self { rows: m, cols: n, data: out }
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.rows];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = Complex::new(T::zero(), T::zero());
            for (a, x) in row.iter().zip(v) {
                acc = acc + a * x;
            }
            out[r] = acc;
        }
        out
    }

    /// Kronecker product: `(A ⊗ B)[ia*rb+ib, ja*cb+jb] = A[ia,ja] * B[ib,jb]`.
    pub fn kron(&self, other: &Self) -> Self {
        let (ra, ca) = (self.rows, self.cols);
        let (rb, cb) = (other.rows, other.cols);
        let mut out = Self::zeros(ra * rb, ca * cb);
        for ia in 0..ra {
            for ja in 0..ca {
                let a = self.get(ia, ja);
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for ib in 0..rb {
                    for jb in 0..cb {
                        out.set(ia * rb + ib, ja * cb + jb, a * other.get(ib, jb));
                    }
                }
            }
        }
        out
    }

    /// Column-stacking vectorization: `vec(M)[c*rows + r] = M[r, c]`.
    pub fn vec(&self) -> ComplexVector<T> {
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        ComplexVector { data }
    }

    /// Inverse of [`ComplexMatrix::vec`].
    pub fn unvec(v: &ComplexVector<T>, rows: usize, cols: usize) -> Result<Self, Error> {
        if v.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot unvec length {} into {rows}x{cols}",
                v.len()
            )));
        }
        Ok(Self::from_fn(rows, cols, |r, c| v.data[c * rows + r]))
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> T {
        let mut best = T::zero();
        for c in 0..self.cols {
            let mut s = T::zero();
            for r in 0..self.rows {
                s += self.get(r, c).norm();
            }
            if s > best {
                best = s;
            }
        }
        best
    }

    pub fn fro_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        if !self.is_square() {
            return false;
        }
        for r in 0..self.rows {
            for c in r..self.cols {
                let d = self.get(r, c) - self.get(c, r).conj();
                if d.norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Solve `self * X = B` by LU with partial pivoting. `self` is consumed as
    /// the factorization workspace.
    pub fn lu_solve(mut self, b: &Self) -> Result<Self, Error> {
        if !self.is_square() {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        if self.rows != b.rows {
            return Err(Error::DimensionMismatch(format!(
                "lu_solve: {}x{} vs rhs {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let n = self.rows;
        let mut x = b.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            // pivot
            let mut pr = k;
            let mut pmax = self.get(k, k).norm();
            for r in (k + 1)..n {
                let m = self.get(r, k).norm();
                if m > pmax {
                    pmax = m;
                    pr = r;
                }
            }
            if pmax == T::zero() {
                return Err(Error::DimensionMismatch("singular matrix in lu_solve".into()));
            }
            if pr != k {
                for c in 0..n {
                    let t = self.get(k, c);
                    self.set(k, c, self.get(pr, c));
                    self.set(pr, c, t);
                }
                piv.swap(k, pr);
                for c in 0..x.cols {
                    let t = x.get(k, c);
                    x.set(k, c, x.get(pr, c));
                    x.set(pr, c, t);
                }
            }
            let d = self.get(k, k);
            for r in (k + 1)..n {
                let f = self.get(r, k) / d;
                self.set(r, k, f);
                if f.re == T::zero() && f.im == T::zero() {
                    continue;
                }
                for c in (k + 1)..n {
                    let v = self.get(r, c) - f * self.get(k, c);
                    self.set(r, c, v);
                }
                for c in 0..x.cols {
                    let v = x.get(r, c) - f * x.get(k, c);
                    x.set(r, c, v);
                }
            }
        }
        // back substitution
        for c in 0..x.cols {
            for r in (0..n).rev() {
                let mut acc = x.get(r, c);
                for p in (r + 1)..n {
                    acc = acc - self.get(r, p) * x.get(p, c);
                }
                x.set(r, c, acc / self.get(r, r));
            }
        }
        Ok(x)
    }
}
