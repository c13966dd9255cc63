//! Compressed sparse row matrices over complex scalars.
//!
//! Spin Hamiltonians, jump operators, and the superoperators built from them
//! have O(k 2^k) nonzeros in a 2^k (or 4^k) dimensional space; CSR keeps both
//! construction and repeated application cheap.

use crate::algebra::dense::ComplexMatrix;
use crate::scalar::RealScalar;
use num_complex::Complex;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T: RealScalar> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<Complex<T>>,
}

impl<T: RealScalar> CsrMatrix<T> {
    /// Build from (row, col, value) triplets; duplicates are summed, exact
    /// zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, Complex<T>)>,
    ) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex<T>> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &triplets {
            debug_assert!(r < rows && c < cols);
            if last == Some((r, c)) {
                let lv = vals.last_mut().unwrap();
                *lv = *lv + v;
            } else {
                col_idx.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut out = Self { rows, cols, row_ptr, col_idx, vals };
        out.drop_zeros();
        out
    }

    fn drop_zeros(&mut self) {
        let mut new_ptr = vec![0usize; self.rows + 1];
        let mut new_cols = Vec::with_capacity(self.col_idx.len());
        let mut new_vals = Vec::with_capacity(self.vals.len());
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = self.vals[k];
                if v.re != T::zero() || v.im != T::zero() {
                    new_cols.push(self.col_idx[k]);
                    new_vals.push(v);
                    new_ptr[r + 1] += 1;
                }
            }
        }
        for r in 0..self.rows {
            new_ptr[r + 1] += new_ptr[r];
        }
        self.row_ptr = new_ptr;
        self.col_idx = new_cols;
        self.vals = new_vals;
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, row_ptr: vec![0; rows + 1], col_idx: vec![], vals: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![Complex::new(T::one(), T::zero()); n],
        }
    }

    pub fn from_dense(m: &ComplexMatrix<T>) -> Self {
        let mut trip = Vec::new();
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                let v = m.get(r, c);
                if v.re != T::zero() || v.im != T::zero() {
                    trip.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), trip)
    }

    pub fn to_dense(&self) -> ComplexMatrix<T> {
        let mut m = ComplexMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m.set(r, self.col_idx[k], self.vals[k]);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex<T>)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.vals[k]))
        })
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v = *v * s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let trip: Vec<_> = self.triplets().chain(other.triplets()).collect();
        Self::from_triplets(self.rows, self.cols, trip)
    }

    pub fn transpose(&self) -> Self {
        let trip: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.cols, self.rows, trip)
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v = v.conj();
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    /// Sparse-sparse product.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut trip = Vec::new();
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let a = self.vals[k];
                let mid = self.col_idx[k];
                for k2 in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    trip.push((r, other.col_idx[k2], a * other.vals[k2]));
                }
            }
        }
        Self::from_triplets(self.rows, other.cols, trip)
    }

    /// Kronecker product with the same index convention as the dense kernel.
    pub fn kron(&self, other: &Self) -> Self {
        let mut trip = Vec::with_capacity(self.nnz() * other.nnz());
        for (ra, ca, va) in self.triplets() {
            for (rb, cb, vb) in other.triplets() {
                trip.push((ra * other.rows + rb, ca * other.cols + cb, va * vb));
            }
        }
        Self::from_triplets(self.rows * other.rows, self.cols * other.cols, trip)
    }

    /// `out += self * v`.
    pub fn matvec_acc(&self, v: &[Complex<T>], out: &mut [Complex<T>]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc = acc + self.vals[k] * v[self.col_idx[k]];
            }
            out[r] = out[r] + acc;
        }
    }

    /// `out = self * v`.
    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.rows];
        self.matvec_acc(v, &mut out);
        out
    }

    /// Dense product `out += s * (self * x)` where `x`, `out` are N x m dense
    /// matrices in column-major layout (columns contiguous).
    pub fn spmm_colmajor_acc(
        &self,
        s: Complex<T>,
        x: &[Complex<T>],
        ncols: usize,
        out: &mut [Complex<T>],
    ) {
        debug_assert_eq!(x.len(), self.cols * ncols);
        debug_assert_eq!(out.len(), self.rows * ncols);
        for c in 0..ncols {
            let xc = &x[c * self.cols..(c + 1) * self.cols];
            let oc = &mut out[c * self.rows..(c + 1) * self.rows];
            for r in 0..self.rows {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc = acc + self.vals[k] * xc[self.col_idx[k]];
                }
                oc[r] = oc[r] + s * acc;
            }
        }
    }

    /// Dense product from the right: `out += s * (x * m)` with `x`, `out`
    /// column-major N x N and `self` holding `m^T` as CSR (row r of `self`
    /// lists the nonzeros of column r of `m`).
    pub fn spmm_right_from_transpose_acc(
        &self,
        s: Complex<T>,
        x: &[Complex<T>],
        nrows: usize,
        out: &mut [Complex<T>],
    ) {
        // (x * m)[:, c] = sum_k x[:, k] * m[k, c]; self = m^T so row c of self
        // enumerates (k, m[k, c]).
        debug_assert_eq!(x.len(), nrows * self.cols);
        for c in 0..self.rows {
            let oc = &mut out[c * nrows..(c + 1) * nrows];
            for k in self.row_ptr[c]..self.row_ptr[c + 1] {
                let f = s * self.vals[k];
                let xk = &x[self.col_idx[k] * nrows..(self.col_idx[k] + 1) * nrows];
                for (o, xv) in oc.iter_mut().zip(xk) {
                    *o = *o + f * xv;
                }
            }
        }
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> T {
        let mut sums = vec![T::zero(); self.cols];
        for (_, c, v) in self.triplets() {
            sums[c] += v.norm();
        }
        sums.into_iter().fold(T::zero(), T::max)
    }

    pub fn fro_norm(&self) -> T {
        self.vals.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        if self.rows != self.cols {
            return false;
        }
        self.sub_dense_check(&self.adjoint(), tol)
    }

    fn sub_dense_check(&self, other: &Self, tol: T) -> bool {
        let diff = self.add(&other.scale(Complex::new(-T::one(), T::zero())));
        diff.vals.iter().all(|v| v.norm() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    type S = CsrMatrix<f64>;
    type M = ComplexMatrix<f64>;

    fn random_dense(rng: &mut ChaCha8Rng, n: usize, fill: f64) -> M {
        M::from_fn(n, n, |_, _| {
            if rng.gen_bool(fill) {
                C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                C::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn dense_roundtrip_and_duplicate_sum() {
        let trip = vec![
            (0, 1, C::new(1.0, 0.0)),
            (0, 1, C::new(2.0, 1.0)),
            (2, 0, C::new(-1.0, 0.0)),
            (1, 1, C::new(0.0, 0.0)),
        ];
        let s = S::from_triplets(3, 2, trip);
        assert_eq!(s.nnz(), 2);
        let d = s.to_dense();
        assert_eq!(d.get(0, 1), C::new(3.0, 1.0));
        assert_eq!(d.get(2, 0), C::new(-1.0, 0.0));
        assert_eq!(S::from_dense(&d), s);
    }

    #[test]
    fn ops_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let da = random_dense(&mut rng, 6, 0.4);
        let db = random_dense(&mut rng, 6, 0.4);
        let (sa, sb) = (S::from_dense(&da), S::from_dense(&db));

        assert!(sa.matmul(&sb).to_dense().sub(&da.matmul(&db)).max_abs() < 1e-14);
        assert!(sa.kron(&sb).to_dense().sub(&da.kron(&db)).max_abs() < 1e-14);
        assert!(sa.add(&sb).to_dense().sub(&da.add(&db)).max_abs() < 1e-14);
        assert!(sa.adjoint().to_dense().sub(&da.adjoint()).max_abs() < 1e-14);
        assert!((sa.one_norm() - da.one_norm()).abs() < 1e-14);

        let v: Vec<C> = (0..6).map(|_| C::new(rng.gen_range(-1.0..1.0), 0.3)).collect();
        let sv = sa.matvec(&v);
        let dv = da.matvec(&v);
        for (a, b) in sv.iter().zip(&dv) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn colmajor_products_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 5;
        let dm = random_dense(&mut rng, n, 0.5);
        let sm = S::from_dense(&dm);
        let x = random_dense(&mut rng, n, 1.0);
        let xcol = x.vec(); // column-major layout of x

        // left product m * x
        let mut out = vec![C::new(0.0, 0.0); n * n];
        sm.spmm_colmajor_acc(C::new(2.0, 0.0), xcol.as_slice(), n, &mut out);
        let expect = dm.matmul(&x).scale(C::new(2.0, 0.0)).vec();
        for (a, b) in out.iter().zip(expect.as_slice()) {
            assert!((a - b).norm() < 1e-14);
        }

        // right product x * m, driven by m^T
        let smt = sm.transpose();
        let mut out = vec![C::new(0.0, 0.0); n * n];
        smt.spmm_right_from_transpose_acc(C::new(1.0, 0.0), xcol.as_slice(), n, &mut out);
        let expect = x.matmul(&dm).vec();
        for (a, b) in out.iter().zip(expect.as_slice()) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
