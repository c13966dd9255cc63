//! Matrix exponential by scaling-and-squaring with Pade approximants.
//!
//! Follows the Higham (2005) order selection: the Pade degree is the smallest
//! of {3, 5, 7, 9, 13} whose backward-error bound covers the scaled one-norm.

use crate::algebra::dense::ComplexMatrix;
use crate::error::Error;
use crate::scalar::{re, RealScalar};
use num_complex::Complex;

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `exp(g * t)` for square `g` with finite entries and `t >= 0`.
pub fn expm<T: RealScalar>(g: &ComplexMatrix<T>, t: T) -> Result<ComplexMatrix<T>, Error> {
    if !g.is_square() {
        return Err(Error::NonSquare { rows: g.rows(), cols: g.cols() });
    }
    if t < T::zero() || !t.is_finite() {
        return Err(Error::DimensionMismatch("expm: t must be finite and >= 0".into()));
    }
    let n = g.rows();
    let a = g.scale(re(t));
    let norm = a.one_norm().to_f64().unwrap_or(f64::INFINITY);
    if !norm.is_finite() {
        return Err(Error::NonFinite { row: 0, col: 0 });
    }
    if norm == 0.0 {
        return Ok(ComplexMatrix::identity(n));
    }

    if norm <= THETA_9 {
        let coeffs: &[f64] = if norm <= THETA_3 {
            &PADE_3
        } else if norm <= THETA_5 {
            &PADE_5
        } else if norm <= THETA_7 {
            &PADE_7
        } else {
            &PADE_9
        };
        return pade(&a, coeffs);
    }

    // scale down to ||A/2^s|| <= theta_13, degree-13 Pade, then square s times
    let s = ((norm / THETA_13).log2().ceil()).max(0.0) as u32;
    let scaled = a.scale(re(T::of(0.5f64.powi(s as i32))));
    let mut f = pade13(&scaled)?;
    for _ in 0..s {
        f = f.matmul(&f);
    }
    Ok(f)
}

/// [m/m] Pade approximant with precomputed coefficients (m <= 9).
fn pade<T: RealScalar>(a: &ComplexMatrix<T>, b: &[f64]) -> Result<ComplexMatrix<T>, Error> {
    let n = a.rows();
    let id = ComplexMatrix::identity(n);
    let a2 = a.matmul(a);
    // u = a * (sum over odd powers), v = sum over even powers
    let mut even = id.scale(cf::<T>(b[0]));
    let mut odd = id.scale(cf::<T>(b[1]));
    let mut pow = id;
    for k in (2..b.len()).step_by(2) {
        pow = pow.matmul(&a2);
        even = even.add(&pow.scale(cf::<T>(b[k])));
        if k + 1 < b.len() {
            odd = odd.add(&pow.scale(cf::<T>(b[k + 1])));
        }
    }
    let u = a.matmul(&odd);
    solve_pade(&even, &u)
}

fn pade13<T: RealScalar>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>, Error> {
    let b = &PADE_13;
    let n = a.rows();
    let id = ComplexMatrix::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let w1 = a6
        .scale(cf::<T>(b[13]))
        .add(&a4.scale(cf::<T>(b[11])))
        .add(&a2.scale(cf::<T>(b[9])));
    let w2 = a6
        .scale(cf::<T>(b[7]))
        .add(&a4.scale(cf::<T>(b[5])))
        .add(&a2.scale(cf::<T>(b[3])))
        .add(&id.scale(cf::<T>(b[1])));
    let u = a.matmul(&a6.matmul(&w1).add(&w2));
    let z1 = a6
        .scale(cf::<T>(b[12]))
        .add(&a4.scale(cf::<T>(b[10])))
        .add(&a2.scale(cf::<T>(b[8])));
    let v = a6
        .matmul(&z1)
        .add(&a6.scale(cf::<T>(b[6])))
        .add(&a4.scale(cf::<T>(b[4])))
        .add(&a2.scale(cf::<T>(b[2])))
        .add(&id.scale(cf::<T>(b[0])));
    solve_pade(&v, &u)
}

/// `(V - U)^{-1} (V + U)`.
fn solve_pade<T: RealScalar>(
    v: &ComplexMatrix<T>,
    u: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>, Error> {
    let lhs = v.sub(u);
    let rhs = v.add(u);
    lhs.lu_solve(&rhs)
}

fn cf<T: RealScalar>(x: f64) -> Complex<T> {
    Complex::new(T::of(x), T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    type M = ComplexMatrix<f64>;

    #[test]
    fn zero_generator_is_identity() {
        let z = M::zeros(4, 4);
        let e = expm(&z, 3.7).unwrap();
        assert_eq!(e, M::identity(4));
    }

    #[test]
    fn diagonal_case() {
        let lams = [C::new(-0.3, 1.1), C::new(0.2, -2.0), C::new(-1.5, 0.0)];
        let mut g = M::zeros(3, 3);
        for (k, l) in lams.iter().enumerate() {
            g.set(k, k, *l);
        }
        let t = 0.9;
        let e = expm(&g, t).unwrap();
        for (k, l) in lams.iter().enumerate() {
            let expect = (l * t).exp();
            assert!((e.get(k, k) - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn pauli_z_phases() {
        // exp(-i (a/2) sigma_z t) = diag(e^{-i a t/2}, e^{+i a t/2})
        let a = 2.7;
        let g = M::from_rows(&[&[(0.0, -a / 2.0), (0.0, 0.0)], &[(0.0, 0.0), (0.0, a / 2.0)]]);
        let t = 1.3;
        let e = expm(&g, t).unwrap();
        let phase = C::new(0.0, -a * t / 2.0).exp();
        assert!((e.get(0, 0) - phase).norm() < 1e-13);
        assert!((e.get(1, 1) - phase.conj()).norm() < 1e-13);
        assert!(e.get(0, 1).norm() < 1e-15);
    }

    fn random_contraction(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> M {
        // random generator with eigenvalues pushed into the left half plane
        let mut g = M::from_fn(n, n, |_, _| {
            C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
        });
        for k in 0..n {
            let shift = C::new(scale * n as f64, 0.0);
            g.set(k, k, g.get(k, k) - shift);
        }
        g
    }

    #[test]
    fn semigroup_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &scale in &[0.5, 2.0, 8.0] {
            let g = random_contraction(&mut rng, 5, scale);
            let (t1, t2) = (0.37, 0.81);
            let lhs = expm(&g, t1).unwrap().matmul(&expm(&g, t2).unwrap());
            let rhs = expm(&g, t1 + t2).unwrap();
            assert!(
                lhs.sub(&rhs).max_abs() < 1e-10,
                "semigroup violated at scale {scale}"
            );
        }
    }

    #[test]
    fn matches_taylor_reference() {
        // independent oracle: plain Taylor series at small norm
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = random_contraction(&mut rng, 4, 0.3);
        let t = 0.5;
        let mut term = M::identity(4);
        let mut sum = M::identity(4);
        for k in 1..40 {
            term = term.matmul(&g).scale(C::new(t / k as f64, 0.0));
            sum = sum.add(&term);
        }
        let e = expm(&g, t).unwrap();
        assert!(e.sub(&sum).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_nonsquare_and_negative_t() {
        let g = M::zeros(2, 3);
        assert!(expm(&g, 1.0).is_err());
        let g = M::zeros(2, 2);
        assert!(expm(&g, -1.0).is_err());
    }
}
