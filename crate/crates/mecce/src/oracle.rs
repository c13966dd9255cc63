//! Brute-force references for small baths.
//!
//! `exact_coherence` treats the whole bath as one cluster and propagates the
//! projected master equation directly — no expansion, same propagation code
//! path. `exact_unprojected` evolves the full density matrix including the
//! central spin under the GKSL equation and reports trace, positivity, and
//! the coherence read off the off-diagonal block, giving an independent
//! cross-check of the projection step.

use crate::algebra::{expm_apply, LinearOp};
use crate::cce::{Cluster, CoherenceCurve};
use crate::error::Error;
use crate::lindblad::{cluster_jumps, gksl_generator, project_hamiltonians, ClusterPropagator};
use crate::model::{PulseSchedule, SystemSpec};
use crate::{Cplx, Matrix, SparseMatrix};

/// Largest bath size handled by the projected oracle (Hilbert dim 2^12).
pub const BATH_CAP: usize = 12;

/// Largest total spin count (bath + central) for the unprojected oracle.
pub const UNPROJECTED_CAP: usize = 11;

/// Projected master equation on the entire bath, no cluster truncation.
pub fn exact_coherence(
    spec: &SystemSpec,
    schedule: &PulseSchedule,
    grid: &[f64],
) -> Result<CoherenceCurve, Error> {
    let n = spec.n_spins();
    if n > BATH_CAP {
        return Err(Error::BathCap { n, cap: BATH_CAP });
    }
    spec.validate()?;
    let full = Cluster::new((0..n).collect())?;
    let values = ClusterPropagator::new(spec, &full)?.coherence_curve(schedule, grid)?;
    Ok(CoherenceCurve {
        times: grid.to_vec(),
        values,
        order: Some(n),
        seed: Some(spec.seed),
        label: "exact".into(),
    })
}

/// Trace, positivity, and cross-extracted coherence from the full GKSL
/// evolution with the central spin included.
pub struct UnprojectedReport {
    pub times: Vec<f64>,
    pub traces: Vec<Cplx>,
    pub min_eigenvalues: Vec<f64>,
    pub coherence: Vec<Cplx>,
}

/// Evolves `rho` of the (central + bath) system under free evolution with the
/// pure-dephasing coupling `H = (sigma_z / 2) (x) B + H_bath`,
/// `B = sum_i a_i Iz^i`. The central spin starts in `|+>`, the bath in the
/// spec's initial product state.
pub fn exact_unprojected(spec: &SystemSpec, grid: &[f64]) -> Result<UnprojectedReport, Error> {
    let n = spec.n_spins();
    if n + 1 > UNPROJECTED_CAP {
        return Err(Error::BathCap { n: n + 1, cap: UNPROJECTED_CAP });
    }
    spec.validate()?;
    let full = Cluster::new((0..n).collect())?;
    // the conditioned bath Hamiltonians are exactly the <0|..|0> and <1|..|1>
    // blocks of the full pure-dephasing Hamiltonian
    let branches = project_hamiltonians(spec, &full)?;
    let nb = branches.dim;
    let p0 = SparseMatrix::from_dense(&Matrix::from_rows(&[
        &[(1.0, 0.0), (0.0, 0.0)],
        &[(0.0, 0.0), (0.0, 0.0)],
    ]));
    let p1 = SparseMatrix::from_dense(&Matrix::from_rows(&[
        &[(0.0, 0.0), (0.0, 0.0)],
        &[(0.0, 0.0), (1.0, 0.0)],
    ]));
    let h_full = p0.kron(&branches.h0).add(&p1.kron(&branches.h1));
    let id2 = SparseMatrix::identity(2);
    let jumps_full: Vec<(f64, SparseMatrix)> = cluster_jumps(spec, &full)
        .into_iter()
        .map(|(rate, l)| (rate, id2.kron(&l)))
        .collect();
    let gen = gksl_generator(&h_full, &jumps_full);

    // |+><+| (x) rho_bath
    let plus = Matrix::from_rows(&[&[(0.5, 0.0), (0.5, 0.0)], &[(0.5, 0.0), (0.5, 0.0)]]);
    let rho_bath = crate::lindblad::initial_cluster_state(spec, &full);
    let rho0 = plus.kron(&rho_bath);
    let dim = 2 * nb;
    let block0 = offdiag_block_trace(rho0.vec().as_slice(), nb, dim);
    if block0.norm() < 1e-300 {
        return Err(Error::IllPosedInitialState);
    }

    let mut traces = Vec::with_capacity(grid.len());
    let mut mins = Vec::with_capacity(grid.len());
    let mut coherence = Vec::with_capacity(grid.len());
    let mut v = rho0.vec().into_vec();
    let mut t_prev = 0.0;
    for &t in grid {
        let dt = t - t_prev;
        if dt < 0.0 {
            return Err(Error::Propagation {
                cluster: vec![],
                reason: "time grid not ascending".into(),
            });
        }
        if dt > 0.0 {
            v = expm_apply(&gen as &dyn LinearOp<f64>, dt, &v);
        }
        t_prev = t;
        let rho = unvec_colmajor(&v, dim);
        traces.push(rho.trace());
        let evs = hermitian_eigenvalues(&hermitize(&rho))?;
        mins.push(evs.into_iter().fold(f64::INFINITY, f64::min));
        coherence.push(offdiag_block_trace(&v, nb, dim) / block0);
    }
    Ok(UnprojectedReport { times: grid.to_vec(), traces, min_eigenvalues: mins, coherence })
}

/// Tr of the <0|rho|1> block: entries (k, nb + k) in column-stacking layout.
fn offdiag_block_trace(v: &[Cplx], nb: usize, dim: usize) -> Cplx {
    (0..nb).map(|k| v[(nb + k) * dim + k]).sum()
}

fn unvec_colmajor(v: &[Cplx], dim: usize) -> Matrix {
    Matrix::from_fn(dim, dim, |r, c| v[c * dim + r])
}

/// (rho + rho^+) / 2 — strips the anti-Hermitian numerical residue before
/// the eigensolve.
fn hermitize(m: &Matrix) -> Matrix {
    m.add(&m.adjoint()).scale(Cplx::new(0.5, 0.0))
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn hermitian_eigenvalues(m: &Matrix) -> Result<Vec<f64>, Error> {
    if !m.is_square() {
        return Err(Error::NonSquare { rows: m.rows(), cols: m.cols() });
    }
    if !m.is_hermitian(1e-9 * (1.0 + m.max_abs())) {
        return Err(Error::InvalidModel("eigensolver requires a Hermitian matrix".into()));
    }
    let n = m.rows();
    let mut a = m.clone();
    let tol = 1e-14 * (1.0 + a.fro_norm());
    for _sweep in 0..100 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() < tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq.norm() < tol / (n as f64) {
                    continue;
                }
                // unitary 2x2: rows/cols p,q -> [c, -s e^{i phi}; s e^{-i phi}, c]
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let abs = apq.norm();
                let phi = apq.arg();
                let theta = 0.5 * (2.0 * abs).atan2(app - aqq);
                let (s, c) = theta.sin_cos();
                let e_pos = Cplx::from_polar(1.0, phi);
                let e_neg = e_pos.conj();
                // A <- J^+ A J applied in place on rows then columns
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp * c + akq * (s * e_neg));
                    a.set(k, q, akq * c - akp * (s * e_pos));
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, apk * c + aqk * (s * e_pos));
                    a.set(q, k, aqk * c - apk * (s * e_neg));
                }
            }
        }
    }
    Ok((0..n).map(|k| a.get(k, k).re).collect())
}
