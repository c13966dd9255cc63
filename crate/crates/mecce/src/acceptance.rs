//! Built-in acceptance suite: desk-scale end-to-end checks covering analytic
//! limits, oracle equivalence, qualitative physics, and physicality bounds.
//! Each check is independent and returns a pass/fail verdict with details;
//! the CLI `verify` subcommand and the integration test target both run them.

use crate::cce::{
    factorization_diagnostic, run_mecce, run_mecce_opts, run_mecce_route, CoherenceCurve,
    Cluster, NeighborRule, PropagationRoute, RunOptions,
};
use crate::error::Error;
use crate::lindblad::{
    build_generator, cluster_jumps, project_hamiltonians, single_spin_analytic,
    ClusterPropagator,
};
use crate::model::{
    build_chain, build_lattice2d, build_nv_surface, BathSpin, BathState, CouplingGraph,
    JumpSpec, PulseSchedule, SystemSpec,
};
use crate::oracle::{exact_coherence, exact_unprojected};
use crate::{Cplx, Matrix};

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] check {:2} {:<28} — {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.details
        )
    }
}

fn run_check(
    id: usize,
    name: &'static str,
    body: impl FnOnce() -> Result<(bool, String), Error>,
) -> CheckResult {
    match body() {
        Ok((passed, details)) => CheckResult { id, name, passed, details },
        Err(e) => CheckResult { id, name, passed: false, details: format!("error: {e}") },
    }
}

pub fn run_all() -> Vec<CheckResult> {
    vec![
        check_01_analytic_equivalence(),
        check_02_dissipative_chain_convergence(),
        check_03_dissipation_free_limit(),
        check_04_echo_refocusing(),
        check_05_motional_narrowing(),
        check_06_factorization_bound(),
        check_07_separable_regime(),
        check_08_disjoint_exactness(),
        check_09_nv_surface_ordering(),
        check_10_physicality(),
        check_11_collective_dissipation(),
    ]
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn single_spin_spec(a: f64, gamma: f64) -> Result<SystemSpec, Error> {
    let spec = SystemSpec::new(
        vec![BathSpin { index: 0, position: None, coupling: a }],
        CouplingGraph::default(),
        vec![],
        BathState::maximally_mixed(1),
        0,
    )?;
    Ok(if gamma > 0.0 { spec.with_depolarization(gamma) } else { spec })
}

/// 1. Single-spin propagation matches the closed-form coherence across the
/// underdamped, critical, and overdamped regimes.
pub fn check_01_analytic_equivalence() -> CheckResult {
    run_check(1, "analytic equivalence", || {
        let a = 1.0;
        let grid = linspace(0.0, 10.0 / a, 101);
        let sched = PulseSchedule::free_evolution();
        let cl = Cluster::new(vec![0])?;
        let mut worst: f64 = 0.0;
        for ratio in [0.0, 0.1, 0.5, 1.0, 5.0] {
            let spec = single_spin_spec(a, ratio * a)?;
            let curve = ClusterPropagator::new(&spec, &cl)?.coherence_curve(&sched, &grid)?;
            for (p, &t) in grid.iter().enumerate() {
                let dev = (curve[p] - single_spin_analytic(a, ratio * a, t)).norm();
                worst = worst.max(dev);
            }
        }
        Ok((worst < 1e-9, format!("max |dev| = {worst:.3e} (tol 1e-9)")))
    })
}

/// 2. On the dissipative 8-spin chain, deviation from the exact solution is
/// nonincreasing in the expansion order, and full order recovers the oracle.
pub fn check_02_dissipative_chain_convergence() -> CheckResult {
    run_check(2, "dissipative chain convergence", || {
        let grid = linspace(0.0, 2.0, 41);
        let sched = PulseSchedule::free_evolution();
        let mut monotone_seeds = 0usize;
        let mut worst_full: f64 = 0.0;
        let mut detail_devs = String::new();
        for seed in 0..10u64 {
            let spec = build_chain(8, 0.1 * TAU, 2.0 * TAU, seed)?.with_depolarization(0.01);
            let run = run_mecce(&spec, NeighborRule::GraphEdges, 8, &sched, &grid)?;
            let exact = exact_coherence(&spec, &sched, &grid)?;
            let dev = |vals: &[Cplx]| {
                vals.iter()
                    .zip(&exact.values)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0f64, f64::max)
            };
            let d: Vec<f64> = (1..=5).map(|k| dev(&run.table.total_at_order(k))).collect();
            let d8 = dev(&run.table.total_at_order(8));
            worst_full = worst_full.max(d8);
            let monotone = d.windows(2).all(|w| w[1] <= w[0] + 1e-12);
            if monotone {
                monotone_seeds += 1;
            }
            if seed == 0 {
                detail_devs = d
                    .iter()
                    .map(|x| format!("{x:.3e}"))
                    .collect::<Vec<_>>()
                    .join(", ");
            }
        }
        let pass = monotone_seeds >= 9 && worst_full < 1e-6;
        Ok((
            pass,
            format!(
                "monotone seeds {monotone_seeds}/10 (need >= 9), full-order dev {worst_full:.3e} \
                 (tol 1e-6), seed-0 devs k=1..5: {detail_devs}"
            ),
        ))
    })
}

/// 3. With every jump rate zero, the master-equation route reproduces the
/// conventional two-branch unitary CCE at every order.
pub fn check_03_dissipation_free_limit() -> CheckResult {
    run_check(3, "dissipation-free limit", || {
        let spec = build_chain(8, 0.1 * TAU, 2.0 * TAU, 3)?;
        let grid = linspace(0.0, 1.5, 9);
        let sched = PulseSchedule::free_evolution();
        let me = run_mecce_route(
            &spec,
            NeighborRule::GraphEdges,
            8,
            &sched,
            &grid,
            PropagationRoute::MasterEquation,
        )?;
        let un = run_mecce_route(
            &spec,
            NeighborRule::GraphEdges,
            8,
            &sched,
            &grid,
            PropagationRoute::Unitary,
        )?;
        let mut worst: f64 = 0.0;
        for k in 1..=8 {
            let a = me.table.total_at_order(k);
            let b = un.table.total_at_order(k);
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max((x - y).norm());
            }
        }
        Ok((worst < 1e-10, format!("max |ME - unitary| over orders 1..8 = {worst:.3e} (tol 1e-10)")))
    })
}

/// 4. Static fields refocus exactly under a Hahn echo.
pub fn check_04_echo_refocusing() -> CheckResult {
    run_check(4, "echo refocusing", || {
        let a = [1.7, 0.2, 2.9, 0.8, 1.1, 2.3];
        let bath: Vec<BathSpin> = a
            .iter()
            .enumerate()
            .map(|(k, &ak)| BathSpin { index: k, position: None, coupling: ak })
            .collect();
        let spec =
            SystemSpec::new(bath, CouplingGraph::default(), vec![], BathState::maximally_mixed(6), 0)?;
        let grid = linspace(0.0, 10.0, 21);
        let sched = PulseSchedule::hahn_echo();
        let run = run_mecce(&spec, NeighborRule::GraphEdges, 2, &sched, &grid)?;
        let exact = exact_coherence(&spec, &sched, &grid)?;
        let mut worst: f64 = 0.0;
        for (x, y) in run.total().iter().zip(&exact.values) {
            worst = worst.max((x - Cplx::new(1.0, 0.0)).norm());
            worst = worst.max((y - Cplx::new(1.0, 0.0)).norm());
        }
        Ok((worst < 1e-10, format!("max |L - 1| = {worst:.3e} (tol 1e-10)")))
    })
}

/// 5. Hahn-echo T2 of a single dissipative spin is nonmonotonic in the flip
/// rate: slow flips barely decohere, fast flips motionally narrow, and the
/// worst decoherence sits near gamma ~ a.
pub fn check_05_motional_narrowing() -> CheckResult {
    run_check(5, "motional narrowing", || {
        let a = 1.0;
        let sched = PulseSchedule::hahn_echo();
        let cl = Cluster::new(vec![0])?;
        let t2_of = |gamma: f64, t_max: f64| -> Result<Option<f64>, Error> {
            let spec = single_spin_spec(a, gamma)?;
            let grid = linspace(0.0, t_max, 601);
            let values = ClusterPropagator::new(&spec, &cl)?.coherence_curve(&sched, &grid)?;
            CoherenceCurve {
                times: grid,
                values,
                order: None,
                seed: None,
                label: "t2".into(),
            }
            .extract_t2()
        };
        let t2_slow = t2_of(0.01 * a, 600.0)?;
        let t2_mid = t2_of(a, 30.0)?;
        let t2_fast = t2_of(5.0 * a, 150.0)?;
        let (Some(slow), Some(mid), Some(fast)) = (t2_slow, t2_mid, t2_fast) else {
            return Ok((
                false,
                format!("missing T2 crossing: slow={t2_slow:?} mid={t2_mid:?} fast={t2_fast:?}"),
            ));
        };
        let pass = slow > mid && fast > mid;
        Ok((
            pass,
            format!(
                "T2(gamma=0.01a)={slow:.3}, T2(gamma=a)={mid:.3}, T2(gamma=5a)={fast:.3}; \
                 need both outer values > middle"
            ),
        ))
    })
}

/// 6. On the strongly interacting dissipative 2D lattice, the separability
/// defect dL never goes meaningfully negative: dissipation can only suppress
/// the coherent pair decay, not enhance it.
pub fn check_06_factorization_bound() -> CheckResult {
    run_check(6, "factorization bound", || {
        // Decay window: |L| is below 0.02 by t = 0.3. Beyond it the coherent
        // CCE factor of the diagnostic diverges (zero-crossing pathology of
        // the dissipation-free expansion) and the comparison is meaningless.
        let grid = linspace(0.0, 0.3, 13);
        let sched = PulseSchedule::hahn_echo();
        let mut min_delta = f64::INFINITY;
        for seed in 0..5u64 {
            // Infinite-temperature bath: the suppression-of-coherent-
            // interactions argument behind dL >= 0 is a statement about the
            // maximally mixed state; a specific pure product state can beat
            // the factorized form (measured dips to -0.18).
            let spec = build_lattice2d(6, 4.0 * TAU, 2.0 * TAU, seed, false)?
                .with_initial(BathState::maximally_mixed(36))
                .with_depolarization(TAU);
            let d = factorization_diagnostic(&spec, NeighborRule::GraphEdges, 4, &sched, &grid)?;
            for v in &d.delta {
                min_delta = min_delta.min(v.re);
            }
        }
        Ok((
            min_delta >= -1e-6,
            format!("min Re dL over 5 seeds = {min_delta:.3e} (bound -1e-6)"),
        ))
    })
}

/// 7. In the weak-coupling chain regime (a >> J) decoherence is almost
/// separable into coherent and dissipative factors.
pub fn check_07_separable_regime() -> CheckResult {
    run_check(7, "separable regime", || {
        // Hahn echo: singleton coherent phases refocus to 1, so the
        // dL product formula compares like with like (under free evolution
        // the singleton phases would enter the product twice)
        let grid = linspace(0.0, 2.0, 21);
        let sched = PulseSchedule::hahn_echo();
        let mut worst: f64 = 0.0;
        for seed in 0..5u64 {
            let spec = build_chain(8, 0.1 * TAU, 2.0 * TAU, seed)?.with_depolarization(0.01);
            let d = factorization_diagnostic(&spec, NeighborRule::GraphEdges, 4, &sched, &grid)?;
            for v in &d.delta {
                worst = worst.max(v.norm());
            }
        }
        Ok((worst < 0.02, format!("max |dL| over 5 seeds = {worst:.3e} (tol 0.02)")))
    })
}

/// 8. For a bath of disjoint pairs, order-2 truncation is not an
/// approximation at all.
pub fn check_08_disjoint_exactness() -> CheckResult {
    run_check(8, "disjoint exactness", || {
        let bath: Vec<BathSpin> = (0..6)
            .map(|k| BathSpin { index: k, position: None, coupling: 0.4 + 0.37 * k as f64 })
            .collect();
        let graph = CouplingGraph::new(vec![(0, 1, 0.23), (2, 3, 0.11), (4, 5, 0.31)])?;
        let spec = SystemSpec::new(bath, graph, vec![], BathState::neel(6), 0)?
            .with_depolarization(0.05)
            .with_exchange(0.04);
        let grid = linspace(0.0, 5.0, 21);
        let sched = PulseSchedule::free_evolution();
        let run = run_mecce(&spec, NeighborRule::GraphEdges, 2, &sched, &grid)?;
        let exact = exact_coherence(&spec, &sched, &grid)?;
        let worst = run
            .total()
            .iter()
            .zip(&exact.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        Ok((worst < 1e-8, format!("max |order-2 - exact| = {worst:.3e} (tol 1e-8)")))
    })
}

/// 9. Near-surface NV model: dissipation only shortens coherence, T2 drops
/// when flips are included, and orders 2 and 3 already agree.
pub fn check_09_nv_surface_ordering() -> CheckResult {
    run_check(9, "nv-surface ordering", || {
        let rule = NeighborRule::DistanceCutoff(40.0);
        let sched = PulseSchedule::hahn_echo();
        let grid = linspace(0.0, 300e-6, 31);
        // Poisson placement regularly produces resonant surface pairs
        // (J comparable to the coupling difference, both much larger than
        // gamma) whose pair contribution oscillates deeply through near-zero;
        // the division guard is raised to a physically meaningful level so
        // the recursion pins such clusters once their divisor decays away
        let opts = RunOptions { guard_eps: 0.1, ..RunOptions::default() };
        let mut t2_ordered = 0usize;
        let mut worst_pointwise: f64 = -f64::INFINITY;
        let mut worst_order_dev: f64 = 0.0;
        let mut order_dev_ok = 0usize;
        for seed in 0..10u64 {
            let spec = build_nv_surface(10.0, 0.001, 100e-6, 200.0, seed, None)?;
            let me = run_mecce_opts(&spec, rule, 3, &sched, &grid, &opts)?;
            let coh_spec = spec.clone().without_dissipation();
            let cce = run_mecce_opts(&coh_spec, rule, 3, &sched, &grid, &opts)?;
            let me3 = me.total();
            let cce3 = cce.total();
            for (a, b) in me3.iter().zip(&cce3) {
                worst_pointwise = worst_pointwise.max(a.norm() - b.norm());
            }
            let me2 = me.table.total_at_order(2);
            let seed_dev = me2
                .iter()
                .zip(&me3)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max);
            worst_order_dev = worst_order_dev.max(seed_dev);
            if seed_dev < 0.02 {
                order_dev_ok += 1;
            }
            let curve = |values: Vec<Cplx>| CoherenceCurve {
                times: grid.clone(),
                values,
                order: None,
                seed: Some(seed),
                label: "nv".into(),
            };
            let t2_me = curve(me3.clone()).extract_t2()?;
            let t2_cce = curve(cce3).extract_t2()?;
            // a curve that never crosses 1/e has, for this comparison, an
            // effectively infinite T2
            let lt = match (t2_me, t2_cce) {
                (Some(a), Some(b)) => a < b,
                (Some(_), None) => true,
                _ => false,
            };
            if lt {
                t2_ordered += 1;
            }
        }
        let pass = worst_pointwise <= 1e-6 && t2_ordered >= 8 && worst_order_dev < 0.02;
        // The order-agreement bound is not reachable on unselected Poisson
        // draws: a resonant surface pair makes orders 2/3/4 oscillate around
        // the exact solution (full order does match the exact reference; see
        // the oracle tests), so the deviation is reported per seed instead of
        // silently relaxing the bound.
        Ok((
            pass,
            format!(
                "max(|L_ME| - |L_CCE|) = {worst_pointwise:.3e} (slack 1e-6), \
                 T2 ordering {t2_ordered}/10 (need >= 8), order 2-vs-3 dev {worst_order_dev:.3e} \
                 (tol 0.02; {order_dev_ok}/10 seeds within tolerance — resonant surface pairs \
                 with exchange near the coupling difference defeat low-order convergence)"
            ),
        ))
    })
}

/// 10. Physicality: coherence magnitudes stay bounded by 1 across
/// representative runs, and the unprojected evolution preserves trace and
/// positivity.
pub fn check_10_physicality() -> CheckResult {
    run_check(10, "physicality suite", || {
        let mut max_mag: f64 = 0.0;
        let mut track = |values: &[Cplx]| {
            for v in values {
                max_mag = max_mag.max(v.norm());
            }
        };
        // representative expansion runs: chain, lattice, NV surface
        let chain = build_chain(6, 0.1 * TAU, 2.0 * TAU, 1)?.with_depolarization(0.01);
        let grid = linspace(0.0, 3.0, 25);
        track(&run_mecce(&chain, NeighborRule::GraphEdges, 4, &PulseSchedule::free_evolution(), &grid)?.total());
        track(&run_mecce(&chain, NeighborRule::GraphEdges, 4, &PulseSchedule::hahn_echo(), &grid)?.total());
        let lattice = build_lattice2d(4, 4.0 * TAU, 2.0 * TAU, 2, false)?.with_depolarization(TAU);
        track(
            &run_mecce(&lattice, NeighborRule::GraphEdges, 3, &PulseSchedule::hahn_echo(), &linspace(0.0, 0.6, 13))?
                .total(),
        );
        let nv = build_nv_surface(10.0, 0.001, 100e-6, 200.0, 0, None)?;
        let nv_opts = RunOptions { guard_eps: 0.1, ..RunOptions::default() };
        track(
            &run_mecce_opts(
                &nv,
                NeighborRule::DistanceCutoff(40.0),
                3,
                &PulseSchedule::hahn_echo(),
                &linspace(0.0, 300e-6, 16),
                &nv_opts,
            )?
            .total(),
        );

        // unprojected GKSL sanity on random small instances
        let mut worst_trace: f64 = 0.0;
        let mut worst_eig: f64 = 0.0;
        for (n, seed) in [(4usize, 11u64), (5, 12), (6, 13)] {
            let spec = build_chain(n, 0.2 * TAU, 1.5 * TAU, seed)?
                .with_depolarization(0.1)
                .with_exchange(0.07);
            let rep = exact_unprojected(&spec, &linspace(0.0, 2.0, 9))?;
            for tr in &rep.traces {
                worst_trace = worst_trace.max((tr - Cplx::new(1.0, 0.0)).norm());
            }
            for &mn in &rep.min_eigenvalues {
                worst_eig = worst_eig.min(mn).min(0.0);
            }
        }
        let pass = max_mag <= 1.0 + 1e-8 && worst_trace < 1e-10 && worst_eig >= -1e-10;
        Ok((
            pass,
            format!(
                "max |L| = {max_mag:.12} (bound 1+1e-8), trace dev {worst_trace:.3e} (tol 1e-10), \
                 min eigenvalue {worst_eig:.3e} (bound -1e-10)"
            ),
        ))
    })
}

/// 11. Two-site exchange dissipation: the generated Liouvillian matches a
/// hand-built one entry by entry, and the expansion tracks the exact solution
/// on an exchange-dissipative chain.
pub fn check_11_collective_dissipation() -> CheckResult {
    run_check(11, "collective dissipation", || {
        // (a) hand-built 16x16 Liouvillian for two spins with exchange jumps
        let (a0, a1, j, rate) = (1.1, 0.6, 0.31, 0.2);
        let spec = SystemSpec::new(
            vec![
                BathSpin { index: 0, position: None, coupling: a0 },
                BathSpin { index: 1, position: None, coupling: a1 },
            ],
            CouplingGraph::new(vec![(0, 1, j)])?,
            vec![JumpSpec::exchange_up(0, 1, rate), JumpSpec::exchange_down(0, 1, rate)],
            BathState::maximally_mixed(2),
            0,
        )?;
        let cl = Cluster::new(vec![0, 1])?;
        let h = project_hamiltonians(&spec, &cl)?;
        let built = build_generator(&h, &cluster_jumps(&spec, &cl)).g01.superop_dense();

        let hand = hand_built_pair_liouvillian(a0, a1, j, rate);
        let dev_gen = built.sub(&hand).max_abs();

        // (b) exchange-dissipative 6-spin chain: order 4 vs exact
        let chain = build_chain(6, 0.1 * TAU, 2.0 * TAU, 7)?.with_exchange(0.1);
        let grid = linspace(0.0, 2.0, 21);
        let sched = PulseSchedule::free_evolution();
        let run = run_mecce(&chain, NeighborRule::GraphEdges, 4, &sched, &grid)?;
        let exact = exact_coherence(&chain, &sched, &grid)?;
        let dev_chain = run
            .total()
            .iter()
            .zip(&exact.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        let pass = dev_gen < 1e-12 && dev_chain < 0.02;
        Ok((
            pass,
            format!(
                "generator vs hand-built dev {dev_gen:.3e} (tol 1e-12), order-4 vs exact dev \
                 {dev_chain:.3e} (tol 0.02)"
            ),
        ))
    })
}

/// Fully independent construction of the two-spin projected Liouvillian with
/// exchange dissipation: every operator written out as explicit 4x4 entries,
/// the superoperator assembled with dense Kronecker products only.
fn hand_built_pair_liouvillian(a0: f64, a1: f64, j: f64, rate: f64) -> Matrix {
    let z = (0.0, 0.0);
    // basis |00>, |01>, |10>, |11>, index 0 = up
    let diag =
        |d: [f64; 4]| Matrix::from_fn(4, 4, |r, c| if r == c { Cplx::new(d[r], 0.0) } else { Cplx::new(0.0, 0.0) });
    let mut h0 = diag([
        (a0 + a1) / 4.0 - j / 2.0,
        (a0 - a1) / 4.0 + j / 2.0,
        (-a0 + a1) / 4.0 + j / 2.0,
        (-a0 - a1) / 4.0 - j / 2.0,
    ]);
    h0.set(1, 2, Cplx::new(j / 2.0, 0.0));
    h0.set(2, 1, Cplx::new(j / 2.0, 0.0));
    let mut h1 = diag([
        -(a0 + a1) / 4.0 - j / 2.0,
        -(a0 - a1) / 4.0 + j / 2.0,
        (a0 - a1) / 4.0 + j / 2.0,
        (a0 + a1) / 4.0 - j / 2.0,
    ]);
    h1.set(1, 2, Cplx::new(j / 2.0, 0.0));
    h1.set(2, 1, Cplx::new(j / 2.0, 0.0));

    // L_up = I-^0 (x) I+^1 = |10><01|, L_down = I+^0 (x) I-^1 = |01><10|
    let l_up = Matrix::from_rows(&[
        &[z, z, z, z],
        &[z, z, z, z],
        &[z, (1.0, 0.0), z, z],
        &[z, z, z, z],
    ]);
    let l_down = l_up.transpose();

    let id = Matrix::identity(4);
    let mi = Cplx::new(0.0, -1.0);
    let pi = Cplx::new(0.0, 1.0);
    let mut g = id.kron(&h0).scale(mi).add(&h1.transpose().kron(&id).scale(pi));
    for l in [&l_up, &l_down] {
        let m = l.adjoint().matmul(l);
        g = g
            .add(&l.conj().kron(l).scale(Cplx::new(rate, 0.0)))
            .add(&id.kron(&m).scale(Cplx::new(-rate / 2.0, 0.0)))
            .add(&m.transpose().kron(&id).scale(Cplx::new(-rate / 2.0, 0.0)));
    }
    g
}
