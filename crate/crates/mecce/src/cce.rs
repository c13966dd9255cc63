//! Cluster enumeration, the recursive factorization, and its diagnostics.
//!
//! The total coherence factorizes over clusters,
//!
//!   L(t) = prod_C Ltilde_C(t),
//!   Ltilde_C(t) = L_C(t) / prod_{C' subset C, C' enumerated} Ltilde_{C'}(t),
//!
//! where L_C is the coherence of the central spin coupled to cluster C alone.
//! Truncation keeps clusters up to a maximum size (the expansion order).

use crate::error::Error;
use crate::lindblad::{self, ClusterPropagator};
use crate::model::{PulseSchedule, SystemSpec};
use crate::{Cplx, SparseMatrix};
use rayon::prelude::*;
use std::collections::HashMap;
use std::time::{Duration, Instant};

/// Hard cap on the expansion order.
pub const ORDER_CAP: usize = 8;

/// Threshold below which a divisor contribution is numerically meaningless.
pub const DIVISION_GUARD_EPS: f64 = 1e-10;

/// A sorted, duplicate-free set of bath-spin indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cluster {
    sites: Vec<usize>,
}

impl Cluster {
    pub fn new(mut sites: Vec<usize>) -> Result<Self, Error> {
        if sites.is_empty() {
            return Err(Error::EmptyCluster);
        }
        sites.sort_unstable();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidModel("cluster has duplicate spin indices".into()));
        }
        Ok(Self { sites })
    }

    pub fn indices(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, spin: usize) -> bool {
        self.sites.binary_search(&spin).is_ok()
    }
}

/// Which pairs of spins count as adjacent when growing clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeighborRule {
    /// Spins joined by any listed coupling-graph edge.
    GraphEdges,
    /// Spins whose positions are within `r` of each other.
    DistanceCutoff(f64),
    /// Graph edges whose |J| is at least the threshold.
    MagnitudeCutoff(f64),
}

impl NeighborRule {
    /// Symmetric adjacency lists, each sorted ascending.
    pub fn adjacency(&self, spec: &SystemSpec) -> Result<Vec<Vec<usize>>, Error> {
        let n = spec.n_spins();
        let mut adj = vec![Vec::new(); n];
        let mut link = |i: usize, j: usize| {
            adj[i].push(j);
            adj[j].push(i);
        };
        match *self {
            NeighborRule::GraphEdges => {
                for &(i, j, _) in spec.graph.edges() {
                    link(i, j);
                }
            }
            NeighborRule::MagnitudeCutoff(j_min) => {
                for &(i, j, jij) in spec.graph.edges() {
                    if jij.abs() >= j_min {
                        link(i, j);
                    }
                }
            }
            NeighborRule::DistanceCutoff(r) => {
                if !(r >= 0.0) {
                    return Err(Error::InvalidModel("distance cutoff must be >= 0".into()));
                }
                let pos: Vec<[f64; 3]> = spec
                    .bath
                    .iter()
                    .map(|s| {
                        s.position.ok_or_else(|| {
                            Error::InvalidModel(
                                "distance-cutoff neighbor rule needs spin positions".into(),
                            )
                        })
                    })
                    .collect::<Result<_, _>>()?;
                for i in 0..n {
                    for j in i + 1..n {
                        let d2: f64 = (0..3).map(|k| (pos[i][k] - pos[j][k]).powi(2)).sum();
                        if d2.sqrt() <= r {
                            link(i, j);
                        }
                    }
                }
            }
        }
        for l in adj.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        Ok(adj)
    }
}

/// All singletons plus every connected subset of the adjacency relation with
/// size up to `max_order`, in canonical (size, lexicographic) order.
///
/// Connected subsets are grown by the ESU scheme: each subgraph is reached
/// exactly once, rooted at its smallest vertex.
pub fn enumerate_clusters(
    spec: &SystemSpec,
    rule: NeighborRule,
    max_order: usize,
) -> Result<Vec<Cluster>, Error> {
    if max_order < 1 {
        return Err(Error::InvalidModel("max_order must be >= 1".into()));
    }
    if max_order > ORDER_CAP {
        return Err(Error::OrderCap { order: max_order, cap: ORDER_CAP });
    }
    let n = spec.n_spins();
    let adj = rule.adjacency(spec)?;

    let mut out: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    if max_order >= 2 {
        for v in 0..n {
            let ext: Vec<usize> = adj[v].iter().copied().filter(|&u| u > v).collect();
            let mut blocked = vec![false; n];
            blocked[v] = true;
            for &u in &adj[v] {
                blocked[u] = true;
            }
            extend_subgraph(&mut vec![v], ext, &mut blocked, &adj, v, max_order, &mut out);
        }
    }

    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    debug_assert!(out.windows(2).all(|w| w[0] != w[1]));
    Ok(out.into_iter().map(|sites| Cluster { sites }).collect())
}

/// ESU recursion. `blocked` marks the current subgraph and everything already
/// offered as an extension (or discarded), so each subgraph appears once.
fn extend_subgraph(
    sub: &mut Vec<usize>,
    ext: Vec<usize>,
    blocked: &mut Vec<bool>,
    adj: &[Vec<usize>],
    root: usize,
    max_order: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if sub.len() == max_order {
        return;
    }
    let mut rest = ext;
    while let Some(w) = rest.pop() {
        let newly: Vec<usize> = adj[w]
            .iter()
            .copied()
            .filter(|&u| u > root && !blocked[u])
            .collect();
        for &u in &newly {
            blocked[u] = true;
        }
        let mut ext_next = rest.clone();
        ext_next.extend_from_slice(&newly);

        sub.push(w);
        let mut rec = sub.clone();
        rec.sort_unstable();
        out.push(rec);
        extend_subgraph(sub, ext_next, blocked, adj, root, max_order, out);
        sub.pop();

        for &u in &newly {
            blocked[u] = false;
        }
    }
}

/// How per-cluster coherences are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationRoute {
    /// Projected two-branch master equation (the method itself).
    MasterEquation,
    /// Independent two-branch unitary propagation; valid only when every
    /// jump rate is zero. Serves as the conventional-CCE reference.
    Unitary,
}

/// Per-cluster raw coherences L_C and recursive contributions Ltilde_C on a
/// shared time grid.
#[derive(Debug, Clone)]
pub struct ContributionTable {
    pub grid: Vec<f64>,
    clusters: Vec<Cluster>,
    index: HashMap<Vec<usize>, usize>,
    raw: Vec<Vec<Cplx>>,
    tilde: Vec<Vec<Cplx>>,
    /// Number of (cluster, time) guard activations during assembly.
    pub guard_events: usize,
}

impl ContributionTable {
    /// Assembles a table from per-cluster raw curves; clusters may arrive in
    /// any order, the canonical (size, lex) order is restored internally.
    pub fn from_raw(
        grid: Vec<f64>,
        entries: Vec<(Cluster, Vec<Cplx>)>,
    ) -> Result<Self, Error> {
        let mut entries = entries;
        entries.sort_by(|a, b| {
            a.0.len().cmp(&b.0.len()).then_with(|| a.0.sites.cmp(&b.0.sites))
        });
        let mut clusters = Vec::with_capacity(entries.len());
        let mut raw = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        for (c, curve) in entries {
            if curve.len() != grid.len() {
                return Err(Error::DimensionMismatch(
                    "cluster curve length differs from time grid".into(),
                ));
            }
            if index.insert(c.sites.clone(), clusters.len()).is_some() {
                return Err(Error::InvalidModel("duplicate cluster in table".into()));
            }
            clusters.push(c);
            raw.push(curve);
        }
        Ok(Self { grid, clusters, index, raw, tilde: Vec::new(), guard_events: 0 })
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn raw_curve(&self, c: &Cluster) -> Option<&[Cplx]> {
        self.index.get(&c.sites).map(|&k| self.raw[k].as_slice())
    }

    pub fn tilde_curve(&self, c: &Cluster) -> Option<&[Cplx]> {
        self.index.get(&c.sites).map(|&k| self.tilde[k].as_slice())
    }

    /// Runs the recursion with the default guard threshold.
    pub fn assemble(&mut self) -> Result<(), Error> {
        self.assemble_guarded(DIVISION_GUARD_EPS)
    }

    /// Runs the recursion in increasing cluster size. For each cluster the
    /// divisor at a time point is the product of Ltilde over its enumerated
    /// proper subclusters; once that product (or any single factor) drops
    /// below `guard_eps` in magnitude, the cluster's contribution is pinned
    /// to 1 for all later times. Guarding the product matters: deeply
    /// modulated pair contributions can combine into a vanishing denominator
    /// even when every individual factor stays well away from zero. Larger
    /// thresholds tame the zero-crossing divergence of strongly coupled
    /// subclusters at the cost of dropping their higher-order corrections.
    pub fn assemble_guarded(&mut self, guard_eps: f64) -> Result<(), Error> {
        let npts = self.grid.len();
        let mut tilde: Vec<Vec<Cplx>> = Vec::with_capacity(self.clusters.len());
        self.guard_events = 0;
        for (k, c) in self.clusters.iter().enumerate() {
            let subs = self.proper_subcluster_ids(c)?;
            let mut cur = self.raw[k].clone();
            let mut guarded_from = npts;
            for (p, v) in cur.iter_mut().enumerate() {
                let mut divisor = Cplx::new(1.0, 0.0);
                let mut guarded = false;
                for &s in &subs {
                    let f = tilde[s][p];
                    divisor *= f;
                    if f.norm() < guard_eps {
                        guarded = true;
                    }
                }
                if guarded || divisor.norm() < guard_eps {
                    guarded_from = p;
                    break;
                }
                *v /= divisor;
            }
            if guarded_from < npts {
                for v in cur.iter_mut().skip(guarded_from) {
                    *v = Cplx::new(1.0, 0.0);
                }
                self.guard_events += npts - guarded_from;
            }
            tilde.push(cur);
        }
        self.tilde = tilde;
        Ok(())
    }

    /// Indices (into the sorted cluster list) of enumerated proper
    /// subclusters, found by direct subset lookup. Singleton subsets are
    /// always enumerated, so their absence signals a broken table.
    fn proper_subcluster_ids(&self, c: &Cluster) -> Result<Vec<usize>, Error> {
        let k = c.sites.len();
        if k == 1 {
            return Ok(Vec::new());
        }
        let mut ids = Vec::new();
        for mask in 1u32..((1u32 << k) - 1) {
            let sub: Vec<usize> = (0..k)
                .filter(|&b| mask & (1 << b) != 0)
                .map(|b| c.sites[b])
                .collect();
            match self.index.get(&sub) {
                Some(&s) => ids.push(s),
                None if sub.len() == 1 => {
                    return Err(Error::MissingSubcluster(sub));
                }
                None => {} // disconnected or beyond enumeration: not part of the recursion
            }
        }
        ids.sort_unstable();
        Ok(ids)
    }

    /// Pointwise product of Ltilde over clusters of size <= `order`. With a
    /// table built at order K this reproduces the order-k total for any
    /// k <= K, because contributions only depend on smaller clusters.
    pub fn total_at_order(&self, order: usize) -> Vec<Cplx> {
        assert!(!self.tilde.is_empty(), "assemble() must run first");
        let mut total = vec![Cplx::new(1.0, 0.0); self.grid.len()];
        for (k, c) in self.clusters.iter().enumerate() {
            if c.len() > order {
                break;
            }
            for (t, v) in total.iter_mut().zip(&self.tilde[k]) {
                *t *= v;
            }
        }
        total
    }
}

/// A computed coherence curve with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceCurve {
    pub times: Vec<f64>,
    pub values: Vec<Cplx>,
    pub order: Option<usize>,
    pub seed: Option<u64>,
    pub label: String,
}

impl CoherenceCurve {
    /// First time |L| falls below 1/e of its initial magnitude, linearly
    /// interpolated; `None` when the curve never crosses.
    pub fn extract_t2(&self) -> Result<Option<f64>, Error> {
        if self.times.is_empty() || self.values.is_empty() {
            return Err(Error::DimensionMismatch("empty coherence curve".into()));
        }
        let threshold = self.values[0].norm() / std::f64::consts::E;
        let mut prev = (self.times[0], self.values[0].norm());
        for (&t, v) in self.times.iter().zip(&self.values).skip(1) {
            let mag = v.norm();
            if mag < threshold {
                let (t0, m0) = prev;
                let frac = if (m0 - mag).abs() < f64::EPSILON { 0.0 } else { (m0 - threshold) / (m0 - mag) };
                return Ok(Some(t0 + frac * (t - t0)));
            }
            prev = (t, mag);
        }
        Ok(None)
    }
}

/// Result of a full expansion run.
pub struct MecceRun {
    pub table: ContributionTable,
    pub max_order: usize,
    pub seed: u64,
    pub wall_time: Duration,
}

impl MecceRun {
    pub fn total(&self) -> Vec<Cplx> {
        self.table.total_at_order(self.max_order)
    }

    pub fn curve(&self, label: &str) -> CoherenceCurve {
        self.curve_at_order(self.max_order, label)
    }

    pub fn curve_at_order(&self, order: usize, label: &str) -> CoherenceCurve {
        CoherenceCurve {
            times: self.table.grid.clone(),
            values: self.table.total_at_order(order),
            order: Some(order),
            seed: Some(self.seed),
            label: label.to_string(),
        }
    }
}

/// Enumerate clusters, propagate each over the grid (in parallel with a
/// deterministic reduction order), and run the recursive assembly.
pub fn run_mecce(
    spec: &SystemSpec,
    rule: NeighborRule,
    max_order: usize,
    schedule: &PulseSchedule,
    grid: &[f64],
) -> Result<MecceRun, Error> {
    run_mecce_route(spec, rule, max_order, schedule, grid, PropagationRoute::MasterEquation)
}

pub fn run_mecce_route(
    spec: &SystemSpec,
    rule: NeighborRule,
    max_order: usize,
    schedule: &PulseSchedule,
    grid: &[f64],
    route: PropagationRoute,
) -> Result<MecceRun, Error> {
    run_mecce_opts(spec, rule, max_order, schedule, grid, &RunOptions { route, ..RunOptions::default() })
}

/// Solver knobs beyond the physics: propagation route and guard threshold.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub route: PropagationRoute,
    pub guard_eps: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { route: PropagationRoute::MasterEquation, guard_eps: DIVISION_GUARD_EPS }
    }
}

pub fn run_mecce_opts(
    spec: &SystemSpec,
    rule: NeighborRule,
    max_order: usize,
    schedule: &PulseSchedule,
    grid: &[f64],
    opts: &RunOptions,
) -> Result<MecceRun, Error> {
    let route = opts.route;
    let start = Instant::now();
    spec.validate()?;
    if route == PropagationRoute::Unitary && spec.jumps.iter().any(|j| j.rate != 0.0) {
        return Err(Error::InvalidModel(
            "unitary propagation route requires all jump rates to be zero".into(),
        ));
    }
    let clusters = enumerate_clusters(spec, rule, max_order)?;
    let entries: Vec<(Cluster, Vec<Cplx>)> = clusters
        .into_par_iter()
        .map(|c| {
            let curve = cluster_curve(spec, &c, schedule, grid, route)
                .map_err(|e| Error::Propagation {
                    cluster: c.indices().to_vec(),
                    reason: e.to_string(),
                })?;
            Ok((c, curve))
        })
        .collect::<Result<_, Error>>()?;
    let mut table = ContributionTable::from_raw(grid.to_vec(), entries)?;
    table.assemble_guarded(opts.guard_eps)?;
    Ok(MecceRun { table, max_order, seed: spec.seed, wall_time: start.elapsed() })
}

fn cluster_curve(
    spec: &SystemSpec,
    c: &Cluster,
    schedule: &PulseSchedule,
    grid: &[f64],
    route: PropagationRoute,
) -> Result<Vec<Cplx>, Error> {
    match route {
        PropagationRoute::MasterEquation => {
            ClusterPropagator::new(spec, c)?.coherence_curve(schedule, grid)
        }
        PropagationRoute::Unitary => grid
            .iter()
            .map(|&t| lindblad::propagate_unitary(spec, c, schedule, t))
            .collect(),
    }
}

/// The separability diagnostic
///
///   dL(t) = L_MECCE_k(t) - L_MECCE_1(t) * L_CCE_k(t),
///
/// where the last factor is the order-k expansion with every jump rate forced
/// to zero. It vanishes when dissipative and coherent decay channels act
/// independently, and stays positive when dissipation suppresses the pair
/// correlations that drive coherent decay.
pub struct FactorizationDiagnostic {
    pub times: Vec<f64>,
    pub delta: Vec<Cplx>,
    pub mecce_full: Vec<Cplx>,
    pub mecce_1: Vec<Cplx>,
    pub cce_coherent: Vec<Cplx>,
}

pub fn factorization_diagnostic(
    spec: &SystemSpec,
    rule: NeighborRule,
    order: usize,
    schedule: &PulseSchedule,
    grid: &[f64],
) -> Result<FactorizationDiagnostic, Error> {
    let full_run = run_mecce(spec, rule, order, schedule, grid)?;
    let mecce_full = full_run.total();
    let mecce_1 = full_run.table.total_at_order(1);
    let coherent_spec = spec.clone().without_dissipation();
    let cce = run_mecce(&coherent_spec, rule, order, schedule, grid)?.total();
    let delta = mecce_full
        .iter()
        .zip(mecce_1.iter().zip(&cce))
        .map(|(f, (s, c))| f - s * c)
        .collect();
    Ok(FactorizationDiagnostic {
        times: grid.to_vec(),
        delta,
        mecce_full,
        mecce_1,
        cce_coherent: cce,
    })
}

/// Convergence diagnostics: curves at the requested orders, maximum pointwise
/// deviation between consecutive orders, and the two operator-norm criteria
/// evaluated at the final grid time. Both criteria must stay well below 1 for
/// guaranteed fast convergence of the expansion.
pub struct ConvergenceReport {
    pub orders: Vec<usize>,
    pub curves: Vec<CoherenceCurve>,
    pub consecutive_max_dev: Vec<f64>,
    /// max over clusters and branches of ||H||_F * t_final.
    pub hamiltonian_criterion: f64,
    /// max over channels of gamma * ||L^+ L||_F * t_final.
    pub dissipation_criterion: f64,
}

pub fn convergence_report(
    spec: &SystemSpec,
    rule: NeighborRule,
    orders: &[usize],
    schedule: &PulseSchedule,
    grid: &[f64],
) -> Result<ConvergenceReport, Error> {
    if orders.is_empty() || orders.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidModel("orders must be nonempty and ascending".into()));
    }
    let max_order = *orders.last().unwrap();
    let run = run_mecce(spec, rule, max_order, schedule, grid)?;
    let curves: Vec<CoherenceCurve> = orders
        .iter()
        .map(|&k| run.curve_at_order(k, "convergence"))
        .collect();
    let consecutive_max_dev = curves
        .windows(2)
        .map(|w| {
            w[0].values
                .iter()
                .zip(&w[1].values)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        })
        .collect();

    let t_final = grid.last().copied().unwrap_or(0.0);
    let mut h_crit: f64 = 0.0;
    for c in run.table.clusters() {
        let h = lindblad::project_hamiltonians(spec, c)?;
        h_crit = h_crit.max(h.h0.fro_norm()).max(h.h1.fro_norm());
    }
    let mut d_crit: f64 = 0.0;
    for jump in &spec.jumps {
        let l = standalone_jump_operator(jump);
        let m = l.adjoint().matmul(&l);
        d_crit = d_crit.max(jump.rate * m.fro_norm());
    }
    Ok(ConvergenceReport {
        orders: orders.to_vec(),
        curves,
        consecutive_max_dev,
        hamiltonian_criterion: h_crit * t_final,
        dissipation_criterion: d_crit * t_final,
    })
}

/// The jump operator on just its own target spins (for norm criteria).
fn standalone_jump_operator(jump: &crate::model::JumpSpec) -> SparseMatrix {
    let c = Cluster::new(jump.targets.clone()).expect("jump targets are valid");
    let slots: Vec<usize> = (0..c.len()).collect();
    lindblad::jump_operator_in(jump, &slots, c.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{propagate, single_spin_analytic};
    use crate::model::{build_chain, BathSpin, BathState, CouplingGraph};

    fn chain_spec(n: usize, seed: u64) -> SystemSpec {
        build_chain(n, 0.1, 2.0, seed).unwrap()
    }

    #[test]
    fn path_graph_combinatorics() {
        let spec = chain_spec(12, 1);
        let c1 = enumerate_clusters(&spec, NeighborRule::GraphEdges, 1).unwrap();
        assert_eq!(c1.len(), 12);
        let c2 = enumerate_clusters(&spec, NeighborRule::GraphEdges, 2).unwrap();
        assert_eq!(c2.len(), 12 + 11);
        let c3 = enumerate_clusters(&spec, NeighborRule::GraphEdges, 3).unwrap();
        assert_eq!(c3.len(), 12 + 11 + 10);
        // canonical order, pairs are the adjacent ones
        for (k, c) in c2.iter().take(12).enumerate() {
            assert_eq!(c.indices(), &[k]);
        }
        for (k, c) in c2.iter().skip(12).enumerate() {
            assert_eq!(c.indices(), &[k, k + 1]);
        }
    }

    #[test]
    fn enumeration_has_no_duplicates_on_lattice() {
        let spec = crate::model::build_lattice2d(4, 1.0, 2.0, 3, false).unwrap();
        let cs = enumerate_clusters(&spec, NeighborRule::GraphEdges, 4).unwrap();
        let mut seen = std::collections::HashSet::new();
        for c in &cs {
            assert!(seen.insert(c.indices().to_vec()), "duplicate {:?}", c.indices());
        }
        // 4x4 grid: 16 singletons + 24 edges; size-3 connected subgraphs of a
        // grid graph: paths and corners — count them brute force
        let adj = NeighborRule::GraphEdges.adjacency(&spec).unwrap();
        let mut brute = 0usize;
        for a in 0..16 {
            for b in a + 1..16 {
                for c in b + 1..16 {
                    let e = |x: usize, y: usize| adj[x].contains(&y);
                    // grid graphs are triangle-free, so any two of the three
                    // possible edges already connect the triple
                    let edges = e(a, b) as usize + e(a, c) as usize + e(b, c) as usize;
                    if edges >= 2 {
                        brute += 1;
                    }
                }
            }
        }
        let size3 = cs.iter().filter(|c| c.len() == 3).count();
        assert_eq!(size3, brute);
        assert_eq!(cs.iter().filter(|c| c.len() == 1).count(), 16);
        assert_eq!(cs.iter().filter(|c| c.len() == 2).count(), 24);
    }

    #[test]
    fn order_cap_enforced() {
        let spec = chain_spec(4, 1);
        assert!(matches!(
            enumerate_clusters(&spec, NeighborRule::GraphEdges, 9),
            Err(Error::OrderCap { .. })
        ));
    }

    #[test]
    fn magnitude_cutoff_filters_edges() {
        let spec = SystemSpec::new(
            vec![
                BathSpin { index: 0, position: None, coupling: 1.0 },
                BathSpin { index: 1, position: None, coupling: 1.0 },
                BathSpin { index: 2, position: None, coupling: 1.0 },
            ],
            CouplingGraph::new(vec![(0, 1, 0.5), (1, 2, 0.01)]).unwrap(),
            vec![],
            BathState::maximally_mixed(3),
            0,
        )
        .unwrap();
        let cs = enumerate_clusters(&spec, NeighborRule::MagnitudeCutoff(0.1), 3).unwrap();
        assert_eq!(cs.len(), 4); // 3 singletons + {0,1}
        assert_eq!(cs[3].indices(), &[0, 1]);
    }

    #[test]
    fn distance_cutoff_rule() {
        let mk = |p: [f64; 3]| BathSpin { index: 0, position: Some(p), coupling: 1.0 };
        let mut bath = vec![mk([0.0, 0.0, 0.0]), mk([1.0, 0.0, 0.0]), mk([5.0, 0.0, 0.0])];
        for (k, s) in bath.iter_mut().enumerate() {
            s.index = k;
        }
        let spec = SystemSpec::new(bath, CouplingGraph::default(), vec![], BathState::maximally_mixed(3), 0)
            .unwrap();
        let cs = enumerate_clusters(&spec, NeighborRule::DistanceCutoff(2.0), 2).unwrap();
        assert_eq!(cs.len(), 4); // 3 singletons + the close pair
        assert_eq!(cs[3].indices(), &[0, 1]);
    }

    #[test]
    fn dissipation_only_order1_is_analytic_product() {
        // J = 0 everywhere: order-1 assembly must equal the product of the
        // closed-form single-spin curves exactly
        let gamma = 0.3;
        let a = [0.7, 1.9, 0.2, 1.1];
        let bath: Vec<BathSpin> = a
            .iter()
            .enumerate()
            .map(|(k, &ak)| BathSpin { index: k, position: None, coupling: ak })
            .collect();
        let spec = SystemSpec::new(bath, CouplingGraph::default(), vec![], BathState::maximally_mixed(4), 0)
            .unwrap()
            .with_depolarization(gamma);
        let grid: Vec<f64> = (0..40).map(|k| k as f64 * 0.1).collect();
        let run = run_mecce(&spec, NeighborRule::GraphEdges, 1, &PulseSchedule::free_evolution(), &grid)
            .unwrap();
        let total = run.total();
        for (p, &t) in grid.iter().enumerate() {
            let want: Cplx = a.iter().map(|&ak| single_spin_analytic(ak, gamma, t)).product();
            assert!((total[p] - want).norm() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn disjoint_pairs_are_exact_at_order2() {
        // three decoupled pairs: order-2 factorization is exact
        let bath: Vec<BathSpin> = (0..6)
            .map(|k| BathSpin { index: k, position: None, coupling: 0.3 + 0.4 * k as f64 })
            .collect();
        let graph = CouplingGraph::new(vec![(0, 1, 0.21), (2, 3, 0.13), (4, 5, 0.33)]).unwrap();
        let spec = SystemSpec::new(bath, graph, vec![], BathState::neel(6), 0)
            .unwrap()
            .with_depolarization(0.05);
        let grid: Vec<f64> = (0..25).map(|k| k as f64 * 0.25).collect();
        let sched = PulseSchedule::free_evolution();
        let run = run_mecce(&spec, NeighborRule::GraphEdges, 2, &sched, &grid).unwrap();
        let total = run.total();
        let full = Cluster::new((0..6).collect()).unwrap();
        let exact = ClusterPropagator::new(&spec, &full)
            .unwrap()
            .coherence_curve(&sched, &grid)
            .unwrap();
        for (got, want) in total.iter().zip(&exact) {
            assert!((got - want).norm() < 1e-8);
        }
    }

    #[test]
    fn assembly_invariant_under_entry_order() {
        let spec = chain_spec(5, 7).with_depolarization(0.1);
        let grid: Vec<f64> = (0..10).map(|k| k as f64 * 0.3).collect();
        let sched = PulseSchedule::free_evolution();
        let clusters = enumerate_clusters(&spec, NeighborRule::GraphEdges, 3).unwrap();
        let mut entries: Vec<(Cluster, Vec<Cplx>)> = clusters
            .iter()
            .map(|c| {
                let curve = ClusterPropagator::new(&spec, c)
                    .unwrap()
                    .coherence_curve(&sched, &grid)
                    .unwrap();
                (c.clone(), curve)
            })
            .collect();
        let mut t1 = ContributionTable::from_raw(grid.clone(), entries.clone()).unwrap();
        t1.assemble().unwrap();
        entries.reverse();
        let mid = entries.len() / 2;
        entries.swap(0, mid);
        let mut t2 = ContributionTable::from_raw(grid, entries).unwrap();
        t2.assemble().unwrap();
        for (a, b) in t1.total_at_order(3).iter().zip(&t2.total_at_order(3)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn singleton_contributions_independent_of_order() {
        let spec = chain_spec(6, 3).with_depolarization(0.2);
        let grid: Vec<f64> = (0..8).map(|k| k as f64 * 0.4).collect();
        let sched = PulseSchedule::free_evolution();
        let r1 = run_mecce(&spec, NeighborRule::GraphEdges, 1, &sched, &grid).unwrap();
        let r3 = run_mecce(&spec, NeighborRule::GraphEdges, 3, &sched, &grid).unwrap();
        let c = Cluster::new(vec![2]).unwrap();
        let a = r1.table.tilde_curve(&c).unwrap();
        let b = r3.table.tilde_curve(&c).unwrap();
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn division_guard_pins_and_counts() {
        // synthetic table: singleton hits exact zero mid-grid, so the pair's
        // divisor collapses and its contribution is pinned to 1 afterwards
        let grid = vec![0.0, 1.0, 2.0, 3.0];
        let one = Cplx::new(1.0, 0.0);
        let zero = Cplx::new(0.0, 0.0);
        let s0 = vec![one, one * 0.5, zero, zero];
        let s1 = vec![one; 4];
        let pair = vec![one, one * 0.4, one * 0.1, one * 0.05];
        let entries = vec![
            (Cluster::new(vec![0]).unwrap(), s0),
            (Cluster::new(vec![1]).unwrap(), s1),
            (Cluster::new(vec![0, 1]).unwrap(), pair),
        ];
        let mut t = ContributionTable::from_raw(grid, entries).unwrap();
        t.assemble().unwrap();
        assert_eq!(t.guard_events, 2);
        let tp = t.tilde_curve(&Cluster::new(vec![0, 1]).unwrap()).unwrap();
        assert!((tp[1] - Cplx::new(0.8, 0.0)).norm() < 1e-15);
        assert_eq!(tp[2], one);
        assert_eq!(tp[3], one);
    }

    #[test]
    fn extract_t2_exponential_and_none() {
        let tau = 1.7;
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        let curve = CoherenceCurve {
            values: times.iter().map(|&t| Cplx::new((-t / tau).exp(), 0.0)).collect(),
            times,
            order: None,
            seed: None,
            label: "exp".into(),
        };
        let t2 = curve.extract_t2().unwrap().unwrap();
        assert!((t2 - tau).abs() < 2e-3);
        let flat = CoherenceCurve {
            times: vec![0.0, 1.0],
            values: vec![Cplx::new(1.0, 0.0); 2],
            order: None,
            seed: None,
            label: "flat".into(),
        };
        assert_eq!(flat.extract_t2().unwrap(), None);
    }

    #[test]
    fn diagnostic_vanishes_for_static_field_echo() {
        // J = 0, gamma = 0, Hahn echo: every factor is exactly 1
        let bath: Vec<BathSpin> = (0..3)
            .map(|k| BathSpin { index: k, position: None, coupling: 0.5 + k as f64 })
            .collect();
        let spec =
            SystemSpec::new(bath, CouplingGraph::default(), vec![], BathState::maximally_mixed(3), 0)
                .unwrap();
        let grid: Vec<f64> = (0..10).map(|k| k as f64 * 0.5).collect();
        let d = factorization_diagnostic(&spec, NeighborRule::GraphEdges, 2, &PulseSchedule::hahn_echo(), &grid)
            .unwrap();
        for v in &d.delta {
            assert!(v.norm() < 1e-10);
        }
    }

    #[test]
    fn unitary_route_rejects_dissipation() {
        let spec = chain_spec(3, 2).with_depolarization(0.1);
        let grid = vec![0.0, 1.0];
        let r = run_mecce_route(
            &spec,
            NeighborRule::GraphEdges,
            2,
            &PulseSchedule::free_evolution(),
            &grid,
            PropagationRoute::Unitary,
        );
        assert!(r.is_err());
    }

    #[test]
    fn convergence_report_shapes_and_zero_dev() {
        let spec = chain_spec(5, 4).with_depolarization(0.05);
        let grid: Vec<f64> = (0..6).map(|k| k as f64 * 0.4).collect();
        let rep = convergence_report(
            &spec,
            NeighborRule::GraphEdges,
            &[2, 2, 3],
            &PulseSchedule::free_evolution(),
            &grid,
        )
        .unwrap();
        assert_eq!(rep.curves.len(), 3);
        assert_eq!(rep.consecutive_max_dev.len(), 2);
        assert!(rep.consecutive_max_dev[0] < 1e-15); // identical orders
        assert!(rep.hamiltonian_criterion > 0.0);
        assert!(rep.dissipation_criterion > 0.0);
    }

    #[test]
    fn full_order_matches_single_cluster_propagation() {
        // connected chain: assembly at order n telescopes to the full answer
        let spec = chain_spec(4, 9).with_depolarization(0.1);
        let grid: Vec<f64> = (0..12).map(|k| k as f64 * 0.3).collect();
        let sched = PulseSchedule::free_evolution();
        let run = run_mecce(&spec, NeighborRule::GraphEdges, 4, &sched, &grid).unwrap();
        let full = Cluster::new(vec![0, 1, 2, 3]).unwrap();
        let direct = ClusterPropagator::new(&spec, &full)
            .unwrap()
            .coherence_curve(&sched, &grid)
            .unwrap();
        for (a, b) in run.total().iter().zip(&direct) {
            assert!((a - b).norm() < 1e-8);
        }
        // spot-check against the one-shot propagate as well
        let t = grid[7];
        let one = propagate(&spec, &full, &sched, t).unwrap();
        assert!((one - direct[7]).norm() < 1e-10);
    }

    #[test]
    fn exchange_jumps_enter_only_pair_clusters() {
        let spec = chain_spec(3, 5).with_exchange(0.2);
        let single = Cluster::new(vec![0]).unwrap();
        let pair = Cluster::new(vec![0, 1]).unwrap();
        assert!(crate::lindblad::cluster_jumps(&spec, &single).is_empty());
        assert_eq!(crate::lindblad::cluster_jumps(&spec, &pair).len(), 2);
    }
}
