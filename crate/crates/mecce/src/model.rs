//! Physical system definition: bath spins, couplings, dissipation channels,
//! pulse schedules, initial states, and the three model builders (random
//! chain, 2D lattice, near-surface NV).
//!
//! All couplings and rates are carried in angular-frequency units (rad per
//! unit time). The chain and lattice models use dimensionless time; the NV
//! surface model uses SI seconds.

use crate::error::Error;
use crate::{Cplx, Matrix};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

/// Electron-electron dipolar constant mu0/(4 pi) * hbar * gamma_e^2 in
/// rad nm^3 / s (distances in nm, rates in rad/s). At 1 nm separation this
/// gives 2 pi * 52 MHz.
pub const D_EE_RAD_NM3_PER_S: f64 = {
    const MU0_OVER_4PI: f64 = 1e-7; // T m / A
    const HBAR: f64 = 1.054571817e-34; // J s
    const GAMMA_E: f64 = 1.76085963023e11; // rad / (s T)
    MU0_OVER_4PI * HBAR * GAMMA_E * GAMMA_E * 1e27
};

/// One bath spin: id, optional position (nm), and its coupling `a_i` to the
/// central spin (rad/time).
#[derive(Debug, Clone, PartialEq)]
pub struct BathSpin {
    pub index: usize,
    pub position: Option<[f64; 3]>,
    pub coupling: f64,
}

/// Intrabath couplings `J_ij` as an undirected edge list (i < j).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CouplingGraph {
    edges: Vec<(usize, usize, f64)>,
}

impl CouplingGraph {
    pub fn new(edges: Vec<(usize, usize, f64)>) -> Result<Self, Error> {
        let mut norm: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
        for (i, j, jij) in edges {
            if i == j {
                return Err(Error::InvalidModel(format!("self-edge on spin {i}")));
            }
            if !jij.is_finite() {
                return Err(Error::InvalidModel(format!("non-finite J on edge ({i}, {j})")));
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if norm.iter().any(|&(x, y, _)| (x, y) == (a, b)) {
                return Err(Error::InvalidModel(format!("duplicate edge ({a}, {b})")));
            }
            norm.push((a, b, jij));
        }
        norm.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Ok(Self { edges: norm })
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Kind of incoherent channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    /// `I_+` on one spin.
    Raise,
    /// `I_-` on one spin.
    Lower,
    /// `I_-^i I_+^j` on an ordered pair (excitation hops i -> j).
    ExchangeUp,
    /// `I_+^i I_-^j` on an ordered pair.
    ExchangeDown,
}

/// One dissipative channel with rate `gamma >= 0` (1/time).
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSpec {
    pub kind: JumpKind,
    pub targets: Vec<usize>,
    pub rate: f64,
}

impl JumpSpec {
    pub fn raise(spin: usize, rate: f64) -> Self {
        Self { kind: JumpKind::Raise, targets: vec![spin], rate }
    }

    pub fn lower(spin: usize, rate: f64) -> Self {
        Self { kind: JumpKind::Lower, targets: vec![spin], rate }
    }

    pub fn exchange_up(i: usize, j: usize, rate: f64) -> Self {
        Self { kind: JumpKind::ExchangeUp, targets: vec![i, j], rate }
    }

    pub fn exchange_down(i: usize, j: usize, rate: f64) -> Self {
        Self { kind: JumpKind::ExchangeDown, targets: vec![i, j], rate }
    }

    pub fn validate(&self, n_spins: usize) -> Result<(), Error> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidModel(format!("jump rate {} invalid", self.rate)));
        }
        let expect = match self.kind {
            JumpKind::Raise | JumpKind::Lower => 1,
            JumpKind::ExchangeUp | JumpKind::ExchangeDown => 2,
        };
        if self.targets.len() != expect {
            return Err(Error::InvalidModel(format!(
                "{:?} jump needs {expect} target(s), got {}",
                self.kind,
                self.targets.len()
            )));
        }
        if expect == 2 && self.targets[0] == self.targets[1] {
            return Err(Error::InvalidModel("exchange jump targets must differ".into()));
        }
        for &t in &self.targets {
            if t >= n_spins {
                return Err(Error::InvalidModel(format!("jump target {t} out of range")));
            }
        }
        Ok(())
    }
}

/// Placement convention for the pi-pulse train.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseTiming {
    /// `t_k = T (2k - 1) / (2p)`; p = 1 is the Hahn echo.
    Cpmg,
    /// `t_k = T k / (p + 1)`.
    Equidistant,
}

/// A train of `p` instantaneous pi-pulses over a total evolution time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSchedule {
    pub pulses: usize,
    pub timing: PulseTiming,
    pub total_time: f64,
}

impl PulseSchedule {
    pub fn free_evolution() -> Self {
        Self { pulses: 0, timing: PulseTiming::Cpmg, total_time: 0.0 }
    }

    pub fn hahn_echo() -> Self {
        Self { pulses: 1, timing: PulseTiming::Cpmg, total_time: 0.0 }
    }

    pub fn cpmg(pulses: usize) -> Self {
        Self { pulses, timing: PulseTiming::Cpmg, total_time: 0.0 }
    }

    /// Same pulse pattern stretched to total time `t`.
    pub fn scaled_to(&self, t: f64) -> Self {
        Self { total_time: t, ..*self }
    }

    /// Pulse instants, strictly increasing inside `(0, total_time)`.
    pub fn pulse_times(&self) -> Vec<f64> {
        let (p, tt) = (self.pulses, self.total_time);
        match self.timing {
            PulseTiming::Cpmg => {
                (1..=p).map(|k| tt * (2 * k - 1) as f64 / (2 * p) as f64).collect()
            }
            PulseTiming::Equidistant => {
                (1..=p).map(|k| tt * k as f64 / (p + 1) as f64).collect()
            }
        }
    }
}

/// How the bath starts out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathStateKind {
    /// Alternating up/down product state, spin 0 up.
    Neel,
    /// Identity/2 on every spin (infinite-temperature limit).
    MaximallyMixed,
    /// Independent Haar-random pure states, one per spin.
    RandomProduct { seed: u64 },
    /// Independent random computational-basis states.
    RandomBasis { seed: u64 },
    Explicit,
}

/// Initial bath state as a product of per-spin 2x2 density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct BathState {
    pub kind: BathStateKind,
    states: Vec<Matrix>,
}

fn ket_density(up: Cplx, down: Cplx) -> Matrix {
    Matrix::from_fn(2, 2, |r, c| {
        let amp = |k: usize| if k == 0 { up } else { down };
        amp(r) * amp(c).conj()
    })
}

impl BathState {
    pub fn neel(n: usize) -> Self {
        let states = (0..n)
            .map(|i| {
                if i % 2 == 0 {
                    ket_density(Cplx::new(1.0, 0.0), Cplx::new(0.0, 0.0))
                } else {
                    ket_density(Cplx::new(0.0, 0.0), Cplx::new(1.0, 0.0))
                }
            })
            .collect();
        Self { kind: BathStateKind::Neel, states }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let half = Matrix::identity(2).scale(Cplx::new(0.5, 0.0));
        Self { kind: BathStateKind::MaximallyMixed, states: vec![half; n] }
    }

    pub fn random_product(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = (0..n)
            .map(|_| {
                let g = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
                let up = Cplx::new(g(&mut rng), g(&mut rng));
                let down = Cplx::new(g(&mut rng), g(&mut rng));
                let norm = (up.norm_sqr() + down.norm_sqr()).sqrt();
                ket_density(up / norm, down / norm)
            })
            .collect();
        Self { kind: BathStateKind::RandomProduct { seed }, states }
    }

    pub fn random_basis(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = (0..n)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    ket_density(Cplx::new(1.0, 0.0), Cplx::new(0.0, 0.0))
                } else {
                    ket_density(Cplx::new(0.0, 0.0), Cplx::new(1.0, 0.0))
                }
            })
            .collect();
        Self { kind: BathStateKind::RandomBasis { seed }, states }
    }

    pub fn explicit(states: Vec<Matrix>) -> Result<Self, Error> {
        let s = Self { kind: BathStateKind::Explicit, states };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// 2x2 density matrix of one spin.
    pub fn spin_state(&self, i: usize) -> &Matrix {
        &self.states[i]
    }

    pub fn validate(&self) -> Result<(), Error> {
        for (i, m) in self.states.iter().enumerate() {
            let bad = |what: &str| {
                Err(Error::InvalidModel(format!("spin {i} initial state not {what}")))
            };
            if m.rows() != 2 || m.cols() != 2 {
                return bad("2x2");
            }
            if !m.is_hermitian(1e-12) {
                return bad("Hermitian");
            }
            if (m.trace().re - 1.0).abs() > 1e-12 {
                return bad("unit trace");
            }
            // 2x2 PSD: nonnegative diagonal and determinant
            let det = (m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0)).re;
            if m.get(0, 0).re < -1e-12 || m.get(1, 1).re < -1e-12 || det < -1e-12 {
                return bad("positive semidefinite");
            }
        }
        Ok(())
    }
}

/// Complete system description consumed by the solvers.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub bath: Vec<BathSpin>,
    pub graph: CouplingGraph,
    pub jumps: Vec<JumpSpec>,
    pub initial: BathState,
    pub seed: u64,
}

impl SystemSpec {
    pub fn new(
        bath: Vec<BathSpin>,
        graph: CouplingGraph,
        jumps: Vec<JumpSpec>,
        initial: BathState,
        seed: u64,
    ) -> Result<Self, Error> {
        let spec = Self { bath, graph, jumps, initial, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_spins(&self) -> usize {
        self.bath.len()
    }

    pub fn validate(&self) -> Result<(), Error> {
        let n = self.bath.len();
        for (k, s) in self.bath.iter().enumerate() {
            if s.index != k {
                return Err(Error::InvalidModel(format!(
                    "bath spin at slot {k} has index {}",
                    s.index
                )));
            }
            if !s.coupling.is_finite() {
                return Err(Error::InvalidModel(format!("non-finite coupling on spin {k}")));
            }
        }
        for &(i, j, _) in self.graph.edges() {
            if i >= n || j >= n {
                return Err(Error::InvalidModel(format!("edge ({i}, {j}) out of range")));
            }
        }
        for jump in &self.jumps {
            jump.validate(n)?;
        }
        if self.initial.len() != n {
            return Err(Error::InvalidModel(format!(
                "initial state covers {} spins, bath has {n}",
                self.initial.len()
            )));
        }
        self.initial.validate()
    }

    /// Add raising and lowering channels with a common rate on every spin.
    pub fn with_depolarization(mut self, rate: f64) -> Self {
        for i in 0..self.n_spins() {
            self.jumps.push(JumpSpec::raise(i, rate));
            self.jumps.push(JumpSpec::lower(i, rate));
        }
        self
    }

    /// Add two-site incoherent exchange on every coupling-graph edge.
    pub fn with_exchange(mut self, rate: f64) -> Self {
        let edges: Vec<_> = self.graph.edges().to_vec();
        for (i, j, _) in edges {
            self.jumps.push(JumpSpec::exchange_up(i, j, rate));
            self.jumps.push(JumpSpec::exchange_down(i, j, rate));
        }
        self
    }

    /// Replace every jump rate with zero (the coherent / conventional-CCE limit).
    pub fn without_dissipation(mut self) -> Self {
        self.jumps.clear();
        self
    }

    pub fn with_initial(mut self, initial: BathState) -> Self {
        self.initial = initial;
        self
    }
}

/// Nearest-neighbor chain with `J ~ U[0, j_max]`, `a ~ U[0, a_max]` and a
/// Neel initial state. No dissipation; add it with
/// [`SystemSpec::with_depolarization`] or [`SystemSpec::with_exchange`].
pub fn build_chain(n: usize, j_max: f64, a_max: f64, seed: u64) -> Result<SystemSpec, Error> {
    if n == 0 {
        return Err(Error::InvalidModel("chain needs at least one spin".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bath: Vec<BathSpin> = (0..n)
        .map(|i| BathSpin { index: i, position: None, coupling: rng.gen_range(0.0..=a_max) })
        .collect();
    let edges: Vec<(usize, usize, f64)> =
        (0..n.saturating_sub(1)).map(|i| (i, i + 1, rng.gen_range(0.0..=j_max))).collect();
    SystemSpec::new(bath, CouplingGraph::new(edges)?, vec![], BathState::neel(n), seed)
}

/// Square lattice with uniform nearest-neighbor `J`, `a ~ U[0, a_max]`, and a
/// Haar-random product initial state.
pub fn build_lattice2d(
    side: usize,
    j: f64,
    a_max: f64,
    seed: u64,
    periodic: bool,
) -> Result<SystemSpec, Error> {
    if side == 0 {
        return Err(Error::InvalidModel("lattice needs side >= 1".into()));
    }
    let n = side * side;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bath: Vec<BathSpin> = (0..n)
        .map(|i| BathSpin {
            index: i,
            position: Some([(i % side) as f64, (i / side) as f64, 0.0]),
            coupling: rng.gen_range(0.0..=a_max),
        })
        .collect();
    let mut edges = Vec::new();
    let at = |x: usize, y: usize| y * side + x;
    for y in 0..side {
        for x in 0..side {
            if x + 1 < side {
                edges.push((at(x, y), at(x + 1, y), j));
            } else if periodic && side > 2 {
                edges.push((at(x, y), at(0, y), j));
            }
            if y + 1 < side {
                edges.push((at(x, y), at(x, y + 1), j));
            } else if periodic && side > 2 {
                edges.push((at(x, y), at(x, 0), j));
            }
        }
    }
    SystemSpec::new(
        bath,
        CouplingGraph::new(edges)?,
        vec![],
        BathState::random_product(n, seed),
        seed,
    )
}

/// Secular point-dipole coupling `D_ee (1 - 3 cos^2 theta) / r^3` between two
/// points (nm), with `theta` measured from `axis`.
pub fn dipolar_coupling(from: [f64; 3], to: [f64; 3], axis: [f64; 3]) -> f64 {
    let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
    let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let r = r2.sqrt();
    let axis_norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let cos = (d[0] * axis[0] + d[1] * axis[1] + d[2] * axis[2]) / (r * axis_norm);
    D_EE_RAD_NM3_PER_S * (1.0 - 3.0 * cos * cos) / (r2 * r)
}

/// NV axis of a (100)-oriented diamond surface: the [111] crystal direction.
pub const NV_AXIS_111: [f64; 3] = [
    0.5773502691896258,
    0.5773502691896258,
    0.5773502691896258,
];

/// Near-surface NV model: surface electronic spins from a seeded uniform point
/// process on a square patch, secular dipolar couplings, per-spin
/// depolarization with `gamma = 1 / (2 T1)`, maximally mixed initial bath.
///
/// The central spin sits `depth` nm below the patch center; `axis` is the
/// external-field direction (defaults to the NV [111] axis). Rates are rad/s,
/// times seconds, distances nm.
pub fn build_nv_surface(
    depth_nm: f64,
    density_per_nm2: f64,
    t1_s: f64,
    extent_nm: f64,
    seed: u64,
    axis: Option<[f64; 3]>,
) -> Result<SystemSpec, Error> {
    if depth_nm < 0.0 || density_per_nm2 <= 0.0 || t1_s <= 0.0 || extent_nm <= 0.0 {
        return Err(Error::InvalidModel(
            "nv-surface needs depth >= 0, density > 0, t1 > 0, extent > 0".into(),
        ));
    }
    let axis = axis.unwrap_or(NV_AXIS_111);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = density_per_nm2 * extent_nm * extent_nm;
    let n = Poisson::new(mean)
        .map_err(|_| Error::InvalidModel("invalid Poisson mean".into()))?
        .sample(&mut rng) as usize;

    let center = [0.0, 0.0, 0.0]; // central spin at the origin, surface at z = depth
    let positions: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            [
                rng.gen_range(-extent_nm / 2.0..=extent_nm / 2.0),
                rng.gen_range(-extent_nm / 2.0..=extent_nm / 2.0),
                depth_nm,
            ]
        })
        .collect();
    let bath: Vec<BathSpin> = positions
        .iter()
        .enumerate()
        .map(|(i, &p)| BathSpin {
            index: i,
            position: Some(p),
            coupling: dipolar_coupling(center, p, axis),
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((i, j, dipolar_coupling(positions[i], positions[j], axis)));
        }
    }
    let gamma = 1.0 / (2.0 * t1_s);
    let spec = SystemSpec::new(
        bath,
        CouplingGraph::new(edges)?,
        vec![],
        BathState::maximally_mixed(n),
        seed,
    )?;
    Ok(spec.with_depolarization(gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_PI: f64 = std::f64::consts::TAU;

    #[test]
    fn chain_counts_and_ranges() {
        let spec = build_chain(12, 0.1 * TWO_PI, 2.0 * TWO_PI, 42).unwrap();
        assert_eq!(spec.n_spins(), 12);
        assert_eq!(spec.graph.len(), 11);
        for s in &spec.bath {
            assert!((0.0..=2.0 * TWO_PI).contains(&s.coupling));
        }
        for &(_, _, j) in spec.graph.edges() {
            assert!((0.0..=0.1 * TWO_PI).contains(&j));
        }
    }

    #[test]
    fn chain_degenerate_and_deterministic() {
        let one = build_chain(1, 1.0, 1.0, 0).unwrap();
        assert_eq!(one.n_spins(), 1);
        assert!(one.graph.is_empty());
        assert!(build_chain(0, 1.0, 1.0, 0).is_err());

        let a = build_chain(8, 0.5, 3.0, 7).unwrap();
        let b = build_chain(8, 0.5, 3.0, 7).unwrap();
        assert_eq!(a.bath, b.bath);
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.initial, b.initial);
    }

    #[test]
    fn lattice_edge_counts() {
        let spec = build_lattice2d(20, 4.0 * TWO_PI, 2.0 * TWO_PI, 1, false).unwrap();
        assert_eq!(spec.n_spins(), 400);
        // open boundary: 2 * side * (side - 1)
        assert_eq!(spec.graph.len(), 760);
        for s in &spec.bath {
            assert!((0.0..=2.0 * TWO_PI).contains(&s.coupling));
        }

        let tiny = build_lattice2d(1, 1.0, 1.0, 0, false).unwrap();
        assert_eq!(tiny.n_spins(), 1);
        assert!(tiny.graph.is_empty());

        let per = build_lattice2d(4, 1.0, 1.0, 0, true).unwrap();
        assert_eq!(per.graph.len(), 2 * 4 * 4);
    }

    #[test]
    fn pulse_time_conventions() {
        let hahn = PulseSchedule::hahn_echo().scaled_to(2.0);
        assert_eq!(hahn.pulse_times(), vec![1.0]);

        let free = PulseSchedule::free_evolution().scaled_to(5.0);
        assert!(free.pulse_times().is_empty());

        let cpmg2 = PulseSchedule::cpmg(2).scaled_to(1.0);
        assert_eq!(cpmg2.pulse_times(), vec![0.25, 0.75]);

        let eq3 = PulseSchedule { pulses: 3, timing: PulseTiming::Equidistant, total_time: 4.0 };
        assert_eq!(eq3.pulse_times(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn dipolar_magic_angle_and_r3() {
        let magic = (1.0f64 / 3.0).sqrt().acos();
        let axis = [0.0, 0.0, 1.0];
        let p = [magic.sin() * 5.0, 0.0, magic.cos() * 5.0];
        let a = dipolar_coupling([0.0; 3], p, axis);
        assert!(a.abs() < 1e-6 * D_EE_RAD_NM3_PER_S, "magic angle should null the coupling");

        // 1/r^3 along a fixed direction
        let a1 = dipolar_coupling([0.0; 3], [0.0, 0.0, 10.0], axis);
        let a2 = dipolar_coupling([0.0; 3], [0.0, 0.0, 20.0], axis);
        assert!((a1 / a2 - 8.0).abs() < 1e-10);
        // on-axis coupling is -2 D / r^3
        assert!((a1 - D_EE_RAD_NM3_PER_S * (-2.0) / 1000.0).abs() < 1e-6);
    }

    #[test]
    fn nv_surface_build() {
        let spec = build_nv_surface(10.0, 0.001, 100e-6, 200.0, 3, None).unwrap();
        // Poisson mean 40; same seed reproduces exactly
        let again = build_nv_surface(10.0, 0.001, 100e-6, 200.0, 3, None).unwrap();
        assert_eq!(spec.bath, again.bath);
        assert!(spec.n_spins() > 10 && spec.n_spins() < 80);
        // gamma = 1/(2 T1) = 5e3 on every channel, raise+lower per spin
        assert_eq!(spec.jumps.len(), 2 * spec.n_spins());
        for j in &spec.jumps {
            assert!((j.rate - 5e3).abs() < 1e-9);
        }
        assert_eq!(spec.initial.kind, BathStateKind::MaximallyMixed);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(CouplingGraph::new(vec![(0, 0, 1.0)]).is_err());
        assert!(CouplingGraph::new(vec![(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        let j = JumpSpec { kind: JumpKind::ExchangeUp, targets: vec![1, 1], rate: 0.1 };
        assert!(j.validate(3).is_err());
        let j = JumpSpec::raise(5, 0.1);
        assert!(j.validate(3).is_err());
        let j = JumpSpec::raise(0, -0.1);
        assert!(j.validate(3).is_err());
    }

    #[test]
    fn bath_states_are_valid_density_matrices() {
        for st in [
            BathState::neel(5),
            BathState::maximally_mixed(4),
            BathState::random_product(6, 9),
            BathState::random_basis(6, 9),
        ] {
            st.validate().unwrap();
        }
        let a = BathState::random_product(3, 1);
        let b = BathState::random_product(3, 1);
        assert_eq!(a, b);
        let c = BathState::random_product(3, 2);
        assert_ne!(a, c);
    }
}
