//! Experiment configuration: TOML schema, validation, and canonical hashing.
//!
//! Unit conventions (documented per field below): every *frequency* field
//! (`j_max`, `a_max`, `j`) is entered in plain cycles per unit time and
//! multiplied by 2pi internally; *rates* (`gamma`, `exchange`) and *times*
//! (`t1`, the time grid) are entered as-is.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mecce::cce::ORDER_CAP;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub dissipation: DissipationSection,
    #[serde(default)]
    pub pulses: PulseSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSection {
    /// Nearest-neighbor chain, Neel initial state.
    /// `j_max`, `a_max`: plain frequencies (x 2pi internally).
    Chain { n: usize, j_max: f64, a_max: f64 },
    /// Square lattice, Haar-random product initial state.
    /// `j`, `a_max`: plain frequencies (x 2pi internally).
    Lattice2d {
        side: usize,
        j: f64,
        a_max: f64,
        #[serde(default)]
        periodic: bool,
    },
    /// Poisson-placed surface electron spins above a central spin.
    /// Geometry in nm, `t1` in the run's time unit (seconds when using the
    /// built-in dipolar constant); couplings come out in angular units.
    /// Depolarization at rate 1/(2 t1) is built in.
    NvSurface {
        depth_nm: f64,
        density_per_nm2: f64,
        t1: f64,
        extent_nm: f64,
    },
    /// Hand-specified bath: central-spin couplings `a` (plain frequencies,
    /// x 2pi internally), coupling edges `(i, j, J)` with plain-frequency J,
    /// optional positions (needed only for distance-based neighbor rules),
    /// and an initial state (`neel` | `mixed` | `random-product`).
    Explicit {
        a: Vec<f64>,
        #[serde(default)]
        edges: Vec<(usize, usize, f64)>,
        #[serde(default)]
        positions: Option<Vec<[f64; 3]>>,
        #[serde(default = "default_initial")]
        initial: String,
    },
}

fn default_initial() -> String {
    "mixed".into()
}

/// Per-spin depolarization (`gamma` as a plain rate, or `t1` giving
/// gamma = 1/(2 t1)) plus optional two-site incoherent exchange on every
/// coupling edge. The nv-surface model sets its own depolarization; for it
/// this section may only add exchange.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationSection {
    pub gamma: Option<f64>,
    pub t1: Option<f64>,
    pub exchange: Option<f64>,
}

/// `p` instantaneous pi-pulses; timing `cpmg` (p = 1 is the Hahn echo) or
/// `equidistant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    #[serde(default)]
    pub p: usize,
    #[serde(default = "default_timing")]
    pub timing: String,
}

fn default_timing() -> String {
    "cpmg".into()
}

impl Default for PulseSection {
    fn default() -> Self {
        Self { p: 0, timing: default_timing() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// `mecce` | `exact` | `both`.
    pub method: String,
    #[serde(default = "default_order")]
    pub max_order: usize,
    /// Cluster neighbor rule: `edges` | `distance` | `magnitude`; the latter
    /// two need `cutoff` (nm, resp. angular frequency).
    #[serde(default = "default_neighbor")]
    pub neighbor: String,
    pub cutoff: Option<f64>,
    /// Division guard threshold for the cluster recursion.
    #[serde(default = "default_guard")]
    pub guard_eps: f64,
    pub time_grid: TimeGrid,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Also run the dissipation-free (conventional CCE) bath as a reference.
    #[serde(default)]
    pub coherent_reference: bool,
}

fn default_order() -> usize {
    2
}

fn default_neighbor() -> String {
    "edges".into()
}

fn default_guard() -> f64 {
    mecce::cce::DIVISION_GUARD_EPS
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    Linspace { start: f64, stop: f64, points: usize },
    Explicit { times: Vec<f64> },
}

impl TimeGrid {
    pub fn materialize(&self) -> Vec<f64> {
        match self {
            TimeGrid::Linspace { start, stop, points } => (0..*points)
                .map(|k| start + (stop - start) * k as f64 / (*points as f64 - 1.0).max(1.0))
                .collect(),
            TimeGrid::Explicit { times } => times.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub directory: String,
}

fn default_dir() -> String {
    "out".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: default_dir() }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Field-level semantic checks beyond what the schema enforces.
    pub fn validate(&self) -> Result<(), String> {
        match &self.model {
            ModelSection::Chain { n, .. } if *n == 0 => {
                return Err("model.n: chain needs at least one spin".into());
            }
            ModelSection::Lattice2d { side, .. } if *side == 0 => {
                return Err("model.side: lattice needs side >= 1".into());
            }
            ModelSection::NvSurface { depth_nm, density_per_nm2, t1, extent_nm } => {
                if *depth_nm < 0.0 || *density_per_nm2 <= 0.0 || *t1 <= 0.0 || *extent_nm <= 0.0 {
                    return Err(
                        "model: nv-surface needs depth_nm >= 0, density_per_nm2 > 0, t1 > 0, extent_nm > 0"
                            .into(),
                    );
                }
                if self.dissipation.gamma.is_some() || self.dissipation.t1.is_some() {
                    return Err(
                        "dissipation: nv-surface sets depolarization from its own t1; only `exchange` may be added"
                            .into(),
                    );
                }
            }
            ModelSection::Explicit { a, edges, positions, initial } => {
                let n = a.len();
                if n == 0 {
                    return Err("model.a: explicit bath needs at least one spin".into());
                }
                for &(i, j, _) in edges {
                    if i >= n || j >= n || i == j {
                        return Err(format!("model.edges: invalid edge ({i}, {j}) for {n} spins"));
                    }
                }
                if let Some(p) = positions {
                    if p.len() != n {
                        return Err("model.positions: length must match model.a".into());
                    }
                }
                if !matches!(initial.as_str(), "neel" | "mixed" | "random-product") {
                    return Err(format!(
                        "model.initial: unknown state `{initial}` (expected neel | mixed | random-product)"
                    ));
                }
            }
            _ => {}
        }
        if self.dissipation.gamma.is_some() && self.dissipation.t1.is_some() {
            return Err("dissipation: give either `gamma` or `t1`, not both".into());
        }
        for (field, v) in [
            ("dissipation.gamma", self.dissipation.gamma),
            ("dissipation.t1", self.dissipation.t1),
            ("dissipation.exchange", self.dissipation.exchange),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(format!("{field}: must be finite and >= 0"));
                }
            }
        }
        if !matches!(self.pulses.timing.as_str(), "cpmg" | "equidistant") {
            return Err(format!(
                "pulses.timing: unknown timing `{}` (expected cpmg | equidistant)",
                self.pulses.timing
            ));
        }
        if !matches!(self.solver.method.as_str(), "mecce" | "exact" | "both") {
            return Err(format!(
                "solver.method: unknown method `{}` (expected mecce | exact | both)",
                self.solver.method
            ));
        }
        if self.solver.max_order == 0 || self.solver.max_order > ORDER_CAP {
            return Err(format!(
                "solver.max_order: must be in 1..={ORDER_CAP}, got {}",
                self.solver.max_order
            ));
        }
        match self.solver.neighbor.as_str() {
            "edges" => {}
            "distance" | "magnitude" => {
                if self.solver.cutoff.is_none() {
                    return Err(format!(
                        "solver.cutoff: required for the `{}` neighbor rule",
                        self.solver.neighbor
                    ));
                }
            }
            other => {
                return Err(format!(
                    "solver.neighbor: unknown rule `{other}` (expected edges | distance | magnitude)"
                ));
            }
        }
        if !(self.solver.guard_eps > 0.0) {
            return Err("solver.guard_eps: must be > 0".into());
        }
        let grid = self.solver.time_grid.materialize();
        if grid.is_empty() {
            return Err("solver.time_grid: must be nonempty".into());
        }
        if grid[0] < 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err("solver.time_grid: times must be >= 0 and strictly increasing".into());
        }
        if let TimeGrid::Linspace { points, .. } = self.solver.time_grid {
            if points < 2 {
                return Err("solver.time_grid.points: need at least 2".into());
            }
        }
        if self.solver.seeds.is_empty() {
            return Err("solver.seeds: must list at least one seed".into());
        }
        Ok(())
    }

    /// Canonical serialization: parse -> canonicalize -> serialize is
    /// idempotent because field order and formatting are fixed by the schema.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form, hex-encoded. The output section is
    /// excluded: where results land does not change what was computed, and
    /// `--out` must not perturb the hash.
    pub fn hash(&self) -> String {
        let mut keyed = self.clone();
        keyed.output = OutputSection::default();
        let digest = Sha256::digest(keyed.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
