//! Dispatch from a validated config to the solver library and write results.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use mecce::cce::{run_mecce_opts, CoherenceCurve, NeighborRule, RunOptions};
use mecce::model::{
    build_chain, build_lattice2d, build_nv_surface, BathSpin, BathState, CouplingGraph,
    PulseSchedule, PulseTiming, SystemSpec,
};
use mecce::oracle::exact_coherence;

use crate::config::{ExperimentConfig, ModelSection};

const TAU: f64 = std::f64::consts::TAU;

/// One line of the invocation summary table.
pub struct SummaryRow {
    pub solver: String,
    pub order: Option<usize>,
    pub seed: u64,
    pub t2: Option<f64>,
}

pub fn build_spec(cfg: &ExperimentConfig, seed: u64) -> Result<SystemSpec> {
    let spec = match &cfg.model {
        ModelSection::Chain { n, j_max, a_max } => {
            build_chain(*n, j_max * TAU, a_max * TAU, seed)?
        }
        ModelSection::Lattice2d { side, j, a_max, periodic } => {
            build_lattice2d(*side, j * TAU, a_max * TAU, seed, *periodic)?
        }
        ModelSection::NvSurface { depth_nm, density_per_nm2, t1, extent_nm } => {
            build_nv_surface(*depth_nm, *density_per_nm2, *t1, *extent_nm, seed, None)?
        }
        ModelSection::Explicit { a, edges, positions, initial } => {
            let n = a.len();
            let bath: Vec<BathSpin> = a
                .iter()
                .enumerate()
                .map(|(i, &ai)| BathSpin {
                    index: i,
                    position: positions.as_ref().map(|p| p[i]),
                    coupling: ai * TAU,
                })
                .collect();
            let edges: Vec<(usize, usize, f64)> =
                edges.iter().map(|&(i, j, jij)| (i, j, jij * TAU)).collect();
            let state = match initial.as_str() {
                "neel" => BathState::neel(n),
                "random-product" => BathState::random_product(n, seed),
                _ => BathState::maximally_mixed(n),
            };
            SystemSpec::new(bath, CouplingGraph::new(edges)?, vec![], state, seed)?
        }
    };
    let gamma = match (cfg.dissipation.gamma, cfg.dissipation.t1) {
        (Some(g), _) => Some(g),
        (None, Some(t1)) => Some(1.0 / (2.0 * t1)),
        (None, None) => None,
    };
    let mut spec = match gamma {
        Some(g) if g > 0.0 => spec.with_depolarization(g),
        _ => spec,
    };
    if let Some(x) = cfg.dissipation.exchange {
        if x > 0.0 {
            spec = spec.with_exchange(x);
        }
    }
    Ok(spec)
}

pub fn schedule(cfg: &ExperimentConfig) -> PulseSchedule {
    let timing = match cfg.pulses.timing.as_str() {
        "equidistant" => PulseTiming::Equidistant,
        _ => PulseTiming::Cpmg,
    };
    PulseSchedule { pulses: cfg.pulses.p, timing, total_time: 0.0 }
}

pub fn neighbor_rule(cfg: &ExperimentConfig) -> NeighborRule {
    match cfg.solver.neighbor.as_str() {
        "distance" => NeighborRule::DistanceCutoff(cfg.solver.cutoff.unwrap()),
        "magnitude" => NeighborRule::MagnitudeCutoff(cfg.solver.cutoff.unwrap()),
        _ => NeighborRule::GraphEdges,
    }
}

/// Executes the configured solvers for every seed and writes one CSV per
/// (solver, order, seed) plus `summary.csv` and `manifest.toml` into `dir`.
pub fn run_config(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<SummaryRow>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let grid = cfg.solver.time_grid.materialize();
    let sched = schedule(cfg);
    let rule = neighbor_rule(cfg);
    let opts = RunOptions { guard_eps: cfg.solver.guard_eps, ..RunOptions::default() };
    let mut rows = Vec::new();

    for &seed in &cfg.solver.seeds {
        let spec = build_spec(cfg, seed)?;
        if matches!(cfg.solver.method.as_str(), "mecce" | "both") {
            let run = run_mecce_opts(&spec, rule, cfg.solver.max_order, &sched, &grid, &opts)?;
            for order in 1..=cfg.solver.max_order {
                let curve = run.curve_at_order(order, "mecce");
                write_curve(&curve, &dir.join(format!("mecce_order{order}_seed{seed}.csv")))?;
                rows.push(SummaryRow {
                    solver: "mecce".into(),
                    order: Some(order),
                    seed,
                    t2: curve.extract_t2()?,
                });
            }
            if run.table.guard_events > 0 {
                eprintln!(
                    "note: seed {seed}: division guard pinned {} cluster time points",
                    run.table.guard_events
                );
            }
            if cfg.solver.coherent_reference {
                let coherent = spec.clone().without_dissipation();
                let run =
                    run_mecce_opts(&coherent, rule, cfg.solver.max_order, &sched, &grid, &opts)?;
                for order in 1..=cfg.solver.max_order {
                    let curve = run.curve_at_order(order, "cce");
                    write_curve(&curve, &dir.join(format!("cce_order{order}_seed{seed}.csv")))?;
                    rows.push(SummaryRow {
                        solver: "cce".into(),
                        order: Some(order),
                        seed,
                        t2: curve.extract_t2()?,
                    });
                }
            }
        }
        if matches!(cfg.solver.method.as_str(), "exact" | "both") {
            let curve = exact_coherence(&spec, &sched, &grid)?;
            write_curve(&curve, &dir.join(format!("exact_seed{seed}.csv")))?;
            rows.push(SummaryRow { solver: "exact".into(), order: None, seed, t2: curve.extract_t2()? });
        }
    }
    Ok(rows)
}

/// CSV with full double precision (17 significant digits).
pub fn write_curve(curve: &CoherenceCurve, path: &PathBuf) -> Result<()> {
    let mut text = String::from("t,re_L,im_L,abs_L\n");
    for (t, v) in curve.times.iter().zip(&curve.values) {
        writeln!(text, "{:.16e},{:.16e},{:.16e},{:.16e}", t, v.re, v.im, v.norm())?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut text = String::from("solver,order,seed,t2\n");
    for r in rows {
        let order = r.order.map(|o| o.to_string()).unwrap_or_default();
        let t2 = r.t2.map(|t| format!("{t:.16e}")).unwrap_or_default();
        writeln!(text, "{},{},{},{}", r.solver, order, r.seed, t2)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_manifest(cfg: &ExperimentConfig, command: &str, path: &Path) -> Result<()> {
    let text = format!(
        "command = {command:?}\nconfig_hash = \"sha256:{}\"\ntool = \"{}\"\nversion = \"{}\"\n",
        cfg.hash(),
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
    );
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Applies one sweep value to a copy of the config. `param` is one of
/// `gamma`, `depth`, `p`, `order`.
pub fn apply_sweep_value(cfg: &ExperimentConfig, param: &str, value: f64) -> Result<ExperimentConfig> {
    let mut cfg = cfg.clone();
    match param {
        "gamma" => {
            if matches!(cfg.model, ModelSection::NvSurface { .. }) {
                bail!("gamma sweep: nv-surface derives its rate from t1; sweep depth instead");
            }
            cfg.dissipation.t1 = None;
            cfg.dissipation.gamma = Some(value);
        }
        "depth" => match &mut cfg.model {
            ModelSection::NvSurface { depth_nm, .. } => *depth_nm = value,
            _ => bail!("depth sweep: only meaningful for the nv-surface model"),
        },
        "p" => {
            if value < 0.0 || value.fract() != 0.0 {
                bail!("p sweep: values must be nonnegative integers");
            }
            cfg.pulses.p = value as usize;
        }
        "order" => {
            if value < 1.0 || value.fract() != 0.0 {
                bail!("order sweep: values must be positive integers");
            }
            cfg.solver.max_order = value as usize;
        }
        other => bail!("unknown sweep parameter `{other}` (expected gamma | depth | p | order)"),
    }
    cfg.validate().map_err(anyhow::Error::msg)?;
    Ok(cfg)
}
