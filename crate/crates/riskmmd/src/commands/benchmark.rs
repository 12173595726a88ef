//! Trajectory-optimization sweep: scenario × noise preset × method × N.

use std::collections::HashSet;
use std::path::PathBuf;
use std::time::Instant;

use riskmmd_core::optimizer::optimize;
use riskmmd_core::risk::ground_truth_collision_rate;
use riskmmd_core::rng::derive_seed;
use riskmmd_core::scenario::{random_static, Scenario};
use riskmmd_core::{OptimizerConfig, RiskKind};

use super::RunOptions;
use crate::certificate::{certify, Certificate};
use crate::config::{BenchmarkSpec, Config, SCHEMA_VERSION};
use crate::error::{invalid, Result};
use crate::output::{ensure_dir, read_resumable, TableWriter};
use crate::pool::run_ordered;
use crate::presets;

pub const FILE_NAME: &str = "benchmark.csv";

pub const HEADER: [&str; 11] = [
    "schema_version",
    "seed",
    "config_hash",
    "scenario_id",
    "method",
    "n",
    "noise_preset",
    "gt_collision_rate",
    "risk_value",
    "runtime_ms",
    "certificate",
];

/// One point of the sweep.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cell {
    pub scenario_id: u64,
    pub noise_preset: String,
    pub method: RiskKind,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub cell: Cell,
    pub gt_collision_rate: f64,
    /// Risk of the chosen plan; zero for the noise-ignorant method.
    pub risk_value: f64,
    pub runtime_ms: f64,
    pub certificate: Certificate,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub path: PathBuf,
    pub written: usize,
    pub skipped: usize,
}

/// Every cell of the sweep in output order.
pub fn cells(spec: &BenchmarkSpec) -> Vec<Cell> {
    let mut out = Vec::new();
    for scenario_id in spec.first_scenario..spec.first_scenario + spec.scenarios {
        for preset in &spec.presets {
            for &method in &spec.methods {
                for &n in &spec.n_values {
                    out.push(Cell {
                        scenario_id,
                        noise_preset: preset.clone(),
                        method,
                        n,
                    });
                }
            }
        }
    }
    out
}

/// The scene of a scenario id. All methods and N values share it.
pub fn scenario(cfg: &Config, spec: &BenchmarkSpec, scenario_id: u64) -> Result<Scenario> {
    Ok(random_static(
        derive_seed(cfg.seed, &[0, scenario_id]),
        spec.obstacles,
    )?)
}

/// Optimizes one cell and measures the plan's ground-truth collision rate.
pub fn evaluate(cfg: &Config, spec: &BenchmarkSpec, cell: &Cell) -> Result<Row> {
    let sc = scenario(cfg, spec, cell.scenario_id)?;
    let nm = presets::model(&cell.noise_preset)
        .ok_or_else(|| invalid(format!("unknown noise preset `{}`", cell.noise_preset)))?;
    let ocfg = OptimizerConfig {
        reduced_n: cell.n,
        risk_kind: cell.method,
        ..cfg.optimizer.clone()
    };
    let started = Instant::now();
    let res = optimize(
        &sc.x0,
        &sc.scene,
        &nm,
        &cfg.vehicle,
        &ocfg,
        derive_seed(cfg.seed, &[1, cell.scenario_id]),
    )?;
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
    let gt_collision_rate = ground_truth_collision_rate(
        &sc.x0,
        &res.best.controls,
        &sc.scene,
        &nm,
        &cfg.vehicle,
        spec.gt_samples,
        derive_seed(cfg.seed, &[2, cell.scenario_id]),
    )?;
    let risk_value = if cell.method == RiskKind::Det {
        0.0
    } else {
        res.best.risk
    };
    Ok(Row {
        cell: cell.clone(),
        gt_collision_rate,
        risk_value,
        runtime_ms,
        certificate: certify(&res.best, &ocfg)?,
    })
}

fn key_of(scenario_id: &str, method: &str, n: &str, preset: &str) -> String {
    format!("{scenario_id}/{method}/{n}/{preset}")
}

fn cell_key(c: &Cell) -> String {
    key_of(
        &c.scenario_id.to_string(),
        c.method.name(),
        &c.n.to_string(),
        &c.noise_preset,
    )
}

/// Runs the sweep, appending one row per finished cell.
pub fn run(cfg: &Config, opts: &RunOptions) -> Result<Summary> {
    let spec = cfg.benchmark()?;
    ensure_dir(&opts.out)?;
    let path = opts.out.join(FILE_NAME);
    let hash = cfg.hash();
    let seed = cfg.seed.to_string();

    let mut done = HashSet::new();
    if opts.resume && path.exists() {
        for r in read_resumable(&path, &HEADER)? {
            if r[1] != seed || r[2] != hash {
                return Err(invalid(format!(
                    "{} was written by a different config or seed; refusing to resume",
                    path.display()
                )));
            }
            done.insert(key_of(&r[3], &r[4], &r[5], &r[6]));
        }
    }
    let todo: Vec<Cell> = cells(spec)
        .into_iter()
        .filter(|c| !done.contains(&cell_key(c)))
        .collect();
    let mut writer = TableWriter::open(&path, &HEADER, opts.resume)?;
    let written = todo.len();
    run_ordered(
        opts.threads,
        &todo,
        |cell| evaluate(cfg, spec, cell),
        |_, row| {
            let row = row?;
            writer.write([
                SCHEMA_VERSION.to_string(),
                seed.clone(),
                hash.clone(),
                row.cell.scenario_id.to_string(),
                row.cell.method.name().to_string(),
                row.cell.n.to_string(),
                row.cell.noise_preset.clone(),
                row.gt_collision_rate.to_string(),
                row.risk_value.to_string(),
                format!("{:.3}", row.runtime_ms),
                row.certificate.as_str().to_string(),
            ])
        },
    )?;
    Ok(Summary {
        path,
        written,
        skipped: done.len(),
    })
}
