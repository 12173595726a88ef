//! Receding-horizon grid: noise preset × method × episode on the corridor.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use riskmmd_core::mpc::{compute_metrics, run_episode, EpisodeLog, MetricsReport};
use riskmmd_core::rng::derive_seed;
use riskmmd_core::scenario::{corridor, Scenario};
use riskmmd_core::{OptimizerConfig, RiskKind};
use serde::{Deserialize, Serialize};

use super::RunOptions;
use crate::config::{Config, MpcSpec, SCHEMA_VERSION};
use crate::error::{invalid, Result};
use crate::output::{ensure_dir, read_json_lines, write_file, JsonLines, TableWriter};
use crate::pool::run_ordered;
use crate::presets;

pub const EPISODES_FILE: &str = "mpc_episodes.jsonl";
pub const METRICS_FILE: &str = "mpc_metrics.csv";
pub const SUMMARY_FILE: &str = "mpc_summary.dat";

pub const METRICS_HEADER: [&str; 11] = [
    "schema_version",
    "seed",
    "config_hash",
    "method",
    "noise_preset",
    "episodes",
    "aborted",
    "collision_pct",
    "lane_violation_pct",
    "avg_speed",
    "max_speed",
];

/// One episode as stored in the episode log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub schema_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub method: RiskKind,
    pub noise_preset: String,
    pub episode: u64,
    pub log: EpisodeLog,
}

/// Metrics of one (method, preset) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub method: RiskKind,
    pub noise_preset: String,
    pub aborted: usize,
    pub report: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub grid: Vec<GridCell>,
    pub episodes_path: PathBuf,
    pub metrics_path: PathBuf,
    pub summary_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Job {
    noise_preset: String,
    method: RiskKind,
    episode: u64,
}

pub fn scenario(spec: &MpcSpec) -> Result<Scenario> {
    Ok(corridor(spec.route_length, spec.obstacles, spec.v_d)?)
}

/// Runs one episode. Episode `e` uses the same seed for every method and
/// preset.
pub fn episode(
    cfg: &Config,
    spec: &MpcSpec,
    method: RiskKind,
    preset: &str,
    e: u64,
) -> Result<EpisodeLog> {
    let sc = scenario(spec)?;
    let nm = presets::model(preset)
        .ok_or_else(|| invalid(format!("unknown noise preset `{preset}`")))?;
    let ocfg = OptimizerConfig {
        risk_kind: method,
        ..cfg.optimizer.clone()
    };
    Ok(run_episode(
        &sc.x0,
        &sc.scene,
        &nm,
        &cfg.vehicle,
        &ocfg,
        &spec.episode_config(),
        derive_seed(cfg.seed, &[e]),
    )?)
}

pub fn run(cfg: &Config, opts: &RunOptions) -> Result<Summary> {
    let spec = cfg.mpc()?;
    ensure_dir(&opts.out)?;
    let episodes_path = opts.out.join(EPISODES_FILE);
    let hash = cfg.hash();

    let mut logs: HashMap<Job, EpisodeLog> = HashMap::new();
    if opts.resume && episodes_path.exists() {
        for rec in read_json_lines::<EpisodeRecord>(&episodes_path)? {
            if rec.seed != cfg.seed || rec.config_hash != hash {
                return Err(invalid(format!(
                    "{} was written by a different config or seed; refusing to resume",
                    episodes_path.display()
                )));
            }
            let job = Job {
                noise_preset: rec.noise_preset,
                method: rec.method,
                episode: rec.episode,
            };
            logs.insert(job, rec.log);
        }
    }

    let mut grid_jobs = Vec::new();
    for preset in &spec.presets {
        for &method in &spec.methods {
            for e in 0..spec.episodes {
                grid_jobs.push(Job {
                    noise_preset: preset.clone(),
                    method,
                    episode: e,
                });
            }
        }
    }
    let todo: Vec<Job> = grid_jobs
        .iter()
        .filter(|j| !logs.contains_key(*j))
        .cloned()
        .collect();
    let mut out = JsonLines::open(&episodes_path, opts.resume)?;
    run_ordered(
        opts.threads,
        &todo,
        |j| episode(cfg, spec, j.method, &j.noise_preset, j.episode),
        |i, log| {
            let log = log?;
            let j = &todo[i];
            out.write(&EpisodeRecord {
                schema_version: SCHEMA_VERSION,
                seed: cfg.seed,
                config_hash: hash.clone(),
                method: j.method,
                noise_preset: j.noise_preset.clone(),
                episode: j.episode,
                log: log.clone(),
            })?;
            logs.insert(j.clone(), log);
            Ok(())
        },
    )?;

    let mut grid = Vec::new();
    for preset in &spec.presets {
        for &method in &spec.methods {
            let cell: Vec<EpisodeLog> = (0..spec.episodes)
                .map(|e| {
                    logs[&Job {
                        noise_preset: preset.clone(),
                        method,
                        episode: e,
                    }]
                        .clone()
                })
                .collect();
            grid.push(GridCell {
                method,
                noise_preset: preset.clone(),
                aborted: cell.iter().filter(|l| l.aborted()).count(),
                report: compute_metrics(&cell, spec.route_length)?,
            });
        }
    }

    let metrics_path = opts.out.join(METRICS_FILE);
    let mut table = TableWriter::open(&metrics_path, &METRICS_HEADER, false)?;
    for g in &grid {
        let r = &g.report;
        table.write([
            SCHEMA_VERSION.to_string(),
            cfg.seed.to_string(),
            hash.clone(),
            g.method.name().to_string(),
            g.noise_preset.clone(),
            r.episodes.to_string(),
            g.aborted.to_string(),
            r.collision_pct.to_string(),
            r.lane_violation_pct.to_string(),
            r.avg_speed.to_string(),
            r.max_speed.to_string(),
        ])?;
    }
    let summary_path = opts.out.join(SUMMARY_FILE);
    write_file(&summary_path, &gnuplot_summary(cfg.seed, &hash, &grid))?;
    Ok(Summary {
        grid,
        episodes_path,
        metrics_path,
        summary_path,
    })
}

/// Whitespace-separated table, one block per preset, for `plot ... index i`.
fn gnuplot_summary(seed: u64, hash: &str, grid: &[GridCell]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# schema_version {SCHEMA_VERSION} seed {seed} config_hash {hash}"
    );
    let mut last: Option<&str> = None;
    for g in grid {
        if last != Some(g.noise_preset.as_str()) {
            if last.is_some() {
                s.push_str("\n\n");
            }
            let _ = writeln!(s, "# noise_preset {}", g.noise_preset);
            s.push_str("# method collision_pct lane_violation_pct avg_speed max_speed episodes\n");
            last = Some(&g.noise_preset);
        }
        let r = &g.report;
        let _ = writeln!(
            s,
            "{} {:.4} {:.4} {:.4} {:.4} {}",
            g.method.name(),
            r.collision_pct,
            r.lane_violation_pct,
            r.avg_speed,
            r.max_speed,
            r.episodes
        );
    }
    s
}
