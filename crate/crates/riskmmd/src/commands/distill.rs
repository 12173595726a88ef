//! Standalone reduced-set distillation of a rollout matrix file.

use std::path::Path;

use riskmmd_core::reduced_set::{distill, log_sigma_grid, random_subset_baseline, sigma_bounds};
use riskmmd_core::rng::derive_seed;
use riskmmd_core::{DistillConfig, Matrix, RolloutMatrix};
use serde::Serialize;

use crate::config::{Config, SCHEMA_VERSION};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Serialize)]
pub struct DistillRecord {
    pub schema_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub rows: usize,
    pub n: usize,
    pub indices: Vec<usize>,
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub sigma_range: (f64, f64),
    pub discrepancy: f64,
    /// Best discrepancy among random uniform-weight subsets.
    pub baseline_discrepancy: f64,
}

/// Reads a headerless CSV of equally long numeric rows.
pub fn read_rollouts(path: &Path) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        invalid(format!(
                            "{}: row {}: `{f}` is not a finite number",
                            path.display(),
                            i + 1
                        ))
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(invalid(format!("{}: no rollouts", path.display())));
    }
    Matrix::from_rows(&rows).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Distills `n` of the rows and compares against the random baseline.
pub fn distill_matrix(rows: Matrix, n: usize, cfg: &Config) -> Result<DistillRecord> {
    let spec = cfg.distill()?;
    let count = rows.rows();
    let rollouts = RolloutMatrix::new(rows).map_err(|e| invalid(format!("rollouts: {e}")))?;
    if n == 0 || n > count {
        return Err(invalid(format!("cannot distill {n} rows out of {count}")));
    }
    let dcfg = DistillConfig {
        seed: derive_seed(cfg.seed, &[0]),
        ..spec.cem.clone()
    };
    let reduced = distill(&rollouts, n, &dcfg)?;
    let (lo, hi) = sigma_bounds(&rollouts, &dcfg);
    let baseline = random_subset_baseline(
        &rollouts,
        n,
        spec.baseline_subsets,
        &log_sigma_grid(lo, hi, spec.baseline_widths),
        derive_seed(cfg.seed, &[1]),
    )?;
    Ok(DistillRecord {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        rows: count,
        n,
        indices: reduced.indices,
        beta: reduced.beta,
        sigma: reduced.sigma.get(),
        sigma_range: (lo, hi),
        discrepancy: reduced.discrepancy,
        baseline_discrepancy: baseline,
    })
}

/// [`distill_matrix`] on the configured (or overriding) rollout file.
pub fn run(cfg: &Config, rollouts: Option<&Path>, n: Option<usize>) -> Result<DistillRecord> {
    let spec = cfg.distill()?;
    let path = rollouts
        .or(spec.rollouts.as_deref())
        .ok_or_else(|| invalid("no rollout file: set [distill] rollouts or pass --rollouts"))?;
    distill_matrix(read_rollouts(path)?, n.unwrap_or(spec.n), cfg)
}

pub fn render(record: &DistillRecord) -> Result<String> {
    let mut text = serde_json::to_string_pretty(record)?;
    text.push('\n');
    Ok(text)
}
