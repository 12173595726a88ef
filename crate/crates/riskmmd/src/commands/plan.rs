use riskmmd_core::optimizer::{optimize, RiskEvidence};
use riskmmd_core::vehicle::nominal_rollout;
use riskmmd_core::{ControlSequence, FrenetState, RiskKind, SetpointVector};
use serde::Serialize;

use crate::config::{Config, SCHEMA_VERSION};
use crate::error::Result;

/// Outcome of one optimization run.
#[derive(Debug, Clone, Serialize)]
pub struct PlanRecord {
    pub schema_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub method: RiskKind,
    pub noise_preset: String,
    pub setpoint: SetpointVector,
    pub risk: f64,
    pub expected_cost: f64,
    pub control_cost: f64,
    pub total: f64,
    pub controls: ControlSequence,
    /// Start state followed by the noise-free rollout of `controls`.
    pub rollout: Vec<FrenetState>,
    pub evidence: RiskEvidence,
}

pub fn plan(cfg: &Config) -> Result<PlanRecord> {
    let res = optimize(
        &cfg.start,
        &cfg.scene,
        &cfg.noise.model,
        &cfg.vehicle,
        &cfg.optimizer,
        cfg.seed,
    )?;
    let best = res.best;
    let mut rollout = vec![cfg.start];
    rollout.extend(nominal_rollout(&cfg.start, &best.controls, &cfg.vehicle).states);
    Ok(PlanRecord {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        method: cfg.optimizer.risk_kind,
        noise_preset: cfg.noise.name.clone(),
        setpoint: best.setpoint,
        risk: best.risk,
        expected_cost: best.expected_cost,
        control_cost: best.control_cost,
        total: best.total,
        controls: best.controls,
        rollout,
        evidence: best.evidence,
    })
}

/// The record as pretty JSON with a trailing newline.
pub fn render(record: &PlanRecord) -> Result<String> {
    let mut text = serde_json::to_string_pretty(record)?;
    text.push('\n');
    Ok(text)
}
