//! Sample-level safety certificate of an MMD plan.

use riskmmd_core::optimizer::CandidateScore;
use riskmmd_core::risk::risk_mmd;
use riskmmd_core::{DiracConfig, KernelWidth, OptimizerConfig, RiskKind};

use crate::error::Result;

/// Risk below which a plan counts as certified safe.
pub const CERTIFIED_RISK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    /// Not an MMD plan.
    NotApplicable,
    /// Risk against an exact delta is at or above [`CERTIFIED_RISK`].
    NotClaimed,
    /// Certified, and every reduced rollout has `h <= 0`.
    Holds,
    /// Certified, yet some reduced rollout violates a constraint.
    Violated,
}

impl Certificate {
    pub fn as_str(self) -> &'static str {
        match self {
            Certificate::NotApplicable => "na",
            Certificate::NotClaimed => "not_claimed",
            Certificate::Holds => "holds",
            Certificate::Violated => "violated",
        }
    }

    pub fn parse(s: &str) -> Option<Certificate> {
        [
            Certificate::NotApplicable,
            Certificate::NotClaimed,
            Certificate::Holds,
            Certificate::Violated,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
    }
}

/// Re-scores the plan's reduced rollouts against a delta with zero spread
/// and, when that risk is below [`CERTIFIED_RISK`], checks every rollout.
pub fn certify(best: &CandidateScore, cfg: &OptimizerConfig) -> Result<Certificate> {
    if cfg.risk_kind != RiskKind::Mmd {
        return Ok(Certificate::NotApplicable);
    }
    let ev = &best.evidence;
    let Some(width) = ev.risk_sigma else {
        return Ok(Certificate::NotClaimed);
    };
    let exact = DiracConfig {
        epsilon_std: 0.0,
        ..cfg.dirac
    };
    let risk = risk_mmd(
        &ev.residuals(),
        &ev.weights,
        KernelWidth::new(width)?,
        &exact,
        0,
    )?;
    if risk >= CERTIFIED_RISK {
        return Ok(Certificate::NotClaimed);
    }
    Ok(if ev.constraint_values.iter().all(|h| *h <= 0.0) {
        Certificate::Holds
    } else {
        Certificate::Violated
    })
}
