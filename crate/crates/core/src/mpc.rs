//! Receding-horizon execution of the optimizer and the episode metrics.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frenet::SamplingDistribution;
use crate::optimizer::{optimize_from, OptimizerConfig};
use crate::risk::Scene;
use crate::rng::{self, derive_seed};
use crate::vehicle::{
    perturb_initial, sample_noise_with, step, ControlSequence, FrenetState, NoiseModel,
    VehicleParams,
};

/// Episode-level settings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EpisodeConfig {
    /// Goal: `s ≥ route_length`.
    pub route_length: f64,
    pub max_steps: usize,
    /// Blend of the warm-started covariance back toward the initial one.
    pub cov_reset: f64,
    /// Std of the Gaussian error in the state the planner observes at every
    /// step. The world itself evolves from the true state.
    pub measurement_std: [f64; 5],
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            route_length: 200.0,
            max_steps: 1500,
            cov_reset: 0.5,
            measurement_std: [0.0; 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TerminalStatus {
    ReachedGoal,
    Collided,
    MaxSteps,
    /// The optimizer failed; the episode is excluded from metrics.
    Aborted(String),
}

/// One executed control step.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepRecord {
    pub step: usize,
    /// Commanded controls (before the true noise).
    pub a: f64,
    pub theta: f64,
    /// State reached after the step.
    pub state: FrenetState,
    pub plan_risk: f64,
    pub plan_cost: f64,
    pub collided: bool,
    /// Lane violation accumulated this step, `max(0, d − d_ub, d_lb − d)·v·dt`.
    pub lane_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpisodeLog {
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub status: TerminalStatus,
}

impl EpisodeLog {
    pub fn collided(&self) -> bool {
        self.status == TerminalStatus::Collided
    }

    pub fn aborted(&self) -> bool {
        matches!(self.status, TerminalStatus::Aborted(_))
    }

    pub fn lane_violation_total(&self) -> f64 {
        self.steps.iter().map(|s| s.lane_violation).sum()
    }

    pub fn mean_speed(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.state.v).sum::<f64>() / self.steps.len() as f64
    }

    pub fn max_speed(&self) -> f64 {
        self.steps.iter().map(|s| s.state.v).fold(0.0, f64::max)
    }
}

/// Aggregate metrics over episodes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub collision_pct: f64,
    pub lane_violation_pct: f64,
    pub avg_speed: f64,
    pub max_speed: f64,
    pub episodes: usize,
}

/// Runs one receding-horizon episode.
///
/// Each step re-plans from a noisy measurement of the current state, warm-starting the setpoint
/// distribution from the previous plan's final mean with the covariance
/// pulled `cov_reset` of the way back to the initial covariance, applies the
/// first control under a fresh noise draw and advances the world.
pub fn run_episode(
    x0: &FrenetState,
    scene: &Scene,
    nm: &NoiseModel,
    p: &VehicleParams,
    cfg: &OptimizerConfig,
    ep: &EpisodeConfig,
    seed: u64,
) -> Result<EpisodeLog> {
    if !(ep.route_length > 0.0) {
        return Err(crate::error::invalid("route_length must be positive"));
    }
    let sensor = VehicleParams {
        init_std: ep.measurement_std,
        ..p.clone()
    };
    let mut x = *x0;
    let mut dist: Option<SamplingDistribution> = None;
    let mut a_prev = 0.0;
    let mut steps = Vec::new();
    let mut status = TerminalStatus::MaxSteps;

    for k in 0..ep.max_steps {
        let mut seen = perturb_initial(&x, &sensor, &mut rng::substream(seed, &[0, k as u64]));
        seen.v = seen.v.max(0.0);
        let init = cfg.initial_distribution(&seen, scene)?;
        let start = match dist {
            None => init,
            Some(prev) => blend(&prev, &init, ep.cov_reset, cfg.cov_floor)?,
        };
        let window = scene.window(k, p.horizon);
        let plan = match optimize_from(
            &seen,
            a_prev,
            &window,
            nm,
            p,
            cfg,
            start,
            derive_seed(seed, &[1, k as u64]),
        ) {
            Ok(plan) => plan,
            Err(e) => {
                status = TerminalStatus::Aborted(e.to_string());
                break;
            }
        };
        dist = Some(plan.distribution);
        let (a, theta) = (plan.best.controls.a[0], plan.best.controls.theta[0]);
        a_prev = a;
        let first = ControlSequence {
            a: alloc::vec![a],
            theta: alloc::vec![theta],
        };
        let mut nr = rng::substream(seed, &[2, k as u64]);
        let (ea, et) = sample_noise_with(&first, nm, &mut nr);
        x = step(&x, a + ea[0], theta + et[0], p);

        // static obstacles only need step 0 of the window
        let collided = window.in_collision(0, x.s, x.d);
        let lane_violation = scene.lane_violation(x.d) * x.v * p.dt;
        steps.push(StepRecord {
            step: k,
            a,
            theta,
            state: x,
            plan_risk: plan.best.risk,
            plan_cost: plan.best.total,
            collided,
            lane_violation,
        });
        if collided {
            status = TerminalStatus::Collided;
            break;
        }
        if x.s >= ep.route_length {
            status = TerminalStatus::ReachedGoal;
            break;
        }
    }
    Ok(EpisodeLog {
        seed,
        steps,
        status,
    })
}

fn blend(
    prev: &SamplingDistribution,
    init: &SamplingDistribution,
    reset: f64,
    floor: f64,
) -> Result<SamplingDistribution> {
    let mut cov = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            cov[i][j] = (1.0 - reset) * prev.cov[i][j] + reset * init.cov[i][j];
        }
    }
    cov[0][0] = cov[0][0].max(floor);
    cov[1][1] = cov[1][1].max(floor);
    cov[1][0] = cov[0][1];
    SamplingDistribution::new(prev.mean, cov)
}

/// Collision, lane-violation and speed metrics; aborted episodes are skipped.
pub fn compute_metrics(logs: &[EpisodeLog], route_length: f64) -> Result<MetricsReport> {
    let kept: Vec<&EpisodeLog> = logs.iter().filter(|l| !l.aborted()).collect();
    if kept.is_empty() {
        return Err(Error::Empty);
    }
    let n = kept.len() as f64;
    let collisions = kept.iter().filter(|l| l.collided()).count() as f64;
    let lane = kept
        .iter()
        .map(|l| 100.0 * l.lane_violation_total() / route_length)
        .sum::<f64>()
        / n;
    let avg_speed = kept.iter().map(|l| l.mean_speed()).sum::<f64>() / n;
    let max_speed = kept.iter().map(|l| l.max_speed()).sum::<f64>() / n;
    Ok(MetricsReport {
        collision_pct: 100.0 * collisions / n,
        lane_violation_pct: lane,
        avg_speed,
        max_speed,
        episodes: kept.len(),
    })
}
