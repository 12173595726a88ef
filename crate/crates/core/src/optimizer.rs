//! Sampling-based risk-aware trajectory optimizer.
//!
//! Each iteration draws `n` setpoints, turns them into controls, scores
//! every candidate by risk, selects the `n_c` lowest-risk candidates
//! (constraint elites), keeps the `n_e` cheapest of those (elites) and moves
//! the setpoint distribution toward the elites with exponentially weighted
//! averaging:
//!
//! ```text
//! t_q = exp(−(c_q − min c)/γ)
//! ν' = (1−η)ν + η Σ t_q b_q / Σ t_q
//! Σ' = (1−η)Σ + η Σ t_q (b_q − ν')(b_q − ν')ᵀ / Σ t_q
//! ```

use alloc::vec::Vec;
use core::str::FromStr;
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::frenet::{
    expand_trajectory_from, flatness_controls, sample_setpoints, sym_eigen, SamplingDistribution,
    SetpointVector,
};
use crate::kernel::KernelWidth;
use crate::reduced_set::{distill, DistillConfig};
use crate::risk::{constraint_h, residual, risk_cvar, risk_mmd, DiracConfig, Scene};
use crate::rng::{self, derive_seed};
use crate::vehicle::{
    nominal_rollout, rollout_batch_with, rollout_independent, ControlSequence, FrenetState,
    NoiseModel, RolloutFeatures, StateTrajectory, VehicleParams,
};

/// Risk estimator plugged into the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RiskKind {
    /// Reduced-set MMD risk over `N` of `N²` rollouts.
    Mmd,
    /// Empirical CVaR over `N` plain rollouts.
    Cvar,
    /// Noise-ignorant baseline: a single noise-free rollout whose residual
    /// serves as the (deterministic) constraint score.
    #[cfg_attr(feature = "serde", serde(alias = "none"))]
    Det,
}

impl RiskKind {
    pub fn name(self) -> &'static str {
        match self {
            RiskKind::Mmd => "mmd",
            RiskKind::Cvar => "cvar",
            RiskKind::Det => "det",
        }
    }
}

impl FromStr for RiskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mmd" => Ok(RiskKind::Mmd),
            "cvar" => Ok(RiskKind::Cvar),
            "det" | "none" | "deterministic" => Ok(RiskKind::Det),
            other => Err(invalid(alloc::format!("unknown risk kind `{other}`"))),
        }
    }
}

/// Every knob of the optimizer.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct OptimizerConfig {
    /// Batch size.
    pub n: usize,
    /// Constraint-elite count.
    pub n_c: usize,
    /// Elite count.
    pub n_e: usize,
    /// Iterations.
    pub iterations: usize,
    /// Reduced-set size `N` (MMD draws `N²` rollouts, CVaR draws `N`).
    pub reduced_n: usize,
    pub gamma: f64,
    pub eta: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub risk_kind: RiskKind,
    pub distill: DistillConfig,
    pub dirac: DiracConfig,
    pub cvar_alpha: f64,
    /// Kernel width for the residual space. `None` reuses the width found by
    /// the reduced-set search.
    pub risk_sigma: Option<f64>,
    pub features: RolloutFeatures,
    /// Include lane bounds in the constraint function.
    pub include_lane: bool,
    pub cov_floor: f64,
    pub v_max: f64,
    /// Standard deviation of the initial setpoint distribution `(v, d)`.
    pub init_std: [f64; 2],
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            n: 100,
            n_c: 30,
            n_e: 10,
            iterations: 10,
            reduced_n: 4,
            gamma: 1.0,
            eta: 0.7,
            w1: 1.0,
            w2: 1000.0,
            w3: 0.1,
            risk_kind: RiskKind::Mmd,
            distill: DistillConfig::default(),
            dirac: DiracConfig::default(),
            cvar_alpha: 0.9,
            risk_sigma: Some(0.1),
            features: RolloutFeatures::Positions,
            include_lane: false,
            cov_floor: 1e-4,
            v_max: 15.0,
            init_std: [2.0, 2.0],
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_e >= 1 && self.n_e <= self.n_c && self.n_c <= self.n) {
            return Err(invalid("need 1 <= n_e <= n_c <= n"));
        }
        if self.iterations == 0 || self.reduced_n == 0 {
            return Err(invalid("iterations and reduced_n must be positive"));
        }
        if !(self.gamma > 0.0) {
            return Err(invalid("temperature gamma must be positive"));
        }
        if !(self.eta >= 0.0 && self.eta <= 1.0) {
            return Err(invalid("learning rate eta must lie in [0, 1]"));
        }
        if !(self.w1 >= 0.0 && self.w2 >= 0.0 && self.w3 >= 0.0) {
            return Err(invalid("cost weights must be nonnegative"));
        }
        if !(self.cvar_alpha > 0.0 && self.cvar_alpha < 1.0) {
            return Err(invalid("cvar_alpha must lie in (0, 1)"));
        }
        if let Some(s) = self.risk_sigma {
            KernelWidth::new(s)?;
        }
        if !(self.cov_floor > 0.0) || !(self.v_max > 0.0) {
            return Err(invalid("cov_floor and v_max must be positive"));
        }
        if self.init_std.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid("init_std entries must be positive"));
        }
        self.distill.validate()
    }

    /// Initial setpoint distribution: desired speed and the current offset.
    pub fn initial_distribution(
        &self,
        x0: &FrenetState,
        scene: &Scene,
    ) -> Result<SamplingDistribution> {
        SamplingDistribution::diagonal([scene.v_d, x0.d], self.init_std)
    }
}

/// Rollouts the risk was evaluated on, kept for auditing.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RiskEvidence {
    /// Constraint value `h` of each scored rollout.
    pub constraint_values: Vec<f64>,
    /// Weights attached to the scored rollouts (`β` for MMD, uniform else).
    pub weights: Vec<f64>,
    /// Kernel width of the residual space (MMD only).
    pub risk_sigma: Option<f64>,
    /// Width chosen by the reduced-set search (MMD only).
    pub reduced_sigma: Option<f64>,
    /// Outer discrepancy of the reduced set (MMD only).
    pub discrepancy: Option<f64>,
    /// Rollouts simulated to produce the scored ones.
    pub simulated: usize,
}

impl RiskEvidence {
    pub fn residuals(&self) -> Vec<f64> {
        self.constraint_values
            .iter()
            .map(|h| residual(*h))
            .collect()
    }
}

/// Cost breakdown for one setpoint.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CandidateScore {
    pub setpoint: SetpointVector,
    pub controls: ControlSequence,
    pub risk: f64,
    /// Mean state cost over the scored rollouts.
    pub expected_cost: f64,
    /// `‖(a, θ)‖²`.
    pub control_cost: f64,
    /// `w₁·expected + w₂·risk + w₃·control`, or `+∞` when scoring failed.
    pub total: f64,
    pub evidence: RiskEvidence,
}

impl CandidateScore {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

/// Running state cost of a trajectory.
///
/// Sums `(v_k − v_d)² + |d_k − d_1|·|d_k − d_2|` over all `H` states plus
/// `s̈_k² + d̈_k²` over the `H − 2` interior states, where
/// `s̈_k = (s_{k+1} − 2 s_k + s_{k−1}) / dt²`.
pub fn state_cost(traj: &StateTrajectory, scene: &Scene, dt: f64) -> f64 {
    let xs = &traj.states;
    let mut cost = 0.0;
    for x in xs {
        let dv = x.v - scene.v_d;
        cost += dv * dv + (x.d - scene.d_1).abs() * (x.d - scene.d_2).abs();
    }
    let inv = 1.0 / (dt * dt);
    for k in 1..xs.len().saturating_sub(1) {
        let s_acc = (xs[k + 1].s - 2.0 * xs[k].s + xs[k - 1].s) * inv;
        let d_acc = (xs[k + 1].d - 2.0 * xs[k].d + xs[k - 1].d) * inv;
        cost += s_acc * s_acc + d_acc * d_acc;
    }
    cost
}

fn mean_state_cost(trajs: &[&StateTrajectory], scene: &Scene, dt: f64) -> f64 {
    trajs.iter().map(|t| state_cost(t, scene, dt)).sum::<f64>() / trajs.len() as f64
}

/// Scores one setpoint: controls, rollouts, risk and total cost.
///
/// A reduced-set failure yields a candidate with `total = +∞` rather than an
/// error so that one bad candidate cannot sink a batch.
pub fn score_candidate(
    b: &SetpointVector,
    x0: &FrenetState,
    scene: &Scene,
    nm: &NoiseModel,
    p: &VehicleParams,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<CandidateScore> {
    score_candidate_from(b, x0, 0.0, scene, nm, p, cfg, seed)
}

#[allow(clippy::too_many_arguments)]
fn score_candidate_from(
    b: &SetpointVector,
    x0: &FrenetState,
    a0: f64,
    scene: &Scene,
    nm: &NoiseModel,
    p: &VehicleParams,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<CandidateScore> {
    let profiles = expand_trajectory_from(b, x0, a0, p)?;
    let controls = flatness_controls(&profiles, p);
    let control_cost = controls.squared_norm();
    let n = cfg.reduced_n;

    let (risk, expected_cost, evidence) = match cfg.risk_kind {
        RiskKind::Mmd => {
            let batch = rollout_batch_with(
                x0,
                &controls,
                nm,
                p,
                n,
                derive_seed(seed, &[0]),
                cfg.features,
            )?;
            let dcfg = DistillConfig {
                seed: derive_seed(seed, &[1]),
                ..cfg.distill.clone()
            };
            let reduced = match distill(&batch.matrix, n, &dcfg) {
                Ok(r) => r,
                Err(_) => return Ok(failed(b, controls, control_cost)),
            };
            let chosen: Vec<&StateTrajectory> = reduced
                .indices
                .iter()
                .map(|&i| &batch.trajectories[i])
                .collect();
            let hs = chosen
                .iter()
                .map(|t| constraint_h(t, scene, cfg.include_lane))
                .collect::<Result<Vec<_>>>()?;
            let residuals: Vec<f64> = hs.iter().map(|h| residual(*h)).collect();
            let width = cfg.risk_sigma.unwrap_or(reduced.sigma.get());
            let risk = risk_mmd(
                &residuals,
                &reduced.beta,
                KernelWidth::new(width)?,
                &cfg.dirac,
                derive_seed(seed, &[2]),
            )?;
            let evidence = RiskEvidence {
                constraint_values: hs,
                weights: reduced.beta.clone(),
                risk_sigma: Some(width),
                reduced_sigma: Some(reduced.sigma.get()),
                discrepancy: Some(reduced.discrepancy),
                simulated: n * n,
            };
            (risk, mean_state_cost(&chosen, scene, p.dt), evidence)
        }
        RiskKind::Cvar => {
            let trajs = rollout_independent(x0, &controls, nm, p, n, derive_seed(seed, &[0]));
            let hs = trajs
                .iter()
                .map(|t| constraint_h(t, scene, cfg.include_lane))
                .collect::<Result<Vec<_>>>()?;
            let residuals: Vec<f64> = hs.iter().map(|h| residual(*h)).collect();
            let risk = risk_cvar(&residuals, cfg.cvar_alpha)?;
            let refs: Vec<&StateTrajectory> = trajs.iter().collect();
            let evidence = RiskEvidence {
                constraint_values: hs,
                weights: alloc::vec![1.0 / n as f64; n],
                simulated: n,
                ..RiskEvidence::default()
            };
            (risk, mean_state_cost(&refs, scene, p.dt), evidence)
        }
        RiskKind::Det => {
            let traj = nominal_rollout(x0, &controls, p);
            let h = constraint_h(&traj, scene, cfg.include_lane)?;
            let evidence = RiskEvidence {
                constraint_values: alloc::vec![h],
                weights: alloc::vec![1.0],
                simulated: 1,
                ..RiskEvidence::default()
            };
            (residual(h), state_cost(&traj, scene, p.dt), evidence)
        }
    };
    let total = cfg.w1 * expected_cost + cfg.w2 * risk + cfg.w3 * control_cost;
    Ok(CandidateScore {
        setpoint: *b,
        controls,
        risk,
        expected_cost,
        control_cost,
        total,
        evidence,
    })
}

fn failed(b: &SetpointVector, controls: ControlSequence, control_cost: f64) -> CandidateScore {
    CandidateScore {
        setpoint: *b,
        controls,
        risk: f64::INFINITY,
        expected_cost: f64::INFINITY,
        control_cost,
        total: f64::INFINITY,
        evidence: RiskEvidence::default(),
    }
}

/// Exponentially weighted refit of the setpoint distribution on the elites.
///
/// Costs are shifted by their minimum before exponentiation. The result's
/// covariance has every eigenvalue at least `cov_floor`; a covariance that
/// already satisfies the floor is left untouched.
pub fn update_distribution(
    dist: &SamplingDistribution,
    elites: &[(SetpointVector, f64)],
    gamma: f64,
    eta: f64,
    cov_floor: f64,
) -> Result<SamplingDistribution> {
    if elites.is_empty() {
        return Err(Error::Empty);
    }
    let c_min = elites.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = elites
        .iter()
        .map(|e| (-(e.1 - c_min) / gamma).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(invalid("elite weights are degenerate"));
    }
    let mut target = [0.0; 2];
    for (w, (b, _)) in weights.iter().zip(elites) {
        target[0] += w * b.v_set;
        target[1] += w * b.d_set;
    }
    target[0] /= total;
    target[1] /= total;
    let mean = [
        (1.0 - eta) * dist.mean[0] + eta * target[0],
        (1.0 - eta) * dist.mean[1] + eta * target[1],
    ];

    let mut spread = [[0.0; 2]; 2];
    for (w, (b, _)) in weights.iter().zip(elites) {
        let e = [b.v_set - mean[0], b.d_set - mean[1]];
        for i in 0..2 {
            for j in 0..2 {
                spread[i][j] += w * e[i] * e[j];
            }
        }
    }
    let mut cov = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            cov[i][j] = (1.0 - eta) * dist.cov[i][j] + eta * spread[i][j] / total;
        }
    }
    cov[1][0] = cov[0][1];
    Ok(SamplingDistribution {
        mean,
        cov: floor_covariance(cov, cov_floor),
    })
}

fn floor_covariance(cov: [[f64; 2]; 2], floor: f64) -> [[f64; 2]; 2] {
    let (vals, vecs) = sym_eigen(cov);
    // the strict margin keeps the Cholesky factorization well away from zero
    if vals[0] >= floor && cov[0][0] > 0.0 {
        return cov;
    }
    let l = [vals[0].max(floor), vals[1].max(floor)];
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = vecs[i][0] * l[0] * vecs[j][0] + vecs[i][1] * l[1] * vecs[j][1];
        }
    }
    out[1][0] = out[0][1];
    out
}

/// What happened in one optimizer iteration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationTrace {
    /// Lowest total among this iteration's elites.
    pub best_total: f64,
    /// Mean total over this iteration's constraint elites with finite cost.
    pub mean_total: f64,
    /// Best total seen so far, across iterations.
    pub best_ever_total: f64,
    /// Batch indices of the constraint elites, ascending risk.
    pub constraint_elites: Vec<usize>,
    /// Batch indices of the elites, ascending total.
    pub elites: Vec<usize>,
    pub failed_candidates: usize,
}

/// Result of [`optimize`].
#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub best: CandidateScore,
    pub trace: Vec<IterationTrace>,
    /// Sampling distribution after the final update.
    pub distribution: SamplingDistribution,
}

/// Runs the full sampling optimizer from `x0`.
pub fn optimize(
    x0: &FrenetState,
    scene: &Scene,
    nm: &NoiseModel,
    p: &VehicleParams,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<OptimizeResult> {
    let init = cfg.initial_distribution(x0, scene)?;
    optimize_from(x0, 0.0, scene, nm, p, cfg, init, seed)
}

/// [`optimize`] starting from a given sampling distribution, with the
/// vehicle's current longitudinal acceleration `a0` (the receding-horizon
/// loop passes the last applied command).
#[allow(clippy::too_many_arguments)]
pub fn optimize_from(
    x0: &FrenetState,
    a0: f64,
    scene: &Scene,
    nm: &NoiseModel,
    p: &VehicleParams,
    cfg: &OptimizerConfig,
    init: SamplingDistribution,
    seed: u64,
) -> Result<OptimizeResult> {
    cfg.validate()?;
    p.validate()?;
    nm.validate()?;
    // the noise-ignorant baseline plans on the nominal model
    let plan_noise = match cfg.risk_kind {
        RiskKind::Det => NoiseModel::noiseless(),
        _ => *nm,
    };
    let mut dist = init;
    let mut best: Option<CandidateScore> = None;
    let mut trace = Vec::with_capacity(cfg.iterations);

    for m in 0..cfg.iterations {
        let setpoints =
            sample_setpoints(&dist, cfg.n, cfg.v_max, derive_seed(seed, &[m as u64, 0]))?;
        let scores = setpoints
            .iter()
            .enumerate()
            .map(|(q, b)| {
                score_candidate_from(
                    b,
                    x0,
                    a0,
                    scene,
                    &plan_noise,
                    p,
                    cfg,
                    rng::derive_seed(seed, &[m as u64, 1, q as u64]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let failed_candidates = scores.iter().filter(|s| !s.is_finite()).count();

        // lowest risk first; ties by total cost, then batch index
        let mut by_risk: Vec<usize> = (0..scores.len()).collect();
        by_risk.sort_by(|&a, &b| {
            scores[a]
                .risk
                .total_cmp(&scores[b].risk)
                .then(scores[a].total.total_cmp(&scores[b].total))
        });
        let constraint_elites: Vec<usize> = by_risk[..cfg.n_c].to_vec();
        let mut by_cost = constraint_elites.clone();
        by_cost.sort_by(|&a, &b| scores[a].total.total_cmp(&scores[b].total));
        let elites: Vec<usize> = by_cost[..cfg.n_e].to_vec();

        let finite: Vec<f64> = constraint_elites
            .iter()
            .map(|&i| scores[i].total)
            .filter(|t| t.is_finite())
            .collect();
        let mean_total = if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        let iter_best = &scores[elites[0]];
        if best.as_ref().is_none_or(|b| iter_best.total < b.total) {
            best = Some(iter_best.clone());
        }

        let pairs: Vec<(SetpointVector, f64)> = elites
            .iter()
            .filter(|&&i| scores[i].is_finite())
            .map(|&i| (scores[i].setpoint, scores[i].total))
            .collect();
        if !pairs.is_empty() {
            dist = update_distribution(&dist, &pairs, cfg.gamma, cfg.eta, cfg.cov_floor)?;
        }
        trace.push(IterationTrace {
            best_total: iter_best.total,
            mean_total,
            best_ever_total: best.as_ref().map_or(f64::INFINITY, |b| b.total),
            constraint_elites,
            elites,
            failed_candidates,
        });
    }
    let best = best.ok_or(Error::Empty)?;
    if !best.is_finite() {
        return Err(Error::AllCandidatesFailed {
            failures: cfg.n * cfg.iterations,
        });
    }
    Ok(OptimizeResult {
        best,
        trace,
        distribution: dist,
    })
}
