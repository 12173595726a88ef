//! Frenet-frame kinematic bicycle with control-dependent noise.
//!
//! The reference path is straight, so the Frenet coordinates `(s, d)` are
//! plain longitudinal/lateral positions. One explicit-Euler step is
//!
//! ```text
//! ψ̇ = v·tan θ / L
//! s += dt·v·cos ψ,  d += dt·v·sin ψ,  ψ += dt·ψ̇,  v = max(0, v + dt·a)
//! ```

use alloc::vec::Vec;
use core::str::FromStr;
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::reduced_set::RolloutMatrix;
use crate::rng::{self, Rng};

/// Lower clamp on Beta shape parameters; `B(0, 0)` is undefined.
pub const BETA_PARAM_MIN: f64 = 1e-3;

/// Vehicle state in road-aligned coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrenetState {
    pub s: f64,
    pub d: f64,
    pub psi: f64,
    pub psi_dot: f64,
    pub v: f64,
}

impl FrenetState {
    pub fn new(s: f64, d: f64, psi: f64, psi_dot: f64, v: f64) -> Self {
        FrenetState {
            s,
            d,
            psi,
            psi_dot,
            v,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.s, self.d, self.psi, self.psi_dot, self.v]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        FrenetState::new(a[0], a[1], a[2], a[3], a[4])
    }
}

/// Acceleration and steering commands over the horizon.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControlSequence {
    pub a: Vec<f64>,
    pub theta: Vec<f64>,
}

impl ControlSequence {
    pub fn new(a: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if a.len() != theta.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: theta.len(),
            });
        }
        Ok(ControlSequence { a, theta })
    }

    pub fn zeros(horizon: usize) -> Self {
        ControlSequence {
            a: alloc::vec![0.0; horizon],
            theta: alloc::vec![0.0; horizon],
        }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `‖(a, θ)‖²`.
    pub fn squared_norm(&self) -> f64 {
        self.a.iter().chain(&self.theta).map(|v| v * v).sum()
    }

    pub fn within_bounds(&self, p: &VehicleParams) -> bool {
        self.a.iter().all(|&a| a >= p.a_min && a <= p.a_max)
            && self
                .theta
                .iter()
                .all(|&t| t >= p.theta_min && t <= p.theta_max)
    }
}

/// Noise family for the control perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NoiseFamily {
    Gaussian,
    Beta,
}

impl FromStr for NoiseFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseFamily::Gaussian),
            "beta" => Ok(NoiseFamily::Beta),
            other => Err(invalid(alloc::format!("unknown noise family `{other}`"))),
        }
    }
}

/// Control-dependent perturbation model.
///
/// Gaussian: `ε_a = |c_a1·a|·N(0,1) + c_a2·N(0,1)`.
/// Beta: `ε_a = c_a1·B(2|a|, 5|a|) + c_a2·N(0,1)`.
/// Steering uses `c_th1`, `c_th2` and `θ` in the same way.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseModel {
    pub family: NoiseFamily,
    pub c_a1: f64,
    pub c_a2: f64,
    pub c_th1: f64,
    pub c_th2: f64,
}

impl NoiseModel {
    pub fn new(family: NoiseFamily, c_a1: f64, c_a2: f64, c_th1: f64, c_th2: f64) -> Result<Self> {
        let nm = NoiseModel {
            family,
            c_a1,
            c_a2,
            c_th1,
            c_th2,
        };
        nm.validate()?;
        Ok(nm)
    }

    /// All constants zero.
    pub fn noiseless() -> Self {
        NoiseModel {
            family: NoiseFamily::Gaussian,
            c_a1: 0.0,
            c_a2: 0.0,
            c_th1: 0.0,
            c_th2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = [self.c_a1, self.c_a2, self.c_th1, self.c_th2];
        if c.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid("noise constants must be nonnegative and finite"));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.c_a1 == 0.0 && self.c_a2 == 0.0 && self.c_th1 == 0.0 && self.c_th2 == 0.0
    }

    fn draw(&self, u: f64, c1: f64, c2: f64, r: &mut Rng) -> f64 {
        match self.family {
            NoiseFamily::Gaussian => {
                let g1: f64 = StandardNormal.sample(r);
                let g2: f64 = StandardNormal.sample(r);
                (c1 * u).abs() * g1 + c2 * g2
            }
            NoiseFamily::Beta => {
                let a = (2.0 * u.abs()).max(BETA_PARAM_MIN);
                let b = (5.0 * u.abs()).max(BETA_PARAM_MIN);
                let x = match Beta::new(a, b) {
                    Ok(dist) => dist.sample(r),
                    Err(_) => 0.0,
                };
                let g: f64 = StandardNormal.sample(r);
                c1 * x + c2 * g
            }
        }
    }
}

/// Vehicle geometry, discretization and limits.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub dt: f64,
    pub horizon: usize,
    pub a_min: f64,
    pub a_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Standard deviation of the initial-state distribution, per component
    /// `(s, d, ψ, ψ̇, v)`.
    pub init_std: [f64; 5],
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            wheelbase: 2.5,
            dt: 0.1,
            horizon: 40,
            a_min: -3.0,
            a_max: 2.0,
            theta_min: -0.5,
            theta_max: 0.5,
            init_std: [0.0; 5],
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wheelbase > 0.0) || !(self.dt > 0.0) || self.horizon == 0 {
            return Err(invalid("need wheelbase > 0, dt > 0 and horizon >= 1"));
        }
        if !(self.a_min <= self.a_max) || !(self.theta_min <= self.theta_max) {
            return Err(invalid("control bounds must satisfy min <= max"));
        }
        if self.init_std.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("initial-state std must be nonnegative"));
        }
        Ok(())
    }
}

/// Horizon-length state sequence `x_1..x_H` and the controls that produced it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateTrajectory {
    pub states: Vec<FrenetState>,
    pub controls: ControlSequence,
}

impl StateTrajectory {
    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    /// `(s_1, d_1, s_2, d_2, …)`.
    pub fn positions(&self) -> Vec<f64> {
        self.states.iter().flat_map(|x| [x.s, x.d]).collect()
    }

    pub fn full_state(&self) -> Vec<f64> {
        self.states.iter().flat_map(|x| x.as_array()).collect()
    }
}

/// One Euler step with zero path curvature.
pub fn step(x: &FrenetState, a: f64, theta: f64, p: &VehicleParams) -> FrenetState {
    step_curved(x, a, theta, p, 0.0)
}

// Curvature hook; everything public runs with kappa = 0.
fn step_curved(x: &FrenetState, a: f64, theta: f64, p: &VehicleParams, kappa: f64) -> FrenetState {
    debug_assert!(x.is_finite() && a.is_finite() && theta.is_finite());
    let s_rate = x.v * x.psi.cos() / (1.0 - kappa * x.d);
    let psi_dot = x.v * theta.tan() / p.wheelbase - kappa * s_rate;
    FrenetState {
        s: x.s + p.dt * s_rate,
        d: x.d + p.dt * x.v * x.psi.sin(),
        psi: x.psi + p.dt * psi_dot,
        psi_dot,
        v: (x.v + p.dt * a).max(0.0),
    }
}

/// Applies `u` perturbed by `(eps_a, eps_theta)` from `x0`.
pub fn rollout(
    x0: &FrenetState,
    u: &ControlSequence,
    eps_a: &[f64],
    eps_theta: &[f64],
    p: &VehicleParams,
) -> StateTrajectory {
    let mut states = Vec::with_capacity(u.len());
    let mut x = *x0;
    for k in 0..u.len() {
        let ea = eps_a.get(k).copied().unwrap_or(0.0);
        let et = eps_theta.get(k).copied().unwrap_or(0.0);
        x = step(&x, u.a[k] + ea, u.theta[k] + et, p);
        states.push(x);
    }
    StateTrajectory {
        states,
        controls: u.clone(),
    }
}

/// Noise-free rollout of `u`.
pub fn nominal_rollout(
    x0: &FrenetState,
    u: &ControlSequence,
    p: &VehicleParams,
) -> StateTrajectory {
    rollout(x0, u, &[], &[], p)
}

/// Per-step perturbations `(ε_a, ε_θ)` for `u`.
pub fn sample_noise(u: &ControlSequence, nm: &NoiseModel, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng::substream(seed, &[]);
    sample_noise_with(u, nm, &mut r)
}

pub(crate) fn sample_noise_with(
    u: &ControlSequence,
    nm: &NoiseModel,
    r: &mut Rng,
) -> (Vec<f64>, Vec<f64>) {
    let mut ea = Vec::with_capacity(u.len());
    let mut et = Vec::with_capacity(u.len());
    for k in 0..u.len() {
        ea.push(nm.draw(u.a[k], nm.c_a1, nm.c_a2, r));
        et.push(nm.draw(u.theta[k], nm.c_th1, nm.c_th2, r));
    }
    (ea, et)
}

/// Draws an initial state from the diagonal Gaussian around `x0`.
pub fn perturb_initial(x0: &FrenetState, p: &VehicleParams, r: &mut Rng) -> FrenetState {
    if p.init_std.iter().all(|s| *s == 0.0) {
        return *x0;
    }
    let mut a = x0.as_array();
    for (v, sd) in a.iter_mut().zip(p.init_std) {
        let g: f64 = StandardNormal.sample(r);
        *v += sd * g;
    }
    a[4] = a[4].max(0.0);
    FrenetState::from_array(a)
}

/// Which state components a rollout row holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RolloutFeatures {
    /// Flattened `(s, d)` over the horizon.
    #[default]
    Positions,
    /// All five state components over the horizon.
    FullState,
}

/// Flattens trajectories into rollout-matrix rows.
pub fn rollout_rows(trajs: &[StateTrajectory], features: RolloutFeatures) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = trajs
        .iter()
        .map(|t| match features {
            RolloutFeatures::Positions => t.positions(),
            RolloutFeatures::FullState => t.full_state(),
        })
        .collect();
    Matrix::from_rows(&rows)
}

/// `N²` stochastic rollouts of one control sequence.
#[derive(Debug, Clone)]
pub struct RolloutBatch {
    /// Row `i·N + j` is driven by acceleration noise sample `i` and
    /// steering noise sample `j`.
    pub trajectories: Vec<StateTrajectory>,
    pub matrix: RolloutMatrix,
}

/// Rolls out every pairing of `n` acceleration-noise samples with `n`
/// steering-noise samples, each from its own initial-state draw.
pub fn rollout_batch(
    x0: &FrenetState,
    u: &ControlSequence,
    nm: &NoiseModel,
    p: &VehicleParams,
    n: usize,
    seed: u64,
) -> Result<RolloutBatch> {
    rollout_batch_with(x0, u, nm, p, n, seed, RolloutFeatures::Positions)
}

pub fn rollout_batch_with(
    x0: &FrenetState,
    u: &ControlSequence,
    nm: &NoiseModel,
    p: &VehicleParams,
    n: usize,
    seed: u64,
    features: RolloutFeatures,
) -> Result<RolloutBatch> {
    if n == 0 {
        return Err(invalid("rollout count N must be at least 1"));
    }
    let noise: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .map(|i| sample_noise_with(u, nm, &mut rng::substream(seed, &[0, i as u64])))
        .collect();
    let mut trajectories = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut r = rng::substream(seed, &[1, i as u64, j as u64]);
            let start = perturb_initial(x0, p, &mut r);
            trajectories.push(rollout(&start, u, &noise[i].0, &noise[j].1, p));
        }
    }
    let matrix = RolloutMatrix::new(rollout_rows(&trajectories, features)?)?;
    Ok(RolloutBatch {
        trajectories,
        matrix,
    })
}

/// `n` independent rollouts, each with its own noise and initial state.
pub fn rollout_independent(
    x0: &FrenetState,
    u: &ControlSequence,
    nm: &NoiseModel,
    p: &VehicleParams,
    n: usize,
    seed: u64,
) -> Vec<StateTrajectory> {
    (0..n)
        .map(|i| {
            let mut r = rng::substream(seed, &[2, i as u64]);
            let start = perturb_initial(x0, p, &mut r);
            let (ea, et) = sample_noise_with(u, nm, &mut r);
            rollout(&start, u, &ea, &et, p)
        })
        .collect()
}
