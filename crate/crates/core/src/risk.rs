//! Safety constraints and risk estimates over stochastic rollouts.
//!
//! `h(x) = max_k h_k(x_k)` collapses per-step constraints; `h ≤ 0` means the
//! whole trajectory is safe. The residual `h̄ = max(0, h)` is what both risk
//! estimators consume:
//!
//! * MMD risk: squared RKHS distance between the weighted residual
//!   embedding and the embedding of a (near) Dirac delta at zero.
//! * CVaR risk: mean of the worst `(1 − α)` tail of the residual samples.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::kernel::{mmd_squared, KernelWidth, WeightedSampleSet};
use crate::rng;
use crate::vehicle::{
    perturb_initial, rollout, sample_noise_with, ControlSequence, FrenetState, NoiseModel,
    StateTrajectory, VehicleParams,
};

/// Ellipse around an obstacle center, possibly moving.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Obstacle {
    /// Center `(s, d)` per step; a single entry means static.
    pub path: Vec<[f64; 2]>,
    /// Longitudinal semi-axis.
    pub a_e: f64,
    /// Lateral semi-axis.
    pub b_e: f64,
}

impl Obstacle {
    pub fn fixed(s: f64, d: f64, a_e: f64, b_e: f64) -> Result<Self> {
        Self::moving(alloc::vec![[s, d]], a_e, b_e)
    }

    pub fn moving(path: Vec<[f64; 2]>, a_e: f64, b_e: f64) -> Result<Self> {
        if !(a_e > 0.0 && b_e > 0.0) {
            return Err(invalid("obstacle semi-axes must be positive"));
        }
        if path.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Obstacle { path, a_e, b_e })
    }

    pub fn is_static(&self) -> bool {
        self.path.len() == 1
    }

    fn center(&self, k: usize) -> [f64; 2] {
        if self.is_static() {
            self.path[0]
        } else {
            self.path[k]
        }
    }

    /// `1 − ((s − s_o)/a)² − ((d − d_o)/b)²`; positive inside the ellipse.
    pub fn penetration(&self, k: usize, s: f64, d: f64) -> f64 {
        let [so, dobs] = self.center(k);
        let ds = (s - so) / self.a_e;
        let dd = (d - dobs) / self.b_e;
        1.0 - ds * ds - dd * dd
    }

    /// Horizon-aligned copy starting at absolute step `start`; positions past
    /// the end of the path hold the last one.
    pub fn window(&self, start: usize, horizon: usize) -> Obstacle {
        if self.is_static() {
            return self.clone();
        }
        let last = self.path.len() - 1;
        let path = (0..horizon)
            .map(|k| self.path[(start + k).min(last)])
            .collect();
        Obstacle {
            path,
            a_e: self.a_e,
            b_e: self.b_e,
        }
    }
}

/// Two-lane straight road with obstacles.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scene {
    pub d_lb: f64,
    pub d_ub: f64,
    /// First lane center-line.
    pub d_1: f64,
    /// Second lane center-line.
    pub d_2: f64,
    /// Desired speed.
    pub v_d: f64,
    pub obstacles: Vec<Obstacle>,
}

impl Scene {
    pub fn new(
        d_lb: f64,
        d_ub: f64,
        d_1: f64,
        d_2: f64,
        v_d: f64,
        obstacles: Vec<Obstacle>,
    ) -> Result<Self> {
        let scene = Scene {
            d_lb,
            d_ub,
            d_1,
            d_2,
            v_d,
            obstacles,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Standard 3.5 m lanes centered on `d = 0` and `d = 3.5`.
    pub fn two_lane(v_d: f64, obstacles: Vec<Obstacle>) -> Result<Self> {
        Self::new(-1.75, 5.25, 0.0, 3.5, v_d, obstacles)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_lb < self.d_1 && self.d_1 < self.d_2 && self.d_2 < self.d_ub) {
            return Err(invalid("lanes must satisfy d_lb < d_1 < d_2 < d_ub"));
        }
        if !(self.v_d > 0.0) {
            return Err(invalid("desired speed must be positive"));
        }
        Ok(())
    }

    /// Scene with every obstacle re-indexed from absolute step `start`.
    pub fn window(&self, start: usize, horizon: usize) -> Scene {
        Scene {
            obstacles: self
                .obstacles
                .iter()
                .map(|o| o.window(start, horizon))
                .collect(),
            ..self.clone()
        }
    }

    /// Lane-bound violation `max(0, d − d_ub, d_lb − d)`.
    pub fn lane_violation(&self, d: f64) -> f64 {
        (d - self.d_ub).max(self.d_lb - d).max(0.0)
    }

    /// True if `(s, d)` lies strictly inside any obstacle ellipse at step `k`.
    pub fn in_collision(&self, k: usize, s: f64, d: f64) -> bool {
        self.obstacles.iter().any(|o| o.penetration(k, s, d) > 0.0)
    }
}

/// Worst-case constraint value over the trajectory.
///
/// Per step, the obstacle part is the largest ellipse penetration and the
/// lane part is `max(d − d_ub, d_lb − d)`. With no obstacles and the lane
/// part disabled there is nothing to violate and the result is `−∞`.
pub fn constraint_h(traj: &StateTrajectory, scene: &Scene, include_lane: bool) -> Result<f64> {
    let horizon = traj.horizon();
    for o in &scene.obstacles {
        if !o.is_static() && o.path.len() != horizon {
            return Err(Error::HorizonMismatch {
                expected: horizon,
                found: o.path.len(),
            });
        }
    }
    let mut h = f64::NEG_INFINITY;
    for (k, x) in traj.states.iter().enumerate() {
        for o in &scene.obstacles {
            h = h.max(o.penetration(k, x.s, x.d));
        }
        if include_lane {
            h = h.max((x.d - scene.d_ub).max(scene.d_lb - x.d));
        }
    }
    Ok(h)
}

/// `max(0, h)`.
pub fn residual(h: f64) -> f64 {
    h.max(0.0)
}

/// Sample approximation of the Dirac delta at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DiracConfig {
    /// Number of delta samples; `0` means "one per residual".
    pub n_samples: usize,
    pub epsilon_std: f64,
}

impl Default for DiracConfig {
    fn default() -> Self {
        DiracConfig {
            n_samples: 0,
            epsilon_std: 1e-5,
        }
    }
}

/// MMD² between the `β`-weighted residual embedding and a delta at zero.
///
/// The delta is approximated by `n_samples` uniformly weighted draws from
/// `N(0, epsilon_std²)`; the kernel acts on the 1-D residual space.
pub fn risk_mmd(
    residuals: &[f64],
    beta: &[f64],
    sigma: KernelWidth,
    dc: &DiracConfig,
    seed: u64,
) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::Empty);
    }
    if !(dc.epsilon_std >= 0.0) {
        return Err(invalid("epsilon_std must be nonnegative"));
    }
    let x = WeightedSampleSet::scalar(residuals, beta.to_vec())?;
    let count = if dc.n_samples == 0 {
        residuals.len()
    } else {
        dc.n_samples
    };
    let mut r = rng::substream(seed, &[]);
    let deltas: Vec<f64> = (0..count)
        .map(|_| {
            if dc.epsilon_std == 0.0 {
                0.0
            } else {
                let g: f64 = StandardNormal.sample(&mut r);
                dc.epsilon_std * g
            }
        })
        .collect();
    let y = WeightedSampleSet::scalar(&deltas, alloc::vec![1.0 / count as f64; count])?;
    mmd_squared(&x, &y, sigma)
}

/// Largest residual a rollout of weight `beta` can have when the exact-delta
/// MMD risk of its plan is `risk`.
///
/// For nonnegative weights the risk is at least `(Σ βᵢ (1 − k(rᵢ, 0)))²`, so
/// `rᵢ ≤ −σ ln(1 − √risk / βᵢ)`. Infinite when `√risk ≥ β`.
pub fn residual_bound(risk: f64, beta: f64, sigma: KernelWidth) -> f64 {
    let ratio = risk.max(0.0).sqrt() / beta;
    if !(beta > 0.0) || ratio >= 1.0 {
        return f64::INFINITY;
    }
    -sigma.get() * (-ratio).ln_1p()
}

/// Empirical CVaR: mean of the largest `⌈(1 − α)·N⌉` residuals.
pub fn risk_cvar(residuals: &[f64], alpha: f64) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::Empty);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("CVaR level alpha must lie in (0, 1)"));
    }
    let n = residuals.len();
    // tolerance keeps e.g. (1 − 0.7)·10 = 3.0000000000000004 at 3
    let tail = (((1.0 - alpha) * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let mut sorted = residuals.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted[..tail].iter().sum::<f64>() / tail as f64)
}

/// Fraction of `m` noisy rollouts of `u` that hit an obstacle.
///
/// Lane bounds are ignored; only `h_obs > 0` counts as a collision.
pub fn ground_truth_collision_rate(
    x0: &FrenetState,
    u: &ControlSequence,
    scene: &Scene,
    nm: &NoiseModel,
    p: &VehicleParams,
    m: usize,
    seed: u64,
) -> Result<f64> {
    if m == 0 {
        return Err(invalid("ground-truth rollout count must be at least 1"));
    }
    let mut hits = 0usize;
    for i in 0..m {
        let mut r = rng::substream(seed, &[i as u64]);
        let start = perturb_initial(x0, p, &mut r);
        let (ea, et) = sample_noise_with(u, nm, &mut r);
        let traj = rollout(&start, u, &ea, &et, p);
        if constraint_h(&traj, scene, false)? > 0.0 {
            hits += 1;
        }
    }
    Ok(hits as f64 / m as f64)
}
