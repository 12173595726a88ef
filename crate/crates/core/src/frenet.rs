//! Setpoint sampling and Frenet trajectory expansion.
//!
//! A setpoint `b = (v_set, d_set)` is expanded into smooth profiles over the
//! horizon `T = H·dt`: the lateral offset follows a quintic from
//! `(d₀, ḋ₀, 0)` to `(d_set, 0, 0)`, the speed a cubic from `(v₀, 0)` to
//! `(v_set, 0)`, and `s` integrates the speed. Controls are then recovered
//! from the profiles through differential flatness of the bicycle.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::rng;
use crate::vehicle::{ControlSequence, FrenetState, VehicleParams};

/// Speed floor in the steering recovery; avoids dividing by ~0.
pub const V_EPS: f64 = 0.1;

/// Terminal speed and lateral-offset targets.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SetpointVector {
    pub v_set: f64,
    pub d_set: f64,
}

impl SetpointVector {
    pub fn new(v_set: f64, d_set: f64) -> Self {
        SetpointVector { v_set, d_set }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.v_set, self.d_set]
    }
}

/// Gaussian over setpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplingDistribution {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl SamplingDistribution {
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        let d = SamplingDistribution { mean, cov };
        d.cholesky()?;
        Ok(d)
    }

    pub fn diagonal(mean: [f64; 2], std: [f64; 2]) -> Result<Self> {
        Self::new(mean, [[std[0] * std[0], 0.0], [0.0, std[1] * std[1]]])
    }

    /// Eigenvalues of the covariance, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        sym_eigen(self.cov).0
    }

    fn cholesky(&self) -> Result<[[f64; 2]; 2]> {
        let [[a, b], [c, d]] = self.cov;
        if !(a.is_finite() && b.is_finite() && d.is_finite()) || b != c {
            return Err(invalid("covariance must be finite and symmetric"));
        }
        if !(a > 0.0) {
            return Err(invalid("covariance is not positive definite"));
        }
        let l00 = a.sqrt();
        let l10 = b / l00;
        let rem = d - l10 * l10;
        if !(rem > 0.0) {
            return Err(invalid("covariance is not positive definite"));
        }
        Ok([[l00, 0.0], [l10, rem.sqrt()]])
    }
}

/// Eigen-decomposition of a symmetric 2×2 matrix: ascending eigenvalues and
/// the matching unit eigenvectors as columns.
pub(crate) fn sym_eigen(m: [[f64; 2]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
    let half_tr = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (l0, l1) = (half_tr - disc, half_tr + disc);
    if b.abs() <= 1e-300 {
        return if a <= d {
            ([a, d], [[1.0, 0.0], [0.0, 1.0]])
        } else {
            ([d, a], [[0.0, 1.0], [1.0, 0.0]])
        };
    }
    let v0 = normalize([l0 - d, b]);
    let v1 = normalize([l1 - d, b]);
    ([l0, l1], [[v0[0], v1[0]], [v0[1], v1[1]]])
}

fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}

/// `n` Gaussian setpoints with `v_set` clipped to `[0, v_max]`.
pub fn sample_setpoints(
    dist: &SamplingDistribution,
    n: usize,
    v_max: f64,
    seed: u64,
) -> Result<Vec<SetpointVector>> {
    let l = dist.cholesky()?;
    let mut r = rng::substream(seed, &[]);
    Ok((0..n)
        .map(|_| {
            let g0: f64 = StandardNormal.sample(&mut r);
            let g1: f64 = StandardNormal.sample(&mut r);
            let v = dist.mean[0] + l[0][0] * g0;
            let d = dist.mean[1] + l[1][0] * g0 + l[1][1] * g1;
            SetpointVector::new(v.clamp(0.0, v_max), d)
        })
        .collect())
}

/// Desired profiles sampled at `t_k = k·dt`, `k = 0..=H`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profiles {
    pub s: Vec<f64>,
    pub d: Vec<f64>,
    pub d_rate: Vec<f64>,
    pub v: Vec<f64>,
    /// Heading at `k = 0`, the anchor of the heading profile.
    pub psi0: f64,
    pub dt: f64,
}

impl Profiles {
    pub fn horizon(&self) -> usize {
        self.s.len() - 1
    }
}

/// Coefficients `c₀..c₅` of the quintic joining `(p0, v0, a0)` at `t = 0` to
/// `(p1, v1, a1)` at `t = T`.
pub fn quintic_coefficients(
    p0: f64,
    v0: f64,
    a0: f64,
    p1: f64,
    v1: f64,
    a1: f64,
    t: f64,
) -> [f64; 6] {
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let c0 = p0;
    let c1 = v0;
    let c2 = 0.5 * a0;
    // remaining three conditions, solved in closed form
    let e0 = p1 - (c0 + c1 * t + c2 * t2);
    let e1 = v1 - (c1 + 2.0 * c2 * t);
    let e2 = a1 - 2.0 * c2;
    let c3 = (10.0 * e0 - 4.0 * e1 * t + 0.5 * e2 * t2) / t3;
    let c4 = (-15.0 * e0 + 7.0 * e1 * t - e2 * t2) / t4;
    let c5 = (6.0 * e0 - 3.0 * e1 * t + 0.5 * e2 * t2) / t5;
    [c0, c1, c2, c3, c4, c5]
}

fn poly(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, ci| acc * t + ci)
}

fn poly_rate(c: &[f64], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, ci)| acc * t + i as f64 * ci)
}

/// Expands a setpoint into `s*, d*, v*` profiles starting from `x0` at rest
/// longitudinally (zero initial acceleration).
pub fn expand_trajectory(
    b: &SetpointVector,
    x0: &FrenetState,
    p: &VehicleParams,
) -> Result<Profiles> {
    expand_trajectory_from(b, x0, 0.0, p)
}

/// [`expand_trajectory`] with initial longitudinal acceleration `a0`.
///
/// The lateral start acceleration follows from the state,
/// `d̈₀ = a₀·sin ψ + v·cos ψ·ψ̇`, so a vehicle already turning or speeding up
/// gets a profile that continues its motion instead of restarting from rest.
pub fn expand_trajectory_from(
    b: &SetpointVector,
    x0: &FrenetState,
    a0: f64,
    p: &VehicleParams,
) -> Result<Profiles> {
    let h = p.horizon;
    if h < 2 {
        return Err(invalid(
            "trajectory expansion needs a horizon of at least 2",
        ));
    }
    let total = h as f64 * p.dt;
    if !a0.is_finite() {
        return Err(invalid("initial acceleration must be finite"));
    }
    let d_rate0 = x0.v * x0.psi.sin();
    let d_acc0 = a0 * x0.psi.sin() + x0.v * x0.psi.cos() * x0.psi_dot;
    let dc = quintic_coefficients(x0.d, d_rate0, d_acc0, b.d_set, 0.0, 0.0, total);
    // cubic v from (v₀, a₀) to (v_set, 0)
    let dv = b.v_set - x0.v;
    let c2 = (3.0 * dv - 2.0 * a0 * total) / (total * total);
    let c3 = (a0 * total - 2.0 * dv) / (total * total * total);

    let mut s = Vec::with_capacity(h + 1);
    let mut d = Vec::with_capacity(h + 1);
    let mut d_rate = Vec::with_capacity(h + 1);
    let mut v = Vec::with_capacity(h + 1);
    for k in 0..=h {
        let t = k as f64 * p.dt;
        let (t2, t3) = (t * t, t * t * t);
        v.push(x0.v + a0 * t + c2 * t2 + c3 * t3);
        s.push(x0.s + x0.v * t + 0.5 * a0 * t2 + c2 * t3 / 3.0 + 0.25 * c3 * t3 * t);
        d.push(poly(&dc, t));
        d_rate.push(poly_rate(&dc, t));
    }
    Ok(Profiles {
        s,
        d,
        d_rate,
        v,
        psi0: x0.psi,
        dt: p.dt,
    })
}

/// Recovers bounded controls from profiles.
///
/// `a_k = (v*_{k+1} − v*_k)/dt`; the heading profile is `ψ*_0 = ψ₀`,
/// `ψ*_k = atan2(ḋ*_k, ṡ*_k)` with `ṡ* = v*`, and
/// `θ_k = atan(L·ψ̇*_k / max(v*_k, V_EPS))` where `ψ̇*_k` is the forward
/// difference of `ψ*`. Both channels are clipped to the control bounds.
pub fn flatness_controls(prof: &Profiles, p: &VehicleParams) -> ControlSequence {
    let h = prof.horizon();
    let heading = |k: usize| {
        if k == 0 {
            prof.psi0
        } else {
            prof.d_rate[k].atan2(prof.v[k])
        }
    };
    let mut a = Vec::with_capacity(h);
    let mut theta = Vec::with_capacity(h);
    for k in 0..h {
        let acc = (prof.v[k + 1] - prof.v[k]) / prof.dt;
        a.push(acc.clamp(p.a_min, p.a_max));
        let psi_rate = (heading(k + 1) - heading(k)) / prof.dt;
        let steer = (p.wheelbase * psi_rate / prof.v[k].max(V_EPS)).atan();
        theta.push(steer.clamp(p.theta_min, p.theta_max));
    }
    ControlSequence { a, theta }
}

/// Setpoint → bounded controls in one call.
///
/// Starts from zero longitudinal acceleration, see [`expand_trajectory`].
pub fn plan_controls(
    b: &SetpointVector,
    x0: &FrenetState,
    p: &VehicleParams,
) -> Result<ControlSequence> {
    Ok(flatness_controls(&expand_trajectory(b, x0, p)?, p))
}
