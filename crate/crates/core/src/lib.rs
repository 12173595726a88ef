//! Risk-aware trajectory optimization under stochastic vehicle dynamics.
//!
//! Collision risk is measured as the maximum mean discrepancy between the
//! distribution of constraint residuals and a Dirac delta at zero, computed
//! in a reproducing kernel Hilbert space from a small, optimally weighted
//! subset of stochastic rollouts.
//!
//! The crate is `no_std` (it needs `alloc`) and has no IO. The `riskmmd`
//! crate layers configuration files, the CLI and benchmark drivers on top.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`kernel`] | Laplacian kernel, Gram matrices, biased MMD² |
//! | [`reduced_set`] | selection function, KKT inner QP, CEM distillation |
//! | [`vehicle`] | Frenet bicycle, noise models, batched rollouts |
//! | [`risk`] | constraints, residuals, MMD/CVaR risk, ground truth |
//! | [`frenet`] | setpoint sampling, polynomial expansion, flatness |
//! | [`optimizer`] | the sampling optimizer |
//! | [`mpc`] | receding-horizon episodes and metrics |
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod frenet;
pub mod kernel;
pub mod linalg;
pub mod mpc;
pub mod optimizer;
pub mod reduced_set;
pub mod risk;
pub mod rng;
pub mod scenario;
pub mod vehicle;

pub use error::{Error, Result};
pub use frenet::{SamplingDistribution, SetpointVector};
pub use kernel::{KernelWidth, WeightedSampleSet};
pub use linalg::Matrix;
pub use optimizer::{CandidateScore, OptimizerConfig, RiskKind};
pub use reduced_set::{DistillConfig, ReducedSet, RolloutMatrix};
pub use risk::{DiracConfig, Obstacle, Scene};
pub use vehicle::{
    ControlSequence, FrenetState, NoiseFamily, NoiseModel, StateTrajectory, VehicleParams,
};
