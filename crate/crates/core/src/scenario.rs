//! Seeded scenario generators for the benchmarks.

use alloc::vec::Vec;
use rand::Rng as _;

use crate::error::{invalid, Result};
use crate::risk::{Obstacle, Scene};
use crate::rng;
use crate::vehicle::FrenetState;

/// Longitudinal semi-axis of an obstacle ellipse (vehicle lengths inflated
/// by the ego footprint).
pub const OBSTACLE_A: f64 = 3.5;
/// Lateral semi-axis of an obstacle ellipse.
pub const OBSTACLE_B: f64 = 1.6;

/// Start state plus scene for one trajectory-optimization problem.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub x0: FrenetState,
    pub scene: Scene,
}

/// Random two-lane scene with `count` static obstacles ahead of the ego.
///
/// Obstacles sit on a lane center (with a small lateral jitter) between
/// 10 m and 34 m ahead, and the first one blocks the ego lane. Obstacles on
/// the same lane keep their ellipses apart and obstacles on different lanes
/// leave room for a lane change between them, so the scene is always
/// passable. Fails if `count` obstacles cannot be placed that way.
pub fn random_static(seed: u64, count: usize) -> Result<Scenario> {
    let mut r = rng::substream(seed, &[0x5ce0e]);
    let v0 = r.random_range(4.0..6.0);
    let lane0 = if r.random_bool(0.5) { 0.0 } else { 3.5 };
    let x0 = FrenetState::new(0.0, lane0, 0.0, 0.0, v0);
    let placed = (0..1000)
        .find_map(|_| place(&mut r, count, usize::from(lane0 != 0.0)))
        .ok_or_else(|| invalid("cannot place that many obstacles in a passable layout"))?;
    let obstacles = placed
        .iter()
        .map(|&(s, lane)| {
            let d = 3.5 * lane as f64 + r.random_range(-0.3..0.3);
            Obstacle::fixed(s, d, OBSTACLE_A, OBSTACLE_B)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenario {
        x0,
        scene: Scene::two_lane(6.0, obstacles)?,
    })
}

fn place(r: &mut rng::Rng, count: usize, ego_lane: usize) -> Option<Vec<(f64, usize)>> {
    let mut placed: Vec<(f64, usize)> = Vec::with_capacity(count);
    while placed.len() < count {
        let fits = (0..100).find_map(|_| {
            let s = r.random_range(10.0..34.0);
            let lane = if placed.is_empty() {
                ego_lane
            } else {
                r.random_range(0..2usize)
            };
            let clash = placed.iter().any(|&(so, lo)| {
                let gap = (so - s).abs();
                gap < if lo == lane {
                    2.0 * OBSTACLE_A
                } else {
                    4.0 * OBSTACLE_A
                }
            });
            (!clash).then_some((s, lane))
        })?;
        placed.push(fits);
    }
    Some(placed)
}

/// Straight two-lane corridor with `count` static obstacles alternating
/// lanes, evenly spread over `length` metres.
pub fn corridor(length: f64, count: usize, v_d: f64) -> Result<Scenario> {
    let spacing = length / (count as f64 + 1.0);
    let obstacles = (0..count)
        .map(|i| {
            let d = if i % 2 == 0 { 0.0 } else { 3.5 };
            Obstacle::fixed(spacing * (i as f64 + 1.0), d, OBSTACLE_A, OBSTACLE_B)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenario {
        x0: FrenetState::new(0.0, 0.0, 0.0, 0.0, 0.0),
        scene: Scene::two_lane(v_d, obstacles)?,
    })
}

/// The default 200 m, 8-obstacle MPC corridor.
pub fn default_corridor() -> Scenario {
    corridor(200.0, 8, 6.0).expect("default corridor parameters are valid")
}
