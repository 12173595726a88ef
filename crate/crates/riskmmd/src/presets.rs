//! Named noise presets.
//!
//! Every preset also ships as `presets/<name>.toml` in this crate; a test
//! keeps the two in sync.

use riskmmd_core::{NoiseFamily, NoiseModel};

/// A named set of noise constants `(c_a1, c_a2, c_th1, c_th2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub family: NoiseFamily,
    pub constants: [f64; 4],
}

impl Preset {
    pub fn model(&self) -> NoiseModel {
        let [a1, a2, t1, t2] = self.constants;
        NoiseModel::new(self.family, a1, a2, t1, t2).expect("preset constants are valid")
    }
}

const fn gauss(name: &'static str, constants: [f64; 4]) -> Preset {
    Preset {
        name,
        family: NoiseFamily::Gaussian,
        constants,
    }
}

const fn beta(name: &'static str, constants: [f64; 4]) -> Preset {
    Preset {
        name,
        family: NoiseFamily::Beta,
        constants,
    }
}

pub const PRESETS: &[Preset] = &[
    // static-obstacle trajectory optimization
    gauss("low-gauss", [0.1, 0.001, 0.1, 0.001]),
    gauss("high-gauss", [0.15, 0.001, 0.15, 0.001]),
    beta("low-beta", [0.1, 0.001, 0.001, 0.001]),
    beta("high-beta", [0.15, 0.001, 0.0015, 0.001]),
    // dynamic-obstacle trajectory optimization
    gauss("dyn-low-gauss", [0.1, 0.001, 0.1, 0.001]),
    gauss("dyn-high-gauss", [0.15, 0.001, 0.15, 0.001]),
    beta("dyn-low-beta", [0.1, 0.001, 0.005, 0.001]),
    beta("dyn-high-beta", [0.15, 0.001, 0.0075, 0.001]),
    // receding-horizon runs, static and dynamic corridors
    gauss("mpc-gauss", [0.3, 0.3, 0.3, 0.01]),
    beta("mpc-beta", [0.01, 0.3, 0.01, 0.01]),
    gauss("mpc-dyn-gauss", [0.3, 0.4, 0.3, 0.01]),
    beta("mpc-dyn-beta", [0.05, 0.4, 0.05, 0.01]),
];

/// Name reserved for the zero-noise model.
pub const NOISELESS: &str = "none";

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// Noise model for a preset name, including [`NOISELESS`].
pub fn model(name: &str) -> Option<NoiseModel> {
    if name == NOISELESS {
        return Some(NoiseModel::noiseless());
    }
    find(name).map(Preset::model)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}
