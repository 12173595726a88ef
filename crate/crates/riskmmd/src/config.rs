//! Run configuration.
//!
//! One TOML file per run. Only `[vehicle] horizon` is required; every other
//! key falls back to a default. Command-specific sections (`[benchmark]`,
//! `[mpc]`, `[distill]`) are only read by the matching subcommand.
//!
//! ```toml
//! seed = 7
//!
//! [vehicle]
//! horizon = 40
//!
//! [noise]
//! preset = "low-gauss"
//!
//! [optimizer]
//! risk_kind = "mmd"
//! reduced_n = 4
//!
//! [[scene.obstacles]]
//! s = 20.0
//! d = 0.0
//! ```

use std::path::{Path, PathBuf};

use riskmmd_core::mpc::EpisodeConfig;
use riskmmd_core::scenario::{OBSTACLE_A, OBSTACLE_B};
use riskmmd_core::{
    DistillConfig, FrenetState, NoiseFamily, NoiseModel, Obstacle, OptimizerConfig, RiskKind,
    Scene, VehicleParams,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::presets;

/// Version of every emitted record layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    vehicle: VehicleSection,
    #[serde(default)]
    noise: NoiseSection,
    #[serde(default)]
    optimizer: OptimizerConfig,
    #[serde(default)]
    scene: SceneSection,
    #[serde(default)]
    start: StartSection,
    benchmark: Option<BenchmarkSpec>,
    mpc: Option<MpcSpec>,
    distill: Option<DistillSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleSection {
    horizon: usize,
    wheelbase: Option<f64>,
    dt: Option<f64>,
    a_min: Option<f64>,
    a_max: Option<f64>,
    theta_min: Option<f64>,
    theta_max: Option<f64>,
    init_std: Option<[f64; 5]>,
}

impl VehicleSection {
    fn resolve(&self) -> VehicleParams {
        let d = VehicleParams::default();
        VehicleParams {
            wheelbase: self.wheelbase.unwrap_or(d.wheelbase),
            dt: self.dt.unwrap_or(d.dt),
            horizon: self.horizon,
            a_min: self.a_min.unwrap_or(d.a_min),
            a_max: self.a_max.unwrap_or(d.a_max),
            theta_min: self.theta_min.unwrap_or(d.theta_min),
            theta_max: self.theta_max.unwrap_or(d.theta_max),
            init_std: self.init_std.unwrap_or(d.init_std),
        }
    }
}

/// Either a preset name or an explicit family with its four constants.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseSection {
    preset: Option<String>,
    family: Option<String>,
    c_a1: Option<f64>,
    c_a2: Option<f64>,
    c_th1: Option<f64>,
    c_th2: Option<f64>,
}

impl NoiseSection {
    fn resolve(&self) -> Result<NamedNoise> {
        let explicit = [self.c_a1, self.c_a2, self.c_th1, self.c_th2];
        match (&self.preset, &self.family) {
            (Some(_), Some(_)) => Err(invalid(
                "[noise] takes either `preset` or `family`, not both",
            )),
            (Some(name), None) => {
                if explicit.iter().any(Option::is_some) {
                    return Err(invalid(
                        "[noise] constants cannot be combined with `preset`",
                    ));
                }
                let model = presets::model(name).ok_or_else(|| {
                    invalid(format!(
                        "unknown noise preset `{name}` (known: {}, {})",
                        presets::NOISELESS,
                        presets::names().join(", ")
                    ))
                })?;
                Ok(NamedNoise {
                    name: name.clone(),
                    model,
                })
            }
            (None, Some(family)) => {
                let family: NoiseFamily = family
                    .parse()
                    .map_err(|e| invalid(format!("[noise] {e}")))?;
                let [a1, a2, t1, t2] = explicit.map(|c| c.unwrap_or(0.0));
                let model = NoiseModel::new(family, a1, a2, t1, t2)
                    .map_err(|e| invalid(format!("[noise] {e}")))?;
                Ok(NamedNoise {
                    name: "custom".into(),
                    model,
                })
            }
            (None, None) => {
                if explicit.iter().any(Option::is_some) {
                    return Err(invalid("[noise] constants need a `family`"));
                }
                Ok(NamedNoise {
                    name: presets::NOISELESS.into(),
                    model: NoiseModel::noiseless(),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedNoise {
    pub name: String,
    pub model: NoiseModel,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SceneSection {
    d_lb: f64,
    d_ub: f64,
    d_1: f64,
    d_2: f64,
    v_d: f64,
    obstacles: Vec<ObstacleSpec>,
}

impl Default for SceneSection {
    fn default() -> Self {
        SceneSection {
            d_lb: -1.75,
            d_ub: 5.25,
            d_1: 0.0,
            d_2: 3.5,
            v_d: 6.0,
            obstacles: Vec::new(),
        }
    }
}

/// A static obstacle (`s`, `d`) or a moving one (`path`).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleSpec {
    s: Option<f64>,
    d: Option<f64>,
    path: Option<Vec<[f64; 2]>>,
    a: Option<f64>,
    b: Option<f64>,
}

impl SceneSection {
    fn resolve(&self) -> Result<Scene> {
        let obstacles = self
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let a = o.a.unwrap_or(OBSTACLE_A);
                let b = o.b.unwrap_or(OBSTACLE_B);
                let made = match (o.s, o.d, &o.path) {
                    (Some(s), Some(d), None) => Obstacle::fixed(s, d, a, b),
                    (None, None, Some(path)) => Obstacle::moving(path.clone(), a, b),
                    _ => {
                        return Err(invalid(format!(
                            "scene.obstacles[{i}] needs either `s` and `d` or `path`"
                        )))
                    }
                };
                made.map_err(|e| invalid(format!("scene.obstacles[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Scene::new(
            self.d_lb, self.d_ub, self.d_1, self.d_2, self.v_d, obstacles,
        )
        .map_err(|e| invalid(format!("[scene] {e}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct StartSection {
    s: f64,
    d: f64,
    psi: f64,
    psi_dot: f64,
    v: f64,
}

impl Default for StartSection {
    fn default() -> Self {
        StartSection {
            s: 0.0,
            d: 0.0,
            psi: 0.0,
            psi_dot: 0.0,
            v: 5.0,
        }
    }
}

/// Trajectory-optimization sweep over random static scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSpec {
    /// First scenario id; ids run `first_scenario..first_scenario + scenarios`.
    pub first_scenario: u64,
    pub scenarios: u64,
    /// Obstacles per scene.
    pub obstacles: usize,
    pub n_values: Vec<usize>,
    pub methods: Vec<RiskKind>,
    pub presets: Vec<String>,
    /// Ground-truth rollouts per row.
    pub gt_samples: usize,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            first_scenario: 0,
            scenarios: 100,
            obstacles: 3,
            n_values: vec![2, 4],
            methods: vec![RiskKind::Mmd, RiskKind::Cvar, RiskKind::Det],
            presets: vec!["low-gauss".into()],
            gt_samples: 1000,
        }
    }
}

impl BenchmarkSpec {
    fn validate(&self) -> Result<()> {
        if self.scenarios == 0
            || self.n_values.is_empty()
            || self.methods.is_empty()
            || self.presets.is_empty()
        {
            return Err(invalid("[benchmark] sweeps must be non-empty"));
        }
        if self.n_values.contains(&0) {
            return Err(invalid("[benchmark] n_values must be positive"));
        }
        if self.gt_samples < 100 {
            return Err(invalid("[benchmark] gt_samples must be at least 100"));
        }
        if self.obstacles == 0 {
            return Err(invalid("[benchmark] obstacles must be positive"));
        }
        check_presets("[benchmark]", &self.presets)
    }
}

/// Receding-horizon grid over methods and noise presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcSpec {
    pub episodes: u64,
    pub methods: Vec<RiskKind>,
    pub presets: Vec<String>,
    /// Corridor obstacles, alternating lanes.
    pub obstacles: usize,
    pub v_d: f64,
    pub route_length: f64,
    pub max_steps: usize,
    pub cov_reset: f64,
    pub measurement_std: [f64; 5],
}

impl Default for MpcSpec {
    fn default() -> Self {
        MpcSpec {
            episodes: 50,
            methods: vec![RiskKind::Mmd, RiskKind::Cvar, RiskKind::Det],
            presets: vec!["mpc-gauss".into()],
            obstacles: 8,
            v_d: 6.0,
            route_length: 200.0,
            max_steps: 1500,
            cov_reset: 0.5,
            measurement_std: [0.0; 5],
        }
    }
}

impl MpcSpec {
    pub fn episode_config(&self) -> EpisodeConfig {
        EpisodeConfig {
            route_length: self.route_length,
            max_steps: self.max_steps,
            cov_reset: self.cov_reset,
            measurement_std: self.measurement_std,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.methods.is_empty() || self.presets.is_empty() {
            return Err(invalid("[mpc] sweeps must be non-empty"));
        }
        if !(self.route_length > 0.0) || self.max_steps == 0 {
            return Err(invalid("[mpc] route_length and max_steps must be positive"));
        }
        if !(0.0..=1.0).contains(&self.cov_reset) {
            return Err(invalid("[mpc] cov_reset must lie in [0, 1]"));
        }
        if self.measurement_std.iter().any(|s| !(*s >= 0.0)) {
            return Err(invalid("[mpc] measurement_std entries must be nonnegative"));
        }
        if !(self.v_d > 0.0) {
            return Err(invalid("[mpc] v_d must be positive"));
        }
        check_presets("[mpc]", &self.presets)
    }
}

/// Standalone reduced-set distillation of a rollout file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillSpec {
    /// Rollout matrix, one comma-separated row per rollout; relative paths
    /// resolve against the config file's directory.
    pub rollouts: Option<PathBuf>,
    pub n: usize,
    /// Random uniform-weight subsets in the baseline.
    pub baseline_subsets: usize,
    /// Widths per subset in the baseline, log-spaced over the `σ` bounds.
    pub baseline_widths: usize,
    pub cem: DistillConfig,
}

impl Default for DistillSpec {
    fn default() -> Self {
        DistillSpec {
            rollouts: None,
            n: 4,
            baseline_subsets: 50,
            baseline_widths: 8,
            cem: DistillConfig::default(),
        }
    }
}

fn check_presets(section: &str, names: &[String]) -> Result<()> {
    for name in names {
        if presets::model(name).is_none() {
            return Err(invalid(format!("{section} unknown noise preset `{name}`")));
        }
    }
    Ok(())
}

/// A fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub seed: u64,
    pub vehicle: VehicleParams,
    pub noise: NamedNoise,
    pub optimizer: OptimizerConfig,
    pub scene: Scene,
    pub start: FrenetState,
    pub benchmark: Option<BenchmarkSpec>,
    pub mpc: Option<MpcSpec>,
    pub distill: Option<DistillSpec>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut cfg = Config::parse(&text).map_err(|e| match e {
            Error::Invalid(message) => Error::Config {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        if let Some(d) = cfg.distill.as_mut() {
            if let Some(r) = d.rollouts.as_mut() {
                if r.is_relative() {
                    *r = path.parent().unwrap_or(Path::new(".")).join(&*r);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Config> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| invalid(e.to_string().trim_end()))?;
        let vehicle = raw.vehicle.resolve();
        vehicle
            .validate()
            .map_err(|e| invalid(format!("[vehicle] {e}")))?;
        raw.optimizer
            .validate()
            .map_err(|e| invalid(format!("[optimizer] {e}")))?;
        if let Some(b) = &raw.benchmark {
            b.validate()?;
        }
        if let Some(m) = &raw.mpc {
            m.validate()?;
        }
        if let Some(d) = &raw.distill {
            d.cem
                .validate()
                .map_err(|e| invalid(format!("[distill.cem] {e}")))?;
            if d.n == 0 || d.baseline_subsets == 0 || d.baseline_widths == 0 {
                return Err(invalid(
                    "[distill] n, baseline_subsets and baseline_widths must be positive",
                ));
            }
        }
        let s = &raw.start;
        let start = FrenetState::new(s.s, s.d, s.psi, s.psi_dot, s.v);
        if !start.is_finite() || start.v < 0.0 {
            return Err(invalid("[start] state must be finite with v >= 0"));
        }
        Ok(Config {
            seed: raw.seed,
            vehicle,
            noise: raw.noise.resolve()?,
            optimizer: raw.optimizer,
            scene: raw.scene.resolve()?,
            start,
            benchmark: raw.benchmark,
            mpc: raw.mpc,
            distill: raw.distill,
        })
    }

    /// SHA-256 of the resolved configuration with the seed left out, as hex.
    ///
    /// Defaults are filled in before hashing, so spelling a default out
    /// explicitly does not change the hash.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("seed");
            // where the rollouts live is not part of the experiment
            if let Some(d) = map.get_mut("distill").and_then(|d| d.as_object_mut()) {
                d.remove("rollouts");
            }
        }
        let canonical = serde_json::to_vec(&value).expect("json value serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn benchmark(&self) -> Result<&BenchmarkSpec> {
        self.benchmark
            .as_ref()
            .ok_or_else(|| invalid("missing [benchmark] section"))
    }

    pub fn mpc(&self) -> Result<&MpcSpec> {
        self.mpc
            .as_ref()
            .ok_or_else(|| invalid("missing [mpc] section"))
    }

    pub fn distill(&self) -> Result<&DistillSpec> {
        self.distill
            .as_ref()
            .ok_or_else(|| invalid("missing [distill] section"))
    }
}
