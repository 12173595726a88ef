use std::path::Path;

use riskmmd::presets::{self, PRESETS};
use riskmmd::{Config, Error};
use riskmmd_core::{NoiseFamily, NoiseModel, RiskKind};

const MINIMAL: &str = "[vehicle]\nhorizon = 40\n";

fn crate_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

fn parse_err(text: &str) -> String {
    match Config::parse(text) {
        Err(e) => {
            assert_eq!(e.exit_code(), 2, "{e}");
            e.to_string()
        }
        Ok(_) => panic!("expected an error for:\n{text}"),
    }
}

#[test]
fn minimal_config_fills_defaults() {
    let cfg = Config::parse(MINIMAL).unwrap();
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.vehicle.horizon, 40);
    assert_eq!(cfg.vehicle.dt, 0.1);
    assert_eq!(cfg.noise.name, "none");
    assert!(cfg.noise.model.is_noiseless());
    assert_eq!(cfg.optimizer.risk_kind, RiskKind::Mmd);
    assert!(cfg.scene.obstacles.is_empty());
    assert!(cfg.benchmark.is_none() && cfg.mpc.is_none() && cfg.distill.is_none());
}

#[test]
fn missing_horizon_is_named() {
    let msg = parse_err("[vehicle]\ndt = 0.1\n");
    assert!(msg.contains("horizon"), "{msg}");
    let msg = parse_err("seed = 3\n");
    assert!(msg.contains("vehicle"), "{msg}");
}

#[test]
fn unknown_keys_are_rejected_with_position() {
    let msg = parse_err("[vehicle]\nhorizon = 40\nhorizn = 4\n");
    assert!(msg.contains("horizn") && msg.contains("line 3"), "{msg}");
    let msg = parse_err("[vehicle]\nhorizon = 40\n[optimizer]\nreduced = 3\n");
    assert!(msg.contains("reduced"), "{msg}");
}

#[test]
fn load_reports_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[vehicle]\n").unwrap();
    let err = Config::load(&path).unwrap_err();
    assert!(matches!(err, Error::Config { .. }));
    assert!(err.to_string().contains("bad.toml"));
    let missing = Config::load(&dir.path().join("nope.toml")).unwrap_err();
    assert_eq!(missing.exit_code(), 2);
}

#[test]
fn invalid_values_are_config_errors() {
    parse_err("[vehicle]\nhorizon = 0\n");
    parse_err(&format!("{MINIMAL}[optimizer]\nn_e = 50\n"));
    parse_err(&format!("{MINIMAL}[optimizer]\nrisk_kind = \"var\"\n"));
    parse_err(&format!("{MINIMAL}[noise]\npreset = \"medium-gauss\"\n"));
    parse_err(&format!(
        "{MINIMAL}[noise]\npreset = \"low-gauss\"\nfamily = \"beta\"\n"
    ));
    parse_err(&format!("{MINIMAL}[noise]\nc_a1 = 0.1\n"));
    parse_err(&format!(
        "{MINIMAL}[noise]\nfamily = \"gaussian\"\nc_a1 = -1.0\n"
    ));
    parse_err(&format!("{MINIMAL}[scene]\nd_1 = 9.0\n"));
    parse_err(&format!("{MINIMAL}[[scene.obstacles]]\ns = 3.0\n"));
    parse_err(&format!("{MINIMAL}[start]\nv = -1.0\n"));
    parse_err(&format!("{MINIMAL}[benchmark]\ngt_samples = 99\n"));
    parse_err(&format!("{MINIMAL}[benchmark]\nn_values = []\n"));
    parse_err(&format!("{MINIMAL}[benchmark]\npresets = [\"loud\"]\n"));
    parse_err(&format!("{MINIMAL}[mpc]\nepisodes = 0\n"));
    parse_err(&format!("{MINIMAL}[mpc]\ncov_reset = 2.0\n"));
    parse_err(&format!("{MINIMAL}[distill]\nn = 0\n"));
}

#[test]
fn explicit_noise_and_aliases() {
    let cfg = Config::parse(&format!(
        "{MINIMAL}[noise]\nfamily = \"beta\"\nc_a1 = 0.2\nc_th2 = 0.01\n[optimizer]\nrisk_kind = \"none\"\n"
    ))
    .unwrap();
    assert_eq!(cfg.noise.name, "custom");
    assert_eq!(
        cfg.noise.model,
        NoiseModel::new(NoiseFamily::Beta, 0.2, 0.0, 0.0, 0.01).unwrap()
    );
    assert_eq!(cfg.optimizer.risk_kind, RiskKind::Det);
}

#[test]
fn obstacles_static_and_moving() {
    let cfg = Config::parse(&format!(
        "{MINIMAL}[[scene.obstacles]]\ns = 20.0\nd = 3.5\n\n[[scene.obstacles]]\npath = [[10.0, 0.0], [10.5, 0.0]]\na = 2.0\nb = 1.0\n"
    ))
    .unwrap();
    let o = &cfg.scene.obstacles;
    assert_eq!(o.len(), 2);
    assert!(o[0].is_static());
    assert_eq!(o[0].path, vec![[20.0, 3.5]]);
    assert_eq!(o[1].path.len(), 2);
    assert_eq!((o[1].a_e, o[1].b_e), (2.0, 1.0));
}

#[test]
fn hash_ignores_seed_and_spelled_out_defaults() {
    let a = Config::parse(&format!("seed = 1\n{MINIMAL}")).unwrap();
    let b = Config::parse(&format!(
        "seed = 99\n{MINIMAL}dt = 0.1\n[optimizer]\nreduced_n = 4\n"
    ))
    .unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    let c = Config::parse(&format!("{MINIMAL}[optimizer]\nreduced_n = 3\n")).unwrap();
    assert_ne!(a.hash(), c.hash());
    let d = Config::parse(&format!("{MINIMAL}[noise]\npreset = \"low-gauss\"\n")).unwrap();
    assert_ne!(a.hash(), d.hash());
}

#[test]
fn preset_files_match_the_builtin_table() {
    let dir = crate_dir().join("presets");
    let mut files: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".toml"))
        .collect();
    files.sort();
    let mut names: Vec<String> = PRESETS.iter().map(|p| format!("{}.toml", p.name)).collect();
    names.sort();
    assert_eq!(files, names);
    for p in PRESETS {
        let text = std::fs::read_to_string(dir.join(format!("{}.toml", p.name))).unwrap();
        let cfg = Config::parse(&format!("{MINIMAL}{text}")).unwrap();
        assert_eq!(cfg.noise.model, p.model(), "{}", p.name);
        assert_eq!(presets::model(p.name), Some(p.model()));
    }
}

#[test]
fn preset_constants() {
    let get = |n: &str| presets::find(n).unwrap();
    assert_eq!(PRESETS.len(), 12);
    assert_eq!(get("low-gauss").constants, [0.1, 0.001, 0.1, 0.001]);
    assert_eq!(get("high-beta").family, NoiseFamily::Beta);
    assert_eq!(get("dyn-low-beta").constants[2], 0.005);
    assert_eq!(get("dyn-high-beta").constants[2], 0.0075);
    assert_eq!(get("mpc-gauss").constants, [0.3, 0.3, 0.3, 0.01]);
    assert_eq!(get("mpc-dyn-beta").constants, [0.05, 0.4, 0.05, 0.01]);
    // moving-obstacle Gaussian presets reuse the static constants
    assert_eq!(get("dyn-high-gauss").constants, get("high-gauss").constants);
    assert!(presets::model("none").unwrap().is_noiseless());
}

#[test]
fn shipped_configs_load() {
    for name in ["plan", "benchmark", "mpc", "distill"] {
        let path = crate_dir().join("configs").join(format!("{name}.toml"));
        let cfg = Config::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
        cfg.optimizer.validate().unwrap();
    }
    let d = Config::load(&crate_dir().join("configs/distill.toml")).unwrap();
    assert!(d.distill().unwrap().rollouts.as_ref().unwrap().exists());
}
