use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gasplant_cli::export::{read_metadata, METADATA_FILE};
use gasplant_cli::{emit_config, load_config, parse_config, RunConfig};
use gasplant_core::engine::stability_bound;
use gasplant_core::{GasAxis, ModelSpec, PlantSpec, RegimeParams, SeasonalityFn, SizeDistribution};

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn gasplant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gasplant"))
        .args(args)
        .output()
        .expect("binary runs")
}

const TOY: &str = r#"
outputs = "OUT"
snapshots = [0.5, 2.0]

[model]
discount_rate = 0.01
horizon = 2.0

[[model.regimes]]
alpha_e = 0.1
alpha_g = 0.23
sigma_e = 0.11
sigma_g = 0.09
rho = 0.15
jump_e = { intensity = 0.1, size = { kind = "inverse-gaussian", mean = 0.6, shape = 0.56 } }
jump_g = { intensity = 0.4, size = { kind = "inverse-gaussian", mean = 0.54, shape = 0.32 } }
seasonality_e = { amplitude = 15.0, phase = -48.38052686528282, period = 24.0, offset = 27.0, shape = "sine" }
seasonality_g = { amplitude = 0.6, phase = -355.3057584392169, period = 24.0, offset = 2.7, shape = "cosine" }

[grid]
s_e_max = 60.0
n_e = 2
gas = { s_max = 6.0, cells = 2 }
n_l = 1
"#;

/// Writes the toy configuration with its outputs under `dir`.
fn toy(dir: &Path, extra: &str) -> PathBuf {
    let out = dir.join("out");
    let text = TOY.replace("OUT", &out.display().to_string()) + extra;
    let path = dir.join("toy.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn single_regime_config_matches_base_parameters() {
    let cfg = load_config(&shipped("single_regime.toml")).unwrap();
    assert_eq!(cfg.model, ModelSpec::single(RegimeParams::base(), 0.05, 200.0));
    assert_eq!(cfg.plant, PlantSpec::default());
    assert_eq!(cfg.grid.s_e_max, 150.0);
    assert_eq!((cfg.grid.n_e, cfg.grid.n_l), (60, 30));
    assert_eq!(cfg.grid.gas, GasAxis::Grid { s_max: 20.0, cells: 60 });
}

#[test]
fn regime_switching_config_adds_volatile_regime() {
    let cfg = load_config(&shipped("regime_switching.toml")).unwrap();
    let mut base = RegimeParams::base();
    base.switch_rate = 0.01;
    let mut volatile = RegimeParams::volatile();
    volatile.switch_rate = 0.01;
    assert_eq!(cfg.model.regimes, vec![base, volatile]);
    let v = &cfg.model.regimes[1];
    assert_eq!((v.seasonality_e.amplitude, v.seasonality_e.offset), (5.0, 10.0));
    assert_eq!((v.seasonality_g.amplitude, v.seasonality_g.offset), (0.3, 1.4));
}

#[test]
fn constant_gas_config_collapses_gas() {
    let cfg = load_config(&shipped("thompson_constgas.toml")).unwrap();
    let p = &cfg.model.regimes[0];
    assert_eq!(cfg.grid.gas, GasAxis::Fixed { price: 3.5 });
    assert_eq!((p.alpha_e, p.sigma_e, p.jump_e.intensity), (0.1, 0.12, 0.1));
    assert_eq!(p.jump_e.size, SizeDistribution::TruncatedNormal { mean: 700.0, sd: 100.0 });
    assert_eq!((p.alpha_g, p.sigma_g, p.jump_g.intensity), (0.0, 0.0, 0.0));
    assert_eq!(p.seasonality_g, SeasonalityFn { shape: p.seasonality_g.shape, ..SeasonalityFn::constant(3.5) });
    assert_eq!((cfg.model.horizon, cfg.model.discount_rate), (200.0, 0.05));
}

#[test]
fn shipped_configs_round_trip() {
    for name in ["single_regime.toml", "regime_switching.toml", "thompson_constgas.toml"] {
        let cfg = load_config(&shipped(name)).unwrap();
        let again: RunConfig = parse_config(&emit_config(&cfg), "emitted").unwrap();
        assert_eq!(again, cfg, "{name}");
    }
}

#[test]
fn unknown_key_exits_with_config_error_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = toy(dir.path(), "");
    let text = read(&path).replace("n_l = 1", "n_l = 1\nn_lx = 3");
    std::fs::write(&path, text).unwrap();
    let out = gasplant(&["--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("toy.toml:25") && err.contains("n_lx"), "{err}");
}

#[test]
fn toy_export_layout_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let path = toy(dir.path(), "");
    let out = gasplant(&["--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out_dir = dir.path().join("out");
    for name in ["value_r0_tau0.500.csv", "control_r0_tau2.000.csv"] {
        let text = read(&out_dir.join(name));
        assert_eq!(text.lines().count(), 19, "{name}");
        assert!(!text.contains('\r'));
    }
    assert!(read(&out_dir.join("control_r0_tau2.000.csv")).starts_with("S_e,S_g,L,control\n"));

    let meta = read_metadata(&out_dir).unwrap();
    let cfg = load_config(&path).unwrap();
    assert_eq!(meta.config, cfg);
    assert_eq!(meta.surfaces.len(), 4);
    let bound = stability_bound(&cfg.grid, &cfg.model, &cfg.plant);
    assert_eq!(meta.delta_tau_max, bound);
    assert_eq!(meta.steps, (2.0 / bound).ceil() as usize);
    assert_eq!(meta.delta_tau, 2.0 / meta.steps as f64);
    assert!(meta.delta_tau <= bound);
}

#[test]
fn reruns_are_byte_identical_and_metadata_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = toy(dir.path(), "");
    assert!(gasplant(&["--config", path.to_str().unwrap()]).status.success());
    let first = dir.path().join("out");
    let second = dir.path().join("again");
    assert!(gasplant(&["--config", path.to_str().unwrap(), "--out", second.to_str().unwrap()])
        .status
        .success());

    // a configuration rebuilt from the metadata echo
    let mut echo = read_metadata(&first).unwrap().config;
    let third = dir.path().join("echo");
    echo.outputs = third.clone();
    let echo_path = dir.path().join("echo.toml");
    std::fs::write(&echo_path, emit_config(&echo)).unwrap();
    assert!(gasplant(&["--config", echo_path.to_str().unwrap()]).status.success());

    let meta = read_metadata(&first).unwrap();
    for s in &meta.surfaces {
        let a = std::fs::read(first.join(&s.file)).unwrap();
        assert_eq!(a, std::fs::read(second.join(&s.file)).unwrap(), "{}", s.file);
        assert_eq!(a, std::fs::read(third.join(&s.file)).unwrap(), "{}", s.file);
    }
}

#[test]
fn simulate_runs_against_exported_policy() {
    let dir = tempfile::tempdir().unwrap();
    let sim = r#"
[simulation]
step = 0.05
paths = 200
seed = 3
starts = [{ regime = 0, s_e = 30.0, s_g = 3.0, l = 600.0 }]
"#;
    let path = toy(dir.path(), sim);
    assert!(gasplant(&["--config", path.to_str().unwrap()]).status.success());
    let out = gasplant(&["--config", path.to_str().unwrap(), "--mode", "simulate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(&dir.path().join("out/simulation.json"))).unwrap();
    let r = &report["results"][0];
    assert_eq!(r["estimate"]["paths"], 200);
    assert!(r["estimate"]["mean"].as_f64().unwrap().is_finite());
    assert!(r["solver_value"].as_f64().unwrap().is_finite());
}

#[test]
fn simulate_rejects_mismatched_grid_hash() {
    let dir = tempfile::tempdir().unwrap();
    let sim = r#"
[simulation]
step = 0.05
paths = 10
starts = [{ regime = 0, s_e = 30.0, s_g = 3.0, l = 600.0 }]
"#;
    let path = toy(dir.path(), sim);
    assert!(gasplant(&["--config", path.to_str().unwrap()]).status.success());
    let text = read(&path).replace("n_l = 1", "n_l = 2");
    std::fs::write(&path, text).unwrap();
    let out = gasplant(&["--config", path.to_str().unwrap(), "--mode", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid hash"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // missing file
    let out = gasplant(&["--config", dir.path().join("none.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    // snapshot beyond the horizon
    let path = toy(dir.path(), "");
    let out = gasplant(&["--config", path.to_str().unwrap(), "--snapshots", "1,3"]);
    assert_eq!(out.status.code(), Some(2));
    // a fixed step count above the stability limit
    let text = read(&path).replace("n_l = 1", "n_l = 1\nsteps = 1");
    std::fs::write(&path, text).unwrap();
    let out = gasplant(&["--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stability limit"), "{err}");
    // output directory below a regular file
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let path = toy(dir.path(), "");
    let out = gasplant(&["--config", path.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn validate_reports_each_property_on_degenerate_config() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
mode = "validate"
outputs = "unused"

[model]
discount_rate = 0.05
horizon = 1.0

[[model.regimes]]
alpha_e = 0.0
alpha_g = 0.0
sigma_e = 0.0
sigma_g = 0.0
rho = 0.0
jump_e = { intensity = 0.0, size = { kind = "point-mass", size = 1.0 } }
jump_g = { intensity = 0.0, size = { kind = "point-mass", size = 1.0 } }
seasonality_e = { amplitude = 0.0, phase = 0.0, period = 24.0, offset = 0.0, shape = "sine" }
seasonality_g = { amplitude = 0.0, phase = 0.0, period = 24.0, offset = 0.0, shape = "sine" }

[grid]
s_e_max = 60.0
n_e = 4
gas = { s_max = 8.0, cells = 4 }
n_l = 4
steps = 40
"#;
    let path = dir.path().join("deg.toml");
    std::fs::write(&path, text).unwrap();
    let out = gasplant(&["--config", path.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout
        .lines()
        .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
        .collect();
    assert!(lines.len() >= 10, "{stdout}");
    assert!(lines.iter().all(|l| l.contains("measured") && l.contains("tolerance")));
    assert!(stdout.contains("degenerate DP agreement"));
    assert!(stdout.contains("annuity"));
    let failed = lines.iter().any(|l| l.starts_with("FAIL"));
    assert_eq!(out.status.code(), Some(if failed { 3 } else { 0 }));
}

fn matplotlib_available() -> bool {
    Command::new("python3")
        .args(["-c", "import matplotlib, numpy"])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

#[test]
fn plot_scripts_reference_csvs_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let path = toy(dir.path(), "");
    let out = gasplant(&["--config", path.to_str().unwrap(), "--emit-plots", "--snapshots", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out_dir = dir.path().join("out");
    let mut scripts: Vec<PathBuf> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "py"))
        .collect();
    scripts.sort();
    // s_g 0 (the others lie off the axis), s_e 0 and 60, l 20 and 600
    assert_eq!(scripts.len(), 5, "{scripts:?}");
    let fixed_gas = out_dir.join("plot_r0_tau2.000_sg0.py");
    let text = read(&fixed_gas);
    assert!(text.contains("value_r0_tau2.000.csv") && text.contains("control_r0_tau2.000.csv"));
    assert!(text.contains(r#"set_xlabel("S_e")"#) && text.contains(r#"set_ylabel("L")"#));
    assert!(out_dir.join(METADATA_FILE).exists());

    if !matplotlib_available() {
        eprintln!("python3 with matplotlib not found; scripts not executed");
        return;
    }
    for s in &scripts {
        let run = Command::new("python3").arg(s).output().unwrap();
        assert!(run.status.success(), "{}: {}", s.display(), String::from_utf8_lossy(&run.stderr));
        assert!(s.with_extension("png").exists());
    }
}
