use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use fracheat_cli::{preset, GridSpec, RunConfig, PRESET_NAMES};
use fracheat_core::asymptotics::{ScenarioId, ScenarioSpec};
use fracheat_core::fields::{InitialDatum, Route};
use fracheat_core::ModelParams;
use serde_json::Value;

fn fracheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracheat"))
        .args(args)
        .env_remove("FRACHEAT_CACHE")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn ml_value(alpha: &str, x: &str) -> f64 {
    let o = fracheat(&["ml", "--alpha", alpha, "--x", x, "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    stdout(&o).split('\t').nth(1).unwrap().parse().unwrap()
}

#[test]
fn ml_examples() {
    assert_eq!(format!("{:.10}", ml_value("1", "1")), "0.3678794412");
    assert_eq!(ml_value("0.5", "0"), 1.0);
    assert!((ml_value("0.5", "1") - 0.427_583_576_155_807).abs() < 1e-10);
}

#[test]
fn ml_range_and_errors() {
    let o = fracheat(&["ml", "--alpha", "0.5", "--range", "0,2,5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 6);

    let o = fracheat(&["ml", "--alpha", "0.5", "--x", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1);
    assert!(fracheat(&["ml", "--x", "1"]).status.code() == Some(2));
    assert!(fracheat(&["ml", "--alpha", "1.5", "--x", "1"]).status.code() == Some(2));
    assert!(fracheat(&["ml", "--alpha", "0.5", "--range", "2,1,5"]).status.code() == Some(2));
}

#[test]
fn profile_of_the_cauchy_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fracheat(&["profile", "--alpha", "1", "--s", "0.5", "--dim", "1", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let side = json(&dir.path().join("profile_a1_s0.5_N1.json"));
    let kh = side["kappa_hat"].as_f64().unwrap();
    assert!((kh * PI - 1.0).abs() < 0.01, "{kh}");
    assert_eq!(side["status"], "ok");
    assert_eq!(side["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(side["config_hash"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(dir.path().join("profile_a1_s0.5_N1.csv")).unwrap();
    assert!(csv.starts_with("r,F,method,alpha,s,N\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn profile_mass_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let name = "profile_a0.5_s0.75_N1";
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = fracheat(&[
            "profile", "--alpha", "0.5", "--s", "0.75", "--dim", "1", "--quiet", "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).is_empty());
        runs.push((
            std::fs::read(dir.path().join(format!("{name}.csv"))).unwrap(),
            std::fs::read(dir.path().join(format!("{name}.json"))).unwrap(),
        ));
    }
    assert_eq!(runs[0], runs[1]);
    let side = json(&dir.path().join(format!("{name}.json")));
    assert!(side["mass_error"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn profile_rejects_four_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracheat(&["profile", "--dim", "4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("N∈{1,2,3}"), "{}", stderr(&o));
}

#[test]
fn solve_conserves_mass() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracheat(&["solve", "--t", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let side = json(&dir.path().join("solution_t1.json"));
    let mc = &side["routes"][0]["mass_check"];
    assert!((mc["expected"].as_f64().unwrap() - PI.sqrt()).abs() < 1e-14);
    assert!(mc["relative_error"].as_f64().unwrap() <= 1e-4);
    let csv = std::fs::read_to_string(dir.path().join("solution_t1_fourier.csv")).unwrap();
    assert!(csv.starts_with("r,u,t,route\n"));
}

#[test]
fn solve_reports_route_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracheat(&["solve", "--preset", "AC7", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for t in [1, 16, 256] {
        let side = json(&dir.path().join(format!("solution_t{t}.json")));
        assert!(side["agreement"].as_f64().unwrap() <= 1e-4);
        assert_eq!(side["routes"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn solve_rejects_nonpositive_times() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(fracheat(&["solve", "--t", "0", "--out", out]).status.code(), Some(2));
    assert_eq!(fracheat(&["solve", "--t", "-1", "--out", out]).status.code(), Some(2));
    assert_eq!(fracheat(&["solve", "--out", out]).status.code(), Some(2));
}

#[test]
fn potential_of_the_unit_ball() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        params: Some(ModelParams::new(0.5, 0.5, 3).unwrap()),
        datum: Some(InitialDatum::indicator(1.0, 3).unwrap()),
        grid: Some(GridSpec::Uniform {
            r_min: 0.0,
            r_max: 2.0,
            nodes: 5,
        }),
        out: Some(dir.path().to_path_buf()),
        ..RunConfig::default()
    };
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    let o = fracheat(&["potential", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("potential_a0.5_s0.5_N3.csv")).unwrap();
    let first: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!((first[1] - 4.0 * PI).abs() < 1e-7);
    let side = json(&dir.path().join("potential_a0.5_s0.5_N3.json"));
    assert_eq!(side["config_hash"], cfg.hash());

    let o = fracheat(&["potential", "--dim", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_config(dir: &Path, cfg: &RunConfig) -> String {
    let path = dir.join("cfg.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn verify_needs_work() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.json");
    std::fs::write(&path, "{}").unwrap();
    let o = fracheat(&["verify", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nothing to verify"));
}

#[test]
fn verify_synthetic_scenario_passes_with_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ScenarioSpec::preset(ScenarioId::CompactSupercritical).unwrap();
    spec.synthetic = true;
    spec.norm = fracheat_core::NormSpec::strong(1.0).unwrap();
    let cfg = RunConfig {
        scenarios: vec![spec],
        out: Some(dir.path().to_path_buf()),
        ..RunConfig::default()
    };
    let o = fracheat(&["verify", "--config", &write_config(dir.path(), &cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let report = json(&dir.path().join("compact_supercritical.json"));
    assert!(report["curve"].as_array().unwrap().iter().all(|c| c["error"] == 0.0));
    assert_eq!(report["config_hash"], cfg.hash());
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("compact_supercritical,scenario,true"));
}

#[test]
fn verify_rejects_hypothesis_violations() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ScenarioSpec::preset(ScenarioId::FarTail).unwrap();
    spec.datum = InitialDatum::gaussian(1.0, 1).unwrap();
    let cfg = RunConfig {
        scenarios: vec![spec],
        out: Some(dir.path().to_path_buf()),
        ..RunConfig::default()
    };
    let o = fracheat(&["verify", "--config", &write_config(dir.path(), &cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("hypothesis"), "{}", stderr(&o));
}

#[test]
fn verify_failure_keeps_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracheat(&["verify", "--preset", "AC11", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL"));
    let report = json(&dir.path().join("compact_subcritical_1d.json"));
    assert_eq!(report["pass"], false);
    assert!(dir.path().join("compact_subcritical_1d_curve.csv").exists());
}

#[test]
fn verify_runs_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracheat(&["verify", "--preset", "AC1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("AC1"));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["criteria"][0]["pass"], true);
}

#[test]
fn rates_prints_the_critical_dimension_table() {
    let o = fracheat(&["rates", "--alpha", "0.5", "--s", "0.5", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let dominant: Vec<f64> = text
        .lines()
        .skip_while(|l| !l.starts_with("N\t"))
        .skip(1)
        .map(|l| l.split('\t').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(dominant, vec![0.25, 0.5, 0.5]);
    let o = fracheat(&["rates", "--alpha", "0.5", "--s", "0.5", "--p", "inf"]);
    assert!(stdout(&o).contains("1.000000\n"));
}

#[test]
fn usage_errors() {
    assert_eq!(fracheat(&[]).status.code(), Some(2));
    assert_eq!(fracheat(&["verify", "--preset", "AC99"]).status.code(), Some(2));
    assert_eq!(
        fracheat(&["verify", "--preset", "AC1", "--config", "x.json"]).status.code(),
        Some(2)
    );
    assert_eq!(fracheat(&["profile", "--method", "magic"]).status.code(), Some(2));
    assert_eq!(fracheat(&["--version"]).status.code(), Some(0));
}

#[test]
fn profile_cache_is_reused() {
    let cache = tempfile::tempdir().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_fracheat"))
            .args(["solve", "--t", "2", "--quiet", "--out", dir.path().to_str().unwrap()])
            .args(["--config", dir.path().join("cfg.json").to_str().unwrap()])
            .env("FRACHEAT_CACHE", cache.path())
            .output()
            .unwrap()
    };
    let cfg = RunConfig {
        datum: Some(InitialDatum::bump(1.0, 1).unwrap()),
        grid: Some(GridSpec::Uniform {
            r_min: 0.0,
            r_max: 3.0,
            nodes: 7,
        }),
        ..RunConfig::default()
    };
    write_config(dir.path(), &cfg);
    assert_eq!(run().status.code(), Some(0));
    let entries: Vec<_> = std::fs::read_dir(cache.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let first = std::fs::read(dir.path().join("solution_t2_convolution.csv")).unwrap();
    assert_eq!(run().status.code(), Some(0));
    let second = std::fs::read(dir.path().join("solution_t2_convolution.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn configs_round_trip() {
    for name in PRESET_NAMES {
        let cfg = preset(name).unwrap();
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg, "{name}");
        assert_eq!(back.hash(), cfg.hash());
    }
    let cfg = RunConfig {
        params: Some(ModelParams::new(0.8, 0.75, 1).unwrap()),
        datum: Some(InitialDatum::power_tail(1.6, 2.0, 1).unwrap()),
        grid: Some(GridSpec::Logarithmic {
            r_min: 1e-3,
            r_max: 1e3,
            nodes: 100,
        }),
        times: vec![1.0, 0.1 + 0.2],
        routes: vec![Route::Convolution],
        seed: 7,
        ..RunConfig::default()
    };
    let back = RunConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(back, cfg);
    assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    assert!(preset("paper-map").unwrap().scenarios.len() == 9);
}
