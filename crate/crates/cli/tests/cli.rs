use std::path::Path;
use std::process::{Command, Output};

use entwit_core::witness::Coefficient;
use entwit_core::{build_state, hierarchy_report, DensityMatrix, OptimizerConfig, StateSpec};
use serde_json::Value;
use tempfile::TempDir;

fn entwit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entwit")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn run_ok(args: &[&str]) {
    let out = entwit(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn code(args: &[&str]) -> i32 {
    entwit(args).status.code().expect("exit code")
}

struct Row {
    n: usize,
    param: String,
    sweep: f64,
    coefficient: Coefficient,
    value: Option<f64>,
    defined: bool,
}

fn parse_csv(text: &str) -> Vec<Row> {
    let mut lines = text.split('\n');
    assert_eq!(lines.next().unwrap(), "scenario,N,sweep_parameter_name,sweep_value,coefficient,value,defined_flag");
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 7, "{l}");
            Row {
                n: f[1].parse().unwrap(),
                param: f[2].into(),
                sweep: f[3].parse().unwrap(),
                coefficient: Coefficient::from_name(f[4]).unwrap(),
                value: (!f[5].is_empty()).then(|| f[5].parse().unwrap()),
                defined: f[6].parse().unwrap(),
            }
        })
        .collect()
}

const MIXTURE: &str = r#"{
    "schema": 1,
    "scenario": "twisted-mixture",
    "parameters": {"k": 1, "p": {"start": 0.6, "stop": 0.8, "step": 0.1}}
}"#;

#[test]
fn csv_is_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), MIXTURE);
    let mut outputs = Vec::new();
    for (sub, threads) in [("a", "1"), ("b", "3"), ("c", "1")] {
        let out = dir.path().join(sub);
        run_ok(&["--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads, "--seed", "7"]);
        outputs.push(std::fs::read(out.join("twisted-mixture.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    assert!(!outputs[0].contains(&b'\r'));
}

#[test]
fn emitted_values_match_direct_library_calls() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), MIXTURE);
    run_ok(&["--config", &cfg, "--out", dir.path().to_str().unwrap(), "--format", "csv", "--seed", "3"]);
    let rows = parse_csv(&std::fs::read_to_string(dir.path().join("twisted-mixture.csv")).unwrap());
    assert_eq!(rows.len(), 3 * Coefficient::ALL.len());
    let config = OptimizerConfig { rng_seed: 3, ..OptimizerConfig::default() };
    for row in &rows {
        assert_eq!((row.n, row.param.as_str()), (3, "p"));
        let rho = build_state(&StateSpec::TwistedMixture { k: 1, p: row.sweep }).unwrap();
        let rec = hierarchy_report(&rho, &config).unwrap().get(row.coefficient).clone();
        assert_eq!(rec.defined, row.defined);
        match (rec.value_or_limit(), row.value) {
            (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-12, "{} at p = {}: {a} vs {b}", row.coefficient.name(), row.sweep),
            (a, b) => assert_eq!(a, b),
        }
    }
}

#[test]
fn rho_nk_rows_and_json_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{"schema": 1, "scenario": "rho-nk", "parameters": {"n": 6, "k": [2]}}"#);
    run_ok(&["--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    let rows = parse_csv(&std::fs::read_to_string(dir.path().join("rho-nk.csv")).unwrap());
    let get = |c: Coefficient| rows.iter().find(|r| r.coefficient == c).unwrap().value.unwrap();
    assert!((get(Coefficient::FisherNormalized) - 2.0 / 3.0).abs() < 1e-6);
    assert!((get(Coefficient::FisherGlobal) - 2.0 / 3.0).abs() < 1e-6);
    assert!((get(Coefficient::FisherLocal) - 2.0).abs() < 1e-6);

    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rho-nk.json")).unwrap()).unwrap();
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["seed"], 0);
    assert!(report["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(report["config"]["parameters"]["k"], serde_json::json!([2]));
    let point = &report["points"][0];
    assert_eq!(point["N"], 6);
    assert_eq!(point["report"]["coefficients"].as_array().unwrap().len(), Coefficient::ALL.len());
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), MIXTURE);
    let first = dir.path().join("first");
    run_ok(&["--config", &cfg, "--out", first.to_str().unwrap(), "--seed", "11"]);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(first.join("twisted-mixture.json")).unwrap()).unwrap();
    let echoed = dir.path().join("echo.json");
    std::fs::write(&echoed, report["config"].to_string()).unwrap();
    let second = dir.path().join("second");
    run_ok(&["--config", echoed.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(
        std::fs::read(first.join("twisted-mixture.csv")).unwrap(),
        std::fs::read(second.join("twisted-mixture.csv")).unwrap()
    );
}

#[test]
fn custom_state_accepts_specs_and_matrices() {
    let dir = TempDir::new().unwrap();
    let half = 0.5;
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"schema": 1, "scenario": "custom-state", "parameters": {{
                "states": [{{"kind": "ghz", "n": 2}}],
                "matrices": [{{"re": [[{half}, 0, 0, {half}], [0, 0, 0, 0], [0, 0, 0, 0], [{half}, 0, 0, {half}]]}}]
            }}}}"#
        ),
    );
    run_ok(&["--config", &cfg, "--out", dir.path().to_str().unwrap(), "--format", "csv"]);
    let rows = parse_csv(&std::fs::read_to_string(dir.path().join("custom-state.csv")).unwrap());
    let ghz = DensityMatrix::from_pure(&entwit_core::models::ghz(2));
    let direct = hierarchy_report(&ghz, &OptimizerConfig::default()).unwrap();
    for row in &rows {
        assert_eq!(row.param, "index");
        match (row.value, direct.get(row.coefficient).value_or_limit()) {
            (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-12, "{} at {}: {a} vs {b}", row.coefficient.name(), row.sweep),
            (a, b) => assert_eq!(a, b, "{} at {}", row.coefficient.name(), row.sweep),
        }
    }
}

#[test]
fn trajectory_stride_selects_points() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema": 1, "scenario": "ising-lindblad",
            "parameters": {"n": 2, "t": {"start": 0, "stop": 0.5, "step": 0.05}}}"#,
    );
    run_ok(&["--config", &cfg, "--out", dir.path().to_str().unwrap(), "--format", "csv", "--stride", "4"]);
    let rows = parse_csv(&std::fs::read_to_string(dir.path().join("ising-lindblad.csv")).unwrap());
    let mut times: Vec<f64> = rows.iter().map(|r| r.sweep).collect();
    times.dedup();
    let want = [0.0, 0.2, 0.4, 0.5];
    assert_eq!(times.len(), want.len());
    for (t, w) in times.iter().zip(want) {
        assert!((t - w).abs() < 1e-12, "{times:?}");
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let d = dir.path();

    let bad_key = write_config(d, r#"{"schema": 1, "scenario": "rho-nk", "parameters": {"N": 4}}"#);
    let o = entwit(&["--config", &bad_key, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("N"), "{}", String::from_utf8_lossy(&o.stderr));

    let bad_schema = write_config(d, r#"{"schema": 9, "scenario": "rho-nk"}"#);
    assert_eq!(code(&["--config", &bad_schema, "--out", out]), 2);
    assert_eq!(code(&["--scenario", "rho-nk", "--stride", "0", "--out", out]), 2);
    assert_eq!(code(&["--scenario", "no-such-scenario"]), 2);
    assert_eq!(code(&["--out", out]), 2);

    let missing = d.join("missing.json");
    assert_eq!(code(&["--config", missing.to_str().unwrap()]), 1);
    let file = d.join("plain-file");
    std::fs::write(&file, "x").unwrap();
    let small = write_config(d, r#"{"schema": 1, "scenario": "rho-nk", "parameters": {"n": 2}}"#);
    assert_eq!(code(&["--config", &small, "--out", file.join("sub").to_str().unwrap()]), 1);

    // A wildly unstable step with no halvings left loses positivity.
    let unstable = write_config(
        d,
        r#"{"schema": 1, "scenario": "ising-lindblad",
            "parameters": {"n": 2, "field": 100, "gamma": 1, "t": {"start": 0, "stop": 1, "step": 0.5}},
            "integrator": {"step": 0.5, "max_halvings": 0}}"#,
    );
    let o = entwit(&["--config", &unstable, "--out", out]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0.5"));
}
