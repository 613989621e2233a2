use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use cfproj_core::sim::{sample_dgp, DgpSpec, Scenario, SettingId};
use cfproj_core::TwoSampleDataset;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cfproj"))
}

fn run(args: &[&str]) -> i32 {
    cfproj_cli::run(std::iter::once("cfproj").chain(args.iter().copied()))
}

fn write_dataset(dir: &Path, tag: &str, ds: &TwoSampleDataset) -> (PathBuf, PathBuf) {
    let aux = dir.join(format!("{tag}_aux.csv"));
    let primary = dir.join(format!("{tag}_primary.csv"));
    let mut s = String::from("z,a\n");
    for r in &ds.auxiliary {
        s.push_str(&format!("{},{}\n", r.z, r.a));
    }
    fs::write(&aux, s).unwrap();
    let mut s = String::from("a,y\n");
    for r in &ds.primary {
        s.push_str(&format!("{},{}\n", r.a, r.y));
    }
    fs::write(&primary, s).unwrap();
    (aux, primary)
}

fn setting(k: u8, n1: usize, n2: usize, seed: u64) -> TwoSampleDataset {
    sample_dgp(&DgpSpec::from_setting(Scenario::Linear, SettingId::Main(k), n1, n2), seed).dataset
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["--version"]), 0);
    assert_eq!(run(&["estimate", "--no-such-flag"]), 2);
    assert_eq!(run(&["frobnicate"]), 2);
}

#[test]
fn estimate_report_contents() {
    let d = TempDir::new().unwrap();
    let (aux, primary) = write_dataset(d.path(), "s4", &setting(4, 1500, 1500, 3));
    let out = d.path().join("r.json");
    let code = run(&[
        "estimate", "--aux", s(&aux), "--primary", s(&primary), "--bootstrap", "60", "--inference", "both",
        "--seed", "5", "--out", s(&out),
    ]);
    assert_eq!(code, 0);
    let r = read_json(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["config"]["seed"], 5);
    assert!(r["config"].get("out").is_none());
    let a = r["estimates"]["alpha_hat"][0].as_f64().unwrap();
    assert!((a - 1.0).abs() < 0.3, "{a}");
    for k in ["xi_hat", "intercept"] {
        assert!(r["estimates"][k].is_f64());
    }
    let q = r["inference"]["bootstrap"]["quantiles"][0].as_array().unwrap();
    assert_eq!(q.len(), 5);
    assert_eq!(r["inference"]["bootstrap"]["quantile_levels"][0], 0.025);
    assert!(r["inference"]["asymptotic"]["se"][0].as_f64().unwrap() > 0.0);
    assert!(r["diagnostics"]["gram_condition_number"].is_f64());
    assert_eq!(r["diagnostics"]["n1"], 1500);
}

#[test]
fn estimate_is_deterministic() {
    let d = TempDir::new().unwrap();
    let (aux, primary) = write_dataset(d.path(), "s1", &setting(1, 800, 800, 9));
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = d.path().join(format!("r{i}.json"));
            let code = run(&[
                "estimate", "--aux", s(&aux), "--primary", s(&primary), "--bootstrap", "40", "--seed", "11",
                "--out", s(&out),
            ]);
            assert_eq!(code, 0);
            fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn estimate_csv_and_full_data_baseline() {
    let d = TempDir::new().unwrap();
    let spec = DgpSpec::from_setting(Scenario::Linear, SettingId::Main(4), 1000, 1000);
    let sim = sample_dgp(&spec, 2);
    let (aux, primary) = write_dataset(d.path(), "b", &sim.dataset);
    let joint = d.path().join("joint.csv");
    let mut text = String::from("z,a,y\n");
    for r in &sim.joint {
        text.push_str(&format!("{},{},{}\n", r.z, r.a, r.y));
    }
    fs::write(&joint, text).unwrap();
    let out = d.path().join("r.csv");
    let code = run(&[
        "estimate", "--aux", s(&aux), "--primary", s(&primary), "--inference", "asymptotic",
        "--full-data-baseline", s(&joint), "--format", "csv", "--out", s(&out),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("parameter,estimate,method,se,ci_lower,ci_upper"));
    assert!(lines.next().unwrap().starts_with("alpha[identity],"));
    assert!(text.contains("\nfull_data_rho,"));
    assert!(!text.contains('\r'));
}

#[test]
fn missing_column_exits_2_and_names_it() {
    let d = TempDir::new().unwrap();
    let aux = d.path().join("aux.csv");
    fs::write(&aux, "w,a\n1,2\n0,3\n").unwrap();
    let primary = d.path().join("p.csv");
    fs::write(&primary, "a,y\n1,2\n2,3\n3,3\n").unwrap();
    let o = bin().args(["estimate", "--aux", s(&aux), "--primary", s(&primary)]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("'z'"), "{err}");
}

#[test]
fn malformed_field_cites_row_and_column() {
    let d = TempDir::new().unwrap();
    let aux = d.path().join("aux.csv");
    fs::write(&aux, "z,a\n1,2\n0,3\n1,abc\n").unwrap();
    let primary = d.path().join("p.csv");
    fs::write(&primary, "a,y\n1,2\n2,3\n3,3\n").unwrap();
    let o = bin().args(["diagnose", "--aux", s(&aux), "--primary", s(&primary)]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4") && err.contains("'a'"), "{err}");
}

#[test]
fn validation_violations_exit_3() {
    let d = TempDir::new().unwrap();
    let aux = d.path().join("aux.csv");
    fs::write(&aux, "z,a\n1,2\n1,3\n1,5\n").unwrap();
    let primary = d.path().join("p.csv");
    fs::write(&primary, "a,y\n1,2\n2,3\n3,3\n").unwrap();
    let o = bin().args(["estimate", "--aux", s(&aux), "--primary", s(&primary)]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("instrument has zero variance"));
}

#[test]
fn collinear_projection_is_an_estimation_error() {
    let d = TempDir::new().unwrap();
    let (aux, _) = write_dataset(d.path(), "s4", &setting(4, 500, 10, 1));
    let primary = d.path().join("far.csv");
    let text: String =
        std::iter::once("a,y\n".to_string()).chain((0..50).map(|i| format!("{},{}\n", 100.0 + i as f64, i))).collect();
    fs::write(&primary, text).unwrap();
    assert_eq!(run(&["estimate", "--aux", s(&aux), "--primary", s(&primary), "--inference", "none"]), 4);

    let out = d.path().join("diag.json");
    assert_eq!(run(&["diagnose", "--aux", s(&aux), "--primary", s(&primary), "--out", s(&out)]), 0);
    let r = read_json(&out);
    assert_eq!(r["diagnostics"]["gram_condition_number"], "inf");
    assert_eq!(r["diagnostics"]["support_overlap_fraction"], 0.0);
    let warnings = r["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("overlap")));
}

#[test]
fn diagnose_well_posed_data() {
    let d = TempDir::new().unwrap();
    let (aux, primary) = write_dataset(d.path(), "s4", &setting(4, 3000, 1000, 4));
    let out = d.path().join("diag.json");
    let grid = d.path().join("grid.csv");
    let code = run(&["diagnose", "--aux", s(&aux), "--primary", s(&primary), "--out", s(&out), "--grid-out", s(&grid)]);
    assert_eq!(code, 0);
    let r = read_json(&out);
    assert!(r["diagnostics"]["gram_condition_number"].as_f64().unwrap().is_finite());
    assert!(r["diagnostics"]["support_overlap_fraction"].as_f64().unwrap() >= 0.99);
    assert!(r["diagnostics"]["bandwidth_used"].as_f64().unwrap() > 0.0);
    assert_eq!(r["grid"].as_array().unwrap().len(), 101);
    let text = fs::read_to_string(&grid).unwrap();
    assert_eq!(text.lines().count(), 102);
    assert!(text.starts_with("a,c_hat\n"));
}

#[test]
fn config_file_and_flag_precedence() {
    let d = TempDir::new().unwrap();
    let (aux, primary) = write_dataset(d.path(), "c", &setting(2, 600, 600, 8));
    let cfg = d.path().join("cfg.json");
    let body = serde_json::json!({
        "mode": "estimate", "aux": aux, "primary": primary, "bootstrap": 30, "seed": 1, "bandwidth": 0.3
    });
    fs::write(&cfg, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    let out = d.path().join("r.json");
    assert_eq!(run(&["estimate", "--config", s(&cfg), "--seed", "2", "--out", s(&out)]), 0);
    let r = read_json(&out);
    assert_eq!(r["config"]["seed"], 2);
    assert_eq!(r["config"]["bootstrap"], 30);
    assert_eq!(r["diagnostics"]["bandwidth_used"], 0.3);

    fs::write(&cfg, "{\n  \"seed\": 1,\n  \"bootstrp\": 30\n}\n").unwrap();
    let o = bin().args(["estimate", "--config", s(&cfg)]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bootstrp") && err.contains("line 3"), "{err}");

    fs::write(&cfg, r#"{"mode": "simulate"}"#).unwrap();
    assert_eq!(run(&["estimate", "--config", s(&cfg)]), 3);
}

#[test]
fn configuration_errors_exit_3() {
    let d = TempDir::new().unwrap();
    let (aux, primary) = write_dataset(d.path(), "m", &setting(2, 300, 300, 8));
    assert_eq!(run(&["estimate", "--aux", s(&aux)]), 3);
    assert_eq!(run(&["estimate", "--aux", s(&aux), "--primary", s(&primary), "--mar", "--inference", "asymptotic"]), 3);
    assert_eq!(run(&["estimate", "--aux", s(&aux), "--primary", s(&primary), "--bandwidth", "wide"]), 3);
    assert_eq!(run(&["estimate", "--aux", s(&aux), "--primary", s(&primary), "--level", "1.5"]), 3);
    assert_eq!(run(&["estimate", "--aux", s(&aux), "--primary", s(&primary), "--threads", "0"]), 3);
    assert_eq!(run(&["simulate", "--setting", "sett1ng"]), 3);
    assert_eq!(run(&["simulate", "--setting", "appendix:11"]), 3);
    assert_eq!(run(&["simulate", "--catalog", "table9"]), 3);
    assert_eq!(run(&["simulate", "--catalog", "table3", "--n1", "10"]), 3);
    assert_eq!(run(&["simulate", "--scenario", "3", "--reps", "1"]), 3);
}

#[test]
fn mar_estimate_runs() {
    let d = TempDir::new().unwrap();
    let (aux, primary) = write_dataset(d.path(), "m", &setting(1, 1500, 1500, 8));
    let out = d.path().join("r.json");
    let code = run(&[
        "estimate", "--aux", s(&aux), "--primary", s(&primary), "--mar", "--bootstrap", "20", "--out", s(&out),
    ]);
    assert_eq!(code, 0);
    let r = read_json(&out);
    assert_eq!(r["estimator"], "mar");
    assert_eq!(r["config"]["mar_z_is_binary"], true);
    assert!((r["estimates"]["alpha_hat"][0].as_f64().unwrap() - 1.0).abs() < 0.4);
}

#[test]
fn single_rep_coverage_is_all_or_nothing() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("t.csv");
    let code = run(&[
        "simulate", "--setting", "4", "--n1", "1000", "--n2", "1000", "--reps", "1", "--bootstrap", "50",
        "--format", "csv", "--out", s(&out),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let header: Vec<&str> = lines[0].split(',').collect();
    let row: Vec<&str> = lines[1].split(',').collect();
    let cp = row[header.iter().position(|h| *h == "cp_pct").unwrap()];
    assert!(cp == "0" || cp == "100", "{cp}");
    assert!(!header.contains(&"wall_time_s"));
}

#[test]
fn builtin_catalog_has_one_row_per_design() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("t.csv");
    let code = run(&[
        "simulate", "--catalog", "table1-scenario1", "--reps", "1", "--bootstrap", "0", "--format", "csv",
        "--out", s(&out),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 25);
    assert!(text.lines().nth(1).unwrap().starts_with("1,main:1,5000,5000,1,0,"));
}

#[test]
fn catalog_file_and_timing_column() {
    let d = TempDir::new().unwrap();
    let cat = d.path().join("cat.json");
    fs::write(
        &cat,
        r#"[{"scenario": 1, "setting": "appendix:2", "n1": 400, "n2": 400},
            {"scenario": 2, "setting": "5", "n1": 400, "n2": 300}]"#,
    )
    .unwrap();
    let out = d.path().join("t.json");
    let code = run(&["simulate", "--catalog", s(&cat), "--reps", "3", "--bootstrap", "0", "--timing", "--out", s(&out)]);
    assert_eq!(code, 0);
    let r = read_json(&out);
    let rows = r["results"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["setting"], "appendix:2");
    assert_eq!(rows[1]["scenario"], 2);
    assert!(rows[0]["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(rows[0]["cp_pct"].is_null());

    fs::write(&cat, r#"[{"scenario": 1, "setting": "main:8", "n1": 400, "n2": 400}]"#).unwrap();
    assert_eq!(run(&["simulate", "--catalog", s(&cat), "--reps", "1"]), 3);
}

/// Regenerates Setting 1 data and runs the estimate command on each copy.
#[test]
fn setting_one_intervals_through_the_command_line() {
    let d = TempDir::new().unwrap();
    let seeds = 100;
    let mut covered = 0;
    for seed in 0..seeds {
        let (aux, primary) = write_dataset(d.path(), "s1", &setting(1, 5000, 5000, 1000 + seed));
        let out = d.path().join("r.json");
        let code = run(&[
            "estimate", "--aux", s(&aux), "--primary", s(&primary), "--bootstrap", "200", "--seed",
            &seed.to_string(), "--out", s(&out),
        ]);
        assert_eq!(code, 0);
        let r = read_json(&out);
        let a = r["estimates"]["alpha_hat"][0].as_f64().unwrap();
        assert!((a - 1.0).abs() <= 0.3, "seed {seed}: {a}");
        let lo = r["estimates"]["ci_lower"][0].as_f64().unwrap();
        let hi = r["estimates"]["ci_upper"][0].as_f64().unwrap();
        covered += usize::from(lo <= 1.0 && 1.0 <= hi);
    }
    assert!(covered * 100 >= 93 * seeds as usize, "{covered} of {seeds}");
}
