use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn epscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epscan"))
        .args(args)
        .env_remove("EPSCAN_JOBS")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stderr))
    })
}

const DEPH: [&str; 6] = ["--model", "dimer", "--channel", "dephasing", "--gamma0", "1"];

#[test]
fn missing_gamma0_is_a_config_error() {
    let out = epscan(&["spectrum", "--model", "dimer", "--channel", "dephasing"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma0"));
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "[model]\ntype = \"dimer\"\nchannel = \"dephasing\"\ngamma0 = 1.0\ncolour = 3\n").unwrap();
    let out = epscan(&["spectrum", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn spectrum_sizes_and_residuals() {
    let mut args = vec!["spectrum"];
    args.extend(DEPH);
    args.extend(["--j", "0.25", "--c", "0.3"]);
    let v = json_of(&epscan(&args));
    assert_eq!(v["report"]["eigvals"].as_array().unwrap().len(), 16);
    assert_eq!(v["config"]["model"]["j"], 0.25);

    let v = json_of(&epscan(&["spectrum", "--model", "cycle", "--n", "3", "--channel", "dephasing", "--gamma0", "1", "--c", "0.2", "--j", "0.3"]));
    assert_eq!(v["report"]["eigvals"].as_array().unwrap().len(), 64);
    assert!(v["trace_preservation_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "# dephasing dimer\n[model]\ntype = \"dimer\"\nchannel = \"dephasing\"\ngamma0 = 1.0\nj = 0.1\n\n[tolerances]\nrank_tol = 1e-8\n",
    )
    .unwrap();
    let v = json_of(&epscan(&["spectrum", "-f", cfg.to_str().unwrap(), "--j", "0.25"]));
    assert_eq!(v["config"]["model"]["j"], 0.25);
    assert_eq!(v["config"]["tolerances"]["rank_tol"], 1e-8);
}

#[test]
fn zero_step_axis_rejected() {
    let mut args = vec!["scan"];
    args.extend(DEPH);
    args.extend(["--axis1", "c:0:1:1"]);
    assert_eq!(epscan(&args).status.code(), Some(2));
}

fn scan_to(dir: &Path, name: &str, jobs: &str) -> Vec<u8> {
    let csv = dir.join(name);
    let svg = dir.join(format!("{name}.svg"));
    let mut args = vec!["scan"];
    args.extend(DEPH);
    args.extend(["--j", "0.25", "--axis1", "c:0:1:201", "--jobs", jobs, "-o", csv.to_str().unwrap(), "--plot", svg.to_str().unwrap()]);
    let out = epscan(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.join(format!("{name}.meta.json"))).unwrap()).unwrap();
    assert_eq!(meta["config"]["scan"]["axis1"]["steps"], 201);
    fs::read(csv).unwrap()
}

#[test]
fn scan_outputs_and_worker_independence() {
    let dir = tempfile::tempdir().unwrap();
    let a = scan_to(dir.path(), "one.csv", "1");
    let b = scan_to(dir.path(), "four.csv", "4");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("axis1,axis2,ep_strength,spectral_gap,n_marginal,defective_any,excluded,overflow\n"));
    assert_eq!(text.lines().count(), 202);
}

#[test]
fn relaxation_2d_seams_follow_detuning() {
    let out = epscan(&[
        "seam", "--model", "dimer", "--channel", "relaxation", "--gamma0", "1",
        "--axis1", "c:-1:1:201", "--axis2", "delta:0.1:0.5:41",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    let pts = v["points"].as_array().unwrap();
    for p in pts {
        let (c, d) = (p["axis1"].as_f64().unwrap(), p["axis2"].as_f64().unwrap());
        assert!((c.abs() - d).abs() <= 0.01 + 1e-12, "seam point c={c} at delta={d}");
    }
    assert_eq!(pts.len(), 82);
    assert_eq!(v["polylines"].as_array().unwrap().len(), 2);
}

#[test]
fn fit_recovers_square_root_law() {
    let mut args = vec!["fit"];
    args.extend(DEPH);
    args.extend(["--j", "0.25", "--axis1", "c:0.469:0.531:621", "--mu-ep", "0.5"]);
    let v = json_of(&epscan(&args));
    let e = v["fit"]["exponent"].as_f64().unwrap();
    assert!((e + 0.5).abs() < 0.1, "exponent {e}");
}

#[test]
fn defect_reports() {
    let mut at = vec!["defect"];
    at.extend(DEPH);
    at.extend(["--j", "0.25", "--c", "0.5", "--lambda=-0.5,0"]);
    let v = json_of(&epscan(&at));
    assert_eq!((v["delta1"].as_u64(), v["delta2"].as_u64(), v["defective"].as_bool()), (Some(1), Some(2), Some(true)));
    assert!(v["jordan_chain_residual"].as_f64().unwrap() < 1e-8);

    let mut off = vec!["defect"];
    off.extend(DEPH);
    off.extend(["--j", "0.25", "--c", "0.3"]);
    assert_eq!(json_of(&epscan(&off))["defective"], false);

    let mut far = vec!["defect"];
    far.extend(DEPH);
    far.extend(["--j", "0.25", "--c", "0.5", "--lambda=-40,3"]);
    let out = epscan(&far);
    let v = json_of(&out);
    assert_eq!((v["delta1"].as_u64(), v["delta2"].as_u64(), v["defective"].as_bool()), (Some(0), Some(0), Some(false)));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

fn late_oscillation(c: &str) -> f64 {
    let mut args = vec!["propagate"];
    args.extend(DEPH);
    args.extend(["--j", "0.5", "--c", c, "--initial", "site-1-excited", "--t-max", "40", "--samples", "801", "--observables", "trace,coh:1:2"]);
    let out = epscan(&args);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,trace,re_rho_1_2,im_rho_1_2"));
    lines
        .filter_map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[0] >= 30.0).then_some(f[3].abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn propagate_protected_vs_damped() {
    assert!(late_oscillation("1") > 0.1);
    assert!(late_oscillation("0.2") < 1e-6);
}

#[test]
fn unknown_preset_rejected() {
    let mut args = vec!["propagate"];
    args.extend(DEPH);
    args.extend(["--initial", "bell"]);
    assert_eq!(epscan(&args).status.code(), Some(2));
}

#[test]
fn validate_report_and_negative_control() {
    let out = epscan(&["validate", "--json", "--jobs", "2"]);
    let v = json_of(&out);
    let checks = v["checks"].as_array().unwrap();
    let passed = |name: &str| checks.iter().find(|c| c["name"] == name).unwrap()["passed"].as_bool().unwrap();
    assert_eq!(v["dephasing_ep_formula"]["winner"], "c = 1 - 2|J|/gamma");
    assert!((v["dephasing_ep_formula"]["loser_deviation"].as_f64().unwrap() - 0.25).abs() < 1e-9);
    assert!(passed("seam_dephasing") && passed("defective_at_ep") && passed("limit_cycle_dephasing_c1"));
    // exit status follows the report
    assert_eq!(out.status.code(), Some(if v["passed"].as_bool().unwrap() { 0 } else { 1 }));

    let out = epscan(&["validate", "--json", "--rank-tol", "1e-1", "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"] == "semisimple_off_ep" && c["passed"] == false));
}
