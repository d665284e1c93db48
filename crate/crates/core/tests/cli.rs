//! End-to-end tests of the `fb` binary: flag handling, exit codes, output
//! schemas and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fb() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fb"))
}

fn run(args: &[&str]) -> Output {
    fb().args(args).output().expect("spawn fb")
}

fn parse_csv(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.to_string()).collect())
        .collect();
    (header, rows)
}

#[test]
fn simulate_reference_point_converges_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let output = run(&[
        "simulate", "--a", "0.2", "--k", "1.5", "--omega", "1", "--yr", "4", "--x0", "3.3",
        "--y0", "4.05", "--z0", "0", "--tmax", "250", "--out", out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let (header, rows) = parse_csv(&out);
    assert_eq!(header, "tau,x,y,z,mode");
    let last = rows.last().unwrap();
    let x: f64 = last[0.max(1)].parse().unwrap();
    let y: f64 = last[2].parse().unwrap();
    let z: f64 = last[3].parse().unwrap();
    let d = ((x - 3.2_f64).powi(2) + (y - 4.0).powi(2) + z * z).sqrt();
    assert!(d <= 1e-4, "final distance {d}");

    let manifest_path = dir.path().join("traj.csv.manifest.json");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["parameters"]["a"], 0.2);
    assert!(manifest["tolerances"]["rel_tol"].is_number());
}

#[test]
fn simulate_rejects_invalid_omega_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let output = run(&[
        "simulate", "--a", "0.2", "--k", "1.5", "--omega", "0", "--yr", "4", "--x0", "1",
        "--y0", "1", "--z0", "0", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn simulate_from_equilibrium_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let output = run(&[
        "simulate", "--a", "0.2", "--k", "1.5", "--omega", "1", "--yr", "4", "--x0", "3.2",
        "--y0", "4", "--z0", "0", "--out", out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let (_, rows) = parse_csv(&out);
    for row in &rows {
        let x: f64 = row[1].parse().unwrap();
        let y: f64 = row[2].parse().unwrap();
        let z: f64 = row[3].parse().unwrap();
        let d = ((x - 3.2_f64).powi(2) + (y - 4.0).powi(2) + z * z).sqrt();
        assert!(d <= 1e-9);
    }
}

#[test]
fn simulate_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        let output = run(&[
            "simulate", "--a", "0.2", "--k", "1.5", "--omega", "1", "--yr", "4", "--x0", "5",
            "--y0", "4", "--z0", "0.3", "--tmax", "20", "--out", out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());
}

#[test]
fn classify_reference_point_reports_region_5() {
    let output = run(&["classify", "--a", "0.2", "--k", "1.5", "--omega", "1", "--yr", "4"]);
    assert!(output.status.success());
    let v: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(v["q_kind"], "stable pseudo-focus");
    assert_eq!(v["two_fold"], "visible-invisible");
    assert_eq!(v["region"], 5);
    assert_eq!(v["q_location"][0], 3.2);
    assert_eq!(v["q_location"][1], 4.0);
    assert_eq!(v["k_h"], 1.375);
    let k_hc = v["k_hc"].as_f64().unwrap();
    assert!((k_hc - 1.573).abs() <= 0.005);
}

#[test]
fn classify_saddle_and_node_examples() {
    let output = run(&["classify", "--a", "0.2", "--k", "0.5", "--omega", "1", "--yr", "4"]);
    assert!(output.status.success());
    let v: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(v["q_kind"], "pseudo-saddle");
    assert_eq!(v["region"], 1);
    assert_eq!(v["q_region"], "escaping");

    let output = run(&["classify", "--a", "0.6", "--k", "3", "--omega", "1", "--yr", "4"]);
    assert!(output.status.success());
    let v: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(v["q_kind"], "stable pseudo-node");
}

#[test]
fn diagram_reproduces_branches_and_is_jobs_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("d1.csv");
    let out2 = dir.path().join("d2.csv");
    for (out, jobs) in [(&out1, "1"), (&out2, "3")] {
        let output = run(&[
            "diagram", "--a", "0.2", "--k-min", "1.3", "--k-max", "1.7", "--res", "21",
            "--jobs", jobs, "--out", out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    }
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());

    let (header, rows) = parse_csv(&out1);
    assert!(header.starts_with("k,q_x,q_y,q_kind,pt_x,pt_y,cycle_amp_x"));
    assert_eq!(rows.len(), 21);
    for row in &rows {
        let k: f64 = row[0].parse().unwrap();
        // Constant operating-point branch.
        assert_eq!(row[1].parse::<f64>().unwrap(), 3.2);
        assert_eq!(row[2].parse::<f64>().unwrap(), 4.0);
        let has_cycle = !row[6].is_empty();
        if k > 1.38 && k < 1.56 {
            assert!(has_cycle, "missing cycle at k = {k}");
        }
        if !(1.37..=1.59).contains(&k) {
            assert!(!has_cycle, "spurious cycle at k = {k}");
        }
    }
    // Two-fold branch height at the first grid point k = 1.3.
    let pt_y: f64 = rows[0][5].parse().unwrap();
    assert!((pt_y - (1.3 - 4.0) / (0.2 - 1.0)).abs() <= 1e-12);
}

#[test]
fn bifset_contains_the_homoclinic_anchor() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("set.json");
    let output = run(&[
        "bifset", "--omega", "1", "--yr", "4", "--res", "32", "--out", out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();

    // Interpolate the homoclinic polyline at a = 0.2.
    let poly = v["homoclinic"].as_array().unwrap();
    assert!(poly.len() > 16);
    let mut k_at = None;
    for w in poly.windows(2) {
        let (a0, k0) = (w[0][0].as_f64().unwrap(), w[0][1].as_f64().unwrap());
        let (a1, k1) = (w[1][0].as_f64().unwrap(), w[1][1].as_f64().unwrap());
        if a0 <= 0.2 && 0.2 <= a1 {
            k_at = Some(k0 + (k1 - k0) * (0.2 - a0) / (a1 - a0));
        }
    }
    let k_at = k_at.expect("polyline covers a = 0.2");
    assert!((k_at - 1.573).abs() <= 0.005, "homoclinic curve passes at {k_at}");

    // BT points and grid sanity.
    assert!((v["bt_points"][0][0].as_f64().unwrap() - 0.073223).abs() < 1e-4);
    assert!((v["bt_points"][1][0].as_f64().unwrap() - 0.426777).abs() < 1e-4);
    let labels = v["regions_grid"]["labels"].as_array().unwrap();
    assert!(!labels.is_empty());
    for row in labels {
        for cell in row.as_array().unwrap() {
            let val = cell.as_u64().unwrap();
            assert!(val <= 6);
        }
    }
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn bifset_outside_bt_range_exits_3_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("set.json");
    let output = run(&[
        "bifset", "--omega", "1", "--yr", "4", "--a-min", "0.40", "--a-max", "0.48",
        "--res", "16", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(!v["failures"].as_array().unwrap().is_empty());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fb.conf");
    fs::write(&cfg, "a = 0.2\nk = 1.5\nomega = 1\nyr = 4\n").unwrap();
    let output = run(&["classify", "--config", cfg.to_str().unwrap()]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let v: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(v["k"], 1.5);

    // A flag overrides the config entry.
    let output = run(&["classify", "--config", cfg.to_str().unwrap(), "--k", "0.5"]);
    let v: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(v["k"], 0.5);
    assert_eq!(v["q_kind"], "pseudo-saddle");
}

#[test]
fn missing_required_parameter_is_a_usage_error() {
    let output = run(&["classify", "--a", "0.2"]);
    assert_eq!(output.status.code(), Some(2));
}
