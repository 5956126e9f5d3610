use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_topomode"));
    c.env("RUST_LOG", "warn");
    c
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "{}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const SMALL_MESH: &str = "[mesh]\nsource = \"graded\"\nn_coarse = 3\ngrading_ratio = 2.0\n";

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn dry_run_writes_only_a_manifest_with_reference_parameters() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    run_ok(bin().args(["run", "--dry-run", "--output-dir"]).arg(&out).arg(workspace().join("configs/square_twogyre.toml")));
    let names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, vec!["manifest.json"]);
    let m = manifest(&out);
    assert_eq!(m["dry_run"], true);
    assert_eq!(m["parameters"]["sigma"], 5e-8);
    assert_eq!(m["parameters"]["nu"], 500.0);
    assert_eq!(m["parameters"]["l"], 4.0e6);
    assert_eq!(m["stages"].as_array().unwrap().len(), 0);
    let tau0 = m["conversions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["key"] == "forcing.tau0_dyne_cm2")
        .unwrap();
    assert_eq!(tau0["value"], 1.1);
    assert!((tau0["si_value"].as_f64().unwrap() - 0.11).abs() < 1e-15);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);

    // Same config, same manifest.
    let again = tmp.path().join("again");
    run_ok(bin().args(["run", "--dry-run", "--output-dir"]).arg(&again).arg(workspace().join("configs/square_twogyre.toml")));
    assert_eq!(
        std::fs::read(out.join("manifest.json")).unwrap(),
        std::fs::read(again.join("manifest.json")).unwrap()
    );
}

#[test]
fn invalid_config_fails_before_writing_anything() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "bad.toml", "kind = \"square_twogyre\"\n[physics]\nnu = -5.0\n");
    let out = tmp.path().join("out");
    let res = bin().arg("run").arg(&cfg).arg("--output-dir").arg(&out).output().unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("error"));
    assert!(!out.exists());

    let unknown = write_config(&tmp, "typo.toml", "kind = \"square_twogyre\"\n[numerics]\nspinup = 3.0\n");
    assert!(!bin().arg("run").arg(&unknown).arg("--dry-run").output().unwrap().status.success());
}

#[test]
fn failing_stage_leaves_a_partial_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "short.toml",
        &format!(
            "kind = \"square_twogyre\"\n{SMALL_MESH}[numerics]\nspinup_days = 1.0\n\
             trajectory_days = 0.8\nwindow_days = [1.6]\n"
        ),
    );
    let out = tmp.path().join("out");
    let res = bin().arg("run").arg(&cfg).arg("--output-dir").arg(&out).output().unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("t0_sweep_T1.6d"));
    let m = manifest(&out);
    assert_eq!(m["partial"], true);
    let stages = m["stages"].as_array().unwrap();
    let last = stages.last().unwrap();
    assert_eq!(last["name"], "t0_sweep_T1.6d");
    assert_eq!(last["status"], "failed");
    assert!(stages[..stages.len() - 1].iter().all(|s| s["status"] == "completed"));
    let outputs: Vec<&str> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["file"].as_str().unwrap())
        .collect();
    assert!(outputs.contains(&"spinup.csv"));
}

#[test]
fn mesh_gen_and_check_round_trip() {
    let tmp = TempDir::new().unwrap();
    let mesh = tmp.path().join("square.mesh");
    run_ok(bin().args(["mesh", "gen", "--standard", "-o"]).arg(&mesh));
    let out = run_ok(bin().args(["mesh", "check"]).arg(&mesh));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("dofs 445 interior 365"), "{text}");
    assert!(text.contains("triangles 202"));
    assert!(text.trim_end().ends_with("ok"));

    std::fs::write(&mesh, "MESH v1\nVERTICES 1\n0 0\n").unwrap();
    assert!(!bin().args(["mesh", "check"]).arg(&mesh).output().unwrap().status.success());
}

#[test]
fn shipped_sample_data_matches_the_generator() {
    let tmp = TempDir::new().unwrap();
    run_ok(bin().arg("sample-data").arg(tmp.path()));
    for name in [
        "north_atlantic.mesh",
        "north_atlantic_depth.grid",
        "north_atlantic_tau_x.grid",
        "north_atlantic_tau_y.grid",
    ] {
        assert_eq!(
            std::fs::read(tmp.path().join(name)).unwrap(),
            std::fs::read(workspace().join("data").join(name)).unwrap(),
            "{name} differs; regenerate with `topomode sample-data data`"
        );
    }
}

#[test]
fn realistic_basin_depth_is_validated() {
    let tmp = TempDir::new().unwrap();
    let data = workspace().join("data");
    let text = std::fs::read_to_string(workspace().join("configs/realistic_basin.toml"))
        .unwrap()
        .replace("../data", data.to_str().unwrap())
        .replace("min_depth_m = 1000.0", "min_depth_m = 2000.0");
    let cfg = write_config(&tmp, "deep.toml", &text);
    let out = tmp.path().join("out");
    let res = bin().arg("run").arg(&cfg).arg("--output-dir").arg(&out).output();
    let res = res.unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("below the 2000 m minimum"));
    let m = manifest(&out);
    assert_eq!(m["partial"], true);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 4);
}

#[test]
fn flat_sweep_points_coincide() {
    let tmp = TempDir::new().unwrap();
    let common = format!("seed = 1\n{SMALL_MESH}[topography]\nkind = \"sinusoidal\"\n[numerics]\nstationary_spinup_days = 100.0\n");
    let alpha = write_config(
        &tmp,
        "alpha.toml",
        &format!("kind = \"alpha_sweep\"\n{common}[sweep]\nalpha_min_m = -100.0\nalpha_max_m = 0.0\nalpha_step_m = 100.0\n"),
    );
    let k = write_config(
        &tmp,
        "k.toml",
        &format!("kind = \"wavenumber_sweep\"\n{common}[sweep]\nk_min = 0\nk_max = 1\n"),
    );
    run_ok(bin().arg("run").arg(&alpha));
    run_ok(bin().arg("run").arg(&k));
    let rows = |dir: &str| -> Vec<Vec<String>> {
        std::fs::read_to_string(tmp.path().join(dir).join("sweep.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(String::from).collect())
            .collect()
    };
    let a = rows("alpha_output");
    let kk = rows("k_output");
    assert_eq!(a.len(), 2);
    assert_eq!(kk.len(), 2);
    // alpha = 0 and k = 0 are both the flat bottom: identical bits.
    assert_eq!(a[1][0], "0");
    assert_eq!(kk[0][0], "0");
    assert_eq!(a[1][1..], kk[0][1..]);
    assert!(tmp.path().join("k_output/points/k_001.csv").is_file());
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("k_output/summary.json")).unwrap()).unwrap();
    assert!(summary["lambda1_max_over_min"].as_f64().unwrap() >= 1.0);
}

#[test]
fn growth_and_stability_campaigns_complete() {
    let tmp = TempDir::new().unwrap();
    let growth = write_config(
        &tmp,
        "growth.toml",
        &format!("kind = \"growth_regime\"\n{SMALL_MESH}[numerics]\nstationary_spinup_days = 200.0\ngrowth_points = 12\n"),
    );
    run_ok(bin().arg("run").arg(&growth));
    let csv = std::fs::read_to_string(tmp.path().join("growth_output/growth.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    assert!(csv.starts_with("t_days,lambda_1,lambda_10,lambda_20"));
    let s: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("growth_output/summary.json")).unwrap()).unwrap();
    assert!((s["a"].as_f64().unwrap() - 1.0).abs() < 0.2);

    let stab = write_config(
        &tmp,
        "stab.toml",
        &format!(
            "kind = \"stability_comparison\"\n{SMALL_MESH}[topography]\nkind = \"sinusoidal\"\n\
             [numerics]\nstationary_spinup_days = 150.0\n\
             [sweep]\nalpha_min_m = -100.0\nalpha_max_m = 100.0\nalpha_step_m = 100.0\nnu_rel_tol = 0.2\n"
        ),
    );
    run_ok(bin().arg("run").arg(&stab));
    let csv = std::fs::read_to_string(tmp.path().join("stab_output/stability.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let (lower, failure) = (r[3] == "true", r[4] == "true");
        if !lower && !failure {
            let (hi, lo): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
            assert!((hi - lo) / hi <= 0.2, "{r:?}");
        }
    }
}

#[test]
fn spectrum_verb_reads_g_files() {
    let tmp = TempDir::new().unwrap();
    let g = tmp.path().join("g.txt");
    std::fs::write(&g, "GMATRIX v1\nROWS 2 COLS 3\n3 0 0\n0 -4 0\n").unwrap();
    let out = run_ok(bin().args(["spectrum", "--norm", "euclidean"]).arg(&g));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "index,singular_value\n1,4e0\n2,3e0\n3,0e0\n");
    assert!(String::from_utf8_lossy(&out.stderr).contains("null_dim 1"));
    assert!(!bin().arg("spectrum").arg(&g).output().unwrap().status.success());

    // A G written by a campaign, against the same mesh.
    let cfg = write_config(
        &tmp,
        "sq.toml",
        &format!("kind = \"square_twogyre\"\n{SMALL_MESH}[numerics]\nspinup_days = 5.0\ntrajectory_days = 0.8\nwindow_days = [0.8]\n"),
    );
    run_ok(bin().arg("run").arg(&cfg));
    let mesh = tmp.path().join("m.mesh");
    run_ok(bin().args(["mesh", "gen", "--n-coarse", "3", "--ratio", "2", "-o"]).arg(&mesh));
    let out = run_ok(
        bin()
            .arg("spectrum")
            .arg(tmp.path().join("sq_output/g_T0.8d.txt"))
            .arg("--mesh")
            .arg(&mesh),
    );
    let ours = String::from_utf8(out.stdout).unwrap();
    assert_eq!(ours, std::fs::read_to_string(tmp.path().join("sq_output/spectrum_T0.8d.csv")).unwrap());
}
