use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dapc::affinity::{gen_identity, gen_toeplitz, AffinityMatrix};

fn dapc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dapc")).args(args).output().unwrap()
}

fn write_config(dir: &Path, c_avg: f64, c_max: f64) -> String {
    let cfg = format!(
        r#"{{"channel":{{"kind":"identity"}},"v":{{"kind":"constant","value":1}},
        "lambda":{{"kind":"constant","value":1}},"c_avg":{c_avg},"c_max":{c_max},"a":1,"b":0.4,
        "t_sweep":[4,8],"trials":200,"pair_cap":20,"candidate_budget":300,"root_seed":3,
        "output_dir":"{}"}}"#,
        dir.join("out").display()
    );
    let path = dir.join("config.json");
    fs::write(&path, cfg).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_csv_and_replays_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 3.0, 4.0);
    let run = dapc(&["simulate", "--config", &cfg, "--jobs", "2"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("simulate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("T,m,kappa,l,a,b,psi_t,trials,"));

    let manifest = out.join("manifest.json");
    let replay = dir.path().join("replay");
    let run = dapc(&["simulate", "--config", manifest.to_str().unwrap(), "--out", replay.to_str().unwrap()]);
    assert!(run.status.success());
    assert_eq!(fs::read(out.join("simulate.csv")).unwrap(), fs::read(replay.join("simulate.csv")).unwrap());
    assert_eq!(fs::read(&manifest).unwrap(), fs::read(replay.join("manifest.json")).unwrap());

    let reseeded = dir.path().join("reseeded");
    dapc(&["simulate", "--config", &cfg, "--seed", "99", "--out", reseeded.to_str().unwrap()]);
    assert_ne!(csv, fs::read_to_string(reseeded.join("simulate.csv")).unwrap());
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 5.0, 4.0);
    let run = dapc(&["simulate", "--config", &cfg]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("c_avg ≤ c_max"));
}

#[test]
fn missing_config_is_a_runtime_failure() {
    let run = dapc(&["simulate", "--config", "/nonexistent/config.json"]);
    assert_eq!(run.status.code(), Some(1));
}

#[test]
fn bounds_grid() {
    let dir = tempfile::tempdir().unwrap();
    let run = dapc(&["bounds", "--kappa", "1", "--l", "0,0.3", "--out", dir.path().to_str().unwrap()]);
    assert!(run.status.success());
    let csv = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    assert_eq!(csv, "kappa,l,lower_raw,lower_clamped,upper\n1,0,0.25,0.25,1.5\n1,0.3,-0.05,0,1.8\n");
    assert_eq!(dapc(&["bounds", "--kappa", "0"]).status.code(), Some(2));
}

#[test]
fn verify_passes_and_fault_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(dapc(&["verify", "--seed", "4", "--out", a.to_str().unwrap()]).status.success());
    assert!(dapc(&["verify", "--seed", "4", "--out", b.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(a.join("verify.json")).unwrap(), fs::read(b.join("verify.json")).unwrap());
    assert_eq!(dapc(&["verify", "--inject-fault"]).status.code(), Some(1));
}

fn write_matrix(dir: &Path, name: &str, m: &AffinityMatrix) -> String {
    let path = dir.join(name);
    fs::write(&path, m.to_json()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn analyze_reports_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let id = write_matrix(dir.path(), "id.json", &gen_identity(8).unwrap());
    let run = dapc(&["analyze", &id]);
    assert!(run.status.success());
    let v: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(v["rank"], 8);
    assert_eq!(v["conditions"]["kappa_hat"], 1.0);
    assert_eq!(v["zonotope_volume"], 1.0);

    let tp = write_matrix(dir.path(), "tp.json", &gen_toeplitz(&[1.0, 0.5], 16).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&dapc(&["analyze", &tp]).stdout).unwrap();
    assert_eq!(v["conditions"]["l_hat"], 0.25);
    assert_eq!(v["conditions"]["c2_ok"], true);

    let deficient = AffinityMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]], 1.0, 4.0).unwrap();
    let rd = write_matrix(dir.path(), "rd.json", &deficient);
    let run = dapc(&["analyze", &rd, "--t", "2"]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("rank 1"));
}
