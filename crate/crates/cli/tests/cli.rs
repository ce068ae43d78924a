use std::path::Path;
use std::process::{Command, Output};

use ribbonflow::io::{RunManifest, Snapshot};

/// ξ₂ decay: zero data, ξ₂⁰ the end bubble `(x² − 1/4)²`.
const DECAY: &str = r#"
[material]
kind = "isotropic"
mu_W = 1.0
lambda_W = 0.0
mu_R = 1.0
lambda_R = 0.0

[mesh]
n1d = 8

[time]
tau = 0.1
horizon = 0.35

[initial]
xi2 = [0.0625, 0.0, -0.5, 0.0, 1.0]
"#;

fn ribbonflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ribbonflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, scenario: &str, command: &str) -> Output {
    let cfg = dir.join("scenario.toml");
    std::fs::write(&cfg, scenario).unwrap();
    let out = dir.join("out");
    ribbonflow(&[command, cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn decay_ledger_has_one_row_per_step_plus_initial() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), DECAY, "simulate-1d");
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/ledger.csv")).unwrap();
    let steps = (0.35_f64 / 0.1).ceil() as usize;
    assert_eq!(csv.lines().count(), 1 + steps + 1);
    assert_eq!(csv.lines().next().unwrap(), "n,t,energy,step_dist,slope,phi_residual,newton_iters");

    let snap = Snapshot::read(&dir.path().join("out/snapshot_1d.txt")).unwrap();
    assert_eq!(snap.states.len(), steps + 1);
    assert!(snap.model.starts_with("ribbon n1d=8"));
}

#[test]
fn manifest_lists_every_emitted_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), DECAY, "simulate-1d");
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let m = RunManifest::parse(&std::fs::read_to_string(out.join("manifest.txt")).unwrap()).unwrap();
    assert_eq!(m.get("status"), Some("complete"));
    assert_eq!(m.get("hypothesis"), Some("H1"));
    assert_eq!(m.get("config.mesh.n1d"), Some("8"));
    assert_eq!(
        m.get("config_sha256").unwrap(),
        ribbonflow::io::sha256_hex(DECAY.as_bytes())
    );
    let mut on_disk: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.txt")
        .collect();
    on_disk.sort();
    let mut listed = m.outputs().to_vec();
    listed.sort();
    assert_eq!(on_disk, listed);

    let r = ribbonflow(&["report", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", stderr(&r));
    assert!(String::from_utf8_lossy(&r.stdout).contains("output: ledger.csv"));
}

#[test]
fn identical_configs_give_identical_ledgers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run_in(d.path(), DECAY, "simulate-1d");
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["ledger.csv", "snapshot_1d.txt"] {
        let x = std::fs::read(a.path().join("out").join(name)).unwrap();
        let y = std::fs::read(b.path().join("out").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between identical runs");
    }
}

#[test]
fn unknown_subcommand_exits_64_with_usage() {
    let o = ribbonflow(&["simulate-3d", "x.toml"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn reduce_study_without_hypothesis_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = DECAY.replace("lambda_W = 0.0", "lambda_W = 1.0").replace("lambda_R = 0.0", "lambda_R = 1.0");
    let o = run_in(dir.path(), &scenario, "reduce-study");
    assert_eq!(o.status.code(), Some(3));
    let msg = stderr(&o);
    assert_eq!(msg.trim_end().lines().count(), 1);
    assert!(msg.contains("(H1) or (H2)"), "{msg}");
}

#[test]
fn invalid_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &DECAY.replace("mu_W = 1.0", "mu_W = -1.0"), "simulate-1d");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("material.mu_W"));
}

#[test]
fn solver_failure_exits_2_with_the_step() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = DECAY.replace("xi2 = ", "w = [0.625, 0.0, -5.0, 0.0, 10.0]\nxi2 = ")
        + "\n[forces]\nf = [3.0]\n\n[solver]\nmax_newton = 1\n";
    let o = run_in(dir.path(), &scenario, "simulate-1d");
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("step"));
}
