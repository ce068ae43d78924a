use super::*;
use crate::error::Error;
use crate::forms::Hypothesis;
use crate::movements::{dissipation_ledger, run_trajectory};

const MINIMAL: &str = r#"
[material]
kind = "isotropic"
mu_W = 1.0
lambda_W = 0.0
mu_R = 1.0
lambda_R = 0.0
"#;

fn key_of(e: Error) -> String {
    match e {
        Error::Config { key, .. } => key,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn minimal_file_fills_defaults() {
    let s = Scenario::from_toml_str(MINIMAL).unwrap();
    assert_eq!(s.geometry.length, 1.0);
    assert_eq!((s.mesh.n1d, s.mesh.nx, s.mesh.ny), (64, 64, 8));
    assert_eq!((s.time.tau, s.time.horizon), (0.01, 1.0));
    assert_eq!(s.solver.tol, 1e-10);
    assert_eq!(s.material.viscous, ViscousKind::Fixed);
    let p = s.problem().unwrap();
    assert_eq!(p.material.hypothesis, Hypothesis::H1);
    assert_eq!(s.targets().len(), 1);
    let echo = s.echo();
    assert!(echo.contains(&("material.mu_W".to_string(), "1.0".to_string())));
    assert!(echo.contains(&("time.tau".to_string(), "0.01".to_string())));
}

#[test]
fn serialized_scenario_reloads_unchanged() {
    let mut s = Scenario::from_toml_str(MINIMAL).unwrap();
    s.initial.xi2 = crate::fem::Poly::new([0.0625, 0.0, -0.5, 0.0, 1.0]);
    s.study.eps = vec![0.4, 0.2];
    let back = Scenario::from_toml_str(&s.to_toml_string()).unwrap();
    assert_eq!(back, s);
}

#[test]
fn negative_modulus_names_the_key() {
    let text = MINIMAL.replace("mu_W = 1.0", "mu_W = -1.0");
    assert_eq!(key_of(Scenario::from_toml_str(&text).unwrap_err()), "material.mu_W");
    let text = MINIMAL.replace("lambda_R = 0.0", "lambda_R = -3.0");
    assert_eq!(key_of(Scenario::from_toml_str(&text).unwrap_err()), "material.lambda_R");
}

#[test]
fn asymmetric_matrix_is_rejected() {
    let text = r#"
[material]
kind = "matrix"
CW = [2.0, 0.5, 0.0,  0.0, 4.0, 0.0,  0.0, 0.0, 2.0]
CR = [2.0, 0.0, 0.0,  0.0, 4.0, 0.0,  0.0, 0.0, 2.0]
"#;
    assert_eq!(key_of(Scenario::from_toml_str(text).unwrap_err()), "material.CW");
    let symmetric = text.replace("2.0, 0.5, 0.0", "2.0, 0.0, 0.0");
    assert!(Scenario::from_toml_str(&symmetric).is_ok());
    let mixed = format!("{symmetric}mu_W = 1.0\n");
    assert_eq!(key_of(Scenario::from_toml_str(&mixed).unwrap_err()), "material.mu_W");
}

#[test]
fn unknown_keys_and_bad_values_are_reported_with_paths() {
    let text = format!("{MINIMAL}\n[time]\ntau = 0.01\nstep = 2\n");
    assert_eq!(key_of(Scenario::from_toml_str(&text).unwrap_err()), "time.step");
    let text = format!("{MINIMAL}\n[solver]\narmijo = 0.7\n");
    assert_eq!(key_of(Scenario::from_toml_str(&text).unwrap_err()), "solver.armijo");
    let text = format!("{MINIMAL}\n[study]\neps = [0.2, -0.1]\n");
    assert_eq!(key_of(Scenario::from_toml_str(&text).unwrap_err()), "study.eps[1]");
    assert_eq!(key_of(Scenario::from_toml_str("[mesh]\nn1d = 4\n").unwrap_err()), "material");
}

#[test]
fn h2_family_option_builds_the_width_family() {
    let text = MINIMAL.replace("lambda_W = 0.0", "lambda_W = 1.0").replace("lambda_R = 0.0", "lambda_R = 1.0")
        + "viscous = \"h2_family\"\n";
    let s = Scenario::from_toml_str(&text).unwrap();
    assert_eq!(s.problem().unwrap().material.hypothesis, Hypothesis::H2);
}

#[test]
fn manifest_round_trips_and_lists_outputs() {
    let mut m = RunManifest::new();
    m.set("status", "running");
    m.set("config_sha256", sha256_hex(b"abc"));
    m.add_output("ledger.csv");
    m.add_output("ledger.csv");
    m.add_output("snapshot.txt");
    m.set("status", "complete");
    let back = RunManifest::parse(&m.to_text()).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.get("status"), Some("complete"));
    assert_eq!(
        back.get("config_sha256"),
        Some("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")
    );
    assert_eq!(back.outputs(), ["ledger.csv", "snapshot.txt"]);
}

#[test]
fn snapshot_reloads_bitwise() {
    let mut s = Scenario::from_toml_str(MINIMAL).unwrap();
    s.mesh.n1d = 8;
    s.initial.xi2 = crate::fem::Poly::new([0.0625, 0.0, -0.5, 0.0, 1.0]);
    s.initial.w = crate::fem::Poly::new([0.0625, 0.0, -0.5, 0.0, 1.0]).scaled(1.0 / 3.0);
    let p = s.problem().unwrap();
    let m = p.ribbon().unwrap();
    let traj = run_trajectory(&m, &p.initial_ribbon(&m).unwrap(), 0.1, 0.3, &p.solver).unwrap();
    let snap = Snapshot::of("ribbon", &traj);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("snap.txt");
    snap.write(&path).unwrap();
    let back = Snapshot::read(&path).unwrap();
    assert_eq!(back.states.len(), 4);
    for (a, b) in back.states.iter().zip(&traj.states) {
        assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(back, snap);
    let leftovers: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);

    let mut edge = snap.clone();
    edge.states = vec![vec![-0.0, f64::MIN_POSITIVE, 5e-324, f64::MAX, 0.1 + 0.2]];
    let back = Snapshot::parse(&edge.to_text()).unwrap();
    assert!(back.states[0].iter().zip(&edge.states[0]).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(Snapshot::parse("nonsense").is_err());
    let truncated = snap.to_text().lines().take(7).collect::<Vec<_>>().join("\n");
    assert!(Snapshot::parse(&truncated).is_err());
}

#[test]
fn ledger_csv_has_documented_columns() {
    let mut s = Scenario::from_toml_str(MINIMAL).unwrap();
    s.mesh.n1d = 4;
    s.initial.xi2 = crate::fem::Poly::new([0.0625, 0.0, -0.5, 0.0, 1.0]);
    let p = s.problem().unwrap();
    let m = p.ribbon().unwrap();
    let traj = run_trajectory(&m, &p.initial_ribbon(&m).unwrap(), 0.25, 1.0, &p.solver).unwrap();
    let csv = ledger_csv(&dissipation_ledger(&traj, None).unwrap());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,t,energy,step_dist,slope,phi_residual,newton_iters");
    assert_eq!(lines.len(), 1 + 5);
    assert!(lines[1].starts_with("0,0,"));
    assert!(lines[2].contains(",,,"));
}
