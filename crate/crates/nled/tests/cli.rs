use std::path::Path;
use std::process::{Command, Output};

use nled::Config;
use serde_json::Value;

fn nled(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nled"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const TWO: &str = r#"{
    "model": {"kind": "classical", "beta": 1.0},
    "charges": [{"pos": [0.5, 0.1, 0.0], "q": 1.0}, {"pos": [-0.45, 0.0, 0.2], "q": -2.0}]
}"#;

#[test]
fn sample_writes_the_grid_table() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "two.json", TWO);
    let out = nled(
        &["sample", "--config", "two.json", "--out-dir", "out"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("out/sample.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "x,y,z,Ex,Ey,Ez,Hx,Hy,Hz,jm_x,jm_y,jm_z,energy_density"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 21 * 21 * 21);
    assert!(rows
        .iter()
        .all(|r| r.len() == 13 && r.iter().all(|v| v.is_finite())));
    assert!(!csv.contains("\r\n"));
    let cfg = Config::load(&dir.path().join("two.json")).unwrap();
    let meta = json(&dir.path().join("out/sample.meta.json"));
    assert_eq!(meta["config_hash"], cfg.hash());
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["seed"], 0);
    assert_eq!(meta["rows"], 9261);
    // |E| < 1/√β everywhere for the classical model
    assert!(rows
        .iter()
        .all(|r| (r[3] * r[3] + r[4] * r[4] + r[5] * r[5]).sqrt() < 1.0));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "two.json",
        &TWO.replace("\n}", ",\n\"grid\": {\"n\": [7, 7, 7]}\n}"),
    );
    for (threads, out) in [("1", "a"), ("3", "b")] {
        let o = nled(
            &[
                "current",
                "--config",
                "two.json",
                "--out-dir",
                out,
                "--threads",
                threads,
                "--format",
                "json",
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("a/current.json")).unwrap();
    let b = std::fs::read(dir.path().join("b/current.json")).unwrap();
    assert_eq!(a, b);
    let v = json(&dir.path().join("a/current.json"));
    assert_eq!(v["columns"][9], "analytic");
    assert_eq!(v["rows"].as_array().unwrap().len(), 343);
}

#[test]
fn charge_reports_free_charges_and_ladder() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "two.json", TWO);
    let out = nled(
        &[
            "charge",
            "--config",
            "two.json",
            "--out-dir",
            ".",
            "--R",
            "50",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&dir.path().join("charge.json"));
    assert!((v["q_free"].as_f64().unwrap() + 1.0).abs() < 1e-6);
    assert_eq!(v["g_free"].as_f64().unwrap(), 0.0);
    let ladder = v["flux_ladder"].as_array().unwrap();
    assert!(ladder.len() >= 4);
    assert_eq!(ladder.last().unwrap()["radius"].as_f64().unwrap(), 50.0);
    assert_eq!(v["outer_radius"].as_f64().unwrap(), 50.0);
    let bad = nled(
        &["charge", "--config", "two.json", "--R", "0.1"],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn energy_of_a_dyon_reports_divergence() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "dyon.toml",
        "[model]\nkind = \"classical\"\nkappa = 0.0\n\n[[charges]]\npos = [0.0, 0.0, 0.0]\nq = 2.0\ng = 1.0\n",
    );
    let out = nled(
        &["energy", "--config", "dyon.toml", "--out-dir", "."],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&dir.path().join("energy.json"));
    assert_eq!(v["converged"], false);
    assert!((v["near_charge_exponents"][0].as_f64().unwrap() + 4.0).abs() < 0.1);
}

#[test]
fn verify_passes_and_fails_by_suite() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "two.json",
        &TWO.replace(
            "\n}",
            ",\n\"grid\": {\"n\": [6, 6, 6]}, \"output\": {\"seed\": 11}\n}",
        ),
    );
    let out = nled(
        &["verify", "--config", "two.json", "--out-dir", "."],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&dir.path().join("verify.json"));
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 11);
    let names: Vec<&str> = v["suites"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    for n in [
        "special_functions",
        "constitutive_round_trip",
        "field_equations",
        "jacobi_cancellation",
        "free_charge",
        "energy",
    ] {
        assert!(names.contains(&n), "{names:?}");
    }
    assert!(v["suites"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s["passed"] == true && s["max_residual"].is_number()));

    // the flux of E at a radius this close to the charges is not yet the free charge
    write(
        dir.path(),
        "tight.json",
        r#"{"model": {"kind": "classical"}, "charges": [{"pos": [0.5,0,0], "q": 3}, {"pos": [-0.5,0,0], "q": 2}],
            "quadrature": {"far_radius": 1.6, "flux_radii": [1.6]}, "grid": {"n": [4,4,4]}}"#,
    );
    let out = nled(
        &[
            "verify",
            "--config",
            "tight.json",
            "--out-dir",
            "tight",
            "--seed",
            "5",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let v = json(&dir.path().join("tight/verify.json"));
    assert_eq!(v["passed"], false);
    assert_eq!(v["seed"], 5);
}

#[test]
fn continuous_fields_of_a_gaussian() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "blob.json",
        r#"{"model": {"kind": "logarithmic", "beta": 2.0},
            "continuous": {"rho_e": {"kind": "gaussian", "center": [0,0,0], "sigma": 0.5, "charge": 2.0}},
            "grid": {"lo": [0.2, 0.3, 0.1], "hi": [1.2, 0.3, 0.1], "n": [2, 1, 1]}}"#,
    );
    let out = nled(
        &["continuous", "--config", "blob.json", "--out-dir", "."],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("continuous.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("x,y,z,u,Dx,Dy,Dz,Bx,By,Bz,Ex"));
    for line in lines {
        let r: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let x = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let erf_form = -2.0 * erf(x / (2f64.sqrt() * 0.5)) / (4.0 * std::f64::consts::PI * x);
        assert!(
            (r[3] - erf_form).abs() <= 1e-6 * erf_form.abs(),
            "{} {erf_form}",
            r[3]
        );
        assert_eq!(&r[7..10], &[0.0, 0.0, 0.0]);
        assert_eq!(&r[13..16], &[0.0, 0.0, 0.0]);
    }
}

/// Maclaurin series.
fn erf(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x * x / n as f64;
        sum += term / (2 * n + 1) as f64;
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", r#"{"model": {"kind": "weird"}}"#);
    write(
        dir.path(),
        "neg.json",
        r#"{"model": {"kind": "classical", "beta": -1}, "charges": [{"pos": [0,0,0], "q": 1}]}"#,
    );
    write(
        dir.path(),
        "none.json",
        r#"{"model": {"kind": "classical"}}"#,
    );
    for args in [
        vec!["sample", "--config", "bad.json"],
        vec!["sample", "--config", "neg.json"],
        vec!["sample", "--config", "none.json"],
        vec!["continuous", "--config", "none.json"],
        vec!["sample", "--config", "missing.json"],
        vec!["sample"],
    ] {
        let out = nled(&args, dir.path());
        assert_eq!(
            out.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn gridded_density_from_sidecar() {
    use nled::lattice::{save, Encoding, Sidecar};
    let dir = tempfile::tempdir().unwrap();
    let n = 9;
    let h = 0.25;
    let values: Vec<f64> = (0..n * n * n)
        .map(|i| {
            let (a, b, c) = (i / (n * n), (i / n) % n, i % n);
            let r2 = [a, b, c]
                .iter()
                .map(|&k| (k as f64 * h - 1.0).powi(2))
                .sum::<f64>();
            (1.0 - r2).max(0.0)
        })
        .collect();
    let meta = Sidecar {
        dims: [n; 3],
        spacing: [h; 3],
        origin: [-1.0; 3],
        data: "rho.bin".into(),
        encoding: Encoding::F64le,
    };
    save(&dir.path().join("rho.json"), &meta, &values).unwrap();
    write(
        dir.path(),
        "lat.json",
        r#"{"model": {"kind": "classical"}, "continuous": {"rho_e": {"kind": "gridded", "sidecar": "rho.json"}},
            "grid": {"lo": [3, 0, 0], "hi": [3, 0, 0], "n": [1, 1, 1]}, "quadrature": {"rel_tol": 1e-6}}"#,
    );
    let out = nled(
        &[
            "continuous",
            "--config",
            "lat.json",
            "--out-dir",
            "o",
            "--format",
            "json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&dir.path().join("o/continuous.json"));
    let total = v["total_q"].as_f64().unwrap();
    let u = v["rows"][0][3].as_f64().unwrap();
    // monopole far field
    assert!(
        (u * 4.0 * std::f64::consts::PI * 3.0 / -total - 1.0).abs() < 1e-2,
        "{u} {total}"
    );
}

#[test]
fn config_round_trips_through_both_syntaxes() {
    let cfg = Config::from_json(TWO).unwrap();
    let toml = cfg.to_toml().unwrap();
    assert_eq!(Config::from_toml(&toml).unwrap(), cfg);
    assert_eq!(Config::from_json(&cfg.to_json()).unwrap(), cfg);
}
