use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphelastic")).args(args).output().expect("binary runs")
}

fn read_coefficients(path: &Path) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_preset_with_both_solvers() {
    let dir = tempfile::tempdir().unwrap();
    let mut coeffs = Vec::new();
    for solver in ["direct", "iterative"] {
        let out = dir.path().join(solver);
        let o = run(&[
            "solve",
            "--preset",
            "three-spheres-smooth",
            "--degree",
            "4",
            "--solver",
            solver,
            "--tol",
            "1e-12",
            "--surface",
            "--grid",
            "-1.9,0,0,1.9,0,0,9,1,1",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
        let m = json(&out.join("manifest.json"));
        assert_eq!(m["degree"], 4);
        assert!(m["rule_degree"].as_u64().unwrap() >= 8);
        assert_eq!(m["solver"], solver);
        assert_eq!(m["spectra_mode"], "self_consistent");
        if solver == "iterative" {
            assert!(m["iterations"].as_u64().unwrap() <= 1000);
        }
        assert!(out.join("surface.csv").exists());
        let field = std::fs::read_to_string(out.join("field.csv")).unwrap();
        // The point at x = -0.95 lies in the cavity and is dropped.
        assert_eq!(field.lines().count(), 1 + 8);
        coeffs.push(read_coefficients(&out.join("coefficients.csv")));
    }
    let scale = coeffs[0].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (a, b) in coeffs[0].iter().zip(&coeffs[1]) {
        assert!((a - b).abs() <= 1e-8 * scale);
    }
}

#[test]
fn overlapping_spheres_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"background": {"mu": 1, "lambda": 1}, "degree": 2, "spheres": [
            {"id": 1, "center": [0, 0, 0], "radius": 0.3, "role": "neumann"},
            {"id": 2, "center": [0.4, 0, 0], "radius": 0.3, "role": "neumann"},
            {"id": 9, "center": [0, 0, 0], "radius": 2, "role": "neumann", "enclosing": true}]}"#,
    )
    .unwrap();
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let body: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(body["kind"], "validation");
    let issue = body["issues"].as_array().unwrap().iter().find(|i| i["issue"] == "overlap").unwrap();
    assert_eq!((issue["a"].as_u64(), issue["b"].as_u64()), (Some(1), Some(2)));

    let o = run(&["solve", "--config", "/nonexistent.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["solve", "--preset", "no-such-preset"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"background": {"mu": 1, "lambda": 1}, "degree": 4,
            "solver": {"method": "iterative", "tol": 1e-14, "max_iter": 1, "restart": 1},
            "spheres": [
            {"id": 1, "center": [0.5, 0, 0], "radius": 0.3, "role": "transmission", "material": {"mu": 5, "lambda": 1}},
            {"id": 9, "center": [0, 0, 0], "radius": 2, "role": "neumann", "enclosing": true,
             "data": {"kind": "sinusoidal", "amplitude": -1, "frequency": 0.3}}]}"#,
    )
    .unwrap();
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
    let body: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(body["kind"], "solver");
}

#[test]
fn studies_write_tables_and_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    let o = run(&["one-sphere", "--cases", "1,2", "--degrees", "2,5", "--out-dir", d("one").to_str().unwrap()]);
    assert!(o.status.success());
    let table = std::fs::read_to_string(d("one").join("one_sphere.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("case,degree,error"));
    for line in table.lines().skip(1) {
        let err: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err <= 1e-12);
    }
    assert_eq!(json(&d("one").join("manifest.json"))["command"], "one-sphere");

    let o = run(&[
        "convergence",
        "--preset",
        "three-spheres-piecewise",
        "--degrees",
        "3",
        "--reference",
        "3",
        "--out-dir",
        d("conv").to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let conv = std::fs::read_to_string(d("conv").join("convergence.csv")).unwrap();
    let err: f64 = conv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(err, 0.0);

    let o = run(&["benchmark", "--radii", "1,2", "--out-dir", d("bench").to_str().unwrap()]);
    assert!(o.status.success());
    let bench = std::fs::read_to_string(d("bench").join("benchmark.csv")).unwrap();
    let counts: Vec<&str> = bench.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(counts, ["2", "28"]);

    let mut tables = Vec::new();
    for name in ["sweep1", "sweep2"] {
        let o = run(&[
            "sweep-poisson",
            "--steps",
            "5",
            "--spectra-mode",
            "as_printed",
            "--out-dir",
            d(name).to_str().unwrap(),
        ]);
        assert!(o.status.success());
        tables.push(std::fs::read(d(name).join("sweep.csv")).unwrap());
        assert_eq!(json(&d(name).join("manifest.json"))["spectra_mode"], "as_printed");
    }
    assert_eq!(tables[0], tables[1]);
    assert_eq!(String::from_utf8_lossy(&tables[0]).lines().count(), 6);
}
