use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hens"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn hens_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hens"))
        .args(args)
        .env(key, val)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn validate_builtin_cone() {
    let out = hens(&["validate", "heisenberg1", "--profile", "carnot"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["status"] != "fail"));
}

#[test]
fn classified_contact3_validates_as_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c3.json");
    let out = hens(&["classify", "contact3", "--rho", "1", "--phi", "0", "--gamma", "1", "-o", path(&file)]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["validation"]["passed"], true);
    let out = hens(&["validate", path(&file), "--profile", "homogeneous_ensemble"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn contact4_without_e12_fails_homs_e() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c4.json");
    assert_eq!(code(&hens(&["classify", "contact4", "--params", "1,1,0,1,0", "-o", path(&file)])), 0);
    let out = hens(&["validate", path(&file), "--profile", "homogeneous_space"]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    assert_eq!(v["passed"], false);
    assert!(v["failures"].as_array().unwrap().iter().any(|f| f == "homs-e"));
}

#[test]
fn malformed_arguments_exit_64_with_usage() {
    for args in [
        vec!["frobnicate"],
        vec!["bch", "heisenberg1", "--x", "1,2"],
        vec!["bch", "heisenberg1", "--x", "1,a,3", "--y", "0,0,0"],
        vec!["validate", "no_such_algebra_or_file"],
        vec!["validate", "heisenberg1", "--profile", "bogus"],
        vec!["gh", "missing_a.json", "missing_b.json"],
    ] {
        let out = hens(&args);
        assert_eq!(code(&out), 64, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = hens(&["frobnicate"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bch_closed_form_with_negative_coordinates() {
    let out = hens(&["bch", "heisenberg1", "--x", "1,2,3", "--y", "-1,0.5,2"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let p: Vec<f64> = serde_json::from_value(v["product"].clone()).unwrap();
    assert_eq!(p, vec![0.0, 2.5, 3.0 + 2.0 + 0.5 * (1.0 * 0.5 - 2.0 * -1.0)]);
    assert_eq!(v["approximate"], false);
}

#[test]
fn every_subcommand_accepts_tol_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.json");
    std::fs::write(&f, "[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]").unwrap();
    let h = dir.path().join("h.json");
    std::fs::write(&h, format!(r#"[{{"exponents": {:?}, "coefficient": 1}}]"#, vec![0; 20])).unwrap();
    let s = dir.path().join("s.json");
    std::fs::write(&s, r#"{"distances": [[0, 0.5], [0.5, 0]], "base": 0}"#).unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["validate", "heisenberg1"],
        vec!["bch", "heisenberg1", "--x", "1,0,0", "--y", "0,1,0"],
        vec!["conical", "contact3(1,0,1)", "--x", "0.1,0.2,0.3", "--y", "0.3,-0.1,0.2"],
        vec!["frame", "heisenberg1", "--generators", "0,1"],
        vec!["ccdist", "heisenberg1", "--from", "0,0,0", "--to", "1,0,0", "--restarts", "2"],
        vec!["profile", "heisenberg1", "--eps", "1,0.5", "--samples", "4", "--restarts", "2", "--segments", "8"],
        vec!["gh", path(&s), path(&s), "--mode", "exact"],
        vec!["classify", "surface", "--a", "1", "--b", "1"],
        vec!["coadjoint", "heisenberg_so2", "--check-f", path(&f)],
        vec!["w-poly", "heisenberg1", "--x", "1,0,0"],
        vec!["prequant", "heisenberg_so2", "--f", path(&f), "--h", path(&h), "--u", "0,1,0,0"],
    ];
    for mut args in runs {
        args.extend(["--tol", "1e-8", "--seed", "3"]);
        let out = hens(&args);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        json(&out);
    }
}

#[test]
fn output_is_byte_identical_for_identical_arguments() {
    let args = ["profile", "contact3(1,0,1)", "--eps", "1,0.5", "--samples", "5", "--restarts", "2", "--segments", "8", "--seed", "11"];
    let a = hens(&args);
    let b = hens(&args);
    let c = hens_env(&args, "HENS_THREADS", "1");
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    // 17 significant digits, sorted keys.
    assert!(text.find("\"kind\"").unwrap() < text.find("\"points\"").unwrap());
}

#[test]
fn profile_writes_csv_and_samples_that_gh_reads() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let samples = dir.path().join("samples");
    let out = hens(&[
        "profile", "heisenberg1", "--point", "0,0,0", "--eps", "1,0.5,0.25", "--samples", "4", "--restarts", "2",
        "--segments", "8", "--out", path(&csv), "--sample-dir", path(&samples),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,pair_i,pair_j,rescaled_distance"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3 * 6);
    assert!(rows.iter().all(|r| r.len() == 4 && r[3].parse::<f64>().is_ok()));
    let out = hens(&["gh", path(&samples.join("sample_0.json")), path(&samples.join("sample_2.json")), "--mode", "exact"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["lower"], v["upper"]);
    assert_eq!(v["mode"], "exact");
}

#[test]
fn coadjoint_membership_and_relation() {
    let dir = tempfile::tempdir().unwrap();
    let (s, c) = (0.6f64.sin(), 0.6f64.cos());
    let rot = dir.path().join("rot.json");
    std::fs::write(&rot, format!("[[1,0,0,0],[0,{c},{},0],[0,{s},{c},0],[0,0,0,1]]", -s)).unwrap();
    let out = hens(&["coadjoint", "heisenberg_so2", "--check-f", path(&rot)]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["candidate"]["member"], true);
    assert!(v["residual"].as_f64().unwrap() < 1e-10);

    let scale = dir.path().join("scale.json");
    std::fs::write(&scale, "[[1,0,0,0],[0,2,0,0],[0,0,2,0],[0,0,0,1]]").unwrap();
    let out = hens(&["coadjoint", "heisenberg_so2", "--check-f", path(&scale)]);
    assert_eq!(code(&out), 1);
    assert!(json(&out)["candidate"]["isometry"].as_f64().unwrap() > 1.0);
}

#[test]
fn prequant_of_constant_is_the_moment() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.json");
    std::fs::write(&f, "[[0,0,0,0],[0,0,-1,0],[0,1,0,0],[0,0,0,0.5]]").unwrap();
    let h = dir.path().join("h.json");
    std::fs::write(&h, format!(r#"[{{"exponents": {:?}, "coefficient": 1}}]"#, vec![0; 20])).unwrap();
    let out = hens(&["prequant", "heisenberg_so2", "--f", path(&f), "--h", path(&h), "--u", "0.3,1,-0.5,2", "--eps", "0.5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["im"].as_f64().unwrap(), 0.0);
    assert!((v["re"].as_f64().unwrap() - v["moment"].as_f64().unwrap()).abs() < 1e-15);

    let mut cubic = vec![0; 20];
    cubic[16] = 3;
    std::fs::write(&h, format!(r#"[{{"exponents": {cubic:?}, "coefficient": 1}}]"#)).unwrap();
    let out = hens(&["prequant", "heisenberg_so2", "--f", path(&f), "--h", path(&h), "--u", "0,1,0,0"]);
    assert_eq!(code(&out), 64);
}

#[test]
fn classify_reports_jacobi_constraints_and_invariants() {
    let out = hens(&["classify", "jacobi", "--family", "surface"]);
    assert_eq!(code(&out), 0);
    let polys: Vec<String> = json(&out)["constraints"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["polynomial"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(polys.len(), 2);
    assert!(polys.iter().any(|p| p.contains("a*c")) && polys.iter().any(|p| p.contains("a*d")));

    let out = hens(&["classify", "jacobi", "--family", "contact3", "--phi", "0.4"]);
    assert!(json(&out)["constraints"].as_array().unwrap().is_empty());

    let out = hens(&["classify", "contact4-invariants", "--params", "1,2,3,4,5", "--alphas", "2,3"]);
    let v = json(&out);
    assert_eq!(v["invariants"], serde_json::json!([20, 2]));
    assert!((v["reduced"]["e12"].as_f64().unwrap() - 20.0 / 3.0).abs() < 1e-15);
    assert_eq!(code(&hens(&["classify", "contact4-invariants", "--params", "1,2,3,4,5", "--alphas", "0,3"])), 64);
}

#[test]
fn ccdist_reports_bounds() {
    let out = hens(&["ccdist", "heisenberg1", "--from", "0,0,0", "--to", "1,0,0"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["upper"].as_f64().unwrap() - 1.0).abs() < 0.01);
    assert!(v.get("controls").is_none());
    let with = json(&hens(&["ccdist", "heisenberg1", "--from", "0,0,0", "--to", "1,0,0", "--controls"]));
    assert_eq!(with["controls"].as_array().unwrap().len(), 32);
}
