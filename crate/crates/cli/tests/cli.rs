use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn nnls(out: &Path, args: &[&str]) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_nnls"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn nnls");
    status.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_background_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(nnls(dir.path(), &["zeros"]), 2);
    assert_eq!(nnls(dir.path(), &["--a", "1", "--r", "2", "--xi-grid", "0:1", "predict"]), 2);
    assert_eq!(nnls(dir.path(), &["--a", "1", "--r", "2", "--t-list", "-1", "predict"]), 2);
}

#[test]
fn bifurcation_value_is_an_assumption_error() {
    let dir = TempDir::new().unwrap();
    let r = format!("{}", std::f64::consts::PI);
    assert_eq!(nnls(dir.path(), &["--a", "1", "--r", &r, "zeros"]), 4);
    let r2 = format!("{}", std::f64::consts::PI); // n pi / A with A = 2, n = 2
    assert_eq!(nnls(dir.path(), &["--a", "2", "--r", &r2, "predict"]), 4);
}

#[test]
fn zero_count_increments_across_the_bifurcation() {
    let pi = std::f64::consts::PI;
    let below = TempDir::new().unwrap();
    let above = TempDir::new().unwrap();
    assert_eq!(nnls(below.path(), &["--a", "1", "--r", &format!("{}", pi - 0.1), "zeros"]), 0);
    assert_eq!(nnls(above.path(), &["--a", "1", "--r", &format!("{}", pi + 0.1), "zeros"]), 0);
    let nb = json(&below.path().join("zeros.json"))["n"].as_u64().unwrap();
    let na = json(&above.path().join("zeros.json"))["n"].as_u64().unwrap();
    assert_eq!(nb, 1);
    assert_eq!(na, 2);
    let omegas = json(&above.path().join("zeros.json"))["omegas"].as_array().unwrap().len();
    assert_eq!(omegas, 1);
}

#[test]
fn single_zero_has_no_thresholds_and_four_sectors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(nnls(dir.path(), &["--a", "1", "--r", "2", "--xi-grid", "-1:1:41", "--t-list", "10", "predict"]), 0);
    let z = json(&dir.path().join("zeros.json").with_file_name("predict_summary.json"));
    assert!(z["omegas"].as_array().unwrap().is_empty());
    let mut fams: Vec<String> =
        z["sectors"].as_array().unwrap().iter().map(|s| s["family"].as_str().unwrap().to_string()).collect();
    fams.sort();
    fams.dedup();
    assert_eq!(fams.len(), 4, "{fams:?}");
    // xi = 0 is singular and must be reported as skipped
    let skipped = z["skipped"].as_array().unwrap();
    assert!(skipped.iter().any(|s| s["xi"].as_f64() == Some(0.0)));
}

#[test]
fn trivial_background_gives_trivial_table() {
    let dir = TempDir::new().unwrap();
    assert_eq!(nnls(dir.path(), &["--a", "0", "--r", "2", "scatter"]), 0);
    let mut rdr = csv_rows(&dir.path().join("spectral.csv"));
    let header = rdr.remove(0);
    assert_eq!(header[0], "k");
    for row in rdr {
        let v: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!((v[1], v[2], v[3], v[4]), (1.0, 0.0, 1.0, 0.0));
        assert!(v[5..11].iter().all(|x| *x == 0.0));
    }
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn outputs_are_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let args = ["--a", "1", "--r", "2", "--xi-grid", "-0.8:0.8:9", "--t-list", "5,10"];
        assert_eq!(nnls(dir.path(), &[&args[..], &["scatter"]].concat()), 0);
        assert_eq!(nnls(dir.path(), &[&args[..], &["predict", "--kink"]].concat()), 0);
        assert_eq!(nnls(dir.path(), &[&args[..], &["zeros"]].concat()), 0);
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn blow_up_exits_with_code_five_after_writing_snapshots() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[background]\na = 1.0\nr = 2.0\n\n[simulation]\nl = 40.0\ndx = 0.1\n").unwrap();
    let out = dir.path().join("out");
    assert_eq!(nnls(&out, &["--config", cfg.to_str().unwrap(), "--t-list", "5,14", "simulate"]), 5);
    let s = json(&out.join("simulate_summary.json"));
    let t_last = s["blow_up"]["t_last"].as_f64().unwrap();
    assert!(t_last > 10.0 && t_last < 13.0);
    assert_eq!(s["snapshot_times"].as_array().unwrap().len(), 1);
    assert!(out.join("snapshots/snapshot_000.csv").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[background]\na = 1.0\nr = 2.0\nbogus = 3\n").unwrap();
    assert_eq!(nnls(dir.path(), &["--config", cfg.to_str().unwrap(), "zeros"]), 2);
}

#[test]
fn sampled_profile_runs_through_zeros_and_compare() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("x,re,im\n");
    let n = 701;
    for i in 0..n {
        let x = -3.0 + 7.0 * i as f64 / (n - 1) as f64;
        let s = ((x - 1.0) / 2.0).clamp(0.0, 1.0);
        let q = s * s * (3.0 - 2.0 * s);
        csv.push_str(&format!("{x},{q},0\n"));
    }
    fs::write(dir.path().join("p.csv"), csv).unwrap();
    fs::write(dir.path().join("p.toml"), "a = 1.0\nr = 2.0\nx_min = -3.0\nx_max = 4.0\n").unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "[profile]\ncsv = \"p.csv\"\nsidecar = \"p.toml\"\n\n[grid]\nxi = \"0.3:0.6:2\"\nt = [1.0, 2.0]\n\n[simulation]\nl = 30.0\ndx = 0.1\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("c.toml");
    assert_eq!(nnls(&out, &["--config", cfg.to_str().unwrap(), "zeros"]), 0);
    let z = json(&out.join("zeros.json"));
    assert!(z["n"].as_u64().unwrap() >= 1);
    assert_eq!(nnls(&out, &["--config", cfg.to_str().unwrap(), "compare"]), 0);
    let r = json(&out.join("error_report.json"));
    assert_eq!(r["records"].as_array().unwrap().len(), 4);
}
