use std::fs::{self, File};
use std::path::Path;
use std::process::{Command, Output};

use mmo_core::integrator::{milstein_path, Coords, SimConfig};
use mmo_core::io::read_trajectory_csv;
use mmo_core::model::NondimParams;
use mmo_core::normal_form::{repeated_spike_probability, stoch_nf_coeffs};

fn mmo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = mmo(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn analyze_reports_regimes_along_h() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(dir.path(), &["analyze", "--h-values", "0.86,0.88,0.9", "--csv", "a.csv"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].split_whitespace().eq([
        "alpha", "alpha_star", "h_star", "h_tilde", "delta", "gamma", "mu", "regime", "trace", "det", "eigenvalues"
    ]));
    assert!(lines[1].contains("hopf-unstable"));
    assert!(lines[2].contains("excitable"));
    assert!(lines[3].contains("far-stable"));

    let mut rdr = csv::Reader::from_path(dir.path().join("a.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 11);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[1][1], "0.360583");
}

#[test]
fn parameters_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!mmo(dir.path(), &["analyze", "--eps", "0.5"]).status.success());
    ok(dir.path(), &["analyze", "--eps", "0.5", "--allow-large-eps"]);
    assert!(!mmo(dir.path(), &["analyze", "--beta", "1.5"]).status.success());

    fs::write(
        dir.path().join("dim.json"),
        r#"{"r":1.0,"K":1.0,"p":1.0,"H":0.25,"b":0.05,"e":0.0125,"m":0.044,"zeta1":0.0,"zeta2":0.0}"#,
    )
    .unwrap();
    let text = ok(dir.path(), &["analyze", "--params", "dim.json"]);
    assert!(text.contains("excitable"), "{text}");
}

#[test]
fn simulate_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--h", "0.88", "--sigma", "0.015", "--t-end", "20", "--stride", "50", "--paths", "3", "--seed", "7"];
    ok(dir.path(), &[&args[..], &["--out", "all.csv"]].concat());
    ok(dir.path(), &[&args[..], &["--out-dir", "per"]].concat());

    let all = read_trajectory_csv(File::open(dir.path().join("all.csv")).unwrap()).unwrap();
    assert_eq!(all.len(), 3);
    let p = NondimParams::default().with_h(0.88).with_noise(0.015, 0.015);
    let start = all[0].states[0];
    for (i, rec) in all.iter().enumerate() {
        let seed = 7 + i as u64;
        assert_eq!(rec.seed, Some(seed));
        assert_eq!(rec.coords, Coords::Xy);
        let lib = milstein_path(&p, &SimConfig::new(20.0, seed, start).with_stride(50)).unwrap();
        assert_eq!(rec.states, lib.states);
        assert_eq!(rec.times, lib.times);

        let one = read_trajectory_csv(File::open(dir.path().join(format!("per/traj_seed{seed}.csv"))).unwrap()).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].seed, None);
        assert_eq!(one[0].states, rec.states);
    }
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn hist_writes_consistent_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(dir.path(), &["hist", "--h", "0.88", "--sigma", "0.015", "--paths", "6", "--t-end", "200", "--stride", "10"]);
    assert!(text.contains("mean N"));

    let summary: serde_json::Value = serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
    for key in ["mean", "std", "lambda0_tail", "lambda0_pgf", "sigma_count"] {
        assert!(summary.get(key).is_some(), "{key} missing");
    }
    let samples = summary["samples"].as_u64().unwrap();
    assert!(samples > 2);

    let n_rows = read(dir.path(), "n_samples.csv");
    assert_eq!(n_rows.lines().next().unwrap(), "seed,gap,N");
    assert_eq!(n_rows.lines().count() as u64, samples + 1);
    let zeros = n_rows.lines().skip(1).filter(|l| l.ends_with(",0")).count() as u64;
    assert_eq!(summary["sigma_count"].as_u64().unwrap(), zeros);

    let mut rdr = csv::Reader::from_path(dir.path().join("histogram.csv")).unwrap();
    assert!(rdr.headers().unwrap().iter().eq(["n", "count", "empirical_pmf", "geometric_pmf"]));
    let total: u64 = rdr.records().map(|r| r.unwrap()[1].parse::<u64>().unwrap()).sum();
    assert_eq!(total, samples);
}

/// Counting from written trajectories gives the same N samples as counting
/// during an inline run with the same seeds and stride.
#[test]
fn hist_from_files_equals_inline_run() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--h", "0.88", "--sigma", "0.015", "--t-end", "150", "--stride", "5", "--paths", "4", "--seed", "3"];
    ok(dir.path(), &[&["simulate"][..], &common, &["--out", "tr.csv"]].concat());
    ok(dir.path(), &["hist", "--input", "tr.csv", "--out-dir", "files"]);
    ok(dir.path(), &[&["hist"][..], &common, &["--out-dir", "inline"]].concat());
    assert_eq!(read(dir.path(), "files/n_samples.csv"), read(dir.path(), "inline/n_samples.csv"));
}

#[test]
fn nf_reports_kappa_and_simulates() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(dir.path(), &["nf", "--h", "0.88", "--sigma", "0.015", "--json"]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let c = stoch_nf_coeffs(&NondimParams::default().with_h(0.88).with_noise(0.015, 0.015)).unwrap();
    let sp = repeated_spike_probability(&c).unwrap();
    let close = |v: &serde_json::Value, x: f64| (v.as_f64().unwrap() - x).abs() <= 1e-14 * x.abs();
    assert!(close(&doc["kappa"], sp.kappa));
    assert!(close(&doc["phi_neg_kappa"], sp.prob));
    assert!(close(&doc["mu_hat"], c.mu_hat));
    assert!(doc["constants"]["alpha_star"].is_number());

    let doc: serde_json::Value =
        serde_json::from_str(&ok(dir.path(), &["nf", "--sigma-hat", "0", "--mu-hat", "0.1", "--json"])).unwrap();
    assert!(doc["kappa"].is_null());
    assert_eq!(doc["phi_neg_kappa"].as_f64(), Some(0.0));

    ok(dir.path(), &["nf", "--sigma", "0.015", "--simulate", "--t-end", "10", "--stride", "100", "--paths", "2", "--out", "nf.csv"]);
    let recs = read_trajectory_csv(File::open(dir.path().join("nf.csv")).unwrap()).unwrap();
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| r.coords == Coords::Lz && r.states[0] == [0.0, 0.5]));
}

#[test]
fn sweep_writes_grid_and_matrix() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["sweep", "--axis1", "mu:-0.01:0.02:3", "--axis2", "sigma:0.01:0.04:2", "--t-end", "30", "--seeds", "2", "--matrix", "m.dat", "--matrix-field", "phi"],
    );
    let s = read(dir.path(), "sweep.csv");
    let mut lines = s.lines();
    assert_eq!(lines.next().unwrap(), "axis1,axis2,h,mu,sigma1,sigma2,Sigma_mean,Sigma_std,phi_neg_kappa");
    assert_eq!(lines.count(), 6);
    let m = read(dir.path(), "m.dat");
    let rows: Vec<usize> = m.lines().map(|l| l.split(' ').count()).collect();
    assert_eq!(rows, vec![3; 4]);

    assert!(!mmo(dir.path(), &["sweep", "--axis1", "mu:0:1", "--axis2", "sigma:0.01:0.04:2"]).status.success());
    assert!(!mmo(dir.path(), &["sweep", "--axis1", "foo:0:1:2", "--axis2", "sigma:0.01:0.04:2"]).status.success());
}
