use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use svi2r::bifurcation::{beta_star, Strain};
use svi2r::calibration::{generate_synthetic, REFERENCE_OPTIMUM};
use svi2r::odeint::{integrate, IntegratorConfig};
use svi2r::{ModelParameters, State};
use tempfile::TempDir;

fn svi2r(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svi2r")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", out]);
    svi2r(&all)
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn peaks(dir: &Path, key: &str, values: &[f64]) -> Vec<(f64, f64)> {
    let p = json(dir.join("peaks.json"));
    values
        .iter()
        .map(|v| {
            let e = &p[format!("{key}={v}")];
            (e["t_peak"].as_f64().unwrap(), e["value_peak"].as_f64().unwrap())
        })
        .collect()
}

#[test]
fn help_lists_defaults() {
    for args in [&["--help"][..], &["simulate", "--help"][..]] {
        let o = svi2r(args);
        assert!(o.status.success());
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.contains("beta1") && text.contains("0.000000001167817614"), "{text}");
        assert!(text.contains("26195740"));
        assert!(text.contains("Exit status"));
    }
}

#[test]
fn efficacy_sweep_delays_and_lowers_the_strain2_peak() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["simulate", "--sweep", "vaccine_efficacy=0,0.7,0.8,0.9", "--column", "I2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p = peaks(dir.path(), "vaccine_efficacy", &[0.0, 0.7, 0.8, 0.9]);
    for w in p.windows(2) {
        assert!(w[1].0 > w[0].0, "{p:?}");
        assert!(w[1].1 < w[0].1, "{p:?}");
    }
    for v in ["0", "0.7", "0.8", "0.9"] {
        assert!(dir.path().join(format!("trajectory_vaccine_efficacy_{v}.csv")).exists());
    }
}

#[test]
fn vaccination_sweep_lowers_the_strain2_peak() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["simulate", "--sweep", "vaccination_rate=0,0.012,0.09,0.9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p = peaks(dir.path(), "vaccination_rate", &[0.0, 0.012, 0.09, 0.9]);
    for w in p.windows(2) {
        assert!(w[1].1 < w[0].1, "{p:?}");
    }
}

#[test]
fn plain_simulation_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["simulate", "--t-end", "60"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = IntegratorConfig { t_end: 60.0, ..IntegratorConfig::default() };
    let expected = integrate(&ModelParameters::default(), &State::reference_initial(), &cfg).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("trajectory.csv")).unwrap(), expected.to_csv_string());
    assert!(json(dir.path().join("peaks.json"))["baseline"]["t_peak"].is_number());
}

#[test]
fn svg_output_is_byte_identical_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["simulate", "--sweep", "vaccine_efficacy=0,0.9", "--svg", "--t-end", "100"];
    assert!(run_in(a.path(), &args).status.success());
    assert!(run_in(b.path(), &args).status.success());
    let sa = fs::read(a.path().join("plot_I2.svg")).unwrap();
    assert!(!sa.is_empty());
    assert_eq!(sa, fs::read(b.path().join("plot_I2.svg")).unwrap());
}

#[test]
fn seeded_cases_are_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["simulate", "--t-end", "20", "--cases", "20", "--noise", "0.05", "--seed", "7"];
    assert!(run_in(a.path(), &args).status.success());
    assert!(run_in(b.path(), &args).status.success());
    let ca = fs::read_to_string(a.path().join("cases.csv")).unwrap();
    assert_eq!(ca, fs::read_to_string(b.path().join("cases.csv")).unwrap());
    assert_eq!(ca.lines().count(), 21);
}

#[test]
fn analyze_defaults() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["analyze"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = json(dir.path().join("analysis.json"));
    let r = &a["reproduction_numbers"]["result"];
    let (r01, r02) = (r["r01"].as_f64().unwrap(), r["r02"].as_f64().unwrap());
    assert!(r01 < 1.0 && 1.0 < r02, "{r01} {r02}");
    assert_eq!(a["stability"]["result"]["disease_free"]["classification"], "Unstable");
    assert_eq!(a["equilibria"]["status"], "ok");
    assert!(a["equilibria"]["result"]["endemic"].is_object());
    for key in ["sensitivity", "bifurcation_strain_1", "bifurcation_strain_2"] {
        assert_eq!(a[key]["status"], "ok", "{key}");
    }
}

#[test]
fn weaker_strain2_leaves_a_stable_disease_free_point() {
    let dir = TempDir::new().unwrap();
    let beta2 = format!("beta2={}", ModelParameters::default().beta2 * 0.3);
    let o = run_in(dir.path(), &["analyze", "--param", &beta2]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = json(dir.path().join("analysis.json"));
    assert_eq!(a["stability"]["result"]["disease_free"]["classification"], "LocallyAsymptoticallyStable");
    assert!(a["equilibria"]["result"]["endemic"].is_null());
}

#[test]
fn threshold_transmission_is_marginal() {
    let mut p = ModelParameters::default();
    p.beta2 *= 0.3;
    p.beta1 = beta_star(&p, Strain::One).unwrap();
    let dir = TempDir::new().unwrap();
    let b1 = format!("beta1={:e}", p.beta1);
    let b2 = format!("beta2={:e}", p.beta2);
    let o = run_in(dir.path(), &["equilibria", "--param", &b1, "--param", &b2]);
    assert!(o.status.success(), "{}", stderr(&o));
    let e = json(dir.path().join("equilibria.json"));
    assert_eq!(e["stability"]["disease_free"]["classification"], "Marginal");
}

fn write_cases(dir: &Path, days: u32) -> std::path::PathBuf {
    let series =
        generate_synthetic(&ModelParameters::default(), &State::reference_initial(), days, 0.0, 0).unwrap();
    let path = dir.join("cases.csv");
    let mut f = fs::File::create(&path).unwrap();
    series.write_csv(&mut f).unwrap();
    path
}

#[test]
fn fit_recovers_the_generating_parameters() {
    let dir = TempDir::new().unwrap();
    let data = write_cases(dir.path(), 43);
    let o = run_in(dir.path(), &["fit", "--data", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f = json(dir.path().join("fit.json"));
    assert_eq!(f["converged"], true);
    let fitted = f["fitted"].as_array().unwrap();
    for (name, truth) in REFERENCE_OPTIMUM {
        let got = fitted.iter().find(|e| e[0] == name.key()).unwrap()[1].as_f64().unwrap();
        assert!(((got - truth) / truth).abs() < 0.01, "{} {got} vs {truth}", name.key());
    }
    let csv = fs::read_to_string(dir.path().join("fit.csv")).unwrap();
    assert!(csv.starts_with("day,observed,predicted\n"));
    assert_eq!(csv.lines().count(), 44);
}

#[test]
fn fit_with_nothing_free_is_a_single_evaluation() {
    let dir = TempDir::new().unwrap();
    let data = write_cases(dir.path(), 10);
    let o = run_in(dir.path(), &["fit", "--data", data.to_str().unwrap(), "--free", "none"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f = json(dir.path().join("fit.json"));
    assert!(f["fitted"].as_array().unwrap().is_empty());
    assert!(f["objective"].as_f64().unwrap() < 1e-6);
}

#[test]
fn non_monotone_days_are_an_input_error() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "day,observed\n0,10\n2,12\n1,11\n").unwrap();
    let o = run_in(dir.path(), &["fit", "--data", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn bad_parameter_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["analyze", "--param", "beta9=1"][..],
        &["analyze", "--param", "vaccine_efficacy=2"][..],
        &["analyze", "--param", "beta1"][..],
        &["analyze", "--sweep", "beta1=1e-9,2e-9"][..],
    ] {
        let o = run_in(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn unwritable_output_directory_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = run_in(&blocker.join("sub"), &["sensitivity"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn config_file_is_merged_under_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"parameters": {"beta2": 1e-9}, "integrator": {"t_end": 10}}"#).unwrap();
    let o = run_in(dir.path(), &["simulate", "--config", cfg.to_str().unwrap(), "--param", "beta2=2e-9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let last: f64 = traj.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(last, 10.0);

    fs::write(&cfg, r#"{"paramters": {}}"#).unwrap();
    let o = run_in(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
