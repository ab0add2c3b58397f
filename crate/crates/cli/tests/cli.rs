//! End-to-end checks of the command-line surface: exit codes, output
//! formats, provenance headers, and rerun determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dust")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .env_remove("DUST_OUTPUT_DIR")
        .output()
        .expect("spawn dust")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dust-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const MEASURED_LEVELS: &str = "index,energy_mhz,uncertainty_mhz\n\
    1,4528.52,0\n2,8872.74,0\n3,13016.8,0\n4,16939.9,0\n5,20613,0\n";

const REGISTRY: &str = "id,omega_s_ghz,origin,chi_mhz,linewidth_mhz\n\
    ro,9.0342,electromagnetic,-1.23,7.20\nem2,15.07,electromagnetic,0.4,\n";

#[test]
fn unknown_flag_exits_2() {
    let dir = tempdir("usage");
    let out = run_in(&dir, &["eigen", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_subcommand_exits_2() {
    let dir = tempdir("nosub");
    let out = run_in(&dir, &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_spectrum_happy_path() {
    let dir = tempdir("fit");
    std::fs::write(dir.join("levels.csv"), MEASURED_LEVELS).unwrap();
    let out = run_in(
        &dir,
        &["fit-spectrum", "--levels", "levels.csv", "--model", "transmon", "--out", "fit.txt"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("fit.txt")).unwrap();
    assert!(text.contains("# config_hash = "));
    assert!(text.contains("ej_ghz = 16.27"), "{text}");
    assert!(text.contains("ec_ghz = 0.170"));
    assert!(text.contains("residuals_mhz = ["));
}

#[test]
fn fit_spectrum_missing_file_exits_2() {
    let dir = tempdir("fit-missing");
    let out = run_in(&dir, &["fit-spectrum", "--levels", "nope.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eigen_reproduces_known_levels() {
    let dir = tempdir("eigen");
    let out = run_in(
        &dir,
        &["eigen", "--ej", "16.2856", "--ec", "0.17013", "--ng", "0.0", "--count", "6"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    let e1: f64 = text
        .lines()
        .find(|l| l.starts_with("1,"))
        .and_then(|l| l.split(',').nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert!((e1 - 4.531057).abs() < 1e-4, "E1 = {e1}");
}

#[test]
fn sweep_outputs_are_deterministic() {
    let dir = tempdir("sweep");
    let args = [
        "sweep", "--ej", "16.2856", "--ec", "0.17013", "--ng", "0.25", "--omega-d", "8.02",
        "--xi2-max", "0.05", "--points", "6", "--overlap-levels", "4", "--out", "a.csv",
    ];
    let out1 = run_in(&dir, &args);
    assert_eq!(out1.status.code(), Some(0), "{}", String::from_utf8_lossy(&out1.stderr));
    let mut args2 = args;
    args2[args.len() - 1] = "b.csv";
    let out2 = run_in(&dir, &args2);
    assert_eq!(out2.status.code(), Some(0));
    let a = std::fs::read(dir.join("a.csv")).unwrap();
    let b = std::fs::read(dir.join("b.csv")).unwrap();
    assert_eq!(a, b, "reruns must be byte-identical");
}

#[test]
fn two_mode_emits_expected_lines() {
    let dir = tempdir("two-mode");
    let out = run_in(
        &dir,
        &[
            "two-mode", "--ej", "16.40", "--ec", "0.1695", "--omega-r", "9.029", "--g", "0.153",
            "--window-lo", "10.2", "--window-hi", "11.4",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("21,"), "dressed table missing");
    // hybridized pair stays unassigned
    let unassigned: Vec<&str> = text.lines().filter(|l| l.contains("unassigned")).collect();
    assert!(unassigned.iter().any(|l| l.starts_with("21,")));
    assert!(unassigned.iter().any(|l| l.starts_with("22,")));
    // the 1→4 + resonator line near 10.735 GHz
    assert!(
        text.lines().any(|l| l.starts_with("1,4,3,1,2,ro,10.73")),
        "missing squeezing line:\n{text}"
    );
}

#[test]
fn attribute_matches_known_feature() {
    let dir = tempdir("attr");
    std::fs::write(dir.join("registry.csv"), REGISTRY).unwrap();
    let out = run_in(
        &dir,
        &[
            "attribute", "--ej", "16.2856", "--ec", "0.17013", "--registry", "registry.csv",
            "--intercept", "5.271", "--direction", "decay", "--initial", "1",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().any(|l| l.contains(",-1,1,2,em2,")), "{text}");
}

#[test]
fn landscape_config_validation_names_offending_key() {
    let dir = tempdir("landscape-bad");
    std::fs::write(
        dir.join("run.toml"),
        "[circuit]\nej_ghz = 16.2856\nec_ghz = 0.17013\n\
         [drive]\nomega_d_ghz = { start = 8.1, stop = 7.9, points = 5 }\n\
         xi2 = { start = 0.0, stop = 0.1, points = 4 }\n",
    )
    .unwrap();
    let out = run_in(&dir, &["landscape", "--config", "run.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("omega_d_ghz"), "stderr: {err}");
}

#[test]
fn landscape_runs_and_is_deterministic() {
    let dir = tempdir("landscape");
    std::fs::write(
        dir.join("run.toml"),
        "[circuit]\nej_ghz = 16.2856\nec_ghz = 0.17013\n\
         [drive]\nomega_d_ghz = { start = 7.95, stop = 8.05, points = 4 }\n\
         xi2 = { start = 0.0, stop = 0.15, points = 6 }\nng_samples = 1\n\
         [output]\ndir = \"out\"\n",
    )
    .unwrap();
    let out = run_in(&dir, &["landscape", "--config", "run.toml", "--plot"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["theta.csv", "theta_avg.csv", "failures.csv", "theta_avg.svg"] {
        assert!(dir.join("out").join(f).exists(), "missing {f}");
    }
    let first = std::fs::read(dir.join("out/theta.csv")).unwrap();
    let out2 = run_in(&dir, &["landscape", "--config", "run.toml"]);
    assert_eq!(out2.status.code(), Some(0));
    let second = std::fs::read(dir.join("out/theta.csv")).unwrap();
    assert_eq!(first, second, "landscape rerun must be byte-identical");
    let text = String::from_utf8_lossy(&first);
    assert!(text.starts_with("# dust-cli"));
    assert!(text.contains("# config_hash = "));
}

#[test]
fn output_dir_env_override() {
    let dir = tempdir("envdir");
    std::fs::write(
        dir.join("run.toml"),
        "[circuit]\nej_ghz = 16.2856\nec_ghz = 0.17013\n\
         [drive]\nomega_d_ghz = { start = 7.95, stop = 8.05, points = 4 }\n\
         xi2 = { start = 0.0, stop = 0.1, points = 4 }\nng_samples = 1\n\
         [output]\ndir = \"ignored\"\n",
    )
    .unwrap();
    let out = Command::new(bin())
        .args(["landscape", "--config", "run.toml"])
        .current_dir(&dir)
        .env("DUST_OUTPUT_DIR", "envout")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("envout/theta_avg.csv").exists());
    assert!(!dir.join("ignored").exists());
}

#[test]
fn evolve_writes_population_trace() {
    let dir = tempdir("evolve");
    let out = run_in(
        &dir,
        &[
            "evolve", "--ej", "16.2856", "--ec", "0.17013", "--ng", "0.25", "--omega-d", "8.45",
            "--xi2", "0.02", "--initial", "0", "--duration-ns", "5", "--samples", "10",
            "--out", "trace.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert!(text.contains("time_ns,p0,p1"));
    assert!(text.contains("# norm_defect"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 12);
}

#[test]
fn classify_pipeline_runs() {
    let dir = tempdir("classify");
    std::fs::write(dir.join("registry.csv"), REGISTRY).unwrap();
    // tiny synthetic measured landscape with one sloped ridge toward
    // 9.707 GHz and a tiny theta map with no ridges
    let mut measured = String::from("omega_d_ghz,stark_norm,prob\n");
    let n_w = 60;
    let n_s = 8;
    for si in 0..n_s {
        let s = 0.2 * si as f64 / (n_s - 1) as f64;
        for wi in 0..n_w {
            let w = 9.4 + 0.6 * wi as f64 / (n_w - 1) as f64;
            let center = 9.707 - 0.0921 * s;
            let p = 0.8 * (-((w - center) / 0.02f64).powi(2)).exp();
            measured.push_str(&format!("{w},{s},{p}\n"));
        }
    }
    std::fs::write(dir.join("measured.csv"), measured).unwrap();
    let mut theta = String::from("omega_d_ghz,xi2,theta_avg\n");
    for wi in 0..5 {
        for ai in 0..5 {
            theta.push_str(&format!("{},{},0.0\n", 7.9 + 0.05 * wi as f64, 0.1 * ai as f64));
        }
    }
    std::fs::write(dir.join("theta_avg.csv"), theta).unwrap();
    let out = run_in(
        &dir,
        &[
            "classify", "--ej", "16.2856", "--ec", "0.17013", "--measured", "measured.csv",
            "--theta-avg", "theta_avg.csv", "--registry", "registry.csv", "--initial", "1",
            "--prominence", "0.2", "--out", "report.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    let row = text.lines().find(|l| l.starts_with("C,")).expect("a C-labeled feature");
    assert!(row.contains("l=1 m=1 n=2 mode=em2"), "{row}");
}
