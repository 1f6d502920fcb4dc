use std::path::Path;
use std::process::Command;

use stochastic_ns2d::harness::{self, RunConfig, RunContext, Suite};
use stochastic_ns2d::Error;

const SMALL: &str = r#"
[simulation]
n = 16
nu = 0.1
lambda = 0.5
dt = 0.02
t_end = 4.0
output_every = 5
checkpoint_every = 100
seed = 3

[noise]
kind = "finite_band"
modes = 4
q = 0.01

[statistics]
moment_orders = [2]
batches = 4
"#;

fn ctx(dir: &Path) -> RunContext {
    RunContext {
        out_dir: dir.to_path_buf(),
        threads: 1,
    }
}

fn schema_lines(dir: &Path) -> usize {
    let mut n = 0;
    for entry in walk(dir) {
        if entry.extension().is_some_and(|e| e == "csv") {
            let text = std::fs::read_to_string(&entry).unwrap();
            assert!(text.starts_with("# schema: "), "{}", entry.display());
            n += 1;
        }
    }
    n
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let e = "spectra".parse::<Suite>().unwrap_err();
    assert!(matches!(e, Error::Usage(_)));
    assert_eq!(e.exit_code(), 1);
    for s in Suite::ALL {
        assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
    }
}

#[test]
fn empty_glob_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml_str(SMALL).unwrap();
    let pattern = dir.path().join("nothing_*.bin");
    let e = harness::structure(&cfg, pattern.to_str().unwrap(), &ctx(dir.path())).unwrap_err();
    assert!(matches!(e, Error::Usage(_)), "{e}");
}

#[test]
fn identities_need_enough_batches() {
    let cfg = RunConfig::from_toml_str(SMALL).unwrap();
    let e = harness::verify_suite(&cfg, Suite::Identities).unwrap_err();
    assert!(matches!(e, Error::InsufficientData(_)), "{e}");
    let dir = tempfile::tempdir().unwrap();
    let out = harness::verify(&cfg, &[Suite::Identities], &ctx(dir.path())).unwrap();
    assert_eq!(out.exit_code, 3);
    assert_eq!(schema_lines(dir.path()), 1);
}

#[test]
fn symmetry_suite_reports_degenerate_coupling() {
    let mut cfg = RunConfig::from_toml_str(SMALL).unwrap();
    cfg.simulation.lambda = 0.0;
    let rows = harness::verify_suite(&cfg, Suite::Symmetry).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(!rows[0].pass);
}

#[test]
fn simulate_then_structure_from_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml_str(SMALL).unwrap();
    let out = harness::simulate(&cfg, &ctx(dir.path())).unwrap();
    assert_eq!(out.exit_code, 0, "{}", out.summary);
    assert!(dir.path().join(harness::checkpoint_name(200)).exists());
    assert_eq!(schema_lines(dir.path()), 5);

    let again = dir.path().join("structure");
    let pattern = dir.path().join("checkpoints").join("*.bin");
    let out = harness::structure(&cfg, pattern.to_str().unwrap(), &ctx(&again)).unwrap();
    assert!(again.join("structure.csv").exists());
    assert!(again.join("rescaling.csv").exists());
    assert!(matches!(out.exit_code, 0 | 3), "{}", out.summary);
}

#[test]
fn single_coupling_sweep() {
    let text = format!("{SMALL}\n[sweep]\nlambdas = [0.2]\nreplicas = 2\n");
    let cfg = RunConfig::from_toml_str(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = harness::sweep(&cfg, &ctx(dir.path())).unwrap();
    assert_eq!(out.exit_code, 0, "{}", out.summary);
    assert!(dir.path().join("runs.csv").exists());
    assert!(dir.path().join("convergence_distances.csv").exists());
}

#[test]
fn sweep_without_section_is_rejected() {
    let cfg = RunConfig::from_toml_str(SMALL).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert!(harness::sweep(&cfg, &ctx(dir.path())).is_err());
}

#[test]
fn binary_reads_out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("small.toml");
    std::fs::write(&cfg_path, SMALL).unwrap();
    let out = dir.path().join("from-env");
    let status = Command::new(env!("CARGO_BIN_EXE_ns2d"))
        .args(["--config", cfg_path.to_str().unwrap(), "--seed-override", "9", "simulate"])
        .env("NS2D_OUT_DIR", &out)
        .env("RUST_LOG", "warn")
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 9"), "{manifest}");

    let status = Command::new(env!("CARGO_BIN_EXE_ns2d"))
        .args(["--out-dir", out.to_str().unwrap(), "verify", "--suite", "bogus"])
        .env("RUST_LOG", "off")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
