//! Drive the harness from a TOML configuration, as the `ns2d` binary does,
//! and list the artifacts recorded in the manifest.
//!
//! cargo run --release --example run_from_config -- [config.toml] [out-dir]

use std::path::PathBuf;

use stochastic_ns2d::harness::{self, RunConfig, RunContext, RunManifest, Suite};

fn main() -> stochastic_ns2d::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(p) => RunConfig::from_path(p.as_ref())?,
        None => RunConfig::from_toml_str(
            r#"
            [simulation]
            n = 32
            nu = 0.05
            lambda = 0.5
            dt = 0.02
            t_end = 40.0
            output_every = 10
            checkpoint_every = 500

            [noise]
            kind = "finite_band"
            modes = 4
            q = 0.001
            "#,
        )?,
    };
    let out_dir: PathBuf = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("ns2d-example"));
    let ctx = RunContext {
        out_dir: out_dir.clone(),
        threads: rayon::current_num_threads(),
    };

    let outcome = harness::simulate(&cfg, &ctx)?;
    println!("simulate: exit {} ({})", outcome.exit_code, outcome.summary);
    let manifest = RunManifest::read(&out_dir.join("manifest.json"))?;
    for a in &manifest.artifacts {
        println!("  {}  {}", &a.sha256[..12], a.path);
    }

    let verify_ctx = RunContext {
        out_dir: out_dir.join("verify"),
        ..ctx
    };
    let outcome = harness::verify(&cfg, &[Suite::Spectral, Suite::Reduction], &verify_ctx)?;
    println!("verify: exit {} ({})", outcome.exit_code, outcome.summary);
    Ok(())
}
