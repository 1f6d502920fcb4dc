//! Checkpoint a run halfway, resume from the file and compare with the
//! uninterrupted run bit for bit.

use stochastic_ns2d::dynamics::{Simulation, SimulationConfig};
use stochastic_ns2d::forcing::NoiseSpec;
use stochastic_ns2d::harness::Checkpoint;

fn main() -> stochastic_ns2d::Result<()> {
    let cfg = SimulationConfig {
        n: 32,
        nu: 0.05,
        lambda: 0.7,
        dt: 0.02,
        t_end: 20.0,
        noise: NoiseSpec::lowest_modes(4, 0.01),
        seed: 9,
        ..Default::default()
    };
    let dir = std::env::temp_dir().join("ns2d-checkpoint-example");
    std::fs::create_dir_all(&dir).map_err(|e| stochastic_ns2d::Error::io(&dir, e))?;
    let path = dir.join("half.bin");

    let half = cfg.total_steps() / 2;
    let mut full = Simulation::new(&cfg)?;
    for _ in 0..half {
        full.step()?;
    }
    Checkpoint::capture(&full).write(&path)?;
    for _ in half..cfg.total_steps() {
        full.step()?;
    }

    let ckpt = Checkpoint::read(&path)?;
    println!("resuming at step {} (t = {})", ckpt.header.step, ckpt.header.t);
    let mut resumed = ckpt.resume(&cfg)?;
    while resumed.step_index() < cfg.total_steps() {
        resumed.step()?;
    }
    let same = resumed.state() == full.state();
    println!("final states identical: {same}");

    let other = SimulationConfig { lambda: 0.3, ..cfg };
    if let Err(e) = ckpt.resume(&other) {
        println!("resume with another coupling: {e}");
    }
    Ok(())
}
