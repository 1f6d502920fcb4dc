//! Long-time averages of the pair against the stationary enstrophy balance
//! and the Ito moment identities, with batch-means error bars.
//!
//! cargo run --release --example enstrophy_balance -- [T]

use stochastic_ns2d::dynamics::{BurnIn, Simulation, SimulationConfig};
use stochastic_ns2d::forcing::NoiseSpec;
use stochastic_ns2d::statistics::{
    enstrophy_identity_check, identity_panel, p_moment_identity_check, vorticity_moment_identity_check, Balance,
    BatchPolicy, MomentForm, StatsObserver,
};

fn main() -> stochastic_ns2d::Result<()> {
    let t_end: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(600.0);
    let cfg = SimulationConfig {
        n: 32,
        nu: 0.05,
        lambda: 0.5,
        dt: 0.02,
        t_end,
        noise: NoiseSpec::lowest_modes(4, 0.001),
        burn_in: BurnIn::Fixed { duration: 100.0 },
        output_every: 20,
        seed: 7,
        ..Default::default()
    };
    let mut sim = Simulation::new(&cfg)?;
    let noise = sim.integrator().noise().clone();
    let mut stats = StatsObserver::new(
        identity_panel(&[2, 4]),
        &noise,
        cfg.lambda,
        BatchPolicy::Count { count: 20 },
    );
    let summary = sim.integrate(&mut [&mut stats], &mut |_| Ok(()))?;
    println!("{} observations after {} burn-in steps", summary.observations, summary.burn_in_steps);

    let bal = Balance::new(&noise, cfg.nu);
    let reports = [
        enstrophy_identity_check(&stats.acc, &bal, 0.02)?,
        p_moment_identity_check(&stats.acc, &bal, 4, MomentForm::Ito, 0.05)?,
        p_moment_identity_check(&stats.acc, &bal, 4, MomentForm::Stated, 0.05)?,
        vorticity_moment_identity_check(&stats.acc, &bal, 2, MomentForm::Ito, 0.05)?,
    ];
    for r in &reports {
        println!(
            "{:<20} lhs {:.5e}  rhs {:.5e}  rel {:.3}  se {:.2e}  pass {}",
            r.name, r.lhs, r.rhs, r.rel_err, r.stderr, r.pass
        );
    }
    Ok(())
}
