//! The combination `u + lambda w` of the coupled pair obeys a single forced
//! Navier-Stokes equation, and `(u, lambda w)` obeys the symmetric system.
//! Both are integrated alongside the pair on shared increments.

use stochastic_ns2d::dynamics::{reduction_oracle, symmetric_form_oracle, InitialCondition, SimulationConfig};

fn main() -> stochastic_ns2d::Result<()> {
    let base = SimulationConfig {
        n: 32,
        nu: 0.05,
        dt: 0.01,
        seed: 3,
        initial_u: InitialCondition::Random {
            energy: 0.5,
            slope: 1.5,
            seed: 10,
        },
        initial_w: InitialCondition::Random {
            energy: 0.5,
            slope: 1.5,
            seed: 11,
        },
        ..Default::default()
    };
    for lambda in [-1.0, 0.5, 1.0, 2.0] {
        let cfg = SimulationConfig { lambda, ..base.clone() };
        let red = reduction_oracle(&cfg, 300)?;
        let sym = symmetric_form_oracle(&cfg, 300)?;
        println!("lambda {lambda:>5}: reduction {red:.2e}  symmetric form {sym:.2e}");
    }
    Ok(())
}
