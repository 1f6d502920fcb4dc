//! Randomised checks of the discrete operators: Leray projection, skew
//! symmetry of the advection form, the vorticity identity, Parseval, the grid
//! round trip and semigroup composition.
//!
//! cargo run --release --example spectral_identities -- [N] [fields]

use stochastic_ns2d::spectral::property_suite;

fn main() -> stochastic_ns2d::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(32);
    let count: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(50);

    println!("{:<24} {:>12} {:>10}  ok", "identity", "worst", "tol");
    for c in property_suite(n, 2.0 * std::f64::consts::PI, count, 1)? {
        println!("{:<24} {:>12.3e} {:>10.0e}  {}", c.name, c.worst, c.tolerance, c.pass);
    }
    Ok(())
}
