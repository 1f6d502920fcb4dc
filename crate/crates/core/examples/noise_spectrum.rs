//! Covariance spectra of the additive forcing and the exact one-step OU
//! factors on each forced mode.

use stochastic_ns2d::forcing::{spectrum_report, NoiseModel, NoiseSpec, OuFactors};
use stochastic_ns2d::spectral::Lattice;

fn main() -> stochastic_ns2d::Result<()> {
    let lat = Lattice::new(32, 2.0 * std::f64::consts::PI)?;
    let (nu, dt) = (0.05, 0.02);

    let band = NoiseModel::new(&lat, NoiseSpec::lowest_modes(4, 0.001))?;
    let rep = spectrum_report(&band);
    println!("finite band: TrQ = {:.4e}, Tr(AQ) = {:.4e}", rep.trace_q, rep.trace_aq);
    let ou = OuFactors::new(&band, nu, dt)?;
    for row in &rep.rows {
        let idx = lat.index_of(row.k).expect("forced mode is on the lattice");
        println!(
            "  k = {:?}  gamma = {:.1}  q = {:.1e}  decay = {:.6}  sigma = {:.3e}",
            row.k, row.gamma, row.q, ou.decay[idx], ou.sigma[idx]
        );
    }

    let power = NoiseModel::new(
        &lat,
        NoiseSpec::PowerLaw {
            amplitude: 1e-3,
            exponent: 1.5,
        },
    )?;
    let rep = spectrum_report(&power);
    println!(
        "power law: {} modes, TrQ = {:.4e}, Tr(AQ) = {:.4e}, alpha0 = {:?}, continuum Tr(AQ) diverges: {}",
        rep.rows.len(),
        rep.trace_q,
        rep.trace_aq,
        rep.alpha0,
        rep.trace_aq_diverges_in_continuum
    );

    match NoiseModel::new(
        &lat,
        NoiseSpec::PowerLaw {
            amplitude: 1e-3,
            exponent: 0.9,
        },
    ) {
        Ok(_) => println!("exponent 0.9 accepted"),
        Err(e) => println!("exponent 0.9 rejected: {e}"),
    }
    Ok(())
}
