//! Structure functions and scaling exponents. A synthetic Gaussian field with
//! a prescribed spectrum supplies the reference exponent; snapshots of a short
//! simulation give the measured tables.

use stochastic_ns2d::dynamics::{BurnIn, Simulation, SimulationConfig};
use stochastic_ns2d::forcing::NoiseSpec;
use stochastic_ns2d::spectral::Lattice;
use stochastic_ns2d::statistics::{
    scaling_fit, structure_functions, synthetic_field, FitRange, StructureConfig, StructureTable,
};

fn main() -> stochastic_ns2d::Result<()> {
    // the fit window needs about three octaves clear of the dealiasing cutoff
    let n = 1024;
    let lat = Lattice::new(n, 2.0 * std::f64::consts::PI)?;
    let h = lat.spacing();
    let hurst = 1.0 / 3.0;
    let cfg = StructureConfig {
        orders: vec![2],
        separations: Some((0..=18).map(|i| 2f64.powf(i as f64 / 2.0).round() * h).collect()),
        ..Default::default()
    };
    let mut table = StructureTable::new("u", &cfg, n, h);
    for seed in 0..4 {
        table.add_field(&synthetic_field(&lat, hurst, 1.0, seed));
    }
    let range = FitRange {
        l_min: lat.length() / 64.0,
        l_max: lat.length() / 8.0,
        absolute: true,
    };
    let fit = scaling_fit(&table, &range)?;
    println!(
        "synthetic H = {hurst:.3}: zeta_2 = {:.3} (expected {:.3})",
        fit.zeta(2).unwrap_or(f64::NAN),
        2.0 * hurst
    );

    let sim_cfg = SimulationConfig {
        n: 64,
        nu: 0.01,
        lambda: 0.5,
        dt: 0.02,
        t_end: 200.0,
        noise: NoiseSpec::lowest_modes(4, 0.01),
        burn_in: BurnIn::Fixed { duration: 100.0 },
        output_every: 250,
        seed: 2,
        ..Default::default()
    };
    let mut sim = Simulation::new(&sim_cfg)?;
    let mut snapshots = Vec::new();
    let mut keep = |s: &stochastic_ns2d::dynamics::PairState| {
        snapshots.push(s.clone());
        Ok(())
    };
    sim.integrate(&mut [&mut keep], &mut |_| Ok(()))?;
    let (u_table, w_table) = structure_functions(&snapshots, &StructureConfig::default())?;
    println!("{} snapshots", snapshots.len());
    for (name, table) in [("u", &u_table), ("w", &w_table)] {
        let series = table.series(2)?;
        for (l, signed, abs) in series.iter().step_by(4) {
            println!("  S2_{name}({l:.3}) = {signed:.4e}  |.| {abs:.4e}");
        }
        match scaling_fit(table, &FitRange::default_for(64, sim.integrator().lattice().spacing())) {
            Ok(fit) => {
                for o in &fit.orders {
                    println!("  {name}: zeta_{} = {:.3} +- {:.3} (r2 {:.3})", o.p, o.zeta, o.stderr, o.r2);
                }
            }
            Err(e) => println!("  {name}: fit refused: {e}"),
        }
    }
    Ok(())
}
