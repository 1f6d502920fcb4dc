use proptest::prelude::*;

use stochastic_ns2d::dynamics::{BurnIn, Simulation, SimulationConfig};
use stochastic_ns2d::forcing::NoiseSpec;
use stochastic_ns2d::spectral::{Lattice, SpectralField};
use stochastic_ns2d::statistics::{
    enstrophy_identity_check, identity_panel, p_moment_identity_check, scaling_fit, Accumulator, Balance,
    BatchPolicy, FitRange, MomentForm, StatsObserver, StructureConfig, StructureTable,
};
use stochastic_ns2d::Error;

fn names() -> Vec<String> {
    vec!["a".into(), "b".into()]
}

fn filled(samples: &[(f64, f64)], policy: BatchPolicy) -> Accumulator {
    let mut acc = Accumulator::new(names(), policy);
    for &(a, b) in samples {
        acc.push(&[a, b]);
    }
    acc
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merge_matches_single_pass(
        samples in prop::collection::vec((-10.0..10.0f64, 0.0..5.0f64), 1..400),
        cut in 0.0..1.0f64,
        count in 2usize..8,
    ) {
        let policy = BatchPolicy::Count { count };
        let split = (cut * samples.len() as f64) as usize;
        let whole = filled(&samples, policy);
        let mut left = filled(&samples[..split], policy);
        left.merge(&filled(&samples[split..], policy)).unwrap();
        prop_assert_eq!(left.count(), whole.count());
        for n in ["a", "b"] {
            prop_assert!(close(left.mean(n).unwrap(), whole.mean(n).unwrap()));
            prop_assert!(close(left.variance(n).unwrap(), whole.variance(n).unwrap()));
        }
        let nb = left.batch_means().len();
        prop_assert!(nb < 2 * count || nb == 0 || left.batch_len() == 1);
    }

    #[test]
    fn means_ignore_observation_order(
        samples in prop::collection::vec((-10.0..10.0f64, 0.0..5.0f64), 1..200),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = samples.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = filled(&samples, BatchPolicy::default());
        let b = filled(&shuffled, BatchPolicy::default());
        for n in ["a", "b"] {
            prop_assert!(close(a.mean(n).unwrap(), b.mean(n).unwrap()));
        }
    }
}

#[test]
fn mismatched_panels_do_not_merge() {
    let mut a = Accumulator::new(names(), BatchPolicy::default());
    let b = Accumulator::new(vec!["a".into()], BatchPolicy::default());
    assert!(a.merge(&b).is_err());
}

#[test]
fn empty_accumulator_has_no_mean() {
    let a = Accumulator::new(names(), BatchPolicy::default());
    assert!(matches!(a.mean("a"), Err(Error::InsufficientData(_))));
}

fn short_run() -> (Accumulator, Balance) {
    let cfg = SimulationConfig {
        n: 16,
        nu: 0.1,
        lambda: 0.5,
        dt: 0.02,
        t_end: 60.0,
        noise: NoiseSpec::lowest_modes(4, 0.01),
        burn_in: BurnIn::Fixed { duration: 10.0 },
        output_every: 2,
        seed: 4,
        ..Default::default()
    };
    let mut sim = Simulation::new(&cfg).unwrap();
    let noise = sim.integrator().noise().clone();
    let mut obs = StatsObserver::new(identity_panel(&[2, 4]), &noise, cfg.lambda, BatchPolicy::Count { count: 10 });
    sim.integrate(&mut [&mut obs], &mut |_| Ok(())).unwrap();
    (obs.acc, Balance::new(&noise, cfg.nu))
}

#[test]
fn second_moment_identity_reduces_to_enstrophy_balance() {
    let (acc, bal) = short_run();
    let ens = enstrophy_identity_check(&acc, &bal, 0.1).unwrap();
    for form in [MomentForm::Ito, MomentForm::Stated] {
        let p2 = p_moment_identity_check(&acc, &bal, 2, form, 0.1).unwrap();
        assert_eq!(p2.lhs, ens.lhs, "{form:?}");
        assert!(close(p2.rhs, ens.rhs), "{form:?}: {} vs {}", p2.rhs, ens.rhs);
    }
}

#[test]
fn moment_order_below_two_is_rejected() {
    let (acc, bal) = short_run();
    assert!(matches!(
        p_moment_identity_check(&acc, &bal, 1, MomentForm::Ito, 0.1),
        Err(Error::Domain(_))
    ));
}

#[test]
fn constant_field_refuses_scaling_fit() {
    let lat = Lattice::new(32, 1.0).unwrap();
    let cfg = StructureConfig::default();
    let mut table = StructureTable::new("u", &cfg, 32, lat.spacing());
    table.add_field(&SpectralField::zeros(&lat));
    let fit = scaling_fit(&table, &FitRange::default_for(32, lat.spacing()));
    assert!(matches!(fit, Err(Error::Fit { .. })), "{fit:?}");
}
