//! Randomised checks of the structural identities of the discretisation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;

use super::field::{project_leray, PhysicalField, SpectralField};
use super::lattice::Lattice;
use super::transform::{bilinear_b, grid_spectrum, transform_to_physical, transform_to_spectral};

/// Worst normalised defect of one identity over a batch of random fields.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub n: usize,
    pub fields: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
}

const TOLERANCES: [(&str, f64); 6] = [
    ("leray_idempotent", 1e-13),
    ("skew_symmetry", 1e-12),
    ("vorticity_identity", 1e-11),
    ("parseval", 1e-12),
    ("grid_round_trip", 1e-12),
    ("semigroup_composition", 1e-13),
];

fn random_field(lat: &std::sync::Arc<Lattice>, rng: &mut ChaCha8Rng) -> SpectralField {
    let slope: f64 = rng.random_range(0.0..2.0);
    SpectralField::gaussian(lat, rng, |_, g| g.powf(-slope))
}

fn ratio(defect: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        defect / scale
    } else {
        defect
    }
}

/// Runs every identity on `count` random fields at resolution `n`.
pub fn property_suite(n: usize, length: f64, count: usize, seed: u64) -> Result<Vec<PropertyCheck>> {
    let lat = Lattice::new(n, length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; TOLERANCES.len()];
    for _ in 0..count {
        let u = random_field(&lat, &mut rng);
        let v = random_field(&lat, &mut rng);

        // projection of an arbitrary (compressible) grid field
        let size = lat.size();
        let mut noise = || -> Vec<f64> { (0..size).map(|_| rng.sample(StandardNormal)).collect() };
        let raw = grid_spectrum(&PhysicalField::new(&lat, noise(), noise())?);
        let once = project_leray(&raw);
        let twice = project_leray(&once.to_vector());
        worst[0] = worst[0].max(ratio((&twice - &once).energy().sqrt(), once.energy().sqrt()));

        let buv = bilinear_b(&u, &v)?;
        let skew = buv.inner(&v)?.abs();
        worst[1] = worst[1].max(ratio(skew, buv.energy().sqrt() * v.energy().sqrt()));

        let buu = bilinear_b(&u, &u)?;
        let au = u.apply_stokes();
        let vort = buu.inner(&au)?.abs();
        worst[2] = worst[2].max(ratio(vort, buu.energy().sqrt() * au.energy().sqrt()));

        let grid = transform_to_physical(&u);
        worst[3] = worst[3].max(ratio((grid.l2_norm_sq() - u.energy()).abs(), u.energy()));

        let back = transform_to_spectral(&grid);
        worst[4] = worst[4].max(ratio((&back - &u).energy().sqrt(), u.energy().sqrt()));

        let (s, t, nu) = (0.3, 0.45, 0.07);
        let composed = u.apply_semigroup(s, nu)?.apply_semigroup(t, nu)?;
        let direct = u.apply_semigroup(s + t, nu)?;
        worst[5] = worst[5].max(ratio((&composed - &direct).energy().sqrt(), direct.energy().sqrt()));
    }
    Ok(TOLERANCES
        .iter()
        .zip(worst)
        .map(|(&(name, tolerance), w)| PropertyCheck {
            name,
            n,
            fields: count,
            worst: w,
            tolerance,
            pass: w <= tolerance,
        })
        .collect())
}
