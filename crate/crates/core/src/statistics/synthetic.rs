//! Random fields with a prescribed second-order increment scaling.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::spectral::{Lattice, SpectralField};

/// Gaussian solenoidal field whose mode variances fall off as
/// `|k|^-(2H + 2)`, so that `S2(l) ~ l^(2H)` between the grid and domain
/// scales. Rescaled to the requested energy.
pub fn synthetic_field(lattice: &Arc<Lattice>, hurst: f64, energy: f64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = SpectralField::gaussian(lattice, &mut rng, |_, gamma| gamma.powf(-(hurst + 1.0)));
    let e = f.energy();
    if e > 0.0 {
        f.scaled((energy / e).sqrt())
    } else {
        f
    }
}
