//! Grid transforms and the pseudo-spectral advection operator.
//!
//! Two real fields are packed into one complex FFT (`x + i y`) in both
//! directions; the spectra are separated again with Hermitian symmetry.

use std::sync::Arc;

use num_complex::Complex64;

use super::field::{project_leray, PhysicalField, SpectralField, VectorSpectrum};
use super::lattice::Lattice;
use crate::error::Result;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Inverse transform of two Hermitian spectra into two real grids.
fn pair_to_grid(lattice: &Lattice, x: &[Complex64], y: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let mut buf: Vec<Complex64> = x.iter().zip(y).map(|(a, b)| a + I * b).collect();
    lattice.fft2(&mut buf, true);
    let s = 1.0 / lattice.length();
    (
        buf.iter().map(|z| z.re * s).collect(),
        buf.iter().map(|z| z.im * s).collect(),
    )
}

/// Forward transform of two real grids into their spectra.
fn grid_to_pair(lattice: &Lattice, x: &[f64], y: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut buf: Vec<Complex64> = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    lattice.fft2(&mut buf, false);
    let n = lattice.n() as f64;
    let s = lattice.length() / (n * n);
    let mut xs = vec![ZERO; buf.len()];
    let mut ys = vec![ZERO; buf.len()];
    for idx in 0..buf.len() {
        let z = buf[idx];
        let zc = buf[lattice.conj_index(idx)].conj();
        xs[idx] = (z + zc) * (0.5 * s);
        ys[idx] = (z - zc) * (-0.5 * s) * I;
    }
    (xs, ys)
}

/// Velocity samples of a spectral field on the collocation grid.
pub fn transform_to_physical(f: &SpectralField) -> PhysicalField {
    let v = f.to_vector();
    let (u1, u2) = pair_to_grid(f.lattice(), &v.c1, &v.c2);
    PhysicalField::new(f.lattice(), u1, u2).expect("grid sizes match lattice")
}

/// Raw velocity-component spectra of grid samples (no projection).
pub fn grid_spectrum(g: &PhysicalField) -> VectorSpectrum {
    let (c1, c2) = grid_to_pair(g.lattice(), &g.u1, &g.u2);
    VectorSpectrum {
        lattice: Arc::clone(g.lattice()),
        c1,
        c2,
    }
}

/// Forward transform followed by Leray projection.
pub fn transform_to_spectral(g: &PhysicalField) -> SpectralField {
    project_leray(&grid_spectrum(g))
}

/// Result of an advection evaluation.
pub struct Advection {
    /// `Pi[(a . grad) t]` for each target `t`, dealiased.
    pub terms: Vec<SpectralField>,
    /// `max |a(x)|` over the grid, used for the CFL check.
    pub max_speed: f64,
}

/// Evaluates `B(adv, t) = Pi[(adv . grad) t]` for several targets sharing one
/// advecting field: grid products, forward transform, 2/3-rule truncation,
/// Leray projection.
pub fn advect(adv: &SpectralField, targets: &[&SpectralField]) -> Result<Advection> {
    let lattice = adv.lattice();
    for t in targets {
        adv.check_same_lattice(t)?;
    }
    let size = lattice.size();
    let av = adv.to_vector();
    let (a1, a2) = pair_to_grid(lattice, &av.c1, &av.c2);
    let max_speed = a1
        .iter()
        .zip(&a2)
        .map(|(x, y)| (x * x + y * y).sqrt())
        .fold(0.0, f64::max);

    // d1 t1, d2 t1, d1 t2 per target; d2 t2 = -d1 t1 by incompressibility.
    // Transforms are never shared between targets so each term is
    // independent of the others bit for bit.
    let mut grads = Vec::with_capacity(3 * targets.len());
    for t in targets {
        let mut g11 = vec![ZERO; size];
        let mut g12 = vec![ZERO; size];
        let mut g21 = vec![ZERO; size];
        for (idx, a) in t.coeffs().iter().enumerate() {
            let (p1, p2) = lattice.polar(idx);
            let (k1, k2) = lattice.kappa(idx);
            // i kappa_m (i p_j a) = -kappa_m p_j a
            g11[idx] = a * (-k1 * p1);
            g12[idx] = a * (-k2 * p1);
            g21[idx] = a * (-k1 * p2);
        }
        let (x, y) = pair_to_grid(lattice, &g11, &g12);
        let (z, _) = pair_to_grid(lattice, &g21, &vec![ZERO; size]);
        grads.extend([x, y, z]);
    }

    let mut terms = Vec::with_capacity(targets.len());
    for ti in 0..targets.len() {
        let (g11, g12, g21) = (&grads[3 * ti], &grads[3 * ti + 1], &grads[3 * ti + 2]);
        let mut n1 = vec![0.0; size];
        let mut n2 = vec![0.0; size];
        for p in 0..size {
            n1[p] = a1[p] * g11[p] + a2[p] * g12[p];
            n2[p] = a1[p] * g21[p] - a2[p] * g11[p];
        }
        let (h1, h2) = grid_to_pair(lattice, &n1, &n2);
        let coeffs = (0..size)
            .map(|idx| {
                if lattice.is_dealiased(idx) {
                    let (p1, p2) = lattice.polar(idx);
                    // conj(i p) . h = -i (p . h)
                    let s = h1[idx] * p1 + h2[idx] * p2;
                    Complex64::new(s.im, -s.re)
                } else {
                    ZERO
                }
            })
            .collect();
        terms.push(SpectralField::from_coeffs(lattice, coeffs)?);
    }
    Ok(Advection { terms, max_speed })
}

/// Projected advection `B(u, v) = Pi[(u . grad) v]`, dealiased.
pub fn bilinear_b(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    Ok(advect(u, &[v])?.terms.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn cosine_mode_gives_conjugate_pair() {
        let lat = Lattice::new(16, 2.0 * PI).unwrap();
        // u = (0, cos x1) is divergence free; k = (+-1, 0)
        let g = PhysicalField::from_fn(&lat, |x1, _| (0.0, x1.cos()));
        let f = transform_to_spectral(&g);
        let nonzero: Vec<_> = (0..lat.size())
            .filter(|&i| f.coeffs()[i].norm() > 1e-12)
            .map(|i| lat.wavevector(i))
            .collect();
        assert_eq!(nonzero.len(), 2);
        assert!(nonzero.contains(&(1, 0)) && nonzero.contains(&(-1, 0)));
        let a = f.mode((1, 0)).unwrap();
        let b = f.mode((-1, 0)).unwrap();
        assert!((a - b.conj()).norm() < 1e-14);
    }

    #[test]
    fn parseval_and_round_trip() {
        let lat = Lattice::new(32, 2.0 * PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let f = SpectralField::gaussian(&lat, &mut rng, |_, g| 1.0 / (1.0 + g));
            let g = transform_to_physical(&f);
            let e = f.energy();
            assert!((g.l2_norm_sq() - e).abs() <= 1e-12 * e);
            let back = transform_to_spectral(&g);
            assert!((&back - &f).energy().sqrt() <= 1e-12 * e.sqrt());
        }
    }

    #[test]
    fn physical_samples_are_real_sum() {
        // direct evaluation of the series at one grid point
        let lat = Lattice::new(8, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = SpectralField::gaussian(&lat, &mut rng, |_, _| 1.0);
        let g = transform_to_physical(&f);
        let v = f.to_vector();
        let (i, j) = (3usize, 5usize);
        let h = lat.spacing();
        let mut s = (ZERO, ZERO);
        for idx in 0..lat.size() {
            let (k1, k2) = lat.wavevector(idx);
            let ph = 2.0 * PI * (k1 as f64 * i as f64 * h + k2 as f64 * j as f64 * h) / lat.length();
            let e = Complex64::from_polar(1.0, ph);
            s.0 += v.c1[idx] * e;
            s.1 += v.c2[idx] * e;
        }
        let p = i * 8 + j;
        assert!((s.0.re / lat.length() - g.u1[p]).abs() < 1e-13);
        assert!((s.1.re / lat.length() - g.u2[p]).abs() < 1e-13);
        assert!(s.0.im.abs() < 1e-13 && s.1.im.abs() < 1e-13);
    }
}
