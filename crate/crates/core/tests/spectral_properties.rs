//! Properties of the projected advection operator, checked against a
//! direct spectral convolution.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stochastic_ns2d::spectral::{
    bilinear_b, transform_to_physical, transform_to_spectral, Lattice, SpectralField,
};

fn pol(k: (i64, i64)) -> (Complex64, Complex64) {
    let n = ((k.0 * k.0 + k.1 * k.1) as f64).sqrt();
    (
        Complex64::new(0.0, -(k.1 as f64) / n),
        Complex64::new(0.0, k.0 as f64 / n),
    )
}

/// `Pi[(u . grad) v]` by summing over all triads `p + q = m` in spectral space.
fn convolution_oracle(u: &SpectralField, v: &SpectralField) -> SpectralField {
    let lat = u.lattice().clone();
    let scale = 2.0 * PI / lat.length();
    let kmax = lat.kmax();
    let modes: Vec<usize> = (0..lat.size()).filter(|&i| lat.is_dealiased(i)).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); lat.size()];
    for &mi in &modes {
        let m = lat.wavevector(mi);
        let mut c = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &pi in &modes {
            let p = lat.wavevector(pi);
            let q = (m.0 - p.0, m.1 - p.1);
            if q == (0, 0) || q.0.abs() > kmax || q.1.abs() > kmax {
                continue;
            }
            let qi = lat.index_of(q).unwrap();
            let (dp1, dp2) = pol(p);
            let (dq1, dq2) = pol(q);
            let a = u.coeffs()[pi];
            let b = v.coeffs()[qi];
            // (u_p . i kappa_q) v_q
            let adv = (a * dp1 * (scale * q.0 as f64) + a * dp2 * (scale * q.1 as f64))
                * Complex64::new(0.0, 1.0);
            c.0 += adv * b * dq1;
            c.1 += adv * b * dq2;
        }
        let (d1, d2) = pol(m);
        out[mi] = (d1.conj() * c.0 + d2.conj() * c.1) / lat.length();
    }
    SpectralField::from_coeffs(&lat, out).unwrap()
}

fn random(lat: &Arc<Lattice>, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SpectralField::gaussian(lat, &mut rng, |_, g| 1.0 / (1.0 + g))
}

#[test]
fn single_mode_self_advection_vanishes() {
    let lat = Lattice::new(16, 2.0 * PI).unwrap();
    for k in [(1, 0), (2, 3), (-1, 4)] {
        let u = SpectralField::single_mode(&lat, k, Complex64::new(0.7, 0.4)).unwrap();
        let b = bilinear_b(&u, &u).unwrap();
        assert!(b.energy().sqrt() < 1e-13, "{k:?}: {}", b.energy());
    }
}

#[test]
fn crossed_modes_match_convolution() {
    let lat = Lattice::new(8, 2.0 * PI).unwrap();
    let u = SpectralField::single_mode(&lat, (1, 0), Complex64::new(1.0, 0.0)).unwrap();
    let v = SpectralField::single_mode(&lat, (0, 1), Complex64::new(1.0, 0.0)).unwrap();
    let b = bilinear_b(&u, &v).unwrap();
    let oracle = convolution_oracle(&u, &v);
    assert!((&b - &oracle).max_abs() < 1e-14);
    let support: Vec<_> = (0..lat.size())
        .filter(|&i| b.coeffs()[i].norm() > 1e-14)
        .map(|i| lat.wavevector(i))
        .collect();
    assert!(!support.is_empty());
    for k in support {
        assert!(k.0.abs() == 1 && k.1.abs() == 1, "unexpected mode {k:?}");
    }
}

#[test]
fn random_fields_match_convolution() {
    for (n, len) in [(8, 2.0 * PI), (16, 3.0)] {
        let lat = Lattice::new(n, len).unwrap();
        let u = random(&lat, 1);
        let v = random(&lat, 2);
        let b = bilinear_b(&u, &v).unwrap();
        let oracle = convolution_oracle(&u, &v);
        let err = (&b - &oracle).max_abs();
        assert!(err < 1e-13 * (1.0 + oracle.max_abs()), "n={n} err={err}");
    }
}

#[test]
fn lattice_mismatch_is_an_error() {
    let a = Lattice::new(8, 2.0 * PI).unwrap();
    let b = Lattice::new(16, 2.0 * PI).unwrap();
    assert!(bilinear_b(&random(&a, 1), &random(&b, 2)).is_err());
}

#[test]
fn output_is_dealiased_and_real() {
    let lat = Lattice::new(32, 2.0 * PI).unwrap();
    let u = random(&lat, 5);
    let v = random(&lat, 6);
    let b = bilinear_b(&u, &v).unwrap();
    assert!(b.is_dealiased());
    assert!(b.reality_defect() < 1e-13 * b.max_abs());
}

#[test]
fn bounded_dual_norm_ratio() {
    // |B(u,v)|_{V'} / (|u|_{D(A^1/4)} |v|_{D(A^1/4)}) stays bounded over spectra
    let lat = Lattice::new(32, 2.0 * PI).unwrap();
    let mut worst: f64 = 0.0;
    for (i, slope) in [0.0, 0.5, 1.0, 2.0].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let u = SpectralField::gaussian(&lat, &mut rng, |_, g| g.powf(-slope));
        let v = SpectralField::gaussian(&lat, &mut rng, |_, g| g.powf(-slope));
        let b = bilinear_b(&u, &v).unwrap();
        let ratio = b.sobolev_norm_sq(-0.5).sqrt()
            / (u.sobolev_norm_sq(0.25).sqrt() * v.sobolev_norm_sq(0.25).sqrt());
        worst = worst.max(ratio);
    }
    assert!(worst.is_finite() && worst < 1.0, "ratio {worst}");
}

fn arb_field(n: usize) -> impl Strategy<Value = SpectralField> {
    (any::<u64>(), 0.0f64..2.0).prop_map(move |(seed, slope)| {
        let lat = Lattice::new(n, 2.0 * PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpectralField::gaussian(&lat, &mut rng, |_, g| g.powf(-slope))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn skew_symmetry_and_energy_neutrality(u in arb_field(16), v in arb_field(16), z in arb_field(16)) {
        let scale = u.energy().sqrt() * v.energy().sqrt() * z.energy().sqrt()
            * u.lattice().gamma(u.lattice().index_of((u.lattice().kmax(), u.lattice().kmax())).unwrap()).sqrt();
        let bvz = bilinear_b(&u, &v).unwrap().inner(&z).unwrap();
        let bzv = bilinear_b(&u, &z).unwrap().inner(&v).unwrap();
        prop_assert!((bvz + bzv).abs() <= 1e-12 * scale);
        let bvv = bilinear_b(&u, &v).unwrap().inner(&v).unwrap();
        prop_assert!(bvv.abs() <= 1e-12 * scale);
    }

    #[test]
    fn vorticity_identity(u in arb_field(16)) {
        let b = bilinear_b(&u, &u).unwrap();
        let au = u.apply_stokes();
        let scale = b.energy().sqrt() * au.energy().sqrt();
        prop_assert!(b.inner(&au).unwrap().abs() <= 1e-11 * scale);
    }

    #[test]
    fn bilinear_in_first_argument(u1 in arb_field(16), u2 in arb_field(16), v in arb_field(16),
                                  a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let combo = u1.scaled(a).axpy(b, &u2).unwrap();
        let lhs = bilinear_b(&combo, &v).unwrap();
        let rhs = bilinear_b(&u1, &v).unwrap().scaled(a).axpy(b, &bilinear_b(&u2, &v).unwrap()).unwrap();
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-13 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn grid_round_trip(u in arb_field(32)) {
        let back = transform_to_spectral(&transform_to_physical(&u));
        prop_assert!((&back - &u).energy().sqrt() <= 1e-12 * u.energy().sqrt());
    }
}
