use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::lattice::{Lattice, Wavevector};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Divergence-free velocity field stored as one complex amplitude per mode.
///
/// The velocity is `u(x) = (1/L) sum_k a_k d_k exp(i 2 pi k.x / L)` with the
/// unit polarisation `d_k = i k_perp / |k|`, `k_perp = (-k2, k1)`. The basis
/// `d_k exp(...) / L` is orthonormal in `L^2`, so the H inner product is
/// `sum_k conj(a_k) b_k` and reality reads `a_{-k} = conj(a_k)`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    lattice: Arc<Lattice>,
    coeffs: Vec<Complex64>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.lattice.same_as(&other.lattice) && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn zeros(lattice: &Arc<Lattice>) -> Self {
        SpectralField {
            lattice: Arc::clone(lattice),
            coeffs: vec![ZERO; lattice.size()],
        }
    }

    /// Wraps raw FFT-ordered coefficients. Zero and Nyquist modes are cleared.
    pub fn from_coeffs(lattice: &Arc<Lattice>, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lattice.size() {
            return Err(Error::Lattice(format!(
                "expected {} coefficients, got {}",
                lattice.size(),
                coeffs.len()
            )));
        }
        for (idx, c) in coeffs.iter_mut().enumerate() {
            if !lattice.is_active(idx) {
                *c = ZERO;
            }
        }
        Ok(SpectralField {
            lattice: Arc::clone(lattice),
            coeffs,
        })
    }

    /// Field with amplitude `a` on `k` and `conj(a)` on `-k`.
    pub fn single_mode(lattice: &Arc<Lattice>, k: Wavevector, a: Complex64) -> Result<Self> {
        let mut f = Self::zeros(lattice);
        f.set_mode(k, a)?;
        Ok(f)
    }

    /// Sets the pair `(k, -k)` consistently with the reality constraint.
    pub fn set_mode(&mut self, k: Wavevector, a: Complex64) -> Result<()> {
        let idx = self
            .lattice
            .index_of(k)
            .filter(|&i| self.lattice.is_active(i))
            .ok_or_else(|| Error::Domain(format!("wavevector {k:?} is not an active lattice mode")))?;
        let c = self.lattice.conj_index(idx);
        self.coeffs[idx] = a;
        self.coeffs[c] = a.conj();
        Ok(())
    }

    pub fn mode(&self, k: Wavevector) -> Option<Complex64> {
        self.lattice.index_of(k).map(|i| self.coeffs[i])
    }

    /// Gaussian random field with `E|a_k|^2 = variance(k, gamma_k)` on dealiased modes.
    pub fn gaussian<R, F>(lattice: &Arc<Lattice>, rng: &mut R, variance: F) -> Self
    where
        R: Rng + ?Sized,
        F: Fn(Wavevector, f64) -> f64,
    {
        let mut f = Self::zeros(lattice);
        for &(idx, c) in lattice.canonical_modes() {
            let s = variance(lattice.wavevector(idx), lattice.gamma(idx)).max(0.0).sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let a = Complex64::new(re, im) * (s * std::f64::consts::FRAC_1_SQRT_2);
            f.coeffs[idx] = a;
            f.coeffs[c] = a.conj();
        }
        f
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Mutable access to the raw coefficients; callers keep the reality constraint.
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn check_same_lattice(&self, other: &SpectralField) -> Result<()> {
        self.lattice.check_same(&other.lattice)
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &SpectralField) -> Result<SpectralField> {
        self.check_same_lattice(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b * alpha)
            .collect();
        Ok(SpectralField {
            lattice: Arc::clone(&self.lattice),
            coeffs,
        })
    }

    pub fn scaled(&self, alpha: f64) -> SpectralField {
        SpectralField {
            lattice: Arc::clone(&self.lattice),
            coeffs: self.coeffs.iter().map(|a| a * alpha).collect(),
        }
    }

    /// H inner product `sum_k Re(conj(a_k) b_k)`.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.sobolev_inner(other, 0.0)
    }

    /// `sum_k gamma_k^(2 alpha) Re(conj(a_k) b_k)`.
    pub fn sobolev_inner(&self, other: &SpectralField, alpha: f64) -> Result<f64> {
        self.check_same_lattice(other)?;
        let mut acc = 0.0;
        for (idx, (a, b)) in self.coeffs.iter().zip(&other.coeffs).enumerate() {
            let g = self.lattice.gamma(idx);
            if g > 0.0 {
                acc += gamma_pow(g, alpha) * (a.re * b.re + a.im * b.im);
            }
        }
        Ok(acc)
    }

    /// `|f|^2_{D(A^alpha)} = sum_k gamma_k^(2 alpha) |a_k|^2`, sum over every lattice mode.
    pub fn sobolev_norm_sq(&self, alpha: f64) -> f64 {
        let mut acc = 0.0;
        for (idx, a) in self.coeffs.iter().enumerate() {
            let g = self.lattice.gamma(idx);
            if g > 0.0 {
                acc += gamma_pow(g, alpha) * a.norm_sqr();
            }
        }
        acc
    }

    pub fn energy(&self) -> f64 {
        self.sobolev_norm_sq(0.0)
    }

    pub fn enstrophy(&self) -> f64 {
        self.sobolev_norm_sq(0.5)
    }

    /// `sum_k w_k |a_k|^2` for a per-mode weight array.
    pub fn weighted_norm_sq(&self, weights: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(weights)
            .map(|(a, w)| w * a.norm_sqr())
            .sum()
    }

    /// Stokes operator `A f`.
    pub fn apply_stokes(&self) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, a)| a * self.lattice.gamma(idx))
            .collect();
        SpectralField {
            lattice: Arc::clone(&self.lattice),
            coeffs,
        }
    }

    /// Heat semigroup `exp(-nu A t)`.
    pub fn apply_semigroup(&self, t: f64, nu: f64) -> Result<SpectralField> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("semigroup time must be >= 0, got {t}")));
        }
        if !(nu > 0.0) {
            return Err(Error::Domain(format!("viscosity must be > 0, got {nu}")));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, a)| a * (-nu * self.lattice.gamma(idx) * t).exp())
            .collect();
        Ok(SpectralField {
            lattice: Arc::clone(&self.lattice),
            coeffs,
        })
    }

    /// Zeroes every mode beyond the 2/3-rule cutoff.
    pub fn dealias(&mut self) {
        for (idx, a) in self.coeffs.iter_mut().enumerate() {
            if !self.lattice.is_dealiased(idx) {
                *a = ZERO;
            }
        }
    }

    pub fn is_dealiased(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(idx, a)| self.lattice.is_dealiased(idx) || *a == ZERO)
    }

    /// Largest `|a_k - conj(a_{-k})|`; zero for real fields.
    pub fn reality_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|idx| (self.coeffs[idx] - self.coeffs[self.lattice.conj_index(idx)].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Velocity-component coefficients `a_k d_k`.
    pub fn to_vector(&self) -> VectorSpectrum {
        let mut c1 = vec![ZERO; self.coeffs.len()];
        let mut c2 = vec![ZERO; self.coeffs.len()];
        for (idx, a) in self.coeffs.iter().enumerate() {
            let (p1, p2) = self.lattice.polar(idx);
            // a * i p
            let ia = Complex64::new(-a.im, a.re);
            c1[idx] = ia * p1;
            c2[idx] = ia * p2;
        }
        VectorSpectrum {
            lattice: Arc::clone(&self.lattice),
            c1,
            c2,
        }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs).expect("lattice mismatch in field addition")
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs).expect("lattice mismatch in field subtraction")
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

/// Unit polarisation vector `i k_perp / |k|` of an active mode (zero otherwise).
pub(crate) fn polarisation(lattice: &Lattice, idx: usize) -> (Complex64, Complex64) {
    let (p1, p2) = lattice.polar(idx);
    (Complex64::new(0.0, p1), Complex64::new(0.0, p2))
}

fn gamma_pow(g: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else if alpha == 0.5 {
        g
    } else if alpha == 1.0 {
        g * g
    } else {
        g.powf(2.0 * alpha)
    }
}

/// Unconstrained velocity coefficients: one `C^2` vector per mode.
#[derive(Clone, Debug)]
pub struct VectorSpectrum {
    pub lattice: Arc<Lattice>,
    pub c1: Vec<Complex64>,
    pub c2: Vec<Complex64>,
}

impl VectorSpectrum {
    pub fn zeros(lattice: &Arc<Lattice>) -> Self {
        VectorSpectrum {
            lattice: Arc::clone(lattice),
            c1: vec![ZERO; lattice.size()],
            c2: vec![ZERO; lattice.size()],
        }
    }

    /// `sum_k Re(conj(c_k) . d_k)` over both components.
    pub fn inner(&self, other: &VectorSpectrum) -> f64 {
        let dot = |x: &[Complex64], y: &[Complex64]| -> f64 {
            x.iter().zip(y).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
        };
        dot(&self.c1, &other.c1) + dot(&self.c2, &other.c2)
    }
}

/// Leray projection onto divergence-free fields: keeps the component of each
/// `C^2` coefficient along the polarisation `d_k`. Zero and Nyquist modes are dropped.
pub fn project_leray(raw: &VectorSpectrum) -> SpectralField {
    let lattice = &raw.lattice;
    let coeffs = (0..lattice.size())
        .map(|idx| {
            let (d1, d2) = polarisation(lattice, idx);
            d1.conj() * raw.c1[idx] + d2.conj() * raw.c2[idx]
        })
        .collect();
    SpectralField {
        lattice: Arc::clone(lattice),
        coeffs,
    }
}

/// Real velocity samples on the `N x N` grid `x_ij = (i L/N, j L/N)`, row-major in `i`.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    lattice: Arc<Lattice>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl PartialEq for PhysicalField {
    fn eq(&self, other: &Self) -> bool {
        self.lattice.same_as(&other.lattice) && self.u1 == other.u1 && self.u2 == other.u2
    }
}

impl PhysicalField {
    pub fn new(lattice: &Arc<Lattice>, u1: Vec<f64>, u2: Vec<f64>) -> Result<Self> {
        let size = lattice.size();
        if u1.len() != size || u2.len() != size {
            return Err(Error::Lattice(format!(
                "physical field needs {size} samples per component"
            )));
        }
        Ok(PhysicalField {
            lattice: Arc::clone(lattice),
            u1,
            u2,
        })
    }

    /// Builds a field by evaluating `f(x1, x2)` at every grid point.
    pub fn from_fn(lattice: &Arc<Lattice>, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let n = lattice.n();
        let h = lattice.spacing();
        let mut u1 = Vec::with_capacity(n * n);
        let mut u2 = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (a, b) = f(i as f64 * h, j as f64 * h);
                u1.push(a);
                u2.push(b);
            }
        }
        PhysicalField {
            lattice: Arc::clone(lattice),
            u1,
            u2,
        }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn scaled(&self, alpha: f64) -> PhysicalField {
        PhysicalField {
            lattice: Arc::clone(&self.lattice),
            u1: self.u1.iter().map(|v| v * alpha).collect(),
            u2: self.u2.iter().map(|v| v * alpha).collect(),
        }
    }

    /// `sum_ij |u(x_ij)|^2 (L/N)^2`, the quadrature of `|u|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        let h = self.lattice.spacing();
        let s: f64 = self
            .u1
            .iter()
            .zip(&self.u2)
            .map(|(a, b)| a * a + b * b)
            .sum();
        s * h * h
    }

    pub fn max_speed(&self) -> f64 {
        self.u1
            .iter()
            .zip(&self.u2)
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const I: Complex64 = Complex64::new(0.0, 1.0);
    use std::f64::consts::PI;

    fn random_vector(lat: &Arc<Lattice>, rng: &mut ChaCha8Rng) -> VectorSpectrum {
        let a = SpectralField::gaussian(lat, rng, |_, _| 1.0);
        let b = SpectralField::gaussian(lat, rng, |_, _| 1.0);
        // add a gradient part i k/|k| b_k on top of the solenoidal part
        let mut v = a.to_vector();
        for idx in 0..lat.size() {
            let (k1, k2) = lat.wavevector(idx);
            let n = ((k1 * k1 + k2 * k2) as f64).sqrt();
            if n > 0.0 {
                let s = b.coeffs()[idx] * I;
                v.c1[idx] += s * (k1 as f64 / n);
                v.c2[idx] += s * (k2 as f64 / n);
            }
        }
        v
    }

    #[test]
    fn zero_field_norms_vanish() {
        let lat = Lattice::new(16, 2.0 * PI).unwrap();
        let f = SpectralField::zeros(&lat);
        for alpha in [-0.5, 0.0, 0.25, 0.5, 1.0] {
            assert_eq!(f.sobolev_norm_sq(alpha), 0.0);
        }
    }

    #[test]
    fn single_mode_v_norm_counts_conjugate() {
        let lat = Lattice::new(16, 2.0 * PI).unwrap();
        let f = SpectralField::single_mode(&lat, (1, 0), Complex64::new(1.0, 0.0)).unwrap();
        assert!((f.sobolev_norm_sq(0.5) - 2.0).abs() < 1e-15);
        assert!((f.energy() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn leray_fixes_divergence_free_and_kills_gradients() {
        let lat = Lattice::new(16, 2.0 * PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = SpectralField::gaussian(&lat, &mut rng, |_, _| 1.0);
        let back = project_leray(&f.to_vector());
        let err = (&back - &f).max_abs();
        assert!(err < 1e-15, "err {err}");

        // pure gradient coefficients c_k = phi_k * i k / |k|
        let phi = SpectralField::gaussian(&lat, &mut rng, |_, _| 1.0);
        let mut grad = VectorSpectrum::zeros(&lat);
        for idx in 0..lat.size() {
            let (k1, k2) = lat.wavevector(idx);
            let n = ((k1 * k1 + k2 * k2) as f64).sqrt();
            if n > 0.0 {
                grad.c1[idx] = phi.coeffs()[idx] * I * (k1 as f64 / n);
                grad.c2[idx] = phi.coeffs()[idx] * I * (k2 as f64 / n);
            }
        }
        assert!(project_leray(&grad).max_abs() < 1e-15);
    }

    #[test]
    fn leray_idempotent_and_self_adjoint() {
        let lat = Lattice::new(16, 2.0 * PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let raw = random_vector(&lat, &mut rng);
            let once = project_leray(&raw);
            let twice = project_leray(&once.to_vector());
            assert!((&once - &twice).max_abs() <= 1e-15 * (1.0 + once.max_abs()));

            let other = random_vector(&lat, &mut rng);
            let lhs = project_leray(&raw).to_vector().inner(&other);
            let rhs = raw.inner(&project_leray(&other).to_vector());
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn interpolation_inequality_holds() {
        let lat = Lattice::new(32, 2.0 * PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in [0.0, 1.0, 2.0, 3.0] {
            let f = SpectralField::gaussian(&lat, &mut rng, |_, g| g.powf(-s));
            let q = f.sobolev_norm_sq(0.25);
            assert!(q * q <= f.sobolev_norm_sq(0.0) * f.sobolev_norm_sq(0.5) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn semigroup_halves_unit_mode() {
        let lat = Lattice::new(16, 2.0 * PI).unwrap();
        let f = SpectralField::single_mode(&lat, (1, 0), Complex64::new(1.0, 0.0)).unwrap();
        let g = f.apply_semigroup(2f64.ln(), 1.0).unwrap();
        assert!((g.mode((1, 0)).unwrap().re - 0.5).abs() < 1e-15);
        assert_eq!(f.apply_semigroup(0.0, 1.0).unwrap(), f);
        assert!(f.apply_semigroup(-1.0, 1.0).is_err());
    }

    #[test]
    fn semigroup_composes() {
        let lat = Lattice::new(16, 2.0 * PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let f = SpectralField::gaussian(&lat, &mut rng, |_, _| 1.0);
            let (t1, t2) = (rng.random::<f64>(), rng.random::<f64>());
            let a = f.apply_semigroup(t1, 0.1).unwrap().apply_semigroup(t2, 0.1).unwrap();
            let b = f.apply_semigroup(t1 + t2, 0.1).unwrap();
            assert!((&a - &b).max_abs() <= 1e-14 * f.max_abs());
        }
    }

    #[test]
    fn set_mode_rejects_inactive() {
        let lat = Lattice::new(8, 1.0).unwrap();
        let mut f = SpectralField::zeros(&lat);
        assert!(f.set_mode((0, 0), Complex64::new(1.0, 0.0)).is_err());
        assert!(f.set_mode((4, 0), Complex64::new(1.0, 0.0)).is_err());
        assert!(f.set_mode((9, 0), Complex64::new(1.0, 0.0)).is_err());
    }
}
