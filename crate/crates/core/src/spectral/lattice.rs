use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Integer wavevector `(k1, k2)`.
pub type Wavevector = (i64, i64);

/// Truncated Fourier lattice on the torus `[0, L)^2`.
///
/// Coefficient arrays are stored in FFT order: index `i * N + j` holds the
/// mode with `k1 = freq(i)`, `k2 = freq(j)`. The zero mode and the Nyquist
/// rows/columns (`|k_i| = N/2`) are kept at zero by every field operation.
pub struct Lattice {
    n: usize,
    length: f64,
    kmax: i64,
    wavevectors: Vec<Wavevector>,
    gamma: Vec<f64>,
    // unit length wavenumbers 2*pi*k/L
    kappa: Vec<(f64, f64)>,
    dealiased: Vec<bool>,
    // d_k = i * polar_k for active modes, zero otherwise
    polar: Vec<(f64, f64)>,
    canonical: Vec<(usize, usize)>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lattice")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("kmax", &self.kmax)
            .finish()
    }
}

impl Lattice {
    /// Builds a lattice with `n` collocation points per direction.
    ///
    /// `n` must be a power of two (at least 4) so that the 2/3-rule cutoff
    /// `floor(n/3)` never lets aliased products reach retained modes.
    pub fn new(n: usize, length: f64) -> Result<Arc<Self>> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Lattice(format!(
                "resolution N={n} must be a power of two >= 4"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Lattice(format!(
                "domain size L={length} must be finite and positive"
            )));
        }
        let kmax = (n / 3) as i64;
        let half = (n / 2) as i64;
        let size = n * n;
        let mut wavevectors = Vec::with_capacity(size);
        let mut gamma = Vec::with_capacity(size);
        let mut kappa = Vec::with_capacity(size);
        let mut dealiased = Vec::with_capacity(size);
        let scale = 2.0 * PI / length;
        for i in 0..n {
            for j in 0..n {
                let k = (freq(i, n), freq(j, n));
                let kk = (scale * k.0 as f64, scale * k.1 as f64);
                wavevectors.push(k);
                kappa.push(kk);
                gamma.push(kk.0 * kk.0 + kk.1 * kk.1);
                let nyquist = k.0.abs() == half || k.1.abs() == half;
                let zero = k == (0, 0);
                dealiased.push(!zero && !nyquist && k.0.abs().max(k.1.abs()) <= kmax);
            }
        }
        let polar = wavevectors
            .iter()
            .map(|&(k1, k2)| {
                let nyquist = k1.abs() == half || k2.abs() == half;
                if (k1, k2) == (0, 0) || nyquist {
                    (0.0, 0.0)
                } else {
                    let norm = ((k1 * k1 + k2 * k2) as f64).sqrt();
                    (-(k2 as f64) / norm, k1 as f64 / norm)
                }
            })
            .collect();
        let mut canonical = Vec::new();
        for (idx, &k) in wavevectors.iter().enumerate() {
            if dealiased[idx] && (k.1 > 0 || (k.1 == 0 && k.0 > 0)) {
                canonical.push((idx, conj_index(idx, n)));
            }
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Arc::new(Lattice {
            n,
            length,
            kmax,
            wavevectors,
            gamma,
            kappa,
            dealiased,
            polar,
            canonical,
            forward,
            inverse,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Grid spacing `L / N`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// 2/3-rule cutoff on `max(|k1|, |k2|)`.
    pub fn kmax(&self) -> i64 {
        self.kmax
    }

    pub fn size(&self) -> usize {
        self.n * self.n
    }

    pub fn wavevector(&self, idx: usize) -> Wavevector {
        self.wavevectors[idx]
    }

    /// Stokes eigenvalue `|2 pi k / L|^2` (zero for the excluded zero mode).
    pub fn gamma(&self, idx: usize) -> f64 {
        self.gamma[idx]
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gamma
    }

    pub(crate) fn kappa(&self, idx: usize) -> (f64, f64) {
        self.kappa[idx]
    }

    /// True for modes retained after dealiasing (also excludes zero and Nyquist modes).
    pub fn is_dealiased(&self, idx: usize) -> bool {
        self.dealiased[idx]
    }

    /// True for modes that may carry a coefficient at all: nonzero, non-Nyquist.
    pub fn is_active(&self, idx: usize) -> bool {
        let k = self.wavevectors[idx];
        let half = (self.n / 2) as i64;
        k != (0, 0) && k.0.abs() != half && k.1.abs() != half
    }

    /// Dealiased modes from the upper half plane, paired with the index of `-k`.
    pub fn canonical_modes(&self) -> &[(usize, usize)] {
        &self.canonical
    }

    pub fn conj_index(&self, idx: usize) -> usize {
        conj_index(idx, self.n)
    }

    pub fn index_of(&self, k: Wavevector) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k.0.abs() > half || k.1.abs() > half {
            return None;
        }
        let wrap = |v: i64| v.rem_euclid(self.n as i64) as usize;
        Some(wrap(k.0) * self.n + wrap(k.1))
    }

    pub fn same_as(&self, other: &Lattice) -> bool {
        self.n == other.n && self.length == other.length
    }

    pub(crate) fn check_same(&self, other: &Lattice) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch {
                left_n: self.n,
                left_l: self.length,
                right_n: other.n,
                right_l: other.length,
            })
        }
    }

    /// Unnormalised 2D DFT in place (`inverse` selects the sign `+`).
    pub(crate) fn polar(&self, idx: usize) -> (f64, f64) {
        self.polar[idx]
    }

    pub(crate) fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inverse } else { &self.forward };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // truncated spectra leave whole rows empty
        for row in data.chunks_exact_mut(n) {
            if row.iter().any(|z| z.re != 0.0 || z.im != 0.0) {
                plan.process_with_scratch(row, &mut scratch);
            }
        }
        transpose(data, n);
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, n);
    }
}

fn freq(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn conj_index(idx: usize, n: usize) -> usize {
    let (i, j) = (idx / n, idx % n);
    ((n - i) % n) * n + (n - j) % n
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}
