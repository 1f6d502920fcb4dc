//! Spectrally coloured Wiener forcing, its counter-based random streams, and
//! the exact Ornstein-Uhlenbeck update used by the integrator.
//!
//! Noise is diagonal in the divergence-free Fourier basis: mode `k` carries an
//! independent complex Brownian motion with `E|beta_k(t)|^2 = q_k t`, and the
//! pair `(k, -k)` is driven by a single draw so every sample is real.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::{Lattice, SpectralField, Wavevector};

/// User-facing description of the covariance `Q = diag{q_k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// Variance `q` on each listed wavevector and its negative; nothing else is forced.
    FiniteBand { modes: Vec<Wavevector>, q: f64 },
    /// `q_j = amplitude * j^(-exponent)` in the eigenvalue-sorted mode index `j`,
    /// over every dealiased mode.
    PowerLaw { amplitude: f64, exponent: f64 },
}

impl NoiseSpec {
    /// Finite band on the `count` lowest wavevectors (up to sign), ordered by
    /// `|k|^2` then lexicographically.
    pub fn lowest_modes(count: usize, q: f64) -> Self {
        let mut modes = Vec::new();
        let radius = (count as f64).sqrt().ceil() as i64 + 1;
        for k1 in -radius..=radius {
            for k2 in 0..=radius {
                if k2 > 0 || k1 > 0 {
                    modes.push((k1, k2));
                }
            }
        }
        modes.sort_by_key(|&(a, b)| (a * a + b * b, a, b));
        modes.truncate(count);
        NoiseSpec::FiniteBand { modes, q }
    }

    /// Finite band on every wavevector (up to sign) whose `|k|^2` is among
    /// the `count` smallest nonzero values.
    pub fn lowest_shells(count: usize, q: f64) -> Self {
        let radius = (count as f64).sqrt().ceil() as i64 + 1;
        let mut modes = Vec::new();
        for k1 in -radius..=radius {
            for k2 in 0..=radius {
                if k2 > 0 || k1 > 0 {
                    modes.push((k1, k2));
                }
            }
        }
        let mut shells: Vec<i64> = modes.iter().map(|&(a, b)| a * a + b * b).collect();
        shells.sort_unstable();
        shells.dedup();
        let cut = shells.get(count.saturating_sub(1)).copied().unwrap_or(0);
        modes.retain(|&(a, b)| count > 0 && a * a + b * b <= cut);
        modes.sort_by_key(|&(a, b)| (a * a + b * b, a, b));
        NoiseSpec::FiniteBand { modes, q }
    }

    pub fn silent() -> Self {
        NoiseSpec::FiniteBand {
            modes: Vec::new(),
            q: 0.0,
        }
    }
}

/// Which of the two independent forcings a stream feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    W1,
    W2,
}

/// Range of `alpha_0` for which `sum_k q_k gamma_k^(2 alpha_0)` stays finite
/// as the lattice is refined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AdmissibleAlpha {
    Any,
    /// Strict upper bound.
    Below(f64),
}

/// Resolved per-mode variances for one lattice.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    spec: NoiseSpec,
    lattice: Arc<Lattice>,
    variances: Vec<f64>,
    trace_q: f64,
    trace_aq: f64,
}

impl NoiseModel {
    pub fn new(lattice: &Arc<Lattice>, spec: NoiseSpec) -> Result<Self> {
        let mut variances = vec![0.0; lattice.size()];
        match &spec {
            NoiseSpec::FiniteBand { modes, q } => {
                let mut errs = Vec::new();
                if !(q.is_finite() && *q >= 0.0) {
                    errs.push(format!("noise.q must be finite and >= 0, got {q}"));
                }
                for &k in modes {
                    match lattice.index_of(k).filter(|&i| lattice.is_dealiased(i)) {
                        None => errs.push(format!(
                            "forced mode {k:?} is not a nonzero mode inside the dealiased band |k_i| <= {}",
                            lattice.kmax()
                        )),
                        Some(idx) => {
                            let c = lattice.conj_index(idx);
                            if variances[idx] != 0.0 {
                                errs.push(format!("forced mode {k:?} listed twice (or with its negative)"));
                            }
                            variances[idx] = q.max(f64::MIN_POSITIVE);
                            variances[c] = q.max(f64::MIN_POSITIVE);
                        }
                    }
                }
                if !errs.is_empty() {
                    return Err(Error::Config(errs));
                }
                for v in variances.iter_mut() {
                    if *v != 0.0 {
                        *v = *q;
                    }
                }
            }
            NoiseSpec::PowerLaw {
                amplitude,
                exponent,
            } => {
                let mut errs = Vec::new();
                if !(*exponent > 1.0 && *exponent < 2.0) {
                    errs.push(format!(
                        "noise.exponent a={exponent} outside (1, 2): trace-class power-law noise requires q_j = C j^-a with 1 < a < 2"
                    ));
                }
                if !(amplitude.is_finite() && *amplitude > 0.0) {
                    errs.push(format!("noise.amplitude must be finite and > 0, got {amplitude}"));
                }
                if !errs.is_empty() {
                    return Err(Error::Config(errs));
                }
                let mut order: Vec<usize> =
                    (0..lattice.size()).filter(|&i| lattice.is_dealiased(i)).collect();
                order.sort_by_key(|&i| {
                    let (a, b) = lattice.wavevector(i);
                    (a * a + b * b, a, b)
                });
                // ties in |k|^2 share the mean of their j^-a values
                let mut start = 0;
                while start < order.len() {
                    let key = sq(lattice.wavevector(order[start]));
                    let mut end = start;
                    while end < order.len() && sq(lattice.wavevector(order[end])) == key {
                        end += 1;
                    }
                    let total: f64 = (start + 1..=end)
                        .map(|j| amplitude * (j as f64).powf(-exponent))
                        .sum();
                    let q = total / (end - start) as f64;
                    for &i in &order[start..end] {
                        variances[i] = q;
                    }
                    start = end;
                }
            }
        }
        let trace_q = variances.iter().sum();
        let trace_aq = variances
            .iter()
            .enumerate()
            .map(|(i, q)| q * lattice.gamma(i))
            .sum();
        Ok(NoiseModel {
            spec,
            lattice: Arc::clone(lattice),
            variances,
            trace_q,
            trace_aq,
        })
    }

    pub fn silent(lattice: &Arc<Lattice>) -> Self {
        Self::new(lattice, NoiseSpec::silent()).expect("empty band is valid")
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    /// Per-mode variance `q_k` in FFT order.
    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// `Tr Q = sum_k q_k` over all lattice wavevectors (both signs).
    pub fn trace_q(&self) -> f64 {
        self.trace_q
    }

    /// `Tr(AQ) = sum_k gamma_k q_k`.
    pub fn trace_aq(&self) -> f64 {
        self.trace_aq
    }

    /// `sum_k q_k gamma_k^(2 alpha)`.
    pub fn weighted_trace(&self, alpha: f64) -> f64 {
        self.variances
            .iter()
            .enumerate()
            .filter(|(_, q)| **q > 0.0)
            .map(|(i, q)| q * self.lattice.gamma(i).powf(2.0 * alpha))
            .sum()
    }

    pub fn is_silent(&self) -> bool {
        self.trace_q == 0.0
    }

    pub fn admissible_alpha(&self) -> AdmissibleAlpha {
        match self.spec {
            NoiseSpec::FiniteBand { .. } => AdmissibleAlpha::Any,
            // gamma_j ~ j in two dimensions
            NoiseSpec::PowerLaw { exponent, .. } => AdmissibleAlpha::Below((exponent - 1.0) / 2.0),
        }
    }

    /// Stable 64-bit fingerprint of the resolved model (spec plus lattice).
    pub fn fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.spec).expect("spec serialises"));
        h.update((self.lattice.n() as u64).to_le_bytes());
        h.update(self.lattice.length().to_le_bytes());
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
    }
}

fn sq(k: Wavevector) -> i64 {
    k.0 * k.0 + k.1 * k.1
}

/// Identity of one random stream. Streams with different identities are
/// independent; equal identities replay equal sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub component: Component,
    pub replica: u32,
    /// Set only when paths must *not* be shared across coupling values.
    pub lambda_index: Option<u32>,
}

impl StreamId {
    pub fn new(component: Component, replica: u32) -> Self {
        StreamId {
            component,
            replica,
            lambda_index: None,
        }
    }
}

/// Counter-based Gaussian stream: the draws of step `n` are a pure function
/// of `(seed, id, n)`, so any position can be resumed directly.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    seed: u64,
    id: StreamId,
    key: [u8; 32],
    step: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut h = Sha256::new();
        h.update(b"ns2d-noise-stream");
        h.update(seed.to_le_bytes());
        h.update([match id.component {
            Component::W1 => 1u8,
            Component::W2 => 2u8,
        }]);
        h.update(id.replica.to_le_bytes());
        match id.lambda_index {
            Some(l) => {
                h.update([1u8]);
                h.update(l.to_le_bytes());
            }
            None => h.update([0u8]),
        }
        NoiseStream {
            seed,
            id,
            key: h.finalize().into(),
            step: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Number of increments consumed so far.
    pub fn position(&self) -> u64 {
        self.step
    }

    pub fn set_position(&mut self, step: u64) {
        self.step = step;
    }

    /// One standard complex normal (`E|xi|^2 = 1`) per canonical dealiased
    /// mode of `lattice`, then advances the counter.
    pub fn next_normals(&mut self, lattice: &Lattice) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(self.step);
        self.step += 1;
        lattice
            .canonical_modes()
            .iter()
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im) * FRAC_1_SQRT_2
            })
            .collect()
    }
}

/// Builds a real field from per-canonical-mode values scaled by `amp[idx]`.
pub(crate) fn assemble(lattice: &Arc<Lattice>, normals: &[Complex64], amp: &[f64]) -> SpectralField {
    let mut f = SpectralField::zeros(lattice);
    let coeffs = f.coeffs_mut();
    for (&(idx, c), xi) in lattice.canonical_modes().iter().zip(normals) {
        let a = xi * amp[idx];
        coeffs[idx] = a;
        coeffs[c] = a.conj();
    }
    f
}

/// Wiener increment over `dt`: independent complex Gaussians with `E|a_k|^2 = q_k dt`.
pub fn wiener_increment(stream: &mut NoiseStream, model: &NoiseModel, dt: f64) -> Result<SpectralField> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    let lattice = model.lattice();
    let normals = stream.next_normals(lattice);
    let amp: Vec<f64> = model.variances().iter().map(|q| (q * dt).sqrt()).collect();
    Ok(assemble(lattice, &normals, &amp))
}

/// Per-mode factors of the exact OU transition over one step.
#[derive(Clone, Debug)]
pub struct OuFactors {
    /// `exp(-nu gamma_k dt)`
    pub decay: Vec<f64>,
    /// `sqrt(q_k (1 - exp(-2 nu gamma_k dt)) / (2 nu gamma_k))`
    pub sigma: Vec<f64>,
}

impl OuFactors {
    pub fn new(model: &NoiseModel, nu: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
        }
        if !(nu > 0.0) {
            return Err(Error::Domain(format!("viscosity must be > 0, got {nu}")));
        }
        let lattice = model.lattice();
        let mut decay = vec![0.0; lattice.size()];
        let mut sigma = vec![0.0; lattice.size()];
        for idx in 0..lattice.size() {
            let g = lattice.gamma(idx);
            decay[idx] = (-nu * g * dt).exp();
            let q = model.variances()[idx];
            if q > 0.0 {
                let rate = 2.0 * nu * g;
                sigma[idx] = (q * -(-rate * dt).exp_m1() / rate).sqrt();
            }
        }
        Ok(OuFactors { decay, sigma })
    }
}

/// Exact OU update `a_k <- exp(-nu gamma dt) a_k + eta_k` of the stochastic
/// convolution, with `E|eta_k|^2 = q_k (1 - exp(-2 nu gamma dt)) / (2 nu gamma)`.
pub fn ou_increment(
    current: &SpectralField,
    stream: &mut NoiseStream,
    model: &NoiseModel,
    nu: f64,
    dt: f64,
) -> Result<SpectralField> {
    current.check_same_lattice(&SpectralField::zeros(model.lattice()))?;
    let factors = OuFactors::new(model, nu, dt)?;
    let normals = stream.next_normals(model.lattice());
    let noise = assemble(model.lattice(), &normals, &factors.sigma);
    let mut next = current.clone();
    for (idx, a) in next.coeffs_mut().iter_mut().enumerate() {
        *a = *a * factors.decay[idx] + noise.coeffs()[idx];
    }
    Ok(next)
}

/// One row of [`SpectrumReport`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow {
    pub k: Wavevector,
    pub gamma: f64,
    pub q: f64,
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    /// Forced modes sorted by `(gamma, k1, k2)`.
    pub rows: Vec<SpectrumRow>,
    pub trace_q: f64,
    pub trace_aq: f64,
    pub alpha0: AdmissibleAlpha,
    /// True when `Tr(AQ)` is finite only because of the lattice truncation.
    pub trace_aq_diverges_in_continuum: bool,
}

pub fn spectrum_report(model: &NoiseModel) -> SpectrumReport {
    let lattice = model.lattice();
    let mut rows: Vec<SpectrumRow> = (0..lattice.size())
        .filter(|&i| model.variances()[i] > 0.0)
        .map(|i| SpectrumRow {
            k: lattice.wavevector(i),
            gamma: lattice.gamma(i),
            q: model.variances()[i],
        })
        .collect();
    rows.sort_by(|a, b| {
        a.gamma
            .total_cmp(&b.gamma)
            .then(a.k.cmp(&b.k))
    });
    let alpha0 = model.admissible_alpha();
    let diverges = matches!(alpha0, AdmissibleAlpha::Below(b) if b <= 0.5);
    SpectrumReport {
        rows,
        trace_q: model.trace_q(),
        trace_aq: model.trace_aq(),
        alpha0,
        trace_aq_diverges_in_continuum: diverges,
    }
}
