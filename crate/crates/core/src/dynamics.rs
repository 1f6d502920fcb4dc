//! Time integration of the coupled pair
//!
//! ```text
//! du + [nu A u + B(u, u) + lambda B(w, u)] dt = dW1
//! dw + [nu A w + B(u, w) + lambda B(w, w)] dt = dW2
//! ```
//!
//! with an exponential Euler-Maruyama scheme: the Stokes part is integrated
//! exactly, the noise enters through the exact OU transition, and the
//! advection is explicit:
//!
//! ```text
//! a_{n+1} = exp(-nu gamma dt) (a_n - dt N(a_n)) + sigma eta_n
//! ```
//!
//! The scheme is affine in (drift, noise), so the algebraic reductions of the
//! continuous system (`q = u + lambda w`, `v = lambda w`) hold step by step.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::{assemble, Component, NoiseModel, NoiseSpec, NoiseStream, OuFactors, StreamId};
use crate::spectral::{advect, Lattice, SpectralField};

/// CFL number above which a warning is logged.
pub const CFL_WARN: f64 = 0.5;
/// CFL number above which the step is rejected.
pub const CFL_REJECT: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Zero,
    /// Gaussian field with `E|a_k|^2 ~ gamma_k^-slope`, rescaled to `energy`.
    Random { energy: f64, slope: f64, seed: u64 },
}

impl InitialCondition {
    pub fn build(&self, lattice: &Arc<Lattice>) -> SpectralField {
        match *self {
            InitialCondition::Zero => SpectralField::zeros(lattice),
            InitialCondition::Random { energy, slope, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = SpectralField::gaussian(lattice, &mut rng, |_, g| g.powf(-slope));
                let e = f.energy();
                if e > 0.0 {
                    f.scaled((energy / e).sqrt())
                } else {
                    f
                }
            }
        }
    }
}

/// Discard policy for the initial transient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BurnIn {
    Fixed { duration: f64 },
    /// `min(20% of T, 50 eddy turnovers)` with the turnover time
    /// `1 / sqrt(<|u|_V^2>)` measured on a pilot window of 5% of `T`.
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub nu: f64,
    pub lambda: f64,
    pub dt: f64,
    /// Horizon `T`.
    pub t_end: f64,
    pub n: usize,
    pub length: f64,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub replica: u32,
    /// Mixed into the stream identities when paths are not shared across lambda.
    pub lambda_index: Option<u32>,
    pub burn_in: BurnIn,
    /// Observation cadence in steps.
    pub output_every: u64,
    /// Checkpoint cadence in steps (`None` disables checkpoints).
    pub checkpoint_every: Option<u64>,
    /// `false` drops the advection terms (linear OU dynamics).
    pub nonlinear: bool,
    pub initial_u: InitialCondition,
    pub initial_w: InitialCondition,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            nu: 0.05,
            lambda: 0.0,
            dt: 0.01,
            t_end: 1.0,
            n: 64,
            length: 2.0 * std::f64::consts::PI,
            noise: NoiseSpec::lowest_modes(4, 0.005),
            seed: 1,
            replica: 0,
            lambda_index: None,
            burn_in: BurnIn::Fixed { duration: 0.0 },
            output_every: 10,
            checkpoint_every: None,
            nonlinear: true,
            initial_u: InitialCondition::Zero,
            initial_w: InitialCondition::Zero,
        }
    }
}

impl SimulationConfig {
    /// All violations, not only the first.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            errs.push(format!("simulation.nu must be > 0, got {}", self.nu));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            errs.push(format!("simulation.dt must be > 0, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            errs.push(format!("simulation.t_end must be >= 0, got {}", self.t_end));
        }
        if !self.lambda.is_finite() {
            errs.push(format!("simulation.lambda must be finite, got {}", self.lambda));
        }
        if self.n < 16 || !self.n.is_power_of_two() {
            errs.push(format!(
                "simulation.n must be a power of two >= 16, got {}",
                self.n
            ));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            errs.push(format!("simulation.length must be > 0, got {}", self.length));
        }
        if self.output_every == 0 {
            errs.push("simulation.output_every must be >= 1".into());
        }
        if self.checkpoint_every == Some(0) {
            errs.push("simulation.checkpoint_every must be >= 1 when set".into());
        }
        if let BurnIn::Fixed { duration } = self.burn_in {
            if !(duration >= 0.0) {
                errs.push(format!("simulation.burn_in must be >= 0, got {duration}"));
            }
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn total_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    pub fn streams(&self) -> StreamPair {
        StreamPair::new(self.seed, self.replica, self.lambda_index)
    }
}

/// The state `(u, w)` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairState {
    pub u: SpectralField,
    pub w: SpectralField,
    pub t: f64,
}

impl PairState {
    pub fn zeros(lattice: &Arc<Lattice>) -> Self {
        PairState {
            u: SpectralField::zeros(lattice),
            w: SpectralField::zeros(lattice),
            t: 0.0,
        }
    }

    /// `|u|_H^2 + |w|_H^2`.
    pub fn energy(&self) -> f64 {
        self.u.energy() + self.w.energy()
    }

    pub fn enstrophy(&self) -> f64 {
        self.u.enstrophy() + self.w.enstrophy()
    }
}

/// The two forcing streams of one trajectory.
#[derive(Clone, Debug)]
pub struct StreamPair {
    pub w1: NoiseStream,
    pub w2: NoiseStream,
}

impl StreamPair {
    pub fn new(seed: u64, replica: u32, lambda_index: Option<u32>) -> Self {
        let id = |component| StreamId {
            component,
            replica,
            lambda_index,
        };
        StreamPair {
            w1: NoiseStream::new(seed, id(Component::W1)),
            w2: NoiseStream::new(seed, id(Component::W2)),
        }
    }

    pub fn position(&self) -> u64 {
        self.w1.position()
    }

    pub fn set_position(&mut self, step: u64) {
        self.w1.set_position(step);
        self.w2.set_position(step);
    }
}

/// Coupled drift `B_lambda((u, w), (u, w))`, both components advected by `u + lambda w`.
pub fn coupled_drift(u: &SpectralField, w: &SpectralField, lambda: f64) -> Result<(SpectralField, SpectralField)> {
    let adv = u.axpy(lambda, w)?;
    let mut terms = advect(&adv, &[u, w])?.terms.into_iter();
    Ok((terms.next().expect("two terms"), terms.next().expect("two terms")))
}

/// Precomputed stepping operator for one configuration.
#[derive(Debug)]
pub struct Integrator {
    cfg: SimulationConfig,
    lattice: Arc<Lattice>,
    noise: NoiseModel,
    factors: OuFactors,
    warned: AtomicBool,
}

impl Clone for Integrator {
    fn clone(&self) -> Self {
        Integrator {
            cfg: self.cfg.clone(),
            lattice: Arc::clone(&self.lattice),
            noise: self.noise.clone(),
            factors: self.factors.clone(),
            warned: AtomicBool::new(self.warned.load(Ordering::Relaxed)),
        }
    }
}

impl Integrator {
    pub fn new(cfg: &SimulationConfig) -> Result<Self> {
        let mut errs = cfg.violations();
        let lattice = Lattice::new(cfg.n, cfg.length);
        let noise = match &lattice {
            Ok(l) => match NoiseModel::new(l, cfg.noise.clone()) {
                Ok(m) => Some(m),
                Err(Error::Config(e)) => {
                    errs.extend(e);
                    None
                }
                Err(e) => return Err(e),
            },
            Err(_) => None,
        };
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        let lattice = lattice?;
        let noise = noise.expect("validated");
        let factors = OuFactors::new(&noise, cfg.nu, cfg.dt)?;
        Ok(Integrator {
            cfg: cfg.clone(),
            lattice,
            noise,
            factors,
            warned: AtomicBool::new(false),
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.cfg
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    fn check_cfl(&self, max_speed: f64, t: f64) -> Result<()> {
        let cfl = self.cfg.dt * max_speed / self.lattice.spacing();
        if cfl > CFL_REJECT {
            return Err(Error::StepRejected {
                time: t,
                cfl,
                limit: CFL_REJECT,
            });
        }
        if cfl > CFL_WARN && !self.warned.swap(true, Ordering::Relaxed) {
            log::warn!(
                "CFL number {cfl:.3} exceeds {CFL_WARN} at t={t:.4}; reduce dt (steps are rejected above {CFL_REJECT})"
            );
        }
        Ok(())
    }

    fn advance(
        &self,
        a: &SpectralField,
        drift: Option<&SpectralField>,
        noise: &SpectralField,
    ) -> SpectralField {
        let dt = self.cfg.dt;
        let mut next = a.clone();
        let coeffs = next.coeffs_mut();
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let mut x = *c;
            if let Some(d) = drift {
                x -= d.coeffs()[idx] * dt;
            }
            *c = x * self.factors.decay[idx] + noise.coeffs()[idx];
        }
        next
    }

    fn noise_field(&self, xi1: &[Complex64], xi2: &[Complex64], s1: f64, s2: f64) -> SpectralField {
        let combined: Vec<Complex64> = xi1.iter().zip(xi2).map(|(a, b)| a * s1 + b * s2).collect();
        assemble(&self.lattice, &combined, &self.factors.sigma)
    }

    fn blow_up(state: &PairState, t: f64) -> Error {
        let max_abs = state.u.max_abs().max(state.w.max_abs());
        Error::BlowUp {
            time: t,
            max_abs,
            last_checkpoint: None,
        }
    }

    /// One step of the coupled pair at the configured `lambda`.
    pub fn step_pair(&self, state: &PairState, streams: &mut StreamPair) -> Result<PairState> {
        self.step_pair_with(state, streams, self.cfg.lambda, (1.0, 1.0))
    }

    /// One pair step with an explicit coupling and per-component noise scales.
    /// `(coupling, (1, lambda))` with coupling 1 integrates the symmetric `(u, v)` form.
    pub fn step_pair_with(
        &self,
        state: &PairState,
        streams: &mut StreamPair,
        coupling: f64,
        scales: (f64, f64),
    ) -> Result<PairState> {
        let t = state.t + self.cfg.dt;
        let drift = if self.cfg.nonlinear {
            let adv = state.u.axpy(coupling, &state.w)?;
            let out = advect(&adv, &[&state.u, &state.w])?;
            self.check_cfl(out.max_speed, state.t)?;
            let mut it = out.terms.into_iter();
            Some((it.next().expect("u term"), it.next().expect("w term")))
        } else {
            None
        };
        let xi1 = streams.w1.next_normals(&self.lattice);
        let xi2 = streams.w2.next_normals(&self.lattice);
        let n1 = self.noise_field(&xi1, &xi2, scales.0, 0.0);
        let n2 = self.noise_field(&xi1, &xi2, 0.0, scales.1);
        let next = PairState {
            u: self.advance(&state.u, drift.as_ref().map(|d| &d.0), &n1),
            w: self.advance(&state.w, drift.as_ref().map(|d| &d.1), &n2),
            t,
        };
        if !(next.u.is_finite() && next.w.is_finite()) {
            return Err(Self::blow_up(state, t));
        }
        Ok(next)
    }

    /// One step of the single-field equation `du + [nu A u + B(u,u)] dt = s1 dW1 + s2 dW2`,
    /// consuming the same increments as [`Integrator::step_pair`].
    pub fn step_single(
        &self,
        u: &SpectralField,
        t: f64,
        streams: &mut StreamPair,
        scales: (f64, f64),
    ) -> Result<SpectralField> {
        let drift = if self.cfg.nonlinear {
            let out = advect(u, &[u])?;
            self.check_cfl(out.max_speed, t)?;
            out.terms.into_iter().next()
        } else {
            None
        };
        let xi1 = streams.w1.next_normals(&self.lattice);
        let xi2 = streams.w2.next_normals(&self.lattice);
        let noise = self.noise_field(&xi1, &xi2, scales.0, scales.1);
        let next = self.advance(u, drift.as_ref(), &noise);
        if !next.is_finite() {
            return Err(Error::BlowUp {
                time: t + self.cfg.dt,
                max_abs: u.max_abs(),
                last_checkpoint: None,
            });
        }
        Ok(next)
    }

    pub fn initial_state(&self) -> PairState {
        PairState {
            u: self.cfg.initial_u.build(&self.lattice),
            w: self.cfg.initial_w.build(&self.lattice),
            t: 0.0,
        }
    }
}

/// Runs the pair and the single field `q = u + lambda w` forced by `dW1 + lambda dW2`
/// side by side on identical increments; returns `max_n |q_n - (u_n + lambda w_n)|_H`.
pub fn reduction_oracle(cfg: &SimulationConfig, n_steps: u64) -> Result<f64> {
    let integ = Integrator::new(cfg)?;
    let lambda = cfg.lambda;
    let mut pair = integ.initial_state();
    let mut q = pair.u.axpy(lambda, &pair.w)?;
    let mut s_pair = cfg.streams();
    let mut s_single = cfg.streams();
    let mut worst: f64 = 0.0;
    for _ in 0..n_steps {
        let t = pair.t;
        pair = integ.step_pair(&pair, &mut s_pair)?;
        q = integ.step_single(&q, t, &mut s_single, (1.0, lambda))?;
        let recon = pair.u.axpy(lambda, &pair.w)?;
        worst = worst.max((&q - &recon).energy().sqrt());
    }
    Ok(worst)
}

/// Compares `(u^lambda, lambda w^lambda)` with a direct integration of the
/// symmetric system for `(u, v)` (coupling 1, noise `lambda dW2` on `v`).
/// Returns the largest pair H-distance over the run.
pub fn symmetric_form_oracle(cfg: &SimulationConfig, n_steps: u64) -> Result<f64> {
    let lambda = cfg.lambda;
    if lambda == 0.0 {
        return Err(Error::Domain(
            "the v = lambda w change of variables degenerates at lambda = 0".into(),
        ));
    }
    let integ = Integrator::new(cfg)?;
    let mut pair = integ.initial_state();
    let mut sym = PairState {
        u: pair.u.clone(),
        w: pair.w.scaled(lambda),
        t: 0.0,
    };
    let mut s_pair = cfg.streams();
    let mut s_sym = cfg.streams();
    let mut worst: f64 = 0.0;
    for _ in 0..n_steps {
        pair = integ.step_pair(&pair, &mut s_pair)?;
        sym = integ.step_pair_with(&sym, &mut s_sym, 1.0, (1.0, lambda))?;
        let du = (&pair.u - &sym.u).energy();
        let dv = (&pair.w.scaled(lambda) - &sym.w).energy();
        worst = worst.max((du + dv).sqrt());
    }
    Ok(worst)
}

/// Pathwise distance of one coupling value from the reference trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    /// `max_t |u^lambda(t) - u^lambda0(t)|_H`
    pub e_u: f64,
    /// `max_t |w^lambda(t) - w^lambda0(t)|_H`
    pub e_w: f64,
    /// Set when this run failed (blow-up or rejected step).
    pub failure: Option<String>,
}

/// Integrates every `lambda` in lock-step with the reference `lambda0` on the
/// same noise path and records sup-in-time H distances. Rows follow `lambdas`.
pub fn lambda_sweep(
    base: &SimulationConfig,
    lambda0: f64,
    lambdas: &[f64],
    n_steps: u64,
) -> Result<Vec<SweepRow>> {
    let mut reference_cfg = base.clone();
    reference_cfg.lambda = lambda0;
    reference_cfg.lambda_index = None;
    let reference = Integrator::new(&reference_cfg)?;

    struct Run {
        integ: Integrator,
        state: PairState,
        streams: StreamPair,
        row: SweepRow,
    }
    let mut runs = lambdas
        .iter()
        .map(|&lambda| {
            let mut cfg = reference_cfg.clone();
            cfg.lambda = lambda;
            let integ = Integrator::new(&cfg)?;
            let state = integ.initial_state();
            Ok(Run {
                integ,
                state,
                streams: cfg.streams(),
                row: SweepRow {
                    lambda,
                    e_u: 0.0,
                    e_w: 0.0,
                    failure: None,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ref_state = reference.initial_state();
    let mut ref_streams = reference_cfg.streams();
    for _ in 0..n_steps {
        ref_state = reference.step_pair(&ref_state, &mut ref_streams)?;
        let target = &ref_state;
        runs.par_iter_mut()
            .filter(|r| r.row.failure.is_none())
            .for_each(|r| match r.integ.step_pair(&r.state, &mut r.streams) {
                Ok(next) => {
                    r.row.e_u = r.row.e_u.max((&next.u - &target.u).energy().sqrt());
                    r.row.e_w = r.row.e_w.max((&next.w - &target.w).energy().sqrt());
                    r.state = next;
                }
                Err(e) => r.row.failure = Some(e.to_string()),
            });
    }
    Ok(runs.into_iter().map(|r| r.row).collect())
}

/// Receives the state at every observation point.
pub trait Observer {
    fn observe(&mut self, state: &PairState) -> Result<()>;
}

impl<F: FnMut(&PairState) -> Result<()>> Observer for F {
    fn observe(&mut self, state: &PairState) -> Result<()> {
        self(state)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub observations: u64,
    pub burn_in_steps: u64,
    pub steps: u64,
}

/// A trajectory with its stream positions; resumable from any step.
#[derive(Clone, Debug)]
pub struct Simulation {
    integ: Integrator,
    state: PairState,
    streams: StreamPair,
    step: u64,
    burn_in_steps: Option<u64>,
    last_checkpoint: Option<u64>,
}

impl Simulation {
    pub fn new(cfg: &SimulationConfig) -> Result<Self> {
        let integ = Integrator::new(cfg)?;
        let state = integ.initial_state();
        Ok(Self::from_parts(integ, state, 0, None))
    }

    /// Resumes at `step` with the given state (e.g. from a checkpoint).
    pub fn resume(cfg: &SimulationConfig, state: PairState, step: u64, burn_in_steps: Option<u64>) -> Result<Self> {
        let integ = Integrator::new(cfg)?;
        integ.lattice.check_same(state.u.lattice())?;
        Ok(Self::from_parts(integ, state, step, burn_in_steps))
    }

    fn from_parts(integ: Integrator, state: PairState, step: u64, burn_in_steps: Option<u64>) -> Self {
        let mut streams = integ.cfg.streams();
        streams.set_position(step);
        let burn_in_steps = burn_in_steps.or(match integ.cfg.burn_in {
            BurnIn::Fixed { duration } => Some((duration / integ.cfg.dt).round() as u64),
            BurnIn::Auto => None,
        });
        Simulation {
            integ,
            state,
            streams,
            step,
            burn_in_steps,
            last_checkpoint: None,
        }
    }

    pub fn state(&self) -> &PairState {
        &self.state
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn integrator(&self) -> &Integrator {
        &self.integ
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.integ.cfg
    }

    /// Burn-in length in steps, once known (auto burn-in resolves after the pilot window).
    pub fn burn_in_steps(&self) -> Option<u64> {
        self.burn_in_steps
    }

    pub fn step(&mut self) -> Result<()> {
        self.state = self
            .integ
            .step_pair(&self.state, &mut self.streams)
            .map_err(|e| match e {
                Error::BlowUp { time, max_abs, .. } => Error::BlowUp {
                    time,
                    max_abs,
                    last_checkpoint: self.last_checkpoint,
                },
                other => other,
            })?;
        self.step += 1;
        Ok(())
    }

    /// Runs to the configured horizon. Observers fire every `output_every`
    /// steps after burn-in; `checkpoint` fires every `checkpoint_every` steps.
    pub fn integrate(
        &mut self,
        observers: &mut [&mut dyn Observer],
        checkpoint: &mut dyn FnMut(&Simulation) -> Result<()>,
    ) -> Result<RunSummary> {
        let total = self.integ.cfg.total_steps();
        let every = self.integ.cfg.output_every;
        let pilot_len = ((total as f64) * 0.05).ceil().max(1.0) as u64;
        let mut pilot_sum = 0.0;
        let mut pilot_n = 0u64;
        let mut observations = 0u64;
        while self.step < total {
            self.step()?;
            if self.burn_in_steps.is_none() {
                pilot_sum += self.state.u.enstrophy();
                pilot_n += 1;
                if self.step >= pilot_len {
                    self.burn_in_steps = Some(auto_burn_in(
                        pilot_sum / pilot_n as f64,
                        total,
                        self.integ.cfg.dt,
                        self.step,
                    ));
                }
            }
            if let Some(b) = self.burn_in_steps {
                if self.step > b && (self.step - b).is_multiple_of(every) {
                    for obs in observers.iter_mut() {
                        obs.observe(&self.state)?;
                    }
                    observations += 1;
                }
            }
            if let Some(c) = self.integ.cfg.checkpoint_every {
                if self.step.is_multiple_of(c) {
                    checkpoint(self)?;
                    self.last_checkpoint = Some(self.step);
                }
            }
        }
        Ok(RunSummary {
            observations,
            burn_in_steps: self.burn_in_steps.unwrap_or(total),
            steps: self.step,
        })
    }
}

fn auto_burn_in(pilot_enstrophy: f64, total: u64, dt: f64, pilot_end: u64) -> u64 {
    let fifth = (0.2 * total as f64).round() as u64;
    let steps = if pilot_enstrophy > 0.0 {
        let turnover = 1.0 / pilot_enstrophy.sqrt();
        ((50.0 * turnover / dt).round() as u64).min(fifth)
    } else {
        fifth
    };
    steps.max(pilot_end)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SimulationConfig {
        SimulationConfig {
            n: 16,
            dt: 0.01,
            nu: 0.1,
            noise: NoiseSpec::lowest_modes(4, 0.01),
            ..Default::default()
        }
    }

    #[test]
    fn passive_component_without_noise_stays_zero() {
        let mut cfg = small_cfg();
        cfg.lambda = 0.0;
        cfg.initial_u = InitialCondition::Random {
            energy: 0.5,
            slope: 2.0,
            seed: 3,
        };
        // single-field NSE forced by W1 only
        let integ = Integrator::new(&cfg).unwrap();
        let mut streams = cfg.streams();
        let mut state = integ.initial_state();
        for _ in 0..50 {
            state = integ.step_pair_with(&state, &mut streams, 0.0, (1.0, 0.0)).unwrap();
        }
        assert_eq!(state.w.max_abs(), 0.0);
        assert!(state.u.energy() > 0.0);
    }

    #[test]
    fn large_viscosity_decays_geometrically() {
        let mut cfg = small_cfg();
        cfg.nu = 5.0;
        cfg.noise = NoiseSpec::silent();
        cfg.initial_u = InitialCondition::Random {
            energy: 1.0,
            slope: 1.0,
            seed: 1,
        };
        cfg.initial_w = cfg.initial_u.clone();
        let integ = Integrator::new(&cfg).unwrap();
        let mut streams = cfg.streams();
        let mut state = integ.initial_state();
        let mut prev = state.energy();
        for _ in 0..20 {
            state = integ.step_pair(&state, &mut streams).unwrap();
            let e = state.energy();
            assert!(e < prev * (-2.0 * 5.0 * 1.0 * 0.01f64).exp() * 1.01);
            prev = e;
        }
    }

    #[test]
    fn linear_single_step_is_semigroup() {
        let mut cfg = small_cfg();
        cfg.nonlinear = false;
        cfg.noise = NoiseSpec::silent();
        let integ = Integrator::new(&cfg).unwrap();
        let u = InitialCondition::Random {
            energy: 1.0,
            slope: 0.0,
            seed: 2,
        }
        .build(integ.lattice());
        let mut streams = cfg.streams();
        let next = integ.step_single(&u, 0.0, &mut streams, (1.0, 0.0)).unwrap();
        let expect = u.apply_semigroup(cfg.dt, cfg.nu).unwrap();
        assert!((&next - &expect).max_abs() < 1e-16);
    }

    #[test]
    fn reduction_is_bitwise_at_zero_coupling() {
        let mut cfg = small_cfg();
        cfg.lambda = 0.0;
        assert_eq!(reduction_oracle(&cfg, 50).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_oracle_rejects_zero_coupling() {
        let cfg = small_cfg();
        assert!(matches!(symmetric_form_oracle(&cfg, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn symmetric_form_identical_at_unit_coupling() {
        let mut cfg = small_cfg();
        cfg.lambda = 1.0;
        assert!(symmetric_form_oracle(&cfg, 50).unwrap() <= 1e-14);
    }

    #[test]
    fn sweep_reference_distance_is_zero() {
        let cfg = small_cfg();
        let rows = lambda_sweep(&cfg, 0.3, &[0.3], 30).unwrap();
        assert_eq!(rows[0].e_u, 0.0);
        assert_eq!(rows[0].e_w, 0.0);
    }

    #[test]
    fn zero_noise_zero_data_stays_zero() {
        let mut cfg = small_cfg();
        cfg.noise = NoiseSpec::silent();
        cfg.t_end = 0.2;
        cfg.output_every = 1;
        let mut sim = Simulation::new(&cfg).unwrap();
        let mut seen = 0;
        let mut obs = |s: &PairState| {
            assert_eq!(s.energy(), 0.0);
            seen += 1;
            Ok(())
        };
        let summary = sim.integrate(&mut [&mut obs], &mut |_| Ok(())).unwrap();
        assert_eq!(summary.observations, 20);
        assert_eq!(seen, 20);
    }

    #[test]
    fn cadence_beyond_horizon_yields_no_observations() {
        let mut cfg = small_cfg();
        cfg.t_end = 0.1;
        cfg.output_every = 1000;
        let mut sim = Simulation::new(&cfg).unwrap();
        let summary = sim.integrate(&mut [], &mut |_| Ok(())).unwrap();
        assert_eq!(summary.observations, 0);
        assert_eq!(summary.steps, 10);
        assert!(sim.state().u.is_finite());
    }

    #[test]
    fn violations_are_exhaustive() {
        let cfg = SimulationConfig {
            nu: -1.0,
            dt: 0.0,
            n: 12,
            output_every: 0,
            ..Default::default()
        };
        assert_eq!(cfg.violations().len(), 4);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let mut cfg = small_cfg();
        cfg.dt = 5.0;
        cfg.initial_u = InitialCondition::Random {
            energy: 10.0,
            slope: 0.0,
            seed: 1,
        };
        let integ = Integrator::new(&cfg).unwrap();
        let mut streams = cfg.streams();
        let err = integ.step_pair(&integ.initial_state(), &mut streams).unwrap_err();
        assert!(matches!(err, Error::StepRejected { .. }));
        assert_eq!(err.exit_code(), 2);
    }
}
