//! Scalar functionals of the pair state sampled along a trajectory.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{coupled_drift, Observer, PairState};
use crate::error::{Error, Result};
use crate::forcing::NoiseModel;
use crate::spectral::{transform_to_physical, PhysicalField, SpectralField};

use super::accumulator::{Accumulator, BatchPolicy};
use super::structure::{increment_moment, IncrementKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Part {
    U,
    W,
    Pair,
}

impl Part {
    fn tag(self) -> &'static str {
        match self {
            Part::U => "u",
            Part::W => "w",
            Part::Pair => "pair",
        }
    }
}

/// Panel entries. Moment observables (`h_*`, `v_*`) are evaluated on the pair `x = (u, w)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    /// `|x|_H^2`
    Energy(Part),
    /// `|x|_V^2`
    Enstrophy(Part),
    /// `|x|_{D(A)}^2`
    Palinstrophy(Part),
    /// `|x|_{D(A^{1/4})}^2`
    QuarterNorm(Part),
    /// `|x|_H^{p-2}`
    HPow(u32),
    /// `|x|_H^{p-2} |x|_V^2`
    HPowEnstrophy(u32),
    /// `|x|_H^{p-4} <Q x, x>`
    HPowNoise(u32),
    /// `|x|_V^{p-2}`
    VPow(u32),
    /// `|x|_V^{p-2} |x|_{D(A)}^2`
    VPowPalinstrophy(u32),
    /// `|x|_V^{p-4} <Q A x, A x>`
    VPowNoise(u32),
    /// `|x|_V^{p-2} <B_lambda(x, x), A x>`
    VPowTransfer(u32),
    /// Spatial mean of the longitudinal increment moment `(du . e)^p` at `m` grid steps.
    StructureU { p: u32, m: usize },
    StructureW { p: u32, m: usize },
    /// Constant 1.
    One,
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Observable::*;
        match *self {
            Energy(p) => write!(f, "energy_{}", p.tag()),
            Enstrophy(p) => write!(f, "enstrophy_{}", p.tag()),
            Palinstrophy(p) => write!(f, "palinstrophy_{}", p.tag()),
            QuarterNorm(p) => write!(f, "quarter_{}", p.tag()),
            HPow(p) => write!(f, "h_pow_{p}"),
            HPowEnstrophy(p) => write!(f, "h_pow_enstrophy_{p}"),
            HPowNoise(p) => write!(f, "h_pow_noise_{p}"),
            VPow(p) => write!(f, "v_pow_{p}"),
            VPowPalinstrophy(p) => write!(f, "v_pow_palinstrophy_{p}"),
            VPowNoise(p) => write!(f, "v_pow_noise_{p}"),
            VPowTransfer(p) => write!(f, "v_pow_transfer_{p}"),
            StructureU { p, m } => write!(f, "s{p}_u_m{m}"),
            StructureW { p, m } => write!(f, "s{p}_w_m{m}"),
            One => write!(f, "one"),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use Observable::*;
        let bad = || Error::config(format!("unknown observable '{s}'"));
        let part = |t: &str| match t {
            "u" => Ok(Part::U),
            "w" => Ok(Part::W),
            "pair" => Ok(Part::Pair),
            _ => Err(bad()),
        };
        let num = |t: &str| t.parse::<u32>().map_err(|_| bad());
        if s == "one" {
            return Ok(One);
        }
        for (prefix, ctor) in [
            ("energy_", Energy as fn(Part) -> Observable),
            ("enstrophy_", Enstrophy),
            ("palinstrophy_", Palinstrophy),
            ("quarter_", QuarterNorm),
        ] {
            if let Some(rest) = s.strip_prefix(prefix) {
                return Ok(ctor(part(rest)?));
            }
        }
        // longest prefixes first
        for (prefix, ctor) in [
            ("h_pow_enstrophy_", HPowEnstrophy as fn(u32) -> Observable),
            ("h_pow_noise_", HPowNoise),
            ("h_pow_", HPow),
            ("v_pow_palinstrophy_", VPowPalinstrophy),
            ("v_pow_noise_", VPowNoise),
            ("v_pow_transfer_", VPowTransfer),
            ("v_pow_", VPow),
        ] {
            if let Some(rest) = s.strip_prefix(prefix) {
                return Ok(ctor(num(rest)?));
            }
        }
        if let Some(rest) = s.strip_prefix('s') {
            let (p, rest) = rest.split_once('_').ok_or_else(bad)?;
            let (field, m) = rest.split_once("_m").ok_or_else(bad)?;
            let p = num(p)?;
            let m = m.parse::<usize>().map_err(|_| bad())?;
            return match field {
                "u" => Ok(StructureU { p, m }),
                "w" => Ok(StructureW { p, m }),
                _ => Err(bad()),
            };
        }
        Err(bad())
    }
}

/// Moment panel used by the identity checks for the given orders.
pub fn identity_panel(orders: &[u32]) -> Vec<Observable> {
    let mut out = vec![
        Observable::One,
        Observable::Energy(Part::U),
        Observable::Energy(Part::W),
        Observable::Energy(Part::Pair),
        Observable::Enstrophy(Part::U),
        Observable::Enstrophy(Part::W),
        Observable::Enstrophy(Part::Pair),
        Observable::Palinstrophy(Part::Pair),
        Observable::QuarterNorm(Part::Pair),
    ];
    for &p in orders {
        out.extend([
            Observable::HPow(p),
            Observable::HPowEnstrophy(p),
            Observable::HPowNoise(p),
            Observable::VPow(p),
            Observable::VPowPalinstrophy(p),
            Observable::VPowNoise(p),
            Observable::VPowTransfer(p),
        ]);
    }
    out
}

/// `r^{e}` with `0^e = 0` for the singular exponents that only appear
/// multiplied by something vanishing at least as fast.
fn pow_or_zero(r: f64, e: f64) -> f64 {
    if r == 0.0 && e < 0.0 {
        0.0
    } else {
        r.powf(e)
    }
}

/// Evaluates a panel on one state.
pub struct Evaluator {
    panel: Vec<Observable>,
    variances: Vec<f64>,
    lambda: f64,
}

impl Evaluator {
    pub fn new(panel: Vec<Observable>, noise: &NoiseModel, lambda: f64) -> Self {
        Evaluator {
            panel,
            variances: noise.variances().to_vec(),
            lambda,
        }
    }

    pub fn panel(&self) -> &[Observable] {
        &self.panel
    }

    pub fn names(&self) -> Vec<String> {
        self.panel.iter().map(|o| o.to_string()).collect()
    }

    pub fn evaluate(&self, state: &PairState) -> Result<Vec<f64>> {
        let (u, w) = (&state.u, &state.w);
        let gam = u.lattice().gammas();
        let energy = u.energy() + w.energy();
        let enstrophy = u.enstrophy() + w.enstrophy();
        let noise_h = u.weighted_norm_sq(&self.variances) + w.weighted_norm_sq(&self.variances);
        let needs_v_noise = self.panel.iter().any(|o| matches!(o, Observable::VPowNoise(_)));
        let noise_v = if needs_v_noise {
            let wts: Vec<f64> = self
                .variances
                .iter()
                .zip(gam)
                .map(|(q, g)| q * g * g)
                .collect();
            u.weighted_norm_sq(&wts) + w.weighted_norm_sq(&wts)
        } else {
            0.0
        };
        let transfer = if self.panel.iter().any(|o| matches!(o, Observable::VPowTransfer(_))) {
            let (bu, bw) = coupled_drift(u, w, self.lambda)?;
            bu.inner(&u.apply_stokes())? + bw.inner(&w.apply_stokes())?
        } else {
            0.0
        };
        let needs_grid = self
            .panel
            .iter()
            .any(|o| matches!(o, Observable::StructureU { .. } | Observable::StructureW { .. }));
        let grids: Option<(PhysicalField, PhysicalField)> =
            needs_grid.then(|| (transform_to_physical(u), transform_to_physical(w)));
        let pick = |part: Part, f: &dyn Fn(&SpectralField) -> f64| match part {
            Part::U => f(u),
            Part::W => f(w),
            Part::Pair => f(u) + f(w),
        };
        let mut out = Vec::with_capacity(self.panel.len());
        for obs in &self.panel {
            use Observable::*;
            let v = match *obs {
                Energy(p) => pick(p, &|f| f.energy()),
                Enstrophy(p) => pick(p, &|f| f.enstrophy()),
                Palinstrophy(p) => pick(p, &|f| f.sobolev_norm_sq(1.0)),
                QuarterNorm(p) => pick(p, &|f| f.sobolev_norm_sq(0.25)),
                HPow(p) => pow_or_zero(energy, (p as f64 - 2.0) / 2.0),
                HPowEnstrophy(p) => pow_or_zero(energy, (p as f64 - 2.0) / 2.0) * enstrophy,
                HPowNoise(p) => pow_or_zero(energy, (p as f64 - 4.0) / 2.0) * noise_h,
                VPow(p) => pow_or_zero(enstrophy, (p as f64 - 2.0) / 2.0),
                VPowPalinstrophy(p) => {
                    pow_or_zero(enstrophy, (p as f64 - 2.0) / 2.0)
                        * (u.sobolev_norm_sq(1.0) + w.sobolev_norm_sq(1.0))
                }
                VPowNoise(p) => pow_or_zero(enstrophy, (p as f64 - 4.0) / 2.0) * noise_v,
                VPowTransfer(p) => pow_or_zero(enstrophy, (p as f64 - 2.0) / 2.0) * transfer,
                StructureU { p, m } => increment_moment(&grids.as_ref().expect("grid").0, IncrementKind::Longitudinal, m, p),
                StructureW { p, m } => increment_moment(&grids.as_ref().expect("grid").1, IncrementKind::Longitudinal, m, p),
                One => 1.0,
            };
            out.push(v);
        }
        Ok(out)
    }
}

/// Observer feeding an [`Accumulator`].
pub struct StatsObserver {
    pub evaluator: Evaluator,
    pub acc: Accumulator,
}

impl StatsObserver {
    pub fn new(panel: Vec<Observable>, noise: &NoiseModel, lambda: f64, policy: BatchPolicy) -> Self {
        let evaluator = Evaluator::new(panel, noise, lambda);
        let acc = Accumulator::new(evaluator.names(), policy);
        StatsObserver { evaluator, acc }
    }
}

impl Observer for StatsObserver {
    fn observe(&mut self, state: &PairState) -> Result<()> {
        let v = self.evaluator.evaluate(state)?;
        self.acc.push(&v);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::NoiseSpec;
    use crate::spectral::Lattice;

    #[test]
    fn names_round_trip() {
        let mut panel = identity_panel(&[2, 4]);
        panel.push(Observable::StructureU { p: 2, m: 3 });
        panel.push(Observable::StructureW { p: 6, m: 12 });
        for o in panel {
            assert_eq!(o.to_string().parse::<Observable>().unwrap(), o);
        }
        assert!("h_pow_x".parse::<Observable>().is_err());
    }

    #[test]
    fn zero_state_gives_zero_norms() {
        let lat = Lattice::new(16, 1.0).unwrap();
        let noise = NoiseModel::new(&lat, NoiseSpec::lowest_modes(4, 0.1)).unwrap();
        let mut panel = identity_panel(&[2, 4, 6]);
        panel.push(Observable::StructureU { p: 3, m: 2 });
        let ev = Evaluator::new(panel.clone(), &noise, 0.5);
        let vals = ev.evaluate(&PairState::zeros(&lat)).unwrap();
        for (o, v) in panel.iter().zip(vals) {
            let expect = match o {
                Observable::One | Observable::HPow(2) | Observable::VPow(2) => 1.0,
                _ => 0.0,
            };
            assert_eq!(v, expect, "{o}");
        }
    }
}
