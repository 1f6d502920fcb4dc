//! Binary checkpoints: a fixed little-endian header followed by the raw
//! coefficient arrays of `u` and `w`.
//!
//! ```text
//! magic "NS2DCKPT" | version u32 | n u64 | length f64 | nu f64 | lambda f64
//! | t f64 | seed u64 | step u64 | replica u32 | lambda_index i64 (-1: none)
//! | noise fingerprint u64 | burn-in steps i64 (-1: unresolved)
//! | u: n*n x (re f64, im f64) | w: n*n x (re f64, im f64)
//! ```

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::dynamics::{PairState, Simulation, SimulationConfig};
use crate::error::{Error, Result};
use crate::spectral::{Lattice, SpectralField};

const MAGIC: &[u8; 8] = b"NS2DCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointHeader {
    pub version: u32,
    pub n: usize,
    pub length: f64,
    pub nu: f64,
    pub lambda: f64,
    pub t: f64,
    pub seed: u64,
    /// Stream position: number of steps taken.
    pub step: u64,
    pub replica: u32,
    pub lambda_index: Option<u32>,
    pub noise_fingerprint: u64,
    pub burn_in_steps: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub state: PairState,
}

impl Checkpoint {
    pub fn capture(sim: &Simulation) -> Checkpoint {
        let cfg = sim.config();
        Checkpoint {
            header: CheckpointHeader {
                version: CHECKPOINT_VERSION,
                n: cfg.n,
                length: cfg.length,
                nu: cfg.nu,
                lambda: cfg.lambda,
                t: sim.state().t,
                seed: cfg.seed,
                step: sim.step_index(),
                replica: cfg.replica,
                lambda_index: cfg.lambda_index,
                noise_fingerprint: sim.integrator().noise().fingerprint(),
                burn_in_steps: sim.burn_in_steps(),
            },
            state: sim.state().clone(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut b = Vec::with_capacity(96 + 32 * h.n * h.n);
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&h.version.to_le_bytes());
        b.extend_from_slice(&(h.n as u64).to_le_bytes());
        for x in [h.length, h.nu, h.lambda, h.t] {
            b.extend_from_slice(&x.to_le_bytes());
        }
        b.extend_from_slice(&h.seed.to_le_bytes());
        b.extend_from_slice(&h.step.to_le_bytes());
        b.extend_from_slice(&h.replica.to_le_bytes());
        b.extend_from_slice(&h.lambda_index.map_or(-1i64, |i| i as i64).to_le_bytes());
        b.extend_from_slice(&h.noise_fingerprint.to_le_bytes());
        b.extend_from_slice(&h.burn_in_steps.map_or(-1i64, |s| s as i64).to_le_bytes());
        for f in [&self.state.u, &self.state.w] {
            for z in f.coeffs() {
                b.extend_from_slice(&z.re.to_le_bytes());
                b.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let n = r.u64()? as usize;
        let length = r.f64()?;
        let nu = r.f64()?;
        let lambda = r.f64()?;
        let t = r.f64()?;
        let seed = r.u64()?;
        let step = r.u64()?;
        let replica = r.u32()?;
        let lambda_index = r.i64()?;
        let noise_fingerprint = r.u64()?;
        let burn_in = r.i64()?;
        let lattice = Lattice::new(n, length).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let u = read_field(&mut r, &lattice)?;
        let w = read_field(&mut r, &lattice)?;
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes after coefficient arrays".into()));
        }
        Ok(Checkpoint {
            header: CheckpointHeader {
                version,
                n,
                length,
                nu,
                lambda,
                t,
                seed,
                step,
                replica,
                lambda_index: (lambda_index >= 0).then_some(lambda_index as u32),
                noise_fingerprint,
                burn_in_steps: (burn_in >= 0).then_some(burn_in as u64),
            },
            state: PairState { u, w, t },
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Checkpoint> {
        let mut buf = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| Error::io(path, e))?;
        Checkpoint::from_bytes(&buf).map_err(|e| match e {
            Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Resumes the run described by `cfg` from this checkpoint; the
    /// configuration must match the header.
    pub fn resume(&self, cfg: &SimulationConfig) -> Result<Simulation> {
        let h = &self.header;
        let mut bad = Vec::new();
        if h.n != cfg.n || h.length != cfg.length {
            bad.push("lattice");
        }
        if h.nu != cfg.nu {
            bad.push("nu");
        }
        if h.lambda != cfg.lambda {
            bad.push("lambda");
        }
        if h.seed != cfg.seed || h.replica != cfg.replica || h.lambda_index != cfg.lambda_index {
            bad.push("noise streams");
        }
        let mismatch = |bad: &[&str]| {
            Error::Checkpoint(format!(
                "checkpoint does not match the configuration ({})",
                bad.join(", ")
            ))
        };
        if bad.contains(&"lattice") {
            return Err(mismatch(&bad));
        }
        let sim = Simulation::resume(cfg, self.state.clone(), h.step, h.burn_in_steps)?;
        if sim.integrator().noise().fingerprint() != h.noise_fingerprint {
            bad.push("noise model");
        }
        if !bad.is_empty() {
            return Err(mismatch(&bad));
        }
        Ok(sim)
    }
}

fn read_field(r: &mut Reader<'_>, lattice: &Arc<Lattice>) -> Result<SpectralField> {
    let mut coeffs = Vec::with_capacity(lattice.size());
    for _ in 0..lattice.size() {
        let re = r.f64()?;
        let im = r.f64()?;
        coeffs.push(Complex64::new(re, im));
    }
    let f = SpectralField::from_coeffs(lattice, coeffs.clone())?;
    if f.coeffs() != coeffs.as_slice() {
        return Err(Error::Checkpoint("coefficients on inactive modes".into()));
    }
    Ok(f)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Checkpoint("truncated checkpoint".into()))?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::InitialCondition;

    #[test]
    fn bytes_round_trip_exactly() {
        let cfg = SimulationConfig {
            n: 16,
            lambda: 0.3,
            initial_u: InitialCondition::Random {
                energy: 0.4,
                slope: 1.0,
                seed: 2,
            },
            ..Default::default()
        };
        let mut sim = Simulation::new(&cfg).unwrap();
        for _ in 0..5 {
            sim.step().unwrap();
        }
        let c = Checkpoint::capture(&sim);
        let back = Checkpoint::from_bytes(&c.to_bytes()).unwrap();
        assert_eq!(back, c);
        assert!(Checkpoint::from_bytes(&c.to_bytes()[..100]).is_err());
    }

    #[test]
    fn mismatched_config_is_rejected() {
        let cfg = SimulationConfig {
            n: 16,
            ..Default::default()
        };
        let c = Checkpoint::capture(&Simulation::new(&cfg).unwrap());
        let other = SimulationConfig { nu: 0.5, ..cfg };
        assert!(matches!(c.resume(&other), Err(Error::Checkpoint(_))));
    }
}
