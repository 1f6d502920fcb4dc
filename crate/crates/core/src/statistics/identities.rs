//! Stationary moment identities checked on time averages.
//!
//! For the pair `x = (u, w)` with `Q` acting on each component,
//! Ito's formula applied to `|x|_H^p` and `|x|_V^p` gives, at stationarity,
//!
//! ```text
//! nu E[|x|^{p-2} |x|_V^2]      = TrQ  E|x|^{p-2}   + (p-2)/2 E[|x|^{p-4} <Qx, x>]
//! nu E[|x|_V^{p-2} |x|_{D(A)}^2] = TrAQ E|x|_V^{p-2} + (p-2)/2 E[|x|_V^{p-4} <QAx, Ax>]
//!                                  - E[|x|_V^{p-2} <B_lambda(x, x), A x>]
//! ```
//!
//! The `Stated` form replaces the right-hand sides by `(p-1) TrQ E|x|^{p-2}`
//! and `(p-1) TrAQ E|x|_V^{p-2}`. Both coincide at `p = 2` for the H-version.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::NoiseModel;

use super::accumulator::Accumulator;
use super::observables::{Observable, Part};

/// Batches required before a standard error is trusted.
pub const MIN_BATCHES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentForm {
    /// `(p - 1) TrQ` closure.
    Stated,
    /// Full Ito balance including the quadratic-variation and transfer terms.
    Ito,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    /// Batch-means standard error of `lhs - rhs`.
    pub stderr: f64,
    pub pass: bool,
}

impl IdentityReport {
    fn new(name: String, lhs: f64, rhs: f64, stderr: f64, rel_tol: f64) -> Self {
        let diff = (lhs - rhs).abs();
        let rel_err = if rhs != 0.0 {
            diff / rhs.abs()
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        IdentityReport {
            name,
            lhs,
            rhs,
            rel_err,
            stderr,
            pass: diff <= (rel_tol * rhs.abs()).max(3.0 * stderr),
        }
    }
}

/// Noise traces and viscosity entering the right-hand sides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Balance {
    pub nu: f64,
    pub trace_q: f64,
    pub trace_aq: f64,
}

impl Balance {
    pub fn new(noise: &NoiseModel, nu: f64) -> Self {
        Balance {
            nu,
            trace_q: noise.trace_q(),
            trace_aq: noise.trace_aq(),
        }
    }
}

fn name(o: Observable) -> String {
    o.to_string()
}

fn check(
    acc: &Accumulator,
    label: String,
    lhs: Observable,
    rhs: &[(Observable, f64)],
    rel_tol: f64,
) -> Result<IdentityReport> {
    let lhs_name = name(lhs);
    let lhs_v = acc.mean(&lhs_name)?;
    let mut rhs_v = 0.0;
    let names: Vec<(String, f64)> = rhs.iter().map(|&(o, c)| (name(o), c)).collect();
    for (n, c) in &names {
        if *c != 0.0 {
            rhs_v += c * acc.mean(n)?;
        }
    }
    let mut combo: Vec<(&str, f64)> = vec![(lhs_name.as_str(), 1.0)];
    combo.extend(names.iter().filter(|(_, c)| *c != 0.0).map(|(n, c)| (n.as_str(), -c)));
    let stderr = acc.stderr_of(&combo, MIN_BATCHES)?;
    Ok(IdentityReport::new(label, lhs_v, rhs_v, stderr, rel_tol))
}

/// Time average of `|x|_V^2` against `TrQ / nu`.
pub fn enstrophy_identity_check(acc: &Accumulator, bal: &Balance, rel_tol: f64) -> Result<IdentityReport> {
    check(
        acc,
        "enstrophy".into(),
        Observable::Enstrophy(Part::Pair),
        &[(Observable::One, bal.trace_q / bal.nu)],
        rel_tol,
    )
}

/// H-version moment identity of order `p`.
pub fn p_moment_identity_check(
    acc: &Accumulator,
    bal: &Balance,
    p: u32,
    form: MomentForm,
    rel_tol: f64,
) -> Result<IdentityReport> {
    if p < 2 {
        return Err(Error::Domain(format!("moment order must be >= 2, got {p}")));
    }
    if p % 2 == 1 {
        log::warn!("odd moment order {p} is an extrapolation of the even-order identity");
    }
    let pf = p as f64;
    let rhs = match form {
        MomentForm::Stated => vec![(Observable::HPow(p), (pf - 1.0) * bal.trace_q / bal.nu)],
        MomentForm::Ito => vec![
            (Observable::HPow(p), bal.trace_q / bal.nu),
            (Observable::HPowNoise(p), (pf - 2.0) / 2.0 / bal.nu),
        ],
    };
    check(
        acc,
        format!("h_moment_p{p}_{}", form_tag(form)),
        Observable::HPowEnstrophy(p),
        &rhs,
        rel_tol,
    )
}

/// V-version moment identity of order `p`.
pub fn vorticity_moment_identity_check(
    acc: &Accumulator,
    bal: &Balance,
    p: u32,
    form: MomentForm,
    rel_tol: f64,
) -> Result<IdentityReport> {
    if p < 2 {
        return Err(Error::Domain(format!("moment order must be >= 2, got {p}")));
    }
    let pf = p as f64;
    let rhs = match form {
        MomentForm::Stated => vec![(Observable::VPow(p), (pf - 1.0) * bal.trace_aq / bal.nu)],
        MomentForm::Ito => vec![
            (Observable::VPow(p), bal.trace_aq / bal.nu),
            (Observable::VPowNoise(p), (pf - 2.0) / 2.0 / bal.nu),
            (Observable::VPowTransfer(p), -1.0 / bal.nu),
        ],
    };
    check(
        acc,
        format!("v_moment_p{p}_{}", form_tag(form)),
        Observable::VPowPalinstrophy(p),
        &rhs,
        rel_tol,
    )
}

fn form_tag(form: MomentForm) -> &'static str {
    match form {
        MomentForm::Stated => "stated",
        MomentForm::Ito => "ito",
    }
}

/// Stationary values for linear (advection-free) dynamics with a single
/// forced wavevector pair `+-k` of variance `q` on both components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleModeOu {
    pub q: f64,
    pub gamma: f64,
    pub nu: f64,
}

impl SingleModeOu {
    /// `E|a_k|^2 / 2`; `|x|_H^2` is Gamma(2, 4 s) distributed.
    fn s(&self) -> f64 {
        self.q / (4.0 * self.nu * self.gamma)
    }

    /// `E[|x|_H^{p-2} |x|_V^2] = gamma E[R^{p/2}]` for `R ~ Gamma(2, 4 s)`.
    pub fn h_moment_lhs(&self, p: u32) -> f64 {
        let k = p as f64 / 2.0;
        self.gamma * gamma_moment(k, 4.0 * self.s())
    }

    /// `E[|x|_H^{p-2}]`.
    pub fn h_pow(&self, p: u32) -> f64 {
        gamma_moment(p as f64 / 2.0 - 1.0, 4.0 * self.s())
    }

    /// `E[|x|_V^{p-2} |x|_{D(A)}^2]`.
    pub fn v_moment_lhs(&self, p: u32) -> f64 {
        let k = p as f64 / 2.0;
        self.gamma.powf(k + 1.0) * gamma_moment(k, 4.0 * self.s())
    }
}

/// Time averages of the advection-free pair against the single-mode closed
/// forms: H-version of order `h_order`, V-version of order `v_order`. Pass
/// within 3 standard errors.
pub fn ou_closed_form_checks(
    acc: &Accumulator,
    ou: &SingleModeOu,
    h_order: u32,
    v_order: u32,
) -> Result<Vec<IdentityReport>> {
    Ok(vec![
        check(
            acc,
            format!("ou_h_moment_p{h_order}"),
            Observable::HPowEnstrophy(h_order),
            &[(Observable::One, ou.h_moment_lhs(h_order))],
            0.0,
        )?,
        check(
            acc,
            format!("ou_v_moment_p{v_order}"),
            Observable::VPowPalinstrophy(v_order),
            &[(Observable::One, ou.v_moment_lhs(v_order))],
            0.0,
        )?,
    ])
}

/// `E[R^k]` for `R ~ Gamma(shape 2, scale theta)`: `Gamma(2 + k) / Gamma(2) theta^k`.
fn gamma_moment(k: f64, theta: f64) -> f64 {
    // shape 2: Gamma(2 + k) for the integer and half-integer k used here
    let mut g = 1.0;
    let mut x = 2.0 + k;
    while x > 2.0 + 1e-12 {
        x -= 1.0;
        g *= x;
    }
    if (x - 1.5).abs() < 1e-12 {
        // Gamma(1.5) / Gamma(2)
        g *= 0.5 * std::f64::consts::PI.sqrt();
    }
    g * theta.powf(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::accumulator::BatchPolicy;

    #[test]
    fn gamma_moments() {
        assert_eq!(gamma_moment(0.0, 3.0), 1.0);
        assert!((gamma_moment(1.0, 3.0) - 6.0).abs() < 1e-14);
        assert!((gamma_moment(2.0, 1.0) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn single_mode_fourth_moment_differs_from_stated_closure() {
        let ou = SingleModeOu {
            q: 0.01,
            gamma: 2.0,
            nu: 0.1,
        };
        let s = ou.s();
        assert!((ou.h_moment_lhs(4) - 96.0 * ou.gamma * s * s).abs() < 1e-12);
        // TrQ = 2q per component; stated closure gives twice the true value
        let stated = 3.0 * 2.0 * ou.q / ou.nu * ou.h_pow(4);
        assert!((stated / ou.h_moment_lhs(4) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_accumulator_is_insufficient() {
        let names = super::super::observables::identity_panel(&[2])
            .iter()
            .map(|o| o.to_string())
            .collect();
        let acc = Accumulator::new(names, BatchPolicy::default());
        let bal = Balance {
            nu: 1.0,
            trace_q: 1.0,
            trace_aq: 1.0,
        };
        let err = enstrophy_identity_check(&acc, &bal, 0.05).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
