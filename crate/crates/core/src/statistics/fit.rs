//! Log-log power-law fits of structure functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::structure::StructureTable;

const BOOTSTRAP_RESAMPLES: usize = 400;
const MIN_POINTS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRange {
    pub l_min: f64,
    pub l_max: f64,
    /// Fit the absolute variant (`|delta|^p`) rather than the signed one.
    pub absolute: bool,
}

impl FitRange {
    /// `[4 h, N h / 8]`.
    pub fn default_for(n: usize, spacing: f64) -> Self {
        FitRange {
            l_min: 4.0 * spacing,
            l_max: n as f64 * spacing / 8.0,
            absolute: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub p: u32,
    pub zeta: f64,
    pub intercept: f64,
    pub r2: f64,
    pub stderr: f64,
    pub residuals: Vec<f64>,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub field: String,
    pub range: FitRange,
    pub orders: Vec<OrderFit>,
}

impl ScalingFit {
    pub fn zeta(&self, p: u32) -> Option<f64> {
        self.orders.iter().find(|o| o.p == p).map(|o| o.zeta)
    }
}

/// Ordinary least squares `y = a + b x`; returns `(b, a)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    (b, my - b * mx)
}

fn fit_points(x: &[f64], y: &[f64], p: u32) -> OrderFit {
    let (b, a) = least_squares(x, y);
    let residuals: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| yi - (a + b * xi)).collect();
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    // residual bootstrap, fixed seed so reports are reproducible
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ p as u64);
    let fitted: Vec<f64> = x.iter().map(|xi| a + b * xi).collect();
    let slopes: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let yb: Vec<f64> = fitted
                .iter()
                .map(|f| f + residuals[rng.random_range(0..residuals.len())])
                .collect();
            least_squares(x, &yb).0
        })
        .collect();
    let ms = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let stderr = (slopes.iter().map(|s| (s - ms).powi(2)).sum::<f64>() / (slopes.len() - 1) as f64).sqrt();

    OrderFit {
        p,
        zeta: b,
        intercept: a,
        r2,
        stderr,
        residuals,
        points: x.len(),
    }
}

/// Slope of `log S^p` against `log l` over the range, per order.
pub fn scaling_fit(table: &StructureTable, range: &FitRange) -> Result<ScalingFit> {
    let mut orders = Vec::new();
    for &p in &table.orders {
        let (x, y): (Vec<f64>, Vec<f64>) = table
            .series(p)?
            .into_iter()
            .filter(|&(l, _, _)| l > 0.0 && l >= range.l_min * (1.0 - 1e-12) && l <= range.l_max * (1.0 + 1e-12))
            .filter_map(|(l, s, a)| {
                let v = if range.absolute { a } else { s };
                (v > 0.0 && v.is_finite()).then(|| (l.ln(), v.ln()))
            })
            .unzip();
        if x.len() < MIN_POINTS {
            return Err(Error::Fit {
                reason: format!(
                    "order {p} of '{}': {} usable separations in [{}, {}], need {MIN_POINTS}",
                    table.field,
                    x.len(),
                    range.l_min,
                    range.l_max
                ),
                usable: x.iter().map(|v| v.exp()).collect(),
            });
        }
        orders.push(fit_points(&x, &y, p));
    }
    Ok(ScalingFit {
        field: table.field.clone(),
        range: range.clone(),
        orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (b, a) = least_squares(&x, &y);
        assert!((b - 2.0).abs() < 1e-15 && (a - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_few_points_lists_usable() {
        let ls = [0.1, 0.2, 0.3];
        let t = StructureTable::from_function("u", &[2], &ls, |_, l| l);
        let err = scaling_fit(
            &t,
            &FitRange {
                l_min: 0.0,
                l_max: 1.0,
                absolute: true,
            },
        )
        .unwrap_err();
        match err {
            Error::Fit { usable, .. } => assert_eq!(usable.len(), 3),
            e => panic!("{e}"),
        }
    }
}
