//! Distances between stationary averages at different couplings.
//!
//! Runs that share the noise path and the observation schedule produce
//! aligned batch means, so differences are estimated with paired errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::accumulator::{batch_stderr, Accumulator};

/// Means and batch means of one run on a named panel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelSummary {
    pub lambda: f64,
    pub names: Vec<String>,
    pub means: Vec<f64>,
    /// One row per batch, aligned with `names`.
    pub batches: Vec<Vec<f64>>,
}

impl PanelSummary {
    pub fn from_accumulator(lambda: f64, acc: &Accumulator, names: &[String]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| acc.index(n).ok_or_else(|| Error::config(format!("observable '{n}' missing"))))
            .collect::<Result<Vec<_>>>()?;
        let means = names.iter().map(|n| acc.mean(n)).collect::<Result<Vec<_>>>()?;
        let batches = acc
            .batch_means()
            .iter()
            .map(|b| idx.iter().map(|&i| b[i]).collect())
            .collect();
        Ok(PanelSummary {
            lambda,
            names: names.to_vec(),
            means,
            batches,
        })
    }

    fn column(&self, i: usize) -> Vec<f64> {
        self.batches.iter().map(|b| b[i]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub observable: String,
    pub lambda: f64,
    /// `|E_lambda[phi] - E_ref[phi]|`
    pub distance: f64,
    /// Paired batch-means standard error of the difference.
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub observable: String,
    pub lambda_far: f64,
    pub lambda_near: f64,
    /// `d(lambda_far) - d(lambda_near)`
    pub gap: f64,
    pub gap_stderr: f64,
    /// `gap > 2 gap_stderr`
    pub decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub reference_lambda: f64,
    pub distances: Vec<DistanceRow>,
    pub trends: Vec<TrendRow>,
}

fn signum(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Per-observable distances from the reference run and, when at least two
/// couplings are given, the trend from the farthest to the nearest coupling.
pub fn measure_convergence_report(reference: &PanelSummary, runs: &[PanelSummary]) -> Result<ConvergenceReport> {
    for r in runs {
        if r.names != reference.names {
            return Err(Error::config(format!(
                "observable panel at lambda={} differs from the reference panel",
                r.lambda
            )));
        }
        if r.batches.len() != reference.batches.len() {
            return Err(Error::config(format!(
                "lambda={} has {} batches, reference has {}; runs must share the observation schedule",
                r.lambda,
                r.batches.len(),
                reference.batches.len()
            )));
        }
    }
    let paired = |run: &PanelSummary, i: usize| -> Vec<f64> {
        run.column(i)
            .iter()
            .zip(reference.column(i))
            .map(|(a, b)| a - b)
            .collect()
    };
    let mut distances = Vec::new();
    for (i, name) in reference.names.iter().enumerate() {
        for r in runs {
            let diff = r.means[i] - reference.means[i];
            let stderr = if diff == 0.0 { 0.0 } else { batch_stderr(&paired(r, i)) };
            distances.push(DistanceRow {
                observable: name.clone(),
                lambda: r.lambda,
                distance: diff.abs(),
                stderr,
            });
        }
    }
    let mut trends = Vec::new();
    if runs.len() >= 2 {
        let gap_to_ref = |r: &&PanelSummary| (r.lambda - reference.lambda).abs();
        let far = runs
            .iter()
            .max_by(|a, b| gap_to_ref(a).total_cmp(&gap_to_ref(b)))
            .expect("nonempty");
        let near = runs
            .iter()
            .min_by(|a, b| gap_to_ref(a).total_cmp(&gap_to_ref(b)))
            .expect("nonempty");
        for (i, name) in reference.names.iter().enumerate() {
            let df = far.means[i] - reference.means[i];
            let dn = near.means[i] - reference.means[i];
            let (sf, sn) = (signum(df), signum(dn));
            let g: Vec<f64> = paired(far, i)
                .iter()
                .zip(paired(near, i))
                .map(|(a, b)| sf * a - sn * b)
                .collect();
            let gap = df.abs() - dn.abs();
            let gap_stderr = if g.iter().all(|v| *v == 0.0) { 0.0 } else { batch_stderr(&g) };
            trends.push(TrendRow {
                observable: name.clone(),
                lambda_far: far.lambda,
                lambda_near: near.lambda,
                gap,
                gap_stderr,
                decreasing: gap > 2.0 * gap_stderr,
            });
        }
    }
    Ok(ConvergenceReport {
        reference_lambda: reference.lambda,
        distances,
        trends,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::accumulator::BatchPolicy;

    fn run(lambda: f64, shift: f64) -> PanelSummary {
        let mut acc = Accumulator::new(vec!["x".into(), "one".into()], BatchPolicy::Length { length: 10 });
        for i in 0..400 {
            let noise = ((i * 7919) % 97) as f64 / 97.0;
            acc.push(&[noise + shift * lambda, 1.0]);
        }
        PanelSummary::from_accumulator(lambda, &acc, &["x".into(), "one".into()]).unwrap()
    }

    #[test]
    fn duplicate_run_has_zero_distance() {
        let r = run(0.0, 1.0);
        let rep = measure_convergence_report(&r, std::slice::from_ref(&r)).unwrap();
        assert!(rep.distances.iter().all(|d| d.distance == 0.0));
    }

    #[test]
    fn constant_observable_never_moves() {
        let rep = measure_convergence_report(&run(0.0, 1.0), &[run(0.4, 1.0), run(0.1, 1.0)]).unwrap();
        for d in rep.distances.iter().filter(|d| d.observable == "one") {
            assert_eq!(d.distance, 0.0);
        }
        let x = rep.trends.iter().find(|t| t.observable == "x").unwrap();
        assert!(x.decreasing && (x.gap - 0.3).abs() < 1e-12);
        assert!(!rep.trends.iter().find(|t| t.observable == "one").unwrap().decreasing);
    }

    #[test]
    fn panel_mismatch_is_config_error() {
        let mut other = run(0.4, 1.0);
        other.names[0] = "y".into();
        assert!(matches!(
            measure_convergence_report(&run(0.0, 1.0), &[other]),
            Err(Error::Config(_))
        ));
    }
}
