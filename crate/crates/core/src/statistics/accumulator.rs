//! Running moments with batch means over a fixed observable panel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Batch structure for standard errors of time-correlated samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BatchPolicy {
    /// Between `count` and `2 count` batches whatever the run length:
    /// adjacent batches are merged pairwise whenever `2 count` fill up.
    Count { count: usize },
    /// Fixed number of samples per batch.
    Length { length: u64 },
}

impl Default for BatchPolicy {
    fn default() -> Self {
        BatchPolicy::Count { count: 30 }
    }
}

/// Sums, sums of squares and aligned batch means for a panel of scalar observables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    names: Vec<String>,
    policy: BatchPolicy,
    count: u64,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    batch_len: u64,
    batches: Vec<Vec<f64>>,
    partial: Vec<f64>,
    partial_len: u64,
}

impl Accumulator {
    pub fn new(names: Vec<String>, policy: BatchPolicy) -> Self {
        let k = names.len();
        let batch_len = match policy {
            BatchPolicy::Count { .. } => 1,
            BatchPolicy::Length { length } => length.max(1),
        };
        Accumulator {
            names,
            policy,
            count: 0,
            sum: vec![0.0; k],
            sum_sq: vec![0.0; k],
            batch_len,
            batches: Vec::new(),
            partial: vec![0.0; k],
            partial_len: 0,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn batch_len(&self) -> u64 {
        self.batch_len
    }

    /// Completed batch means, one row per batch.
    pub fn batch_means(&self) -> &[Vec<f64>] {
        &self.batches
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.index(name)
            .ok_or_else(|| Error::config(format!("observable '{name}' is not in the panel")))
    }

    pub fn push(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.names.len(), "panel width");
        self.count += 1;
        for (i, &v) in values.iter().enumerate() {
            self.sum[i] += v;
            self.sum_sq[i] += v * v;
            self.partial[i] += v;
        }
        self.partial_len += 1;
        if self.partial_len == self.batch_len {
            self.flush_partial();
        }
    }

    fn flush_partial(&mut self) {
        let n = self.partial_len as f64;
        self.batches.push(self.partial.iter().map(|s| s / n).collect());
        self.partial.iter_mut().for_each(|s| *s = 0.0);
        self.partial_len = 0;
        self.compact();
    }

    fn compact(&mut self) {
        if let BatchPolicy::Count { count } = self.policy {
            let count = count.max(1);
            while self.batches.len() >= 2 * count {
                self.coarsen();
            }
        }
    }

    /// Merges adjacent batch pairs and doubles the batch length.
    fn coarsen(&mut self) {
        let old = std::mem::take(&mut self.batches);
        let mut it = old.chunks_exact(2);
        for pair in &mut it {
            self.batches
                .push(pair[0].iter().zip(&pair[1]).map(|(a, b)| 0.5 * (a + b)).collect());
        }
        if let [odd] = it.remainder() {
            // unpaired trailing batch returns to the partial buffer
            for (p, m) in self.partial.iter_mut().zip(odd) {
                *p += m * self.batch_len as f64;
            }
            self.partial_len += self.batch_len;
        }
        self.batch_len *= 2;
        if self.partial_len >= self.batch_len {
            self.flush_partial();
        }
    }

    pub fn mean(&self, name: &str) -> Result<f64> {
        let i = self.require(name)?;
        if self.count == 0 {
            return Err(Error::InsufficientData(format!("no samples for '{name}'")));
        }
        Ok(self.sum[i] / self.count as f64)
    }

    /// Sample variance (biased, nonnegative).
    pub fn variance(&self, name: &str) -> Result<f64> {
        let i = self.require(name)?;
        if self.count == 0 {
            return Err(Error::InsufficientData(format!("no samples for '{name}'")));
        }
        let n = self.count as f64;
        let m = self.sum[i] / n;
        Ok((self.sum_sq[i] / n - m * m).max(0.0))
    }

    /// Batch-means standard error of `sum_j c_j * mean(name_j)`.
    pub fn stderr_of(&self, combo: &[(&str, f64)], min_batches: usize) -> Result<f64> {
        let idx = combo
            .iter()
            .map(|(n, c)| Ok((self.require(n)?, *c)))
            .collect::<Result<Vec<_>>>()?;
        let nb = self.batches.len();
        if nb < min_batches.max(2) {
            return Err(Error::InsufficientData(format!(
                "{nb} complete batches, need at least {}",
                min_batches.max(2)
            )));
        }
        let vals: Vec<f64> = self
            .batches
            .iter()
            .map(|b| idx.iter().map(|&(i, c)| c * b[i]).sum())
            .collect();
        Ok(batch_stderr(&vals))
    }

    /// Merge as if `other` had been observed after `self`. Sums are exact;
    /// batches are brought to a common length first.
    pub fn merge(&mut self, other: &Accumulator) -> Result<()> {
        if self.names != other.names {
            return Err(Error::config("cannot merge accumulators with different panels"));
        }
        let mut other = other.clone();
        while self.batch_len < other.batch_len {
            self.coarsen_to(other.batch_len);
        }
        while other.batch_len < self.batch_len {
            other.coarsen_to(self.batch_len);
        }
        self.count += other.count;
        for i in 0..self.names.len() {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
        }
        self.batches.extend(other.batches);
        for (p, q) in self.partial.iter_mut().zip(&other.partial) {
            *p += q;
        }
        self.partial_len += other.partial_len;
        if self.partial_len >= self.batch_len {
            self.flush_partial();
        }
        self.compact();
        Ok(())
    }

    fn coarsen_to(&mut self, len: u64) {
        if self.batches.is_empty() && self.partial_len < len {
            self.batch_len = len;
        } else {
            self.coarsen();
        }
    }
}

/// Standard error of the mean of (approximately independent) batch means.
pub fn batch_stderr(vals: &[f64]) -> f64 {
    let n = vals.len() as f64;
    if vals.len() < 2 {
        return f64::NAN;
    }
    let m = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acc(policy: BatchPolicy) -> Accumulator {
        Accumulator::new(vec!["a".into(), "b".into()], policy)
    }

    #[test]
    fn count_policy_keeps_batches_in_band() {
        let mut a = acc(BatchPolicy::Count { count: 30 });
        for i in 0..10_000 {
            a.push(&[i as f64, 1.0]);
            if a.count() >= 60 {
                let nb = a.batch_means().len();
                assert!((30..60).contains(&nb), "{nb} batches at {}", a.count());
            }
        }
        assert_eq!(a.mean("b").unwrap(), 1.0);
    }

    #[test]
    fn batch_means_of_iid_track_plain_stderr() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut a = acc(BatchPolicy::Length { length: 100 });
        for _ in 0..100_000 {
            let x: f64 = rng.random::<f64>();
            a.push(&[x, 2.0 * x]);
        }
        let se = a.stderr_of(&[("a", 1.0)], 10).unwrap();
        let plain = (a.variance("a").unwrap() / 100_000.0).sqrt();
        assert!((se / plain - 1.0).abs() < 0.3, "{se} vs {plain}");
        // perfectly correlated combination cancels
        assert!(a.stderr_of(&[("a", 2.0), ("b", -1.0)], 10).unwrap() < 1e-15);
    }

    #[test]
    fn empty_is_insufficient() {
        let a = acc(BatchPolicy::default());
        assert!(matches!(a.mean("a"), Err(Error::InsufficientData(_))));
        assert!(matches!(a.stderr_of(&[("a", 1.0)], 2), Err(Error::InsufficientData(_))));
        assert!(matches!(a.mean("zzz"), Err(Error::Config(_))));
    }
}
