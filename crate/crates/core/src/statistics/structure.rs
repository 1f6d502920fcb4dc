//! Velocity-increment moments on the collocation grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Observer, PairState};
use crate::error::{Error, Result};
use crate::spectral::{transform_to_physical, PhysicalField, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IncrementKind {
    /// `[u(x + l e) - u(x)] . e`
    #[default]
    Longitudinal,
    /// `[u(x + l e) - u(x)] . e_perp`
    Transverse,
}

/// Increments at `m` grid steps along x1 and x2, periodic wrap, calling
/// `f` once per (direction, point).
fn for_each_increment(g: &PhysicalField, kind: IncrementKind, m: usize, mut f: impl FnMut(f64)) {
    let n = g.lattice().n();
    let (along_x1, along_x2) = match kind {
        IncrementKind::Longitudinal => (&g.u1, &g.u2),
        IncrementKind::Transverse => (&g.u2, &g.u1),
    };
    for i in 0..n {
        let ip = (i + m) % n;
        for j in 0..n {
            let jp = (j + m) % n;
            f(along_x1[ip * n + j] - along_x1[i * n + j]);
            f(along_x2[i * n + jp] - along_x2[i * n + j]);
        }
    }
}

/// Spatial and directional mean of `delta^p` at separation `m` grid steps.
pub fn increment_moment(g: &PhysicalField, kind: IncrementKind, m: usize, p: u32) -> f64 {
    let mut s = 0.0;
    let mut c = 0u64;
    for_each_increment(g, kind, m, |d| {
        s += d.powi(p as i32);
        c += 1;
    });
    s / c as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureConfig {
    pub orders: Vec<u32>,
    pub kind: IncrementKind,
    /// Physical separations; `None` means every grid multiple `m = 0..=N/2`.
    pub separations: Option<Vec<f64>>,
}

impl Default for StructureConfig {
    fn default() -> Self {
        StructureConfig {
            orders: vec![2, 3, 4, 6],
            kind: IncrementKind::Longitudinal,
            separations: None,
        }
    }
}

impl StructureConfig {
    /// Grid offsets for the configured separations (nearest grid point, with a warning
    /// when a separation is not a grid multiple).
    pub fn offsets(&self, n: usize, spacing: f64) -> Vec<usize> {
        match &self.separations {
            None => (0..=n / 2).collect(),
            Some(ls) => {
                let mut ms: Vec<usize> = ls
                    .iter()
                    .map(|&l| {
                        let x = l / spacing;
                        let m = (x.round().max(0.0) as usize).min(n / 2);
                        if (x - m as f64).abs() > 1e-9 * x.abs().max(1.0) {
                            log::warn!(
                                "separation {l} is not a multiple of the grid spacing {spacing}; using {}",
                                m as f64 * spacing
                            );
                        }
                        m
                    })
                    .collect();
                ms.sort_unstable();
                ms.dedup();
                ms
            }
        }
    }
}

/// Accumulated `(delta)^p` (signed) and `|delta|^p` (absolute) per order and separation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureTable {
    pub field: String,
    pub kind: IncrementKind,
    pub orders: Vec<u32>,
    pub offsets: Vec<usize>,
    ls: Vec<f64>,
    signed_sum: Vec<Vec<f64>>,
    abs_sum: Vec<Vec<f64>>,
    counts: Vec<u64>,
    snapshots: u64,
}

/// One emitted row.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureRow {
    pub field: String,
    pub p: u32,
    pub l: f64,
    pub signed: f64,
    pub abs: f64,
    pub count: u64,
}

impl StructureTable {
    pub fn new(field: &str, cfg: &StructureConfig, n: usize, spacing: f64) -> Self {
        let offsets = cfg.offsets(n, spacing);
        let k = offsets.len();
        let ls = offsets.iter().map(|&m| m as f64 * spacing).collect();
        StructureTable {
            field: field.to_string(),
            kind: cfg.kind,
            orders: cfg.orders.clone(),
            offsets,
            ls,
            signed_sum: vec![vec![0.0; k]; cfg.orders.len()],
            abs_sum: vec![vec![0.0; k]; cfg.orders.len()],
            counts: vec![0; k],
            snapshots: 0,
        }
    }

    pub fn snapshots(&self) -> u64 {
        self.snapshots
    }

    pub fn separations(&self) -> Vec<f64> {
        self.ls.clone()
    }

    pub fn add_grid(&mut self, g: &PhysicalField) {
        for (mi, &m) in self.offsets.iter().enumerate() {
            for (pi, &p) in self.orders.iter().enumerate() {
                let mut s = 0.0;
                let mut a = 0.0;
                let mut c = 0u64;
                for_each_increment(g, self.kind, m, |d| {
                    let v = d.powi(p as i32);
                    s += v;
                    // even powers: identical bits for both variants
                    a += if p % 2 == 0 { v } else { d.abs().powi(p as i32) };
                    c += 1;
                });
                self.signed_sum[pi][mi] += s;
                self.abs_sum[pi][mi] += a;
                if pi == 0 {
                    self.counts[mi] += c;
                }
            }
        }
        self.snapshots += 1;
    }

    pub fn add_field(&mut self, f: &SpectralField) {
        self.add_grid(&transform_to_physical(f));
    }

    pub fn merge(&mut self, other: &StructureTable) -> Result<()> {
        if self.orders != other.orders || self.ls != other.ls || self.kind != other.kind {
            return Err(Error::config("structure tables with different layouts"));
        }
        for pi in 0..self.orders.len() {
            for mi in 0..self.offsets.len() {
                self.signed_sum[pi][mi] += other.signed_sum[pi][mi];
                self.abs_sum[pi][mi] += other.abs_sum[pi][mi];
            }
        }
        for mi in 0..self.offsets.len() {
            self.counts[mi] += other.counts[mi];
        }
        self.snapshots += other.snapshots;
        Ok(())
    }

    fn order_index(&self, p: u32) -> Result<usize> {
        self.orders
            .iter()
            .position(|&q| q == p)
            .ok_or_else(|| Error::config(format!("order {p} not in structure table")))
    }

    /// `(separation, signed, abs)` for order `p`.
    pub fn series(&self, p: u32) -> Result<Vec<(f64, f64, f64)>> {
        let pi = self.order_index(p)?;
        Ok(self
            .ls
            .iter()
            .enumerate()
            .map(|(mi, &l)| {
                let c = self.counts[mi].max(1) as f64;
                (
                    l,
                    self.signed_sum[pi][mi] / c,
                    self.abs_sum[pi][mi] / c,
                )
            })
            .collect())
    }

    pub fn rows(&self) -> Vec<StructureRow> {
        let mut out = Vec::new();
        for &p in &self.orders {
            for (mi, (l, s, a)) in self.series(p).expect("own order").into_iter().enumerate() {
                out.push(StructureRow {
                    field: self.field.clone(),
                    p,
                    l,
                    signed: s,
                    abs: a,
                    count: self.counts[mi],
                });
            }
        }
        out
    }

    /// Table whose averages are `S^p(l)` exactly, for fit validation.
    pub fn from_function(
        field: &str,
        orders: &[u32],
        separations: &[f64],
        f: impl Fn(u32, f64) -> f64,
    ) -> Self {
        let signed: Vec<Vec<f64>> = orders
            .iter()
            .map(|&p| separations.iter().map(|&l| f(p, l)).collect())
            .collect();
        StructureTable {
            field: field.to_string(),
            kind: IncrementKind::Longitudinal,
            orders: orders.to_vec(),
            offsets: (0..separations.len()).collect(),
            ls: separations.to_vec(),
            abs_sum: signed.clone(),
            signed_sum: signed,
            counts: vec![1; separations.len()],
            snapshots: 1,
        }
    }
}

/// Tables for `u` and `w` over a set of snapshots (parallel over snapshots).
pub fn structure_functions(
    snapshots: &[PairState],
    cfg: &StructureConfig,
) -> Result<(StructureTable, StructureTable)> {
    let first = snapshots
        .first()
        .ok_or_else(|| Error::InsufficientData("no snapshots for structure functions".into()))?;
    let lat = first.u.lattice().clone();
    let empty = || {
        (
            StructureTable::new("u", cfg, lat.n(), lat.spacing()),
            StructureTable::new("w", cfg, lat.n(), lat.spacing()),
        )
    };
    // per-snapshot tables in parallel, merged in snapshot order so the
    // floating sums do not depend on scheduling
    let parts = snapshots
        .par_iter()
        .map(|s| {
            lat.check_same(s.u.lattice())?;
            let mut t = empty();
            t.0.add_field(&s.u);
            t.1.add_field(&s.w);
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = empty();
    for (u, w) in &parts {
        acc.0.merge(u)?;
        acc.1.merge(w)?;
    }
    Ok(acc)
}

/// Accumulates structure tables along a run.
pub struct StructureObserver {
    pub u: StructureTable,
    pub w: StructureTable,
}

impl StructureObserver {
    pub fn new(cfg: &StructureConfig, n: usize, spacing: f64) -> Self {
        StructureObserver {
            u: StructureTable::new("u", cfg, n, spacing),
            w: StructureTable::new("w", cfg, n, spacing),
        }
    }
}

impl Observer for StructureObserver {
    fn observe(&mut self, state: &PairState) -> Result<()> {
        self.u.add_field(&state.u);
        self.w.add_field(&state.w);
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RescalingReport {
    pub lambda: f64,
    /// Largest deviation between the table of `lambda w` and `lambda^p` times
    /// the table of `w`, relative to the absolute moment at that entry.
    pub max_rel_dev: f64,
    pub pass: bool,
}

/// Recomputes the table from `lambda w` snapshots and compares entry-wise with
/// `lambda^p` times the table of `w`.
pub fn rescaling_check(w_snapshots: &[SpectralField], cfg: &StructureConfig, lambda: f64) -> Result<RescalingReport> {
    let first = w_snapshots
        .first()
        .ok_or_else(|| Error::InsufficientData("no snapshots for rescaling check".into()))?;
    let lat = first.lattice();
    let mut base = StructureTable::new("w", cfg, lat.n(), lat.spacing());
    let mut scaled = StructureTable::new("lambda_w", cfg, lat.n(), lat.spacing());
    for w in w_snapshots {
        let g = transform_to_physical(w);
        base.add_grid(&g);
        scaled.add_grid(&g.scaled(lambda));
    }
    let mut worst: f64 = 0.0;
    for &p in &cfg.orders {
        let f = lambda.powi(p as i32);
        for ((_, s0, a0), (_, s1, a1)) in base.series(p)?.into_iter().zip(scaled.series(p)?) {
            // signed odd moments cancel; measure both against the absolute moment
            let scale = (a0 * f.abs()).max(a1);
            if scale > 0.0 {
                for (x, y) in [(s0 * f, s1), (a0 * f.abs(), a1)] {
                    worst = worst.max((x - y).abs() / scale);
                }
            }
        }
    }
    Ok(RescalingReport {
        lambda,
        max_rel_dev: worst,
        pass: worst <= 1e-12,
    })
}
