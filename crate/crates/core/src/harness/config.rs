//! Run configuration file: TOML with the sections `simulation`, `noise`,
//! `statistics` and `sweep`. Unknown keys are errors and every violation is
//! reported, not only the first.

use std::collections::BTreeSet;
use std::path::Path;

use toml::{Table, Value};

use crate::dynamics::{BurnIn, InitialCondition, SimulationConfig};
use crate::error::{Error, Result};
use crate::forcing::{NoiseModel, NoiseSpec};
use crate::spectral::Lattice;
use crate::statistics::{BatchPolicy, IncrementKind, Observable, Part, StructureConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct StatisticsSettings {
    /// Orders `p` for the moment identities.
    pub moment_orders: Vec<u32>,
    pub structure: StructureConfig,
    /// Observations between structure-function snapshots.
    pub structure_every: u64,
    pub batches: usize,
    pub fit_l_min: Option<f64>,
    pub fit_l_max: Option<f64>,
    pub enstrophy_tolerance: f64,
    pub moment_tolerance: f64,
    /// Observables compared across couplings in a sweep.
    pub panel: Vec<Observable>,
}

impl Default for StatisticsSettings {
    fn default() -> Self {
        StatisticsSettings {
            moment_orders: vec![2, 4],
            structure: StructureConfig::default(),
            structure_every: 10,
            batches: 30,
            fit_l_min: None,
            fit_l_max: None,
            enstrophy_tolerance: 0.05,
            moment_tolerance: 0.10,
            panel: vec![
                Observable::Enstrophy(Part::U),
                Observable::StructureU { p: 2, m: 4 },
                Observable::StructureU { p: 2, m: 8 },
                Observable::StructureU { p: 2, m: 16 },
            ],
        }
    }
}

impl StatisticsSettings {
    pub fn batch_policy(&self) -> BatchPolicy {
        BatchPolicy::Count { count: self.batches }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSettings {
    pub lambdas: Vec<f64>,
    pub reference: f64,
    pub replicas: u32,
    /// Same noise path for every coupling (pathwise comparison).
    pub shared_noise: bool,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            lambdas: vec![0.4, 0.2, 0.1, 0.05],
            reference: 0.0,
            replicas: 1,
            shared_noise: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub simulation: SimulationConfig,
    pub statistics: StatisticsSettings,
    pub sweep: Option<SweepSettings>,
}

/// Key reader for one section; records type errors and tracks consumed keys.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: BTreeSet<&'static str>,
    errors: &'a mut Vec<String>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'static str, errors: &'a mut Vec<String>) -> Self {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                errors.push(format!("[{name}] must be a table"));
                None
            }
        };
        Section {
            name,
            table,
            used: BTreeSet::new(),
            errors,
        }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn err(&mut self, key: &str, what: &str) {
        self.errors.push(format!("{}.{key}: {what}", self.name));
    }

    fn f64(&mut self, key: &'static str, default: f64) -> f64 {
        match self.raw(key) {
            None => default,
            Some(Value::Float(x)) => *x,
            Some(Value::Integer(i)) => *i as f64,
            Some(_) => {
                self.err(key, "expected a number");
                default
            }
        }
    }

    fn opt_f64(&mut self, key: &'static str) -> Option<f64> {
        match self.raw(key) {
            None => None,
            Some(Value::Float(x)) => Some(*x),
            Some(Value::Integer(i)) => Some(*i as f64),
            Some(_) => {
                self.err(key, "expected a number");
                None
            }
        }
    }

    fn u64(&mut self, key: &'static str, default: u64) -> u64 {
        match self.raw(key) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(_) => {
                self.err(key, "expected a nonnegative integer");
                default
            }
        }
    }

    fn opt_u64(&mut self, key: &'static str) -> Option<u64> {
        match self.raw(key) {
            None => None,
            Some(Value::Integer(i)) if *i >= 0 => Some(*i as u64),
            Some(_) => {
                self.err(key, "expected a nonnegative integer");
                None
            }
        }
    }

    fn bool(&mut self, key: &'static str, default: bool) -> bool {
        match self.raw(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                self.err(key, "expected true or false");
                default
            }
        }
    }

    fn str(&mut self, key: &'static str) -> Option<&'a str> {
        match self.raw(key) {
            None => None,
            Some(Value::String(s)) => Some(s.as_str()),
            Some(_) => {
                self.err(key, "expected a string");
                None
            }
        }
    }

    fn f64_list(&mut self, key: &'static str) -> Option<Vec<f64>> {
        let v = self.raw(key)?;
        let parsed = v.as_array().and_then(|a| {
            a.iter()
                .map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64)))
                .collect::<Option<Vec<f64>>>()
        });
        if parsed.is_none() {
            self.err(key, "expected an array of numbers");
        }
        parsed
    }

    fn u32_list(&mut self, key: &'static str) -> Option<Vec<u32>> {
        let v = self.raw(key)?;
        let parsed = v.as_array().and_then(|a| {
            a.iter()
                .map(|x| x.as_integer().and_then(|i| u32::try_from(i).ok()))
                .collect::<Option<Vec<u32>>>()
        });
        if parsed.is_none() {
            self.err(key, "expected an array of nonnegative integers");
        }
        parsed
    }

    fn finish(self) {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !self.used.contains(k.as_str()) {
                    self.errors.push(format!("{}.{k}: unknown key", self.name));
                }
            }
        }
    }
}

fn parse_initial(sec: &mut Section<'_>, key: &'static str) -> InitialCondition {
    match sec.raw(key) {
        None => InitialCondition::Zero,
        Some(Value::String(s)) if s == "zero" => InitialCondition::Zero,
        Some(Value::Table(t)) => {
            let mut errs = Vec::new();
            let num = |k: &str, errs: &mut Vec<String>| match t.get(k) {
                Some(Value::Float(x)) => *x,
                Some(Value::Integer(i)) => *i as f64,
                _ => {
                    errs.push(format!("simulation.{key}.{k}: expected a number"));
                    0.0
                }
            };
            let kind_ok = matches!(t.get("kind"), Some(Value::String(s)) if s == "random");
            if !kind_ok {
                errs.push(format!("simulation.{key}.kind: expected \"random\""));
            }
            let energy = num("energy", &mut errs);
            let slope = num("slope", &mut errs);
            let seed = match t.get("seed") {
                Some(Value::Integer(i)) if *i >= 0 => *i as u64,
                _ => {
                    errs.push(format!("simulation.{key}.seed: expected a nonnegative integer"));
                    0
                }
            };
            for k in t.keys() {
                if !["kind", "energy", "slope", "seed"].contains(&k.as_str()) {
                    errs.push(format!("simulation.{key}.{k}: unknown key"));
                }
            }
            if energy < 0.0 {
                errs.push(format!("simulation.{key}.energy must be >= 0"));
            }
            sec.errors.extend(errs);
            InitialCondition::Random { energy, slope, seed }
        }
        Some(_) => {
            sec.err(key, "expected \"zero\" or { kind = \"random\", energy, slope, seed }");
            InitialCondition::Zero
        }
    }
}

fn parse_noise(root: &Table, errors: &mut Vec<String>) -> NoiseSpec {
    let mut sec = Section::new(root, "noise", errors);
    let spec = match sec.str("kind").unwrap_or("finite_band") {
        "finite_band" => {
            let q = sec.f64("q", 0.001);
            let shells = sec.raw("shells");
            let modes = match sec.raw("modes") {
                None => match shells {
                    None => NoiseSpec::lowest_shells(4, q),
                    Some(Value::Integer(c)) if *c >= 0 => NoiseSpec::lowest_shells(*c as usize, q),
                    Some(_) => {
                        sec.err("shells", "expected a nonnegative count");
                        NoiseSpec::FiniteBand { modes: vec![], q }
                    }
                },
                Some(_) if shells.is_some() => {
                    sec.err("shells", "give either modes or shells, not both");
                    NoiseSpec::FiniteBand { modes: vec![], q }
                }
                Some(Value::Integer(c)) if *c >= 0 => NoiseSpec::lowest_modes(*c as usize, q),
                Some(Value::Array(a)) => {
                    let ks: Option<Vec<(i64, i64)>> = a
                        .iter()
                        .map(|k| match k.as_array().map(|v| v.as_slice()) {
                            Some([Value::Integer(a), Value::Integer(b)]) => Some((*a, *b)),
                            _ => None,
                        })
                        .collect();
                    match ks {
                        Some(modes) => NoiseSpec::FiniteBand { modes, q },
                        None => {
                            sec.err("modes", "expected a count or a list of [k1, k2] pairs");
                            NoiseSpec::FiniteBand { modes: vec![], q }
                        }
                    }
                }
                Some(_) => {
                    sec.err("modes", "expected a count or a list of [k1, k2] pairs");
                    NoiseSpec::FiniteBand { modes: vec![], q }
                }
            };
            modes
        }
        "power_law" => NoiseSpec::PowerLaw {
            amplitude: sec.f64("amplitude", 0.01),
            exponent: sec.f64("exponent", 1.5),
        },
        other => {
            sec.err("kind", &format!("unknown noise kind '{other}' (finite_band | power_law)"));
            NoiseSpec::silent()
        }
    };
    // keys belonging to the other kind stay unread and are reported
    sec.finish();
    spec
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let root: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config(format!("not valid TOML: {}", e.message())))?;
        let mut errors = Vec::new();
        for k in root.keys() {
            if !["simulation", "noise", "statistics", "sweep"].contains(&k.as_str()) {
                errors.push(format!("[{k}]: unknown section"));
            }
        }

        let d = SimulationConfig::default();
        let mut sec = Section::new(&root, "simulation", &mut errors);
        let mut sim = SimulationConfig {
            nu: sec.f64("nu", d.nu),
            lambda: sec.f64("lambda", d.lambda),
            dt: sec.f64("dt", d.dt),
            t_end: sec.f64("t_end", d.t_end),
            n: sec.u64("n", d.n as u64) as usize,
            length: sec.f64("length", d.length),
            seed: sec.u64("seed", d.seed),
            replica: sec.u64("replica", 0) as u32,
            lambda_index: sec.opt_u64("lambda_index").map(|i| i as u32),
            burn_in: match sec.raw("burn_in") {
                None => d.burn_in,
                Some(Value::String(s)) if s == "auto" => BurnIn::Auto,
                Some(Value::Float(x)) => BurnIn::Fixed { duration: *x },
                Some(Value::Integer(i)) => BurnIn::Fixed { duration: *i as f64 },
                Some(_) => {
                    sec.err("burn_in", "expected a duration or \"auto\"");
                    d.burn_in
                }
            },
            output_every: sec.u64("output_every", d.output_every),
            checkpoint_every: None,
            nonlinear: sec.bool("nonlinear", true),
            initial_u: InitialCondition::Zero,
            initial_w: InitialCondition::Zero,
            noise: NoiseSpec::silent(),
        };
        let ckpt = sec.opt_u64("checkpoint_every");
        sim.initial_u = parse_initial(&mut sec, "initial_u");
        sim.initial_w = parse_initial(&mut sec, "initial_w");
        sec.finish();
        // default cadence: ten checkpoints per run; 0 disables
        sim.checkpoint_every = match ckpt {
            Some(0) => None,
            Some(c) => Some(c),
            None if sim.dt > 0.0 && sim.t_end.is_finite() => Some((sim.total_steps() / 10).max(1)),
            None => None,
        };
        sim.noise = parse_noise(&root, &mut errors);

        let ds = StatisticsSettings::default();
        let mut sec = Section::new(&root, "statistics", &mut errors);
        let mut stats = StatisticsSettings {
            moment_orders: sec.u32_list("moment_orders").unwrap_or(ds.moment_orders),
            structure: StructureConfig {
                orders: sec.u32_list("structure_orders").unwrap_or(ds.structure.orders),
                kind: match sec.str("increment") {
                    None | Some("longitudinal") => IncrementKind::Longitudinal,
                    Some("transverse") => IncrementKind::Transverse,
                    Some(other) => {
                        sec.err("increment", &format!("unknown increment '{other}'"));
                        IncrementKind::Longitudinal
                    }
                },
                separations: sec.f64_list("separations"),
            },
            structure_every: sec.u64("structure_every", ds.structure_every),
            batches: sec.u64("batches", ds.batches as u64) as usize,
            fit_l_min: sec.opt_f64("fit_l_min"),
            fit_l_max: sec.opt_f64("fit_l_max"),
            enstrophy_tolerance: sec.f64("enstrophy_tolerance", ds.enstrophy_tolerance),
            moment_tolerance: sec.f64("moment_tolerance", ds.moment_tolerance),
            panel: ds.panel.clone(),
        };
        if let Some(v) = sec.raw("panel") {
            match v.as_array() {
                Some(items) => {
                    let mut panel = Vec::new();
                    for it in items {
                        match it.as_str().map(str::parse::<Observable>) {
                            Some(Ok(o)) => panel.push(o),
                            Some(Err(e)) => sec.err("panel", &e.to_string()),
                            None => sec.err("panel", "expected observable names"),
                        }
                    }
                    stats.panel = panel;
                }
                None => sec.err("panel", "expected an array of observable names"),
            }
        }
        sec.finish();

        let sweep = if root.contains_key("sweep") {
            let dw = SweepSettings::default();
            let mut sec = Section::new(&root, "sweep", &mut errors);
            let s = SweepSettings {
                lambdas: sec.f64_list("lambdas").unwrap_or(dw.lambdas),
                reference: sec.f64("reference", dw.reference),
                replicas: sec.u64("replicas", dw.replicas as u64) as u32,
                shared_noise: sec.bool("shared_noise", dw.shared_noise),
            };
            sec.finish();
            Some(s)
        } else {
            None
        };

        let cfg = RunConfig {
            simulation: sim,
            statistics: stats,
            sweep,
        };
        errors.extend(cfg.violations());
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }

    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml_str(&text)
    }

    /// Semantic checks across sections.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = self.simulation.violations();
        if let Ok(lat) = Lattice::new(self.simulation.n, self.simulation.length) {
            if let Err(Error::Config(e)) = NoiseModel::new(&lat, self.simulation.noise.clone()) {
                errs.extend(e.into_iter().map(|m| format!("noise: {m}")));
            }
        }
        let st = &self.statistics;
        if st.moment_orders.iter().any(|&p| p < 2) {
            errs.push("statistics.moment_orders must all be >= 2".into());
        }
        if st.structure.orders.is_empty() || st.structure.orders.contains(&0) {
            errs.push("statistics.structure_orders must be nonempty and >= 1".into());
        }
        if st.structure_every == 0 {
            errs.push("statistics.structure_every must be >= 1".into());
        }
        if st.batches < 2 {
            errs.push("statistics.batches must be >= 2".into());
        }
        if let Some(ls) = &st.structure.separations {
            if ls.iter().any(|&l| !(l >= 0.0)) {
                errs.push("statistics.separations must be >= 0".into());
            }
        }
        for (k, v) in [("fit_l_min", st.fit_l_min), ("fit_l_max", st.fit_l_max)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    errs.push(format!("statistics.{k} must be > 0"));
                }
            }
        }
        if let (Some(a), Some(b)) = (st.fit_l_min, st.fit_l_max) {
            if a >= b {
                errs.push("statistics.fit_l_min must be below fit_l_max".into());
            }
        }
        for (k, v) in [
            ("enstrophy_tolerance", st.enstrophy_tolerance),
            ("moment_tolerance", st.moment_tolerance),
        ] {
            if !(v >= 0.0) {
                errs.push(format!("statistics.{k} must be >= 0"));
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.lambdas.is_empty() {
                errs.push("sweep.lambdas must not be empty".into());
            }
            if sw.lambdas.iter().chain([&sw.reference]).any(|l| !l.is_finite()) {
                errs.push("sweep.lambdas and sweep.reference must be finite".into());
            }
            if sw.replicas == 0 {
                errs.push("sweep.replicas must be >= 1".into());
            }
        }
        errs
    }

    pub fn to_toml_string(&self) -> String {
        let s = &self.simulation;
        let mut sim = Table::new();
        sim.insert("nu".into(), s.nu.into());
        sim.insert("lambda".into(), s.lambda.into());
        sim.insert("dt".into(), s.dt.into());
        sim.insert("t_end".into(), s.t_end.into());
        sim.insert("n".into(), (s.n as i64).into());
        sim.insert("length".into(), s.length.into());
        sim.insert("seed".into(), (s.seed as i64).into());
        sim.insert("replica".into(), (s.replica as i64).into());
        if let Some(i) = s.lambda_index {
            sim.insert("lambda_index".into(), (i as i64).into());
        }
        sim.insert(
            "burn_in".into(),
            match s.burn_in {
                BurnIn::Auto => "auto".into(),
                BurnIn::Fixed { duration } => duration.into(),
            },
        );
        sim.insert("output_every".into(), (s.output_every as i64).into());
        sim.insert(
            "checkpoint_every".into(),
            (s.checkpoint_every.unwrap_or(0) as i64).into(),
        );
        sim.insert("nonlinear".into(), s.nonlinear.into());
        for (key, ic) in [("initial_u", &s.initial_u), ("initial_w", &s.initial_w)] {
            let v: Value = match *ic {
                InitialCondition::Zero => "zero".into(),
                InitialCondition::Random { energy, slope, seed } => {
                    let mut t = Table::new();
                    t.insert("kind".into(), "random".into());
                    t.insert("energy".into(), energy.into());
                    t.insert("slope".into(), slope.into());
                    t.insert("seed".into(), (seed as i64).into());
                    t.into()
                }
            };
            sim.insert(key.into(), v);
        }

        let mut noise = Table::new();
        match &s.noise {
            NoiseSpec::FiniteBand { modes, q } => {
                noise.insert("kind".into(), "finite_band".into());
                noise.insert("q".into(), (*q).into());
                let list: Vec<Value> = modes
                    .iter()
                    .map(|&(a, b)| Value::Array(vec![a.into(), b.into()]))
                    .collect();
                noise.insert("modes".into(), list.into());
            }
            NoiseSpec::PowerLaw { amplitude, exponent } => {
                noise.insert("kind".into(), "power_law".into());
                noise.insert("amplitude".into(), (*amplitude).into());
                noise.insert("exponent".into(), (*exponent).into());
            }
        }

        let st = &self.statistics;
        let mut stats = Table::new();
        let ints = |v: &[u32]| Value::Array(v.iter().map(|&x| (x as i64).into()).collect());
        stats.insert("moment_orders".into(), ints(&st.moment_orders));
        stats.insert("structure_orders".into(), ints(&st.structure.orders));
        stats.insert(
            "increment".into(),
            match st.structure.kind {
                IncrementKind::Longitudinal => "longitudinal",
                IncrementKind::Transverse => "transverse",
            }
            .into(),
        );
        if let Some(ls) = &st.structure.separations {
            stats.insert("separations".into(), ls.clone().into());
        }
        stats.insert("structure_every".into(), (st.structure_every as i64).into());
        stats.insert("batches".into(), (st.batches as i64).into());
        if let Some(v) = st.fit_l_min {
            stats.insert("fit_l_min".into(), v.into());
        }
        if let Some(v) = st.fit_l_max {
            stats.insert("fit_l_max".into(), v.into());
        }
        stats.insert("enstrophy_tolerance".into(), st.enstrophy_tolerance.into());
        stats.insert("moment_tolerance".into(), st.moment_tolerance.into());
        stats.insert(
            "panel".into(),
            Value::Array(st.panel.iter().map(|o| o.to_string().into()).collect()),
        );

        let mut root = Table::new();
        root.insert("simulation".into(), sim.into());
        root.insert("noise".into(), noise.into());
        root.insert("statistics".into(), stats.into());
        if let Some(sw) = &self.sweep {
            let mut t = Table::new();
            t.insert("lambdas".into(), sw.lambdas.clone().into());
            t.insert("reference".into(), sw.reference.into());
            t.insert("replicas".into(), (sw.replicas as i64).into());
            t.insert("shared_noise".into(), sw.shared_noise.into());
            root.insert("sweep".into(), t.into());
        }
        toml::to_string(&root).expect("tables serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c.simulation.nu, SimulationConfig::default().nu);
        assert_eq!(c.simulation.checkpoint_every, Some(10));
        assert!(c.sweep.is_none());
    }

    #[test]
    fn round_trip_is_identity() {
        let text = r#"
[simulation]
nu = 0.02
lambda = -0.5
dt = 0.02
t_end = 10.0
n = 32
burn_in = "auto"
checkpoint_every = 0
initial_u = { kind = "random", energy = 0.3, slope = 2.0, seed = 4 }

[noise]
kind = "power_law"
amplitude = 0.01
exponent = 1.5

[statistics]
separations = [0.2, 0.4]
panel = ["enstrophy_u", "s2_u_m4"]

[sweep]
lambdas = [0.4, 0.1]
replicas = 2
"#;
        let a = RunConfig::from_toml_str(text).unwrap();
        let b = RunConfig::from_toml_str(&a.to_toml_string()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.simulation.checkpoint_every, None);
        assert_eq!(a.simulation.burn_in, BurnIn::Auto);
    }

    #[test]
    fn all_errors_are_listed() {
        let text = r#"
[simulation]
nu = -1
dt = "fast"
colour = "blue"

[noise]
kind = "power_law"
exponent = 3.0

[extra]
x = 1
"#;
        let err = RunConfig::from_toml_str(text).unwrap_err();
        let Error::Config(list) = err else { panic!() };
        let joined = list.join("\n");
        assert!(joined.contains("simulation.nu"), "{joined}");
        assert!(joined.contains("simulation.dt"), "{joined}");
        assert!(joined.contains("simulation.colour: unknown key"), "{joined}");
        assert!(joined.contains("[extra]"), "{joined}");
        assert!(joined.contains("1 < a < 2"), "{joined}");
    }
}
