//! Declarative experiment configuration (JSON, `"schema": 1`).

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::atlas;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::profiles::{DataPair, Family};
use crate::solver::{SimConfig, DEFAULT_BLOWUP_THRESHOLD};
use crate::testfunc::SpatialProfile;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub points: usize,
    pub half_length: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.n, self.points, self.half_length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "default_threshold")]
    pub blowup_threshold: f64,
    #[serde(default = "yes")]
    pub dealias: bool,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub linear: bool,
    #[serde(default = "unit")]
    pub s: f64,
    #[serde(default = "half")]
    pub gamma: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_BLOWUP_THRESHOLD
}
fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn two() -> f64 {
    2.0
}
fn ten() -> f64 {
    10.0
}
fn tol_l2() -> f64 {
    0.05
}
fn tol_hs() -> f64 {
    0.1
}
fn tol_rel() -> f64 {
    0.2
}
fn tol_abs() -> f64 {
    0.3
}
fn bump_tol() -> f64 {
    1e-8
}
fn raster_size() -> usize {
    50
}
fn powers() -> Vec<u32> {
    vec![1, 3, 5, 7]
}

impl SolverSpec {
    pub fn sim_config(&self, data: DataPair, p: f64) -> SimConfig {
        let mut cfg = SimConfig::new(data, p, self.dt, self.t_max);
        cfg.blowup_threshold = self.blowup_threshold;
        cfg.dealias = self.dealias;
        cfg.record_every = self.record_every;
        cfg.linear = self.linear;
        cfg.s = self.s;
        cfg.gamma = self.gamma;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub grid: GridSpec,
    pub data: Family,
    pub eps: f64,
    pub p: f64,
    pub solver: SolverSpec,
    /// Also write `snapshots.json` (physical fields at every record).
    #[serde(default)]
    pub keep_snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub grid: GridSpec,
    pub data: Family,
    #[serde(default = "unit")]
    pub eps: f64,
    /// Exact linear propagation when true; otherwise the nonlinear solver with `solver`.
    #[serde(default = "yes")]
    pub linear: bool,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default)]
    pub solver: Option<SolverSpec>,
    #[serde(default = "ten")]
    pub t0: f64,
    pub t1: f64,
    #[serde(default = "two")]
    pub ratio: f64,
    #[serde(default = "unit")]
    pub s: f64,
    /// Decay index of the data; defaults to the profile's γ.
    #[serde(default)]
    pub gamma_tilde: Option<f64>,
    #[serde(default = "tol_l2")]
    pub tol_l2: f64,
    #[serde(default = "tol_hs")]
    pub tol_hs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifespanMode {
    /// Slope within `tol_rel` (relative) of the predicted exponent.
    Sharp,
    /// Slope at most the predicted exponent plus `tol_abs`.
    UpperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanConfig {
    pub grid: GridSpec,
    pub data: Family,
    pub p: f64,
    pub eps: Vec<f64>,
    pub solver: SolverSpec,
    /// γ entering the predicted exponents; defaults to the profile's γ.
    #[serde(default)]
    pub gamma: Option<f64>,
    pub mode: LifespanMode,
    #[serde(default = "tol_rel")]
    pub tol_rel: f64,
    #[serde(default = "tol_abs")]
    pub tol_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestfuncConfig {
    pub grid: GridSpec,
    pub data: Family,
    pub eps: f64,
    pub p: f64,
    pub solver: SolverSpec,
    pub radii: Vec<f64>,
    #[serde(default)]
    pub profile: SpatialProfile,
    /// Power of the spatial and temporal cutoffs; defaults to `max(3, ⌊2p′⌋+1)`.
    #[serde(default)]
    pub l: Option<u32>,
    /// Snapshots written by `simulate`; the trajectory is recomputed when absent.
    #[serde(default)]
    pub trajectory: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasConfig {
    pub n: u32,
    #[serde(default = "raster_size")]
    pub size: usize,
    #[serde(default = "unit")]
    pub s: f64,
    #[serde(default)]
    pub gamma_range: Option<(f64, f64)>,
    #[serde(default)]
    pub p_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpCheckConfig {
    pub grid: GridSpec,
    #[serde(default = "powers")]
    pub powers: Vec<u32>,
    #[serde(default = "bump_tol")]
    pub tol: f64,
    /// Translate the bump before checking (counterexample for the dilation condition).
    #[serde(default)]
    pub shift: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Simulate(SimulateConfig),
    Decay(DecayConfig),
    Lifespan(LifespanConfig),
    Testfunc(TestfuncConfig),
    Atlas(AtlasConfig),
    BumpCheck(BumpCheckConfig),
    Sweep(SweepConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Simulate(_) => "simulate",
            Experiment::Decay(_) => "decay",
            Experiment::Lifespan(_) => "lifespan",
            Experiment::Testfunc(_) => "testfunc",
            Experiment::Atlas(_) => "atlas",
            Experiment::BumpCheck(_) => "bump_check",
            Experiment::Sweep(_) => "sweep",
        }
    }
}

/// Cartesian product of overrides applied to a base experiment.
///
/// Keys are `/`-separated paths into the base document, e.g. `"data/gamma"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: Value,
    pub vary: BTreeMap<String, Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub experiment: Experiment,
}

fn profile_gamma(f: &Family) -> Option<f64> {
    match *f {
        Family::LogProfile { gamma, .. } => Some(gamma),
        _ => None,
    }
}

impl ExperimentConfig {
    pub fn from_value(v: Value) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_value(v)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON echo (defaults filled in, keys sorted).
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.to_value()).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::Config(format!(
                "unsupported schema {} (expected {SCHEMA})",
                self.schema
            )));
        }
        match &self.experiment {
            Experiment::Simulate(c) => {
                c.grid.build()?;
                check_p(c.p)?;
            }
            Experiment::Decay(c) => {
                c.grid.build()?;
                if !(c.t0 > 0.0 && c.t1 > c.t0 && c.ratio > 1.0) {
                    return Err(Error::Config("decay ladder needs 0 < t0 < t1 and ratio > 1".into()));
                }
                if c.gamma_tilde.or(profile_gamma(&c.data)).is_none() {
                    return Err(Error::Config("decay needs gamma_tilde for non-log profiles".into()));
                }
                if !c.linear && c.solver.is_none() {
                    return Err(Error::Config("nonlinear decay needs solver settings".into()));
                }
            }
            Experiment::Lifespan(c) => {
                c.grid.build()?;
                check_p(c.p)?;
                if c.eps.is_empty() {
                    return Err(Error::Config("eps ladder is empty".into()));
                }
                if c.eps.windows(2).any(|w| !(w[0] > w[1])) || c.eps.iter().any(|&e| !(e > 0.0)) {
                    return Err(Error::Config(
                        "eps ladder must be positive and strictly decreasing".into(),
                    ));
                }
                if c.eps.len() < 3 {
                    return Err(Error::Config(format!(
                        "eps ladder of length {} cannot be fitted (need >= 3)",
                        c.eps.len()
                    )));
                }
                let gamma = c
                    .gamma
                    .or(profile_gamma(&c.data))
                    .ok_or_else(|| Error::Config("lifespan needs gamma for non-log profiles".into()))?;
                atlas::classify(c.grid.n as u32, gamma, c.p, c.solver.s)?;
            }
            Experiment::Testfunc(c) => {
                c.grid.build()?;
                check_p(c.p)?;
                if c.radii.is_empty() || c.radii.iter().any(|&r| !(r >= 1.0)) {
                    return Err(Error::Config("radii must be non-empty and >= 1".into()));
                }
            }
            Experiment::Atlas(c) => {
                if c.size == 0 || c.n == 0 {
                    return Err(Error::Config("atlas needs n >= 1 and size >= 1".into()));
                }
            }
            Experiment::BumpCheck(c) => {
                c.grid.build()?;
                if c.powers.is_empty() || c.powers.contains(&0) {
                    return Err(Error::Config("powers must be non-empty and >= 1".into()));
                }
            }
            Experiment::Sweep(s) => {
                if s.vary.is_empty() || s.vary.values().any(|v| v.is_empty()) {
                    return Err(Error::Config("sweep ladders must be non-empty".into()));
                }
            }
        }
        Ok(())
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Config(format!("p = {p} must exceed 1")));
    }
    Ok(())
}

/// Sets `path` (`/`-separated) inside `doc`, creating objects as needed.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
    if parts.is_empty() {
        return Err(Error::Config("empty override path".into()));
    }
    for key in &parts[..parts.len() - 1] {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override path {path} crosses a non-object")))?;
        cur = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = cur
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("override path {path} crosses a non-object")))?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl SweepConfig {
    /// Every combination of overrides, in lexicographic key order.
    pub fn expand(&self) -> Result<Vec<(BTreeMap<String, Value>, ExperimentConfig)>> {
        let keys: Vec<&String> = self.vary.keys().collect();
        let mut combos: Vec<BTreeMap<String, Value>> = vec![BTreeMap::new()];
        for k in &keys {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    self.vary[*k].iter().map(move |v| {
                        let mut c = c.clone();
                        c.insert((*k).clone(), v.clone());
                        c
                    })
                })
                .collect();
        }
        combos
            .into_iter()
            .map(|c| {
                let mut doc = self.base.clone();
                if doc.get("schema").is_none() {
                    set_path(&mut doc, "schema", Value::from(SCHEMA))?;
                }
                for (k, v) in &c {
                    set_path(&mut doc, k, v.clone())?;
                }
                let cfg = ExperimentConfig::from_value(doc)?;
                if matches!(cfg.experiment, Experiment::Sweep(_)) {
                    return Err(Error::Config("nested sweeps are not supported".into()));
                }
                Ok((c, cfg))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ATLAS: &str = r#"{"schema": 1, "kind": "atlas", "n": 2}"#;

    #[test]
    fn parse_and_defaults() {
        let c = ExperimentConfig::from_json(ATLAS).unwrap();
        match &c.experiment {
            Experiment::Atlas(a) => assert_eq!(a.size, 50),
            _ => panic!(),
        }
        assert_eq!(c.hash().len(), 64);
        let again = ExperimentConfig::from_value(c.to_value()).unwrap();
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn schema_and_ladders_checked() {
        assert!(ExperimentConfig::from_json(r#"{"schema": 2, "kind": "atlas", "n": 2}"#).is_err());
        let short = r#"{"schema":1,"kind":"lifespan","grid":{"n":1,"points":256,"half_length":100},
            "data":{"kind":"log_profile","gamma":1.0},"p":2.0,"eps":[0.4,0.2],
            "solver":{"dt":0.05,"t_max":100},"mode":"upper_bound"}"#;
        let e = ExperimentConfig::from_json(short).unwrap_err();
        assert!(e.to_string().contains("length 2"));
        let bad_order = short.replace("[0.4,0.2]", "[0.1,0.2,0.4]");
        assert!(ExperimentConfig::from_json(&bad_order).is_err());
    }

    #[test]
    fn sweep_expansion() {
        let s = SweepConfig {
            base: serde_json::from_str(ATLAS).unwrap(),
            vary: [
                ("n".to_string(), vec![Value::from(1), Value::from(2)]),
                ("size".to_string(), vec![Value::from(4), Value::from(5), Value::from(6)]),
            ]
            .into_iter()
            .collect(),
        };
        let runs = s.expand().unwrap();
        assert_eq!(runs.len(), 6);
        assert_eq!(runs[0].0["n"], Value::from(1));
        assert_eq!(runs[5].0["size"], Value::from(6));
    }
}
