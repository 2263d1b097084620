//! Experiment runners. Each returns a [`RunOutput`] holding the summary and
//! every artifact as bytes; nothing touches the filesystem here except reading
//! a snapshot file for `testfunc`.

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{
    AtlasConfig, BumpCheckConfig, DecayConfig, Experiment, ExperimentConfig, GridSpec, LifespanConfig, LifespanMode,
    SimulateConfig, SweepConfig, TestfuncConfig,
};
use super::fit::{fit_censored, fit_powerlaw, FitResult};
use crate::atlas::{self, default_window};
use crate::bump::{check_conditions, default_power, BumpFunction};
use crate::error::{Error, Result};
use crate::kernel::propagate_linear;
use crate::norms::{hdot_seminorm, l2_norm};
use crate::profiles::{DataPair, Family};
use crate::solver::{measure_lifespan, run, Lifespan, PropagatorState, Snapshots, Stepper, Trajectory};
use crate::testfunc::{check_lemma3, TestPair};

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub kind: &'static str,
    pub hash: String,
    pub summary: Value,
    pub artifacts: Vec<Artifact>,
    /// Outcome of the experiment's pass/fail checks, if it has any.
    pub passed: Option<bool>,
    /// Numerical failure discovered after partial results were produced.
    pub failure: Option<Error>,
}

fn csv_bytes<R: Serialize>(rows: &[R], hash: &str, header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let mut head: Vec<&str> = header.to_vec();
    head.push("config_hash");
    w.write_record(&head)?;
    for r in rows {
        w.serialize((r, hash))?;
    }
    w.into_inner().map_err(|e| Error::Config(e.to_string()))
}

fn summary(cfg: &ExperimentConfig, hash: &str, results: Value, passed: Option<bool>) -> Value {
    json!({
        "schema": super::config::SCHEMA,
        "kind": cfg.experiment.kind(),
        "config_hash": hash,
        "config": cfg.to_value(),
        "pass": passed,
        "results": results,
    })
}

fn json_artifact(name: &str, v: &Value) -> Artifact {
    let mut bytes = serde_json::to_vec_pretty(v).expect("json serializes");
    bytes.push(b'\n');
    Artifact {
        name: name.to_string(),
        bytes,
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let hash = cfg.hash();
    info!("running {} ({})", cfg.experiment.kind(), &hash[..12]);
    let (results, mut artifacts, passed, failure) = match &cfg.experiment {
        Experiment::Simulate(c) => simulate(c, &hash)?,
        Experiment::Decay(c) => decay(c, &hash)?,
        Experiment::Lifespan(c) => lifespan(c, &hash)?,
        Experiment::Testfunc(c) => testfunc(c, &hash)?,
        Experiment::Atlas(c) => atlas_raster(c, &hash)?,
        Experiment::BumpCheck(c) => bump_check(c, &hash)?,
        Experiment::Sweep(s) => return sweep(cfg, s, &hash),
    };
    let mut results = results;
    if let Some(e) = &failure {
        results["failure"] = Value::from(e.to_string());
    }
    let s = summary(cfg, &hash, results, passed);
    artifacts.push(json_artifact("summary.json", &s));
    Ok(RunOutput {
        kind: cfg.experiment.kind(),
        hash,
        summary: s,
        artifacts,
        passed,
        failure,
    })
}

type Parts = (Value, Vec<Artifact>, Option<bool>, Option<Error>);

fn outcome_json(traj: &Trajectory) -> Value {
    json!({
        "outcome": traj.outcome,
        "boundary_flag": traj.boundary_flag,
        "steps": traj.steps,
        "horizon": traj.horizon(),
    })
}

/// Snapshot file shared by `simulate` (writer) and `testfunc` (reader).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub schema: u32,
    pub grid: GridSpec,
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
}

fn grid_spec(g: &crate::grid::Grid) -> GridSpec {
    GridSpec {
        n: g.dim(),
        points: g.points(),
        half_length: g.half_length(),
    }
}

fn simulate(c: &SimulateConfig, hash: &str) -> Result<Parts> {
    let grid = c.grid.build()?;
    let data = DataPair::from_family(&grid, c.data, c.eps)?;
    let mut sim = c.solver.sim_config(data, c.p);
    sim.keep_snapshots = c.keep_snapshots;
    let traj = run(&sim)?;
    let mut artifacts = vec![Artifact {
        name: "trajectory.csv".into(),
        bytes: csv_bytes(&traj.records, hash, &["t", "l2", "linf", "hs", "hdotneg"])?,
    }];
    if let Some(s) = &traj.snapshots {
        let file = SnapshotFile {
            schema: super::config::SCHEMA,
            grid: grid_spec(&grid),
            times: s.times.clone(),
            fields: s.fields.clone(),
        };
        artifacts.push(Artifact {
            name: "snapshots.json".into(),
            bytes: serde_json::to_vec(&file)?,
        });
    }
    Ok((outcome_json(&traj), artifacts, None, None))
}

/// `t0, t0·r, t0·r², …` up to `t1`, with `t1` appended if the ladder misses it.
pub fn time_ladder(t0: f64, t1: f64, ratio: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = t0;
    while t <= t1 * (1.0 + 1e-12) {
        out.push(t);
        t *= ratio;
    }
    if out.last().is_some_and(|&l| l < t1 * (1.0 - 1e-12)) {
        out.push(t1);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub t: f64,
    pub l2: f64,
    pub hs: f64,
}

fn ensure_nonzero(data: &DataPair) -> Result<()> {
    if data.eps == 0.0 || (data.u0.max_abs_coeff() == 0.0 && data.u1.max_abs_coeff() == 0.0) {
        return Err(Error::Aborted(
            "zero field: decay of vanishing data is undefined".into(),
        ));
    }
    Ok(())
}

fn decay(c: &DecayConfig, hash: &str) -> Result<Parts> {
    let grid = c.grid.build()?;
    let data = DataPair::from_family(&grid, c.data, c.eps)?;
    ensure_nonzero(&data)?;
    let gamma_tilde = match (c.gamma_tilde, c.data) {
        (Some(g), _) => g,
        (None, Family::LogProfile { gamma, .. }) => gamma,
        _ => unreachable!("validated"),
    };
    if !c.linear {
        match atlas::classify(grid.dim() as u32, gamma_tilde, c.p, c.s) {
            Ok(v) if v.primary().is_global() => {}
            Ok(v) => warn!("decay run at {} outside the global-existence regions", v.label()),
            Err(e) => warn!("decay parameters outside the classifier domain: {e}"),
        }
    }
    let ladder = time_ladder(c.t0, c.t1, c.ratio);
    let mut rows = Vec::with_capacity(ladder.len());
    let mut failure = None;
    if c.linear {
        for &t in &ladder {
            let (u, _) = propagate_linear(&data.u0, &data.u1, t)?;
            rows.push(DecayRow {
                t,
                l2: c.eps * l2_norm(&u),
                hs: c.eps * hdot_seminorm(&u, c.s)?,
            });
        }
    } else {
        let solver = c.solver.expect("validated");
        let mut stepper = Stepper::new(grid, solver.dt, c.p, solver.dealias)?;
        let mut state = PropagatorState::initial(&data);
        let mut done = 0usize;
        'ladder: for &t in &ladder {
            let target = (t / solver.dt).round() as usize;
            while done < target {
                match stepper.advance(&mut state) {
                    Ok(m) if m <= solver.blowup_threshold => done += 1,
                    Ok(_) | Err(Error::Blowup { .. }) => {
                        failure = Some(Error::Blowup { t: state.t });
                        break 'ladder;
                    }
                    Err(e) => return Err(e),
                }
            }
            rows.push(DecayRow {
                t: state.t,
                l2: l2_norm(&state.u),
                hs: hdot_seminorm(&state.u, c.s)?,
            });
        }
    }
    let csv = Artifact {
        name: "decay.csv".into(),
        bytes: csv_bytes(&rows, hash, &["t", "l2", "hs"])?,
    };
    if failure.is_some() {
        let results = json!({ "rows": rows.len() });
        return Ok((results, vec![csv], Some(false), failure));
    }
    let fit_l2 = fit_powerlaw(&rows.iter().map(|r| (r.t, r.l2)).collect::<Vec<_>>())?;
    let fit_hs = fit_powerlaw(&rows.iter().map(|r| (r.t, r.hs)).collect::<Vec<_>>())?;
    let pred_l2 = -gamma_tilde / 2.0;
    let pred_hs = -(c.s + gamma_tilde) / 2.0;
    let pass_l2 = (fit_l2.slope - pred_l2).abs() <= c.tol_l2;
    let pass_hs = (fit_hs.slope - pred_hs).abs() <= c.tol_hs;
    let results = json!({
        "fit_l2": fit_l2,
        "fit_hs": fit_hs,
        "predicted_l2": pred_l2,
        "predicted_hs": pred_hs,
        "pass_l2": pass_l2,
        "pass_hs": pass_hs,
    });
    Ok((results, vec![csv], Some(pass_l2 && pass_hs), None))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct LifespanRow {
    eps: f64,
    t_b: f64,
    t_b_err: f64,
    censored: bool,
}

/// Result of a lifespan ladder with its fit against the predicted exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanReport {
    pub points: Vec<Lifespan>,
    pub fit: Option<FitResult>,
    pub predicted: Option<f64>,
    pub verdict: String,
    pub pass: bool,
    pub note: Option<String>,
}

pub fn lifespan_report(c: &LifespanConfig) -> Result<LifespanReport> {
    let grid = c.grid.build()?;
    let gamma = c.gamma.or(match c.data {
        Family::LogProfile { gamma, .. } => Some(gamma),
        _ => None,
    });
    let gamma = gamma.ok_or_else(|| Error::Config("lifespan needs gamma".into()))?;
    let verdict = atlas::classify(grid.dim() as u32, gamma, c.p, c.solver.s)?;
    if !verdict.tags.iter().any(|t| t.is_blowup()) {
        warn!("lifespan run at {} outside the blow-up regions", verdict.label());
    }
    let predicted = atlas::lifespan_exponents(grid.dim() as u32, gamma, c.p)?.combined;
    let data = DataPair::from_family(&grid, c.data, c.eps[0])?;
    let template = c.solver.sim_config(data, c.p);
    let points: Vec<Lifespan> = c
        .eps
        .par_iter()
        .map(|&e| measure_lifespan(&template, e))
        .collect::<Result<_>>()?;
    for l in &points {
        if l.censored {
            warn!("eps = {} censored at t = {}", l.eps, l.t_b);
        }
        if l.boundary_flag {
            warn!("eps = {}: mass reached the box boundary", l.eps);
        }
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|l| (1.0 / l.eps, l.t_b)).collect();
    let mask: Vec<bool> = points.iter().map(|l| l.censored).collect();
    let (fit, note) = match fit_censored(&xy, &mask) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let pass = match (fit, predicted) {
        (Some(f), Some(a)) => match c.mode {
            LifespanMode::Sharp => (f.slope - a).abs() <= c.tol_rel * a,
            LifespanMode::UpperBound => f.slope <= a + c.tol_abs,
        },
        _ => false,
    };
    Ok(LifespanReport {
        points,
        fit,
        predicted,
        verdict: verdict.label(),
        pass,
        note,
    })
}

fn lifespan(c: &LifespanConfig, hash: &str) -> Result<Parts> {
    let report = lifespan_report(c)?;
    let rows: Vec<LifespanRow> = report
        .points
        .iter()
        .map(|l| LifespanRow {
            eps: l.eps,
            t_b: l.t_b,
            t_b_err: l.t_b_err,
            censored: l.censored,
        })
        .collect();
    let csv = Artifact {
        name: "lifespan.csv".into(),
        bytes: csv_bytes(&rows, hash, &["eps", "t_b", "t_b_err", "censored"])?,
    };
    let pass = report.pass;
    Ok((serde_json::to_value(&report)?, vec![csv], Some(pass), None))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct TestfuncRow {
    r: f64,
    i: f64,
    rhs_lem: f64,
    rhs_lem2: f64,
    margin: f64,
}

fn load_snapshots(path: &std::path::Path, grid: &GridSpec) -> Result<Snapshots> {
    let text = std::fs::read(path)?;
    let file: SnapshotFile = serde_json::from_slice(&text)?;
    if file.schema != super::config::SCHEMA {
        return Err(Error::Config(format!("snapshot schema {} unsupported", file.schema)));
    }
    if file.grid != *grid {
        return Err(Error::Config("snapshot grid differs from the configured grid".into()));
    }
    Ok(Snapshots {
        times: file.times,
        fields: file.fields,
    })
}

fn testfunc(c: &TestfuncConfig, hash: &str) -> Result<Parts> {
    let grid = c.grid.build()?;
    let data = DataPair::from_family(&grid, c.data, c.eps)?;
    let snaps = match &c.trajectory {
        Some(path) => load_snapshots(path, &c.grid)?,
        None => {
            let mut sim = c.solver.sim_config(data.clone(), c.p);
            sim.keep_snapshots = true;
            let traj = run(&sim)?;
            info!("testfunc trajectory: {:?}", traj.outcome);
            traj.snapshots.expect("snapshots kept")
        }
    };
    let l = match c.l {
        Some(l) => l,
        None => default_power(c.p)?,
    };
    let pair = TestPair::new(c.profile.build()?, l, c.p)?;
    let report = check_lemma3(&grid, &snaps, &data, &pair, &c.radii, c.eps)?;
    let rows: Vec<TestfuncRow> = report
        .rows
        .iter()
        .map(|r| TestfuncRow {
            r: r.r,
            i: r.i,
            rhs_lem: r.rhs_lem,
            rhs_lem2: r.rhs_lem2,
            margin: r.margin_lem.min(r.margin_lem2),
        })
        .collect();
    let pass = report.rows.iter().all(|r| r.holds());
    let csv = Artifact {
        name: "testfunc.csv".into(),
        bytes: csv_bytes(&rows, hash, &["R", "I", "rhs_lem", "rhs_lem2", "margin"])?,
    };
    let results = json!({ "l": l, "report": report });
    Ok((results, vec![csv], Some(pass), None))
}

fn atlas_raster(c: &AtlasConfig, hash: &str) -> Result<Parts> {
    let (gw, pw) = default_window(c.n);
    let cells = atlas::raster(c.n, c.size, c.gamma_range.unwrap_or(gw), c.p_range.unwrap_or(pw), c.s)?;
    let mut counts = std::collections::BTreeMap::<String, usize>::new();
    for cell in &cells {
        *counts.entry(cell.verdict.clone()).or_default() += 1;
    }
    let rows: Vec<(f64, f64, &str)> = cells.iter().map(|c| (c.gamma, c.p, c.verdict.as_str())).collect();
    let csv = Artifact {
        name: "atlas.csv".into(),
        bytes: csv_bytes(&rows, hash, &["gamma", "p", "verdict"])?,
    };
    let results = json!({
        "cells": cells.len(),
        "counts": counts,
        "p_fujita": atlas::fujita(c.n),
        "thm1": atlas::thm1_thresholds(c.n).ok(),
    });
    Ok((results, vec![csv], None, None))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct BumpRow {
    l: u32,
    i: bool,
    ii: bool,
    iii: bool,
    worst_i: f64,
    worst_ii: f64,
    worst_iii: f64,
    degenerate: bool,
}

fn bump_check(c: &BumpCheckConfig, hash: &str) -> Result<Parts> {
    let grid = c.grid.build()?;
    let mut base = BumpFunction::canonical(&grid)?;
    if let Some(shift) = &c.shift {
        if shift.len() != grid.dim() {
            return Err(Error::Config(format!("shift needs {} components", grid.dim())));
        }
        base = base.shifted(shift);
    }
    let rows: Vec<BumpRow> = c
        .powers
        .par_iter()
        .map(|&l| {
            let b = base.power(l)?;
            let r = check_conditions(&b, c.tol);
            Ok(BumpRow {
                l,
                i: r.i,
                ii: r.ii,
                iii: r.iii,
                worst_i: r.worst_i,
                worst_ii: r.worst_ii,
                worst_iii: r.worst_iii,
                degenerate: r.degenerate,
            })
        })
        .collect::<Result<_>>()?;
    let pass = rows.iter().all(|r| r.i && r.ii && r.iii && !r.degenerate);
    let csv = Artifact {
        name: "bump_check.csv".into(),
        bytes: csv_bytes(
            &rows,
            hash,
            &["l", "i", "ii", "iii", "worst_i", "worst_ii", "worst_iii", "degenerate"],
        )?,
    };
    let results = json!({ "rows": rows, "shifted": c.shift.is_some() });
    Ok((results, vec![csv], Some(pass), None))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SweepRow {
    index: usize,
    overrides: String,
    kind: String,
    pass: Option<bool>,
    error: String,
    run_hash: String,
}

/// Runs every combination in parallel; each run's artifacts go under `run_NNNN/`.
fn sweep(cfg: &ExperimentConfig, s: &SweepConfig, hash: &str) -> Result<RunOutput> {
    let runs = s.expand()?;
    let outputs: Vec<Result<RunOutput>> = runs.par_iter().map(|(_, c)| execute(c)).collect();
    let mut artifacts = Vec::new();
    let mut rows = Vec::with_capacity(runs.len());
    let mut all_pass = Some(true);
    for (index, ((overrides, c), out)) in runs.iter().zip(outputs).enumerate() {
        let dir = format!("run_{index:04}");
        let (pass, error, run_hash) = match out {
            Ok(o) => {
                for a in o.artifacts {
                    artifacts.push(Artifact {
                        name: format!("{dir}/{}", a.name),
                        bytes: a.bytes,
                    });
                }
                let err = o.failure.map(|e| e.to_string()).unwrap_or_default();
                (o.passed, err, o.hash)
            }
            Err(e) => (Some(false), e.to_string(), c.hash()),
        };
        all_pass = match (all_pass, pass) {
            (Some(a), Some(b)) => Some(a && b),
            (a, None) => a,
            (None, b) => b,
        };
        rows.push(SweepRow {
            index,
            overrides: serde_json::to_string(overrides)?,
            kind: c.experiment.kind().to_string(),
            pass,
            error,
            run_hash,
        });
    }
    artifacts.push(Artifact {
        name: "sweep.csv".into(),
        bytes: csv_bytes(
            &rows,
            hash,
            &["index", "overrides", "kind", "pass", "error", "run_hash"],
        )?,
    });
    let any_checked = rows.iter().any(|r| r.pass.is_some());
    let passed = if any_checked { all_pass } else { None };
    let s = summary(cfg, hash, json!({ "runs": rows.len() }), passed);
    artifacts.push(json_artifact("summary.json", &s));
    Ok(RunOutput {
        kind: "sweep",
        hash: hash.to_string(),
        summary: s,
        artifacts,
        passed,
        failure: None,
    })
}
