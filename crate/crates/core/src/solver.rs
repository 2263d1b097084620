//! Exponential time integration of `u_tt + u_t - Δu = |u|^p` in Fourier space.
//!
//! The state is `(û, ∂_t û)`. Over one step the linear part is propagated
//! exactly and the Duhamel integral `∫₀^{dt} K̂(dt-σ) N̂(t+σ) dσ` is evaluated
//! with `N` interpolated linearly in time. The per-mode weights
//!
//! ```text
//! Φ₁ = ∫₀^{dt} K̂(τ) dτ,   Φ₂ = ∫₀^{dt} τ K̂(τ) dτ
//! ```
//!
//! give the predictor `û* = E·state + Φ₁ N̂(u_n)` and the corrector
//!
//! ```text
//! û_{n+1}   = E·state + (Φ₂/dt) N̂₀ + (Φ₁ - Φ₂/dt) N̂₁
//! ∂_tû_{n+1} = E'·state + (K̂(dt) - Φ₁/dt) N̂₀ + (Φ₁/dt) N̂₁
//! ```
//!
//! with `N̂₁ = N̂(u*)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{forward_in_place, inverse_in_place, Grid, SpectralField};
use crate::kernel::kernel_pair;
use crate::norms::{hdotneg_unchecked, hs_unchecked, l2_norm};
use crate::profiles::DataPair;
use crate::quad::GaussRule;

pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;

/// Relative size of `|u|` near the box edge above which a run is flagged.
pub const BOUNDARY_MASS_TOL: f64 = 1e-8;

/// Fraction of the half-length treated as the boundary layer.
pub const BOUNDARY_LAYER: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub p: f64,
    pub data: DataPair,
    pub dt: f64,
    pub t_max: f64,
    pub blowup_threshold: f64,
    pub dealias: bool,
    pub record_every: usize,
    /// Drop the source term (pure linear evolution).
    pub linear: bool,
    /// Regularity of the recorded `H^s` norm.
    pub s: f64,
    /// Weight of the recorded `Ḣ^{-γ}` norm (zero mode excluded).
    pub gamma: f64,
    /// Keep physical snapshots of `u` at every record.
    pub keep_snapshots: bool,
}

impl SimConfig {
    pub fn new(data: DataPair, p: f64, dt: f64, t_max: f64) -> Self {
        SimConfig {
            p,
            data,
            dt,
            t_max,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            dealias: true,
            record_every: 1,
            linear: false,
            s: 1.0,
            gamma: 0.5,
            keep_snapshots: false,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.data.grid()
    }

    pub fn eps(&self) -> f64 {
        self.data.eps
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid();
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::param("p", self.p, "nonlinearity exponent must exceed 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", self.dt, "time step must be positive"));
        }
        let guard = 0.5 / grid.xi_max();
        if self.dt > guard * (1.0 + 1e-12) {
            return Err(Error::param(
                "dt",
                self.dt,
                format!("exceeds the stability guard 0.5/xi_max = {guard}"),
            ));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::param("t_max", self.t_max, "horizon must be positive"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", 0.0, "must be >= 1"));
        }
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(Error::param("s", self.s, "regularity must lie in (0, 1]"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma", self.gamma, "must be finite and >= 0"));
        }
        self.data.u0.grid().check_same(self.data.u1.grid())?;
        let linf0 = self.data.u0.max_abs_physical() * self.eps();
        if !(self.blowup_threshold > linf0) {
            return Err(Error::param(
                "blowup_threshold",
                self.blowup_threshold,
                format!("must exceed the initial sup norm {linf0}"),
            ));
        }
        Ok(())
    }
}

impl SpectralField {
    pub(crate) fn max_abs_physical(&self) -> f64 {
        self.to_physical().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// `(û(t), ∂_t û(t))` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorState {
    pub u: SpectralField,
    pub ut: SpectralField,
    pub t: f64,
}

impl PropagatorState {
    /// `(ε u0, ε u1)` at `t = 0`.
    pub fn initial(data: &DataPair) -> Self {
        PropagatorState {
            u: data.u0.scaled(data.eps),
            ut: data.u1.scaled(data.eps),
            t: 0.0,
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        PropagatorState {
            u: SpectralField::zeros(grid),
            ut: SpectralField::zeros(grid),
            t: 0.0,
        }
    }
}

/// Per-mode step weights for a fixed `(grid, dt)`.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    dt: f64,
    p: f64,
    dealias: bool,
    linear: bool,
    xi2: Vec<f64>,
    k: Vec<f64>,
    kp: Vec<f64>,
    phi1: Vec<f64>,
    phi2: Vec<f64>,
    keep: Vec<bool>,
    work: Vec<Complex64>,
    n0: Vec<Complex64>,
    n1: Vec<Complex64>,
    u_star: Vec<Complex64>,
}

impl Stepper {
    pub fn new(grid: Grid, dt: f64, p: f64, dealias: bool) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", dt, "time step must be positive"));
        }
        if !(p > 1.0) {
            return Err(Error::param("p", p, "nonlinearity exponent must exceed 1"));
        }
        let rule = GaussRule::new(12);
        let xi2 = grid.xi2_table();
        let len = grid.len();
        let mut k = Vec::with_capacity(len);
        let mut kp = Vec::with_capacity(len);
        let mut phi1 = Vec::with_capacity(len);
        let mut phi2 = Vec::with_capacity(len);
        for &x in &xi2 {
            let (a, b) = kernel_pair(dt, x);
            k.push(a);
            kp.push(b);
            phi1.push(rule.integrate(0.0, dt, |s| kernel_pair(s, x).0));
            phi2.push(rule.integrate(0.0, dt, |s| s * kernel_pair(s, x).0));
        }
        let cut = grid.points() / 3;
        let keep = (0..len).map(|i| grid.max_abs_wavenumber(i) <= cut).collect();
        let zero = vec![Complex64::new(0.0, 0.0); len];
        Ok(Stepper {
            grid,
            dt,
            p,
            dealias,
            linear: false,
            xi2,
            k,
            kp,
            phi1,
            phi2,
            keep,
            work: zero.clone(),
            n0: zero.clone(),
            n1: zero.clone(),
            u_star: zero,
        })
    }

    /// Turns the source term off.
    pub fn linear(mut self, on: bool) -> Self {
        self.linear = on;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `N̂(u) = (|u|^p)^` into `out`; returns `max |u|` over the physical samples
    /// (NaN if any sample is non-finite).
    fn nonlinear_term(&mut self, u: &[Complex64], which: Slot) -> f64 {
        self.work.copy_from_slice(u);
        inverse_in_place(&self.grid, &mut self.work);
        let mut linf: f64 = 0.0;
        for c in self.work.iter_mut() {
            let a = c.re.abs();
            if !a.is_finite() {
                linf = f64::NAN;
            } else if linf.is_finite() {
                linf = linf.max(a);
            }
            *c = Complex64::new(a.powf(self.p), 0.0);
        }
        forward_in_place(&self.grid, &mut self.work);
        if self.dealias {
            for (c, &k) in self.work.iter_mut().zip(&self.keep) {
                if !k {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
        let out = match which {
            Slot::Start => &mut self.n0,
            Slot::End => &mut self.n1,
        };
        out.copy_from_slice(&self.work);
        linf
    }

    /// Sup norm of `u` in physical space (NaN if non-finite).
    pub fn sup_norm(&mut self, u: &SpectralField) -> f64 {
        self.work.copy_from_slice(u.coeffs());
        inverse_in_place(&self.grid, &mut self.work);
        let mut m: f64 = 0.0;
        for c in &self.work {
            if !c.re.is_finite() {
                return f64::NAN;
            }
            m = m.max(c.re.abs());
        }
        m
    }

    /// Advances the state by `dt`; returns `max |u|` at the start of the step
    /// (NaN in linear mode).
    pub fn advance(&mut self, state: &mut PropagatorState) -> Result<f64> {
        let linf = self.prepare(state)?;
        self.finish(state)?;
        Ok(linf)
    }

    /// Evaluates the source at the start of the step; returns `max |u|` there.
    fn prepare(&mut self, state: &PropagatorState) -> Result<f64> {
        state.u.grid().check_same(&self.grid)?;
        if self.linear {
            return Ok(f64::NAN);
        }
        let l = self.nonlinear_term(state.u.coeffs(), Slot::Start);
        if !l.is_finite() {
            return Err(Error::Blowup { t: state.t });
        }
        Ok(l)
    }

    fn finish(&mut self, state: &mut PropagatorState) -> Result<()> {
        let dt = self.dt;
        if !self.linear {
            let (u, ut) = (state.u.coeffs(), state.ut.coeffs());
            let mut ustar = std::mem::take(&mut self.u_star);
            for i in 0..u.len() {
                let lin = u[i] * (self.kp[i] + self.k[i]) + ut[i] * self.k[i];
                ustar[i] = lin + self.n0[i] * self.phi1[i];
            }
            let l = self.nonlinear_term(&ustar, Slot::End);
            self.u_star = ustar;
            if !l.is_finite() {
                return Err(Error::Blowup { t: state.t });
            }
        }
        let u = state.u.coeffs_mut();
        let ut = state.ut.coeffs_mut();
        for i in 0..u.len() {
            let (a, b) = (u[i], ut[i]);
            let (k, kp, x) = (self.k[i], self.kp[i], self.xi2[i]);
            let mut nu = a * (kp + k) + b * k;
            let mut nut = a * (-x * k) + b * kp;
            if !self.linear {
                let w2 = self.phi2[i] / dt;
                let w1 = self.phi1[i] / dt;
                nu += self.n0[i] * w2 + self.n1[i] * (self.phi1[i] - w2);
                nut += self.n0[i] * (k - w1) + self.n1[i] * w1;
            }
            if !(nu.re.is_finite() && nu.im.is_finite() && nut.re.is_finite() && nut.im.is_finite()) {
                return Err(Error::Blowup { t: state.t });
            }
            u[i] = nu;
            ut[i] = nut;
        }
        state.t += dt;
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Start,
    End,
}

/// One step from `state` (builds the per-mode weights; use [`Stepper`] in loops).
pub fn step(state: &PropagatorState, dt: f64, p: f64, dealias: bool) -> Result<PropagatorState> {
    let mut stepper = Stepper::new(*state.u.grid(), dt, p, dealias)?;
    let mut next = state.clone();
    stepper.advance(&mut next)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
    pub hs: f64,
    pub hdotneg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    SurvivedHorizon,
    BlewUp { t_b: f64, uncertainty: f64 },
}

impl Outcome {
    pub fn blowup_time(&self) -> Option<f64> {
        match self {
            Outcome::BlewUp { t_b, .. } => Some(*t_b),
            Outcome::SurvivedHorizon => None,
        }
    }
}

/// Physical samples of `u` at the record times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Snapshots {
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    pub records: Vec<NormRecord>,
    pub outcome: Outcome,
    pub boundary_flag: bool,
    pub steps: usize,
    pub snapshots: Option<Snapshots>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn horizon(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }
}

fn boundary_ratio(grid: &Grid, samples: &[f64]) -> f64 {
    let max = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    let edge = BOUNDARY_LAYER * grid.half_length();
    let mut worst: f64 = 0.0;
    for (i, v) in samples.iter().enumerate() {
        let x = grid.position(i);
        if x[..grid.dim()].iter().any(|c| c.abs() >= edge) {
            worst = worst.max(v.abs());
        }
    }
    worst / max
}

fn record(cfg: &SimConfig, state: &PropagatorState, physical: &[f64]) -> NormRecord {
    let linf = physical.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    NormRecord {
        t: state.t,
        l2: l2_norm(&state.u),
        linf,
        hs: hs_unchecked(&state.u, cfg.s),
        hdotneg: hdotneg_unchecked(&state.u, cfg.gamma),
    }
}

/// Crossing time of `ln m = ln Λ` on the step `[t0, t0 + dt]`, interpolated linearly in `ln m`.
fn crossing(t0: f64, dt: f64, m0: f64, m1: f64, lambda: f64) -> f64 {
    if !(m1.is_finite() && m0 > 0.0 && m1 > m0) {
        return t0 + dt;
    }
    let f = (lambda.ln() - m0.ln()) / (m1.ln() - m0.ln());
    t0 + dt * f.clamp(0.0, 1.0)
}

/// Integrates until `t_max` or blow-up.
///
/// Blow-up is checked at every step (`|u|_∞ > Λ` or non-finite values); the
/// reported `t_b` interpolates the crossing of `Λ` within the last step, with
/// uncertainty `dt`.
pub fn run(cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = *cfg.grid();
    let mut stepper = Stepper::new(grid, cfg.dt, cfg.p, cfg.dealias)?.linear(cfg.linear);
    let mut state = PropagatorState::initial(&cfg.data);
    let steps_total = (cfg.t_max / cfg.dt).round().max(1.0) as usize;
    let lambda = cfg.blowup_threshold;
    let mut records = Vec::new();
    let mut snapshots = cfg.keep_snapshots.then(Snapshots::default);
    let mut boundary_flag = false;
    let mut prev_linf = f64::NAN;
    let mut outcome = Outcome::SurvivedHorizon;
    let mut steps = 0;
    for n in 0..=steps_total {
        let on_record = n % cfg.record_every == 0 || n == steps_total;
        let linf = if cfg.linear {
            if on_record {
                stepper.sup_norm(&state.u)
            } else {
                0.0
            }
        } else {
            match stepper.prepare(&state) {
                Ok(l) => l,
                Err(Error::Blowup { .. }) => f64::NAN,
                Err(e) => return Err(e),
            }
        };
        if !linf.is_finite() || linf > lambda {
            let t_prev = state.t - cfg.dt;
            outcome = Outcome::BlewUp {
                t_b: crossing(t_prev, cfg.dt, prev_linf, linf, lambda),
                uncertainty: cfg.dt,
            };
            break;
        }
        prev_linf = linf;
        if on_record {
            let physical = state.u.to_real();
            records.push(record(cfg, &state, &physical));
            if boundary_ratio(&grid, &physical) > BOUNDARY_MASS_TOL {
                boundary_flag = true;
            }
            if let Some(s) = snapshots.as_mut() {
                s.times.push(state.t);
                s.fields.push(physical);
            }
        }
        if n == steps_total {
            break;
        }
        match stepper.finish(&mut state) {
            Ok(()) => steps += 1,
            Err(Error::Blowup { t }) => {
                outcome = Outcome::BlewUp {
                    t_b: t + cfg.dt,
                    uncertainty: cfg.dt,
                };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Trajectory {
        grid,
        records,
        outcome,
        boundary_flag,
        steps,
        snapshots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lifespan {
    pub eps: f64,
    /// Richardson-extrapolated blow-up time (`t_max` when censored).
    pub t_b: f64,
    pub t_b_err: f64,
    pub censored: bool,
    pub coarse: Option<f64>,
    pub fine: Option<f64>,
    pub boundary_flag: bool,
}

/// Blow-up time at amplitude `eps` from runs with `dt` and `dt/2`.
///
/// `t = t_fine + (t_fine - t_coarse)/3`; the error estimate is `|t_fine - t_coarse|`
/// plus the fine step. A run reaching the horizon marks the point censored.
pub fn measure_lifespan(template: &SimConfig, eps: f64) -> Result<Lifespan> {
    let mut cfg = template.clone();
    cfg.data.eps = eps;
    cfg.keep_snapshots = false;
    if !(eps > 0.0) {
        return Err(Error::param("eps", eps, "amplitude must be positive"));
    }
    let coarse = run(&cfg)?;
    cfg.dt /= 2.0;
    cfg.record_every *= 2;
    let fine = run(&cfg)?;
    let boundary_flag = coarse.boundary_flag || fine.boundary_flag;
    match (coarse.outcome.blowup_time(), fine.outcome.blowup_time()) {
        (Some(c), Some(f)) => Ok(Lifespan {
            eps,
            t_b: f + (f - c) / 3.0,
            t_b_err: (f - c).abs() + cfg.dt,
            censored: false,
            coarse: Some(c),
            fine: Some(f),
            boundary_flag,
        }),
        (c, f) => Ok(Lifespan {
            eps,
            t_b: cfg.t_max,
            t_b_err: f64::INFINITY,
            censored: true,
            coarse: c,
            fine: f,
            boundary_flag,
        }),
    }
}
