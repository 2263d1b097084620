//! Fourier multipliers of the fundamental solution of `u_tt + u_t - Δu = 0`.
//!
//! `K̂(t, ξ)` solves `K̂'' + K̂' + |ξ|² K̂ = 0`, `K̂(0) = 0`, `K̂'(0) = 1`. With
//! `D = 1/4 - |ξ|²` it is `e^{-t/2} sinh(t√D)/√D` for `D > 0` and the matching
//! `sin` form for `D < 0`. Inside the band `|D| ≤ SERIES_BAND` both closed
//! forms are replaced by the power series in `D`, whose value at `D = 0` is
//! `t e^{-t/2}`.

use crate::error::{Error, Result};
use crate::grid::SpectralField;

/// Half-width of the band around `|ξ|² = 1/4` evaluated by the series.
pub const SERIES_BAND: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    pub t: f64,
    pub xi2: f64,
    pub k: f64,
    pub kprime: f64,
}

fn check_args(t: f64, xi2: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", t, "time must be finite and >= 0"));
    }
    if !(xi2 >= 0.0 && xi2.is_finite()) {
        return Err(Error::param("xi2", xi2, "squared frequency must be finite and >= 0"));
    }
    Ok(())
}

/// `(Σ D^k t^{2k+1}/(2k+1)!, Σ D^k t^{2k}/(2k)!)`; the sinh and cosh series in `t√D`.
fn series(t: f64, d: f64) -> (f64, f64) {
    let x = d * t * t;
    let (mut a, mut b) = (t, 1.0);
    let (mut sa, mut sb) = (a, b);
    for k in 1..1000 {
        let kf = k as f64;
        a *= x / ((2.0 * kf) * (2.0 * kf + 1.0));
        b *= x / ((2.0 * kf - 1.0) * (2.0 * kf));
        sa += a;
        sb += b;
        if a.abs() <= 1e-17 * sa.abs() && b.abs() <= 1e-17 * sb.abs() {
            break;
        }
    }
    (sa, sb)
}

/// Unchecked evaluation of `(K̂, ∂_t K̂)`.
#[inline]
pub fn kernel_pair(t: f64, xi2: f64) -> (f64, f64) {
    if t == 0.0 {
        return (0.0, 1.0);
    }
    let d = 0.25 - xi2;
    if d > SERIES_BAND {
        let s = d.sqrt();
        // e^{-t/2} sinh(ts) = e^{t(s-1/2)} (1 - e^{-2ts}) / 2, both exponents non-positive
        let a = (t * (s - 0.5)).exp();
        let em = (-2.0 * t * s).exp_m1();
        let k = -a * em / (2.0 * s);
        let cosh_part = a * (2.0 + em) / 2.0;
        (k, cosh_part - 0.5 * k)
    } else if d < -SERIES_BAND {
        let w = (-d).sqrt();
        let e = (-0.5 * t).exp();
        let (sin, cos) = (t * w).sin_cos();
        let k = e * sin / w;
        (k, e * cos - 0.5 * k)
    } else {
        let e = (-0.5 * t).exp();
        let (sa, sb) = series(t, d);
        let k = e * sa;
        (k, e * sb - 0.5 * k)
    }
}

pub fn evaluate(t: f64, xi2: f64) -> Result<KernelEval> {
    check_args(t, xi2)?;
    let (k, kprime) = kernel_pair(t, xi2);
    Ok(KernelEval { t, xi2, k, kprime })
}

pub fn khat(t: f64, xi2: f64) -> Result<f64> {
    evaluate(t, xi2).map(|e| e.k)
}

pub fn kprimehat(t: f64, xi2: f64) -> Result<f64> {
    evaluate(t, xi2).map(|e| e.kprime)
}

/// Exact linear evolution of the state `(û, ∂_t û)` over time `t`:
///
/// `û(t) = (K̂' + K̂) û₀ + K̂ û₁`, `∂_t û(t) = -|ξ|² K̂ û₀ + K̂' û₁`,
///
/// which is the mild solution `K'(t)*u₀ + K(t)*(u₀ + u₁)` with no source.
pub fn propagate_linear(u0: &SpectralField, u1: &SpectralField, t: f64) -> Result<(SpectralField, SpectralField)> {
    u0.grid().check_same(u1.grid())?;
    check_args(t, 0.0)?;
    let grid = *u0.grid();
    let mut u = SpectralField::zeros(grid);
    let mut ut = SpectralField::zeros(grid);
    {
        let (uc, utc) = (u.coeffs_mut(), ut.coeffs_mut());
        for i in 0..grid.len() {
            let xi2 = grid.xi2(i);
            let (k, kp) = kernel_pair(t, xi2);
            let (a, b) = (u0.coeffs()[i], u1.coeffs()[i]);
            uc[i] = a * (kp + k) + b * k;
            utc[i] = a * (-xi2 * k) + b * kp;
        }
    }
    Ok((u, ut))
}
