//! Scaled test functions `ψ_R(x, t) = φ(x/R)^l η̃(t/R²)^l` and the quantities
//! of the test-function argument: `I(R) = ∬ |u|^p ψ_R`, the data pairing
//! `∫ (u0 + u1) φ_R` and the weight integral
//!
//! ```text
//! W = ∬ ψ^{1-p′} |(∂_ττ - ∂_τ - Δ) ψ|^{p′} dy dτ.
//! ```

use std::cell::Cell;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::atlas::conjugate;
use crate::bump::{BumpFunction, LineProfile, Mollifier, RadialProfile};
use crate::error::{Error, Result};
use crate::grid::{forward_real, Grid};
use crate::profiles::DataPair;
use crate::quad::adaptive;
use crate::solver::Snapshots;

fn g(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

fn g1(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        g(x) / (x * x)
    }
}

fn g2(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        g(x) * (1.0 / x.powi(4) - 2.0 / x.powi(3))
    }
}

/// Spatial profile `φ̃` entering the test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialProfile {
    /// The canonical bump `φ̃ ∗ φ̃` (support radius 2), whose powers have nonnegative transforms.
    #[default]
    Bump,
    /// The closed-form mollifier (support radius 1).
    Mollifier,
}

impl SpatialProfile {
    pub fn build(self) -> Result<Arc<dyn RadialProfile + Send>> {
        Ok(match self {
            SpatialProfile::Bump => Arc::new(bump_profile()?),
            SpatialProfile::Mollifier => Arc::new(Mollifier),
        })
    }
}

/// Radial line of the canonical bump, interpolated from 2048 samples on `[-4, 4)`.
pub fn bump_profile() -> Result<LineProfile> {
    let grid = Grid::new(1, 2048, 4.0)?;
    BumpFunction::canonical(&grid)?.radial_line()
}

/// Smooth non-increasing cutoff: 1 on `[0, 1/2]`, 0 on `[1, ∞)`.
///
/// On `(1/2, 1)` it is `a/(a+b)` with `a = g(1-x)`, `b = g(x)`, `x = 2t-1` and
/// `g(x) = e^{-1/x}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TemporalCutoff;

impl TemporalCutoff {
    /// `(η̃, η̃', η̃'')` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        if t <= 0.5 {
            return (1.0, 0.0, 0.0);
        }
        if t >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let x = 2.0 * t - 1.0;
        let (a, a1, a2) = (g(1.0 - x), -g1(1.0 - x), g2(1.0 - x));
        let (b, b1, b2) = (g(x), g1(x), g2(x));
        let s = a + b;
        let s1 = a1 + b1;
        let num = a1 * b - a * b1;
        let d1 = num / (s * s);
        let d2 = (a2 * b - a * b2) / (s * s) - 2.0 * num * s1 / (s * s * s);
        (a / s, 2.0 * d1, 4.0 * d2)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }
}

/// Which space-time operator enters the weight integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    /// `∂_ττ - ∂_τ - Δ`.
    Literal,
    /// `|∂_ττ| + |∂_τ| + |Δ|` applied termwise; bounds the literal operator at every scale `R ≥ 1`.
    Dominating,
    /// `-∂_τ - Δ`, which scales exactly under `(x, t) ↦ (Rx, R²t)`.
    Parabolic,
}

/// Surface area of the unit sphere in `ℝⁿ` (2 for `n = 1`).
fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            // 2π^{n/2}/Γ(n/2) by the recursion |S^{n-1}| = 2π/(n-2)·|S^{n-3}|
            let mut a = if n.is_multiple_of(2) { 2.0 * PI } else { 4.0 * PI };
            let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
            while k < n {
                a *= 2.0 * PI / k as f64;
                k += 2;
            }
            a
        }
    }
}

/// Spatial bump `φ̃`, temporal cutoff and power `l`, for a nonlinearity exponent `p`.
#[derive(Clone)]
pub struct TestPair {
    pub profile: Arc<dyn RadialProfile + Send>,
    pub cutoff: TemporalCutoff,
    pub l: u32,
    pub p: f64,
}

impl std::fmt::Debug for TestPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestPair")
            .field("support", &self.profile.support())
            .field("l", &self.l)
            .field("p", &self.p)
            .finish()
    }
}

impl TestPair {
    pub fn new(profile: Arc<dyn RadialProfile + Send>, l: u32, p: f64) -> Result<Self> {
        let pc = conjugate(p)?;
        if !(l as f64 > 2.0 * pc) {
            return Err(Error::param(
                "l",
                l as f64,
                format!("power must exceed 2p' = {}", 2.0 * pc),
            ));
        }
        Ok(TestPair {
            profile,
            cutoff: TemporalCutoff,
            l,
            p,
        })
    }

    pub fn conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `φ_R(x) = φ̃(|x|/R)^l`.
    pub fn phi_r(&self, r: f64, big_r: f64) -> f64 {
        self.profile.value(r / big_r).max(0.0).powi(self.l as i32)
    }

    /// `η_R(t) = η̃(t/R²)^l`.
    pub fn eta_r(&self, t: f64, big_r: f64) -> f64 {
        self.cutoff.value(t / (big_r * big_r)).powi(self.l as i32)
    }

    /// Spatial support radius of `φ_R`.
    pub fn support(&self, big_r: f64) -> f64 {
        self.profile.support() * big_r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConstant {
    pub value: f64,
    /// Quadrature error estimate (absolute).
    pub error: f64,
    pub operator: Operator,
    pub scale: f64,
}

impl WeightConstant {
    pub fn relative_error(&self) -> f64 {
        self.error / self.value.abs()
    }
}

/// Radial profile data at one radius, scaled to `R`.
struct Spatial {
    phi: f64,
    grad2: f64,
    lap: f64,
}

fn spatial(pair: &TestPair, n: usize, r: f64, big_r: f64) -> Spatial {
    let y = r / big_r;
    let f = pair.profile.value(y).max(0.0);
    let d1 = pair.profile.d1(y) / big_r;
    let d2 = pair.profile.d2(y) / (big_r * big_r);
    let lap = if r < 1e-12 * big_r {
        n as f64 * d2
    } else {
        d2 + (n as f64 - 1.0) * d1 / r
    };
    Spatial {
        phi: f,
        grad2: d1 * d1,
        lap,
    }
}

/// `ψ^{1-p′}|Lψ|^{p′}` written through `φ̃, η̃` so that no negative powers appear.
fn integrand(pair: &TestPair, op: Operator, sp: &Spatial, t: f64, big_r: f64) -> f64 {
    let l = pair.l as f64;
    let pc = pair.conjugate();
    let q = l / pc;
    let r2 = big_r * big_r;
    let (e, e1, e2) = pair.cutoff.eval(t / r2);
    let (e, e1, e2) = (e.max(0.0), e1 / r2, e2 / (r2 * r2));
    let f = sp.phi;
    if f <= 0.0 || e <= 0.0 {
        return 0.0;
    }
    // η^{1/p′-1}η'' , η^{1/p′-1}η' and φ^{1/p′-1}Δφ in terms of the tilde functions
    let tt = l * (l - 1.0) * e.powf(q - 2.0) * e1 * e1 + l * e.powf(q - 1.0) * e2;
    let u = l * e.powf(q - 1.0) * e1;
    let s = l * (l - 1.0) * f.powf(q - 2.0) * sp.grad2 + l * f.powf(q - 1.0) * sp.lap;
    let (fq, eq) = (f.powf(q), e.powf(q));
    let v = match op {
        Operator::Literal => (fq * (tt - u) - eq * s).abs(),
        Operator::Dominating => fq * tt.abs() + fq * u.abs() + eq * s.abs(),
        Operator::Parabolic => (-fq * u - eq * s).abs(),
    };
    v.powf(pc)
}

/// `W(R) = ∬ ψ_R^{1-p′} |L ψ_R|^{p′} dx dt` over `ℝⁿ × [0, R²]` by nested adaptive quadrature.
pub fn weight_integral(pair: &TestPair, n: usize, op: Operator, big_r: f64, rel_tol: f64) -> Result<WeightConstant> {
    if !(1..=3).contains(&n) {
        return Err(Error::param("n", n as f64, "dimension must be 1, 2 or 3"));
    }
    if !(big_r > 0.0) {
        return Err(Error::param("R", big_r, "scale must be positive"));
    }
    let r2 = big_r * big_r;
    let area = sphere_area(n);
    let inner_err = Cell::new(0.0f64);
    let radial = |r: f64| {
        let sp = spatial(pair, n, r, big_r);
        if sp.phi <= 0.0 {
            return 0.0;
        }
        let q = adaptive(
            |t| integrand(pair, op, &sp, t, big_r),
            0.0,
            r2,
            &[0.5 * r2],
            rel_tol * 0.1,
            0.0,
            400,
        );
        let w = area * r.powi(n as i32 - 1);
        inner_err.set(inner_err.get() + w * q.error);
        w * q.value
    };
    let rmax = pair.support(big_r);
    let outer = adaptive(radial, 0.0, rmax, &[], rel_tol, 0.0, 2000);
    // inner errors were accumulated over every outer node; scale by the mean node weight
    let nodes = 15.0 * outer.intervals as f64;
    let error = outer.error + inner_err.get() * rmax / nodes;
    let value = outer.value;
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::Aborted(format!("weight integral is {value}")));
    }
    Ok(WeightConstant {
        value,
        error,
        operator: op,
        scale: big_r,
    })
}

/// The unscaled weight integral (`R = 1`); requires `l > 2p′`.
pub fn weight_constant(pair: &TestPair, n: usize, op: Operator, rel_tol: f64) -> Result<WeightConstant> {
    weight_integral(pair, n, op, 1.0, rel_tol)
}

/// `I(R) = ∬ |u|^p φ_R η_R dx dt` by Riemann sums in space and the trapezoid rule in time.
pub fn i_of_r(grid: &Grid, snaps: &Snapshots, pair: &TestPair, big_r: f64) -> Result<f64> {
    let r2 = big_r * big_r;
    let horizon = snaps.times.last().copied().unwrap_or(0.0);
    if horizon < r2 {
        return Err(Error::param(
            "R",
            big_r,
            format!("needs a trajectory up to t = {r2}, have {horizon}"),
        ));
    }
    check_box(grid, pair, big_r)?;
    let weights: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            let r = x[..grid.dim()].iter().map(|v| v * v).sum::<f64>().sqrt();
            pair.phi_r(r, big_r)
        })
        .collect();
    let cell = grid.cell_volume();
    let slice = |k: usize| -> f64 {
        let eta = pair.eta_r(snaps.times[k], big_r);
        if eta == 0.0 {
            return 0.0;
        }
        snaps.fields[k]
            .iter()
            .zip(&weights)
            .map(|(u, w)| u.abs().powf(pair.p) * w)
            .sum::<f64>()
            * cell
            * eta
    };
    let mut total = 0.0;
    let mut prev = slice(0);
    for k in 1..snaps.times.len() {
        if snaps.times[k - 1] >= r2 {
            break;
        }
        let cur = slice(k);
        total += 0.5 * (prev + cur) * (snaps.times[k] - snaps.times[k - 1]);
        prev = cur;
    }
    Ok(total)
}

fn check_box(grid: &Grid, pair: &TestPair, big_r: f64) -> Result<()> {
    let need = pair.support(big_r);
    if need > grid.half_length() - 2.0 * grid.dx() {
        return Err(Error::SupportOutsideBox {
            needed: need,
            available: grid.half_length(),
        });
    }
    Ok(())
}

/// `∫ (u0 + u1) φ_R dx`, evaluated as `∫ (û0 + û1) conj(φ̂_R) dξ`.
pub fn pairing(data: &DataPair, pair: &TestPair, big_r: f64) -> Result<f64> {
    let grid = data.grid();
    check_box(grid, pair, big_r)?;
    let phi = grid.sample(|x| pair.phi_r(x.iter().map(|v| v * v).sum::<f64>().sqrt(), big_r));
    let phi_hat = forward_real(grid, &phi)?;
    let sum = data.sum();
    let v: f64 = sum
        .coeffs()
        .iter()
        .zip(phi_hat.coeffs())
        .map(|(a, b)| (a * b.conj()).re)
        .sum();
    Ok(v * grid.frequency_cell())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub r: f64,
    pub i: f64,
    pub pairing: f64,
    /// `-ε P + C I^{1/p} R^{(n+2)/p′-2}`.
    pub rhs_lem: f64,
    /// `-p′ ε P + C^{p′} R^{n+2-2p′}`.
    pub rhs_lem2: f64,
    pub margin_lem: f64,
    pub margin_lem2: f64,
}

impl LemmaRow {
    pub fn holds(&self) -> bool {
        self.margin_lem >= 0.0 && self.margin_lem2 >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    /// `C = W^{1/p′}` with the dominating operator.
    pub constant: f64,
    pub weight: WeightConstant,
    pub rows: Vec<LemmaRow>,
}

/// Evaluates both test-function inequalities on a recorded trajectory.
///
/// `C = W_dom^{1/p′}` where `W_dom` uses the dominating operator: for `R ≥ 1`
/// the literal rescaled operator is bounded termwise by `R^{-2}` times it, so
/// the Hölder step yields the first inequality with this `C`; the second
/// follows from Young's inequality.
pub fn check_lemma3(
    grid: &Grid,
    snaps: &Snapshots,
    data: &DataPair,
    pair: &TestPair,
    radii: &[f64],
    eps: f64,
) -> Result<LemmaReport> {
    let n = grid.dim();
    let weight = weight_constant(pair, n, Operator::Dominating, 1e-6)?;
    let pc = pair.conjugate();
    let c = weight.value.powf(1.0 / pc);
    let nf = n as f64;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r >= 1.0) {
            return Err(Error::param("R", r, "scales must be >= 1"));
        }
        let i = i_of_r(grid, snaps, pair, r)?;
        let pr = pairing(data, pair, r)?;
        let rhs_lem = -eps * pr + c * i.powf(1.0 / pair.p) * r.powf((nf + 2.0) / pc - 2.0);
        let rhs_lem2 = -pc * eps * pr + c.powf(pc) * r.powf(nf + 2.0 - 2.0 * pc);
        rows.push(LemmaRow {
            r,
            i,
            pairing: pr,
            rhs_lem,
            rhs_lem2,
            margin_lem: rhs_lem - i,
            margin_lem2: rhs_lem2 - i,
        });
    }
    Ok(LemmaReport {
        constant: c,
        weight,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::Mollifier;

    #[test]
    fn cutoff_shape() {
        let c = TemporalCutoff;
        assert_eq!(c.value(0.3), 1.0);
        assert_eq!(c.value(0.5), 1.0);
        assert_eq!(c.value(1.0), 0.0);
        assert!((c.value(0.75) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..=200 {
            let v = c.value(0.5 + k as f64 / 400.0);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn cutoff_derivatives_match_finite_differences() {
        let c = TemporalCutoff;
        let h = 1e-5;
        for &t in &[0.55, 0.62, 0.75, 0.9, 0.97] {
            let (_, d1, d2) = c.eval(t);
            let fd1 = (c.value(t + h) - c.value(t - h)) / (2.0 * h);
            let fd2 = (c.value(t + h) - 2.0 * c.value(t) + c.value(t - h)) / (h * h);
            assert!((d1 - fd1).abs() < 1e-6 * (1.0 + d1.abs()), "t={t}");
            assert!((d2 - fd2).abs() < 1e-3 * (1.0 + d2.abs()), "t={t}");
        }
    }

    #[test]
    fn sphere_areas() {
        assert_eq!(sphere_area(1), 2.0);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-15);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn power_must_exceed_twice_conjugate() {
        let prof: Arc<dyn RadialProfile + Send> = Arc::new(Mollifier);
        assert!(TestPair::new(prof.clone(), 4, 2.0).is_err());
        assert!(TestPair::new(prof, 5, 2.0).is_ok());
    }

    #[test]
    fn parabolic_weight_scales_exactly() {
        let pair = TestPair::new(Arc::new(Mollifier), 5, 2.0).unwrap();
        let w1 = weight_integral(&pair, 1, Operator::Parabolic, 1.0, 1e-8).unwrap();
        let w3 = weight_integral(&pair, 1, Operator::Parabolic, 3.0, 1e-8).unwrap();
        // (n + 2) - 2p′ = -1 in 1D with p′ = 2
        let ratio = w3.value / w1.value;
        assert!((ratio - 3f64.powi(-1)).abs() / ratio < 1e-6, "{ratio}");
    }
}
