//! Compactly supported bumps: the mollifier `φ̃`, its self-convolution
//! `φ = φ̃∗φ̃` (nonnegative transform) and pointwise powers `φ^l`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{forward_real, Grid, SpectralField};

/// `e^{-1/(1-r²)}` for `r < 1`, else 0.
pub fn mollifier(r: f64) -> f64 {
    let q = 1.0 - r * r;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

/// Samples of the mollifier on the grid. The box must contain the unit ball with margin.
pub fn mollifier_profile(grid: &Grid) -> Result<Vec<f64>> {
    if grid.half_length() < 2.0 {
        return Err(Error::SupportOutsideBox {
            needed: 2.0,
            available: grid.half_length(),
        });
    }
    Ok(grid.sample(|x| mollifier(x.iter().map(|v| v * v).sum::<f64>().sqrt())))
}

/// Largest |value| within two cells of the box boundary.
fn boundary_max(grid: &Grid, values: &[f64]) -> f64 {
    let n = grid.points();
    let near = |i: usize| i < 2 || i >= n - 2;
    values
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let idx = grid.axis_index(*i);
            idx[..grid.dim()].iter().any(|&j| near(j))
        })
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max)
}

/// `φ̃∗φ̃` with continuum scaling: `(φ̃∗φ̃)^ = (2π)^{n/2} (φ̃^)²`.
pub fn self_convolve(grid: &Grid, tilde: &[f64]) -> Result<Vec<f64>> {
    let spec = forward_real(grid, tilde)?;
    let c = (2.0 * PI).powf(grid.dim() as f64 / 2.0);
    let mut out = spec.clone();
    for v in out.coeffs_mut() {
        *v = *v * *v * c;
    }
    let phi = out.to_real();
    let max = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = boundary_max(grid, &phi);
    if edge > 1e-12 * max {
        return Err(Error::Wraparound { value: edge });
    }
    Ok(phi)
}

/// `l = max(3, ⌊2p′⌋ + 1)`, the smallest integer above `2p′` (and at least 3).
pub fn default_power(p: f64) -> Result<u32> {
    let pc = crate::atlas::conjugate(p)?;
    Ok(((2.0 * pc).floor() as u32 + 1).max(3))
}

/// `φ = φ̃∗φ̃` raised to the power `l`, with cached transforms.
#[derive(Debug, Clone)]
pub struct BumpFunction {
    grid: Grid,
    tilde: Vec<f64>,
    phi: Vec<f64>,
    power: u32,
    values: Vec<f64>,
    phi_hat: SpectralField,
    power_hat: SpectralField,
}

impl BumpFunction {
    /// Canonical bump from the mollifier, power 1.
    pub fn canonical(grid: &Grid) -> Result<Self> {
        let tilde = mollifier_profile(grid)?;
        Self::from_tilde(grid, tilde)
    }

    pub fn from_tilde(grid: &Grid, tilde: Vec<f64>) -> Result<Self> {
        let phi = self_convolve(grid, &tilde)?;
        let phi_hat = forward_real(grid, &phi)?;
        Ok(BumpFunction {
            grid: *grid,
            tilde,
            values: phi.clone(),
            phi,
            power: 1,
            power_hat: phi_hat.clone(),
            phi_hat,
        })
    }

    /// `φ^l` pointwise.
    pub fn power(&self, l: u32) -> Result<Self> {
        if l == 0 {
            return Err(Error::param("l", 0.0, "power must be >= 1"));
        }
        let values: Vec<f64> = self.phi.iter().map(|v| v.powi(l as i32)).collect();
        let power_hat = forward_real(&self.grid, &values)?;
        Ok(BumpFunction {
            power: l,
            values,
            power_hat,
            ..self.clone()
        })
    }

    /// The same bump translated by `shift` (breaks radial symmetry; used as a counterexample).
    pub fn shifted(&self, shift: &[f64]) -> Self {
        let power_hat = self.power_hat.translated(shift);
        let phi_hat = self.phi_hat.translated(shift);
        BumpFunction {
            values: power_hat.to_real(),
            phi: phi_hat.to_real(),
            power_hat,
            phi_hat,
            ..self.clone()
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn power_index(&self) -> u32 {
        self.power
    }

    pub fn tilde(&self) -> &[f64] {
        &self.tilde
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Samples of `φ^l`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn phi_hat(&self) -> &SpectralField {
        &self.phi_hat
    }

    pub fn power_hat(&self) -> &SpectralField {
        &self.power_hat
    }

    /// `φ^l` at an arbitrary point (trigonometric interpolant).
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.power_hat.evaluate_at(x).re
    }

    /// `φ^l` along the first axis through the origin, as a radial profile.
    pub fn radial_line(&self) -> Result<LineProfile> {
        let n = self.grid.points();
        let stride = n.pow(self.grid.dim() as u32 - 1);
        // centre index n/2 on every other axis
        let centre: usize = (1..self.grid.dim())
            .map(|a| (n / 2) * n.pow((self.grid.dim() - 1 - a) as u32))
            .sum();
        let line: Vec<f64> = (0..n).map(|j| self.values[centre + j * stride]).collect();
        LineProfile::new(self.grid.half_length(), &line)
    }
}

/// A radial function `r ↦ f(r)` with two derivatives, supported in `[0, support]`.
pub trait RadialProfile: Sync {
    fn value(&self, r: f64) -> f64;
    fn d1(&self, r: f64) -> f64;
    fn d2(&self, r: f64) -> f64;
    fn support(&self) -> f64;
}

/// The mollifier with closed-form derivatives.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mollifier;

impl RadialProfile for Mollifier {
    fn value(&self, r: f64) -> f64 {
        mollifier(r)
    }

    // f = e^g with g = -1/(1-r²): f' = f g', f'' = f (g'² + g'')
    fn d1(&self, r: f64) -> f64 {
        let q = 1.0 - r * r;
        if q <= 0.0 {
            return 0.0;
        }
        let g1 = -2.0 * r / (q * q);
        mollifier(r) * g1
    }

    fn d2(&self, r: f64) -> f64 {
        let q = 1.0 - r * r;
        if q <= 0.0 {
            return 0.0;
        }
        let g1 = -2.0 * r / (q * q);
        let g2 = -2.0 / (q * q) - 8.0 * r * r / (q * q * q);
        mollifier(r) * (g1 * g1 + g2)
    }

    fn support(&self) -> f64 {
        1.0
    }
}

/// A 1D periodic trigonometric interpolant read as an even radial profile.
#[derive(Debug, Clone)]
pub struct LineProfile {
    xi: Vec<f64>,
    coeffs: Vec<Complex64>,
    scale: f64,
    support: f64,
}

impl LineProfile {
    /// `line` holds samples at `x_j = -L + j dx`; the support is read off the samples.
    pub fn new(half_length: f64, line: &[f64]) -> Result<Self> {
        let grid = Grid::new(1, line.len(), half_length)?;
        let spec = forward_real(&grid, line)?;
        let xi = (0..grid.len()).map(|i| grid.frequency(i)[0]).collect();
        let max = line.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let support = (0..line.len())
            .filter(|&j| line[j].abs() > 1e-14 * max)
            .map(|j| grid.coordinate(j).abs() + grid.dx())
            .fold(0.0, f64::max);
        Ok(LineProfile {
            xi,
            coeffs: spec.into_coeffs(),
            scale: grid.dk() / (2.0 * PI).sqrt(),
            support,
        })
    }

    fn eval(&self, r: f64, order: i32) -> f64 {
        if r >= self.support {
            return 0.0;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        for (c, &k) in self.coeffs.iter().zip(&self.xi) {
            acc += c * (i * k).powi(order) * Complex64::from_polar(1.0, k * r);
        }
        acc.re * self.scale
    }
}

impl RadialProfile for LineProfile {
    fn value(&self, r: f64) -> f64 {
        self.eval(r, 0)
    }

    fn d1(&self, r: f64) -> f64 {
        self.eval(r, 1)
    }

    fn d2(&self, r: f64) -> f64 {
        self.eval(r, 2)
    }

    fn support(&self) -> f64 {
        self.support
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub i: bool,
    pub ii: bool,
    pub iii: bool,
    /// `-min φ / max φ` (positive means a violation).
    pub worst_i: f64,
    /// `-min Re φ̂ / max |φ̂|`.
    pub worst_ii: f64,
    /// Largest `∂_R φ(Rx)` seen, relative to `max φ`.
    pub worst_iii: f64,
    /// `max φ = 0`: every check passes vacuously.
    pub degenerate: bool,
}

impl ConditionReport {
    pub fn all(&self) -> bool {
        self.i && self.ii && self.iii && !self.degenerate
    }
}

/// Dilation factors at which monotonicity in `R` is tested.
pub const DILATIONS: [f64; 3] = [0.5, 1.0, 2.0];

/// Lattice points `y` with `0 < |y| ≤ 2.2`, at most `per_axis` per axis.
fn probe_lattice(grid: &Grid, per_axis: usize) -> Vec<Vec<f64>> {
    let reach = 2.2f64.min(0.5 * grid.half_length());
    let h = 2.0 * reach / per_axis as f64;
    let axis: Vec<f64> = (0..=per_axis).map(|j| -reach + j as f64 * h + 0.37 * h).collect();
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..grid.dim() {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out.retain(|y| {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        r2 > 0.0 && r2 <= reach * reach
    });
    out
}

/// Certifies `φ^l ≥ 0`, `(φ^l)^ ≥ 0` and that `R ↦ φ^l(Rx)` is non-increasing.
///
/// All tolerances are relative to the maximum of the quantity checked.
pub fn check_conditions(bump: &BumpFunction, tol: f64) -> ConditionReport {
    let values = bump.values();
    let max = values.iter().fold(0.0f64, |m, v| m.max(*v));
    let min = values.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if max <= 0.0 {
        return ConditionReport {
            i: true,
            ii: true,
            iii: true,
            worst_i: 0.0,
            worst_ii: 0.0,
            worst_iii: 0.0,
            degenerate: true,
        };
    }
    let worst_i = -min / max;

    let hat = bump.power_hat();
    let hat_max = hat.max_abs_coeff();
    let hat_min = hat.coeffs().iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
    let worst_ii = -hat_min / hat_max;

    let per_axis = match bump.grid().dim() {
        1 => 200,
        2 => 24,
        _ => 10,
    };
    let h = 1e-3;
    let mut worst_iii = f64::NEG_INFINITY;
    for y in probe_lattice(bump.grid(), per_axis) {
        for &r in &DILATIONS {
            let x: Vec<f64> = y.iter().map(|v| v / r).collect();
            let at = |s: f64| {
                let z: Vec<f64> = x.iter().map(|v| v * s).collect();
                bump.value_at(&z)
            };
            let d = (at(r + h) - at(r - h)) / (2.0 * h);
            worst_iii = worst_iii.max(d / max);
        }
    }
    ConditionReport {
        i: worst_i <= tol,
        ii: worst_ii <= tol,
        iii: worst_iii <= tol,
        worst_i,
        worst_ii,
        worst_iii,
        degenerate: false,
    }
}
