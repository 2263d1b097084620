//! Periodic grids on `[-L, L)^n` and the unitary discrete Fourier transform.
//!
//! Coefficients are stored in FFT order and approximate the continuum transform
//! `f̂(ξ) = (2π)^{-n/2} ∫ f(x) e^{-i x·ξ} dx` at the grid frequencies
//! `ξ_k = (π/L) k`, `k ∈ [-N/2, N/2)^n`. With that scaling the discrete Parseval
//! identity reads `Σ|f|² dx^n = Σ|f̂|² dξ^n` exactly.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    points: usize,
    half_length: f64,
}

impl Grid {
    /// `dim` in 1..=3, `points` per axis a power of two ≥ 8, box `[-half_length, half_length)`.
    pub fn new(dim: usize, points: usize, half_length: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half length must be positive, got {half_length}"
            )));
        }
        let grid = Grid {
            dim,
            points,
            half_length,
        };
        if grid.xi_max() <= 0.5 {
            return Err(Error::InvalidGrid(format!(
                "maximum resolved frequency {} does not exceed the branch point 1/2",
                grid.xi_max()
            )));
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.points as f64
    }

    /// Frequency spacing π/L.
    pub fn dk(&self) -> f64 {
        PI / self.half_length
    }

    pub fn xi_max(&self) -> f64 {
        PI * self.points as f64 / (2.0 * self.half_length)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    pub fn frequency_cell(&self) -> f64 {
        self.dk().powi(self.dim as i32)
    }

    /// Same box, twice the points and twice the half-length (dx fixed, dξ halved).
    pub fn refined(&self) -> Self {
        Grid {
            dim: self.dim,
            points: self.points * 2,
            half_length: self.half_length * 2.0,
        }
    }

    pub fn axis_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = rem % self.points;
            rem /= self.points;
        }
        out
    }

    pub fn wavenumber(&self, i: usize) -> i64 {
        let half = self.points / 2;
        if i < half {
            i as i64
        } else {
            i as i64 - self.points as i64
        }
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.dx()
    }

    pub fn position(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.axis_index(flat);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    pub fn frequency(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.axis_index(flat);
        let mut xi = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            xi[axis] = self.dk() * self.wavenumber(idx[axis]) as f64;
        }
        xi
    }

    pub fn xi2(&self, flat: usize) -> f64 {
        self.frequency(flat).iter().map(|v| v * v).sum()
    }

    pub fn xi2_table(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.xi2(i)).collect()
    }

    /// Largest |k_j| over the axes of a flat index.
    pub fn max_abs_wavenumber(&self, flat: usize) -> usize {
        let idx = self.axis_index(flat);
        (0..self.dim)
            .map(|a| self.wavenumber(idx[a]).unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Flat index of the mode with wavenumbers `-k` (wrapping at the Nyquist index).
    pub fn mirror(&self, flat: usize) -> usize {
        let idx = self.axis_index(flat);
        let mut out = 0;
        for &i in &idx[..self.dim] {
            let m = (self.points - i) % self.points;
            out = out * self.points + m;
        }
        out
    }

    pub fn sample<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        (0..self.len())
            .map(|i| {
                let x = self.position(i);
                f(&x[..self.dim])
            })
            .collect()
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(points: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(points)
        } else {
            p.plan_fft_forward(points)
        }
    })
}

/// Unnormalized n-dimensional FFT in place, axis by axis.
pub(crate) fn fft_nd(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.points;
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // last axis is contiguous
    fft.process_with_scratch(data, &mut scratch);
    if grid.dim == 1 {
        return;
    }
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.dim - 1 {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

fn parity_sign(grid: &Grid, flat: usize) -> f64 {
    let idx = grid.axis_index(flat);
    let s: usize = idx[..grid.dim].iter().sum();
    if s.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn forward_scale(grid: &Grid) -> f64 {
    grid.cell_volume() / (2.0 * PI).powf(grid.dim as f64 / 2.0)
}

fn inverse_scale(grid: &Grid) -> f64 {
    grid.frequency_cell() / (2.0 * PI).powf(grid.dim as f64 / 2.0)
}

/// Fourier coefficients of a field on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid of {} points",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(SpectralField { grid, coeffs })
    }

    /// Builds coefficients from a function of the frequency vector.
    pub fn from_spectrum<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let coeffs = (0..grid.len())
            .map(|i| {
                let xi = grid.frequency(i);
                f(&xi[..grid.dim])
            })
            .collect();
        SpectralField { grid, coeffs }
    }

    /// Builds coefficients from a real radial spectrum `f̂(|ξ|)`.
    pub fn from_radial_spectrum<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(f64) -> f64,
    {
        let coeffs = (0..grid.len())
            .map(|i| Complex64::new(f(grid.xi2(i).sqrt()), 0.0))
            .collect();
        SpectralField { grid, coeffs }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn zero_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Physical samples (complex).
    pub fn to_physical(&self) -> Vec<Complex64> {
        inverse_transform(self)
    }

    /// Real parts of the physical samples.
    pub fn to_real(&self) -> Vec<f64> {
        inverse_transform(self).into_iter().map(|c| c.re).collect()
    }

    pub fn scaled(&self, a: f64) -> Self {
        SpectralField {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SpectralField, b: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(SpectralField {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        })
    }

    /// Relative violation of `c(-k) = conj(c(k))`. The Nyquist planes have no partner
    /// on the grid and are compared against themselves.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let scale = self.max_abs_coeff();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.coeffs.len() {
            let j = self.grid.mirror(i);
            worst = worst.max((self.coeffs[j] - self.coeffs[i].conj()).norm());
        }
        worst / scale
    }

    /// Physical-space translation by `shift`, realised as a phase `e^{-i ξ·shift}`.
    pub fn translated(&self, shift: &[f64]) -> Self {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let xi = self.grid.frequency(i);
            let phase: f64 = xi.iter().zip(shift).map(|(a, b)| a * b).sum();
            *c *= Complex64::from_polar(1.0, -phase);
        }
        out
    }

    /// Evaluates the trigonometric interpolant at an arbitrary point.
    pub fn evaluate_at(&self, x: &[f64]) -> Complex64 {
        let scale = inverse_scale(&self.grid);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let xi = self.grid.frequency(i);
            let phase: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum();
            acc += c * Complex64::from_polar(1.0, phase);
        }
        acc * scale
    }
}

fn check_finite(samples: &[Complex64]) -> Result<()> {
    match samples.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
        Some(index) => Err(Error::NonFinite {
            what: "physical samples",
            index,
        }),
        None => Ok(()),
    }
}

/// Forward unitary transform of complex physical samples.
pub fn forward_transform(grid: &Grid, samples: &[Complex64]) -> Result<SpectralField> {
    if samples.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} samples for a grid of {} points",
            samples.len(),
            grid.len()
        )));
    }
    check_finite(samples)?;
    let mut data = samples.to_vec();
    forward_in_place(grid, &mut data);
    Ok(SpectralField {
        grid: *grid,
        coeffs: data,
    })
}

pub fn forward_real(grid: &Grid, samples: &[f64]) -> Result<SpectralField> {
    let complex: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward_transform(grid, &complex)
}

pub fn inverse_transform(field: &SpectralField) -> Vec<Complex64> {
    let mut data = field.coeffs.clone();
    inverse_in_place(&field.grid, &mut data);
    data
}

/// Unchecked forward transform used on solver hot paths.
pub(crate) fn forward_in_place(grid: &Grid, data: &mut [Complex64]) {
    fft_nd(grid, data, false);
    let scale = forward_scale(grid);
    for (i, c) in data.iter_mut().enumerate() {
        *c *= scale * parity_sign(grid, i);
    }
}

pub(crate) fn inverse_in_place(grid: &Grid, data: &mut [Complex64]) {
    let scale = inverse_scale(grid);
    for (i, c) in data.iter_mut().enumerate() {
        *c *= scale * parity_sign(grid, i);
    }
    fft_nd(grid, data, true);
}

/// Multiplies every coefficient by `m(|ξ_k|)`.
pub fn apply_radial_multiplier<M>(field: &SpectralField, m: M) -> Result<SpectralField>
where
    M: Fn(f64) -> f64,
{
    let grid = field.grid;
    let mut coeffs = Vec::with_capacity(field.coeffs.len());
    for (i, c) in field.coeffs.iter().enumerate() {
        let xi = grid.xi2(i).sqrt();
        let w = m(xi);
        if !w.is_finite() {
            return Err(Error::NonFiniteMultiplier { xi });
        }
        coeffs.push(c * w);
    }
    Ok(SpectralField { grid, coeffs })
}
