//! Discrete Lebesgue and Sobolev norms.
//!
//! Frequency-space norms are midpoint sums over the grid frequencies with cell
//! weight `dξ^n`, approximating `∫ w(ξ) |f̂(ξ)|² dξ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, SpectralField};

/// How the `k = 0` cell is treated by the homogeneous norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroModePolicy {
    /// The zero mode must vanish (to 1e-12 of the largest coefficient).
    RequireZero,
    /// The zero mode is skipped without comment.
    Exclude,
}

/// Growth factor per refinement above which the homogeneous norm is declared divergent.
pub const DIVERGENCE_GROWTH: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l2: f64,
    pub linf: f64,
    pub hs: f64,
    pub hdotneg: f64,
    pub divergence_flag: bool,
}

fn weighted_sum<W: Fn(f64) -> f64>(field: &SpectralField, skip_zero: bool, w: W) -> f64 {
    let grid = field.grid();
    let sum: f64 = field
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(i, _)| !(skip_zero && *i == 0))
        .map(|(i, c)| w(grid.xi2(i)) * c.norm_sqr())
        .sum();
    (sum * grid.frequency_cell()).sqrt()
}

fn check_finite(field: &SpectralField) -> Result<()> {
    match field
        .coeffs()
        .iter()
        .position(|c| !(c.re.is_finite() && c.im.is_finite()))
    {
        Some(index) => Err(Error::NonFinite {
            what: "coefficients",
            index,
        }),
        None => Ok(()),
    }
}

/// `‖f‖_{L^p}` by a Riemann sum of the physical samples; `p = ∞` gives the max.
pub fn lp_norm(field: &SpectralField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::param("p", p, "Lebesgue exponent must be >= 1"));
    }
    check_finite(field)?;
    let samples = field.to_physical();
    Ok(lp_of_samples(field.grid(), samples.iter().map(|c| c.norm()), p))
}

pub(crate) fn lp_of_samples<I: Iterator<Item = f64>>(grid: &Grid, abs: I, p: f64) -> f64 {
    if p.is_infinite() {
        abs.fold(0.0, f64::max)
    } else if p == 2.0 {
        (abs.map(|a| a * a).sum::<f64>() * grid.cell_volume()).sqrt()
    } else {
        (abs.map(|a| a.powf(p)).sum::<f64>() * grid.cell_volume()).powf(1.0 / p)
    }
}

pub fn l2_norm(field: &SpectralField) -> f64 {
    weighted_sum(field, false, |_| 1.0)
}

/// `(∫ (1+|ξ|²)^s |f̂|² dξ)^{1/2}` for `s ∈ (0, 1]`.
pub fn hs_norm(field: &SpectralField, s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::param("s", s, "regularity must lie in (0, 1]"));
    }
    check_finite(field)?;
    Ok(hs_unchecked(field, s))
}

pub(crate) fn hs_unchecked(field: &SpectralField, s: f64) -> f64 {
    weighted_sum(field, false, |xi2| (1.0 + xi2).powf(s))
}

/// Homogeneous seminorm `‖|ξ|^s f̂‖_{L²}`.
pub fn hdot_seminorm(field: &SpectralField, s: f64) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::param("s", s, "regularity must be finite and >= 0"));
    }
    check_finite(field)?;
    Ok(weighted_sum(field, false, |xi2| xi2.powf(s)))
}

/// `‖|ξ|^{-γ} f̂‖_{L²}` over the nonzero frequencies.
pub fn hdotneg_norm(field: &SpectralField, gamma: f64, policy: ZeroModePolicy) -> Result<f64> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", gamma, "weight must be finite and >= 0"));
    }
    check_finite(field)?;
    if policy == ZeroModePolicy::RequireZero {
        let c0 = field.zero_mode().norm();
        let limit = 1e-12 * field.max_abs_coeff();
        if c0 > limit {
            return Err(Error::ZeroModeViolation { c0, limit });
        }
    }
    Ok(hdotneg_unchecked(field, gamma))
}

pub(crate) fn hdotneg_unchecked(field: &SpectralField, gamma: f64) -> f64 {
    weighted_sum(field, true, |xi2| xi2.powf(-gamma))
}

/// Homogeneous norm on grids `(L, N)`, `(2L, 2N)`, `(4L, 4N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub values: [f64; 3],
    pub divergent: bool,
}

impl Refinement {
    pub fn max_relative_change(&self) -> f64 {
        let [a, b, c] = self.values;
        ((b - a) / a).abs().max(((c - b) / b).abs())
    }
}

/// Recomputes `‖f‖_{Ḣ^{-γ}}` for data built on successively larger grids; the
/// norm is flagged divergent when it grows by more than 20% at every refinement.
pub fn hdotneg_refinement<B>(base: &Grid, gamma: f64, policy: ZeroModePolicy, build: B) -> Result<Refinement>
where
    B: Fn(&Grid) -> Result<SpectralField>,
{
    let mut grid = *base;
    let mut values = [0.0; 3];
    for v in values.iter_mut() {
        *v = hdotneg_norm(&build(&grid)?, gamma, policy)?;
        grid = grid.refined();
    }
    let divergent = values[1] > DIVERGENCE_GROWTH * values[0] && values[2] > DIVERGENCE_GROWTH * values[1];
    Ok(Refinement { values, divergent })
}

/// L², L^∞, H^s and Ḣ^{-γ} (zero mode excluded) with the divergence flag from refinement.
pub fn norm_report<B>(base: &Grid, s: f64, gamma: f64, build: B) -> Result<NormReport>
where
    B: Fn(&Grid) -> Result<SpectralField>,
{
    let field = build(base)?;
    let refinement = hdotneg_refinement(base, gamma, ZeroModePolicy::Exclude, &build)?;
    Ok(NormReport {
        l2: l2_norm(&field),
        linf: lp_norm(&field, f64::INFINITY)?,
        hs: hs_norm(&field, s)?,
        hdotneg: refinement.values[0],
        divergence_flag: refinement.divergent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Compares `‖f‖_{H^s} + ‖f‖_{Ḣ^{-γ̃}}` against `‖f‖_{H^s} + ‖f‖_{Ḣ^{-γ}}` for `γ̃ < γ`.
pub fn embedding_check(field: &SpectralField, s: f64, gamma_low: f64, gamma: f64) -> Result<Embedding> {
    if !(gamma_low >= 0.0 && gamma_low < gamma) {
        return Err(Error::param(
            "gamma_low",
            gamma_low,
            format!("need 0 <= gamma_low < gamma = {gamma}"),
        ));
    }
    let hs = if s == 0.0 { l2_norm(field) } else { hs_norm(field, s)? };
    let lhs = hs + hdotneg_norm(field, gamma_low, ZeroModePolicy::RequireZero)?;
    let rhs = hs + hdotneg_norm(field, gamma, ZeroModePolicy::RequireZero)?;
    Ok(Embedding {
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}

/// One member of the randomized embedding suite: a real field whose transform is
/// a sum of modulated Gaussians `a (iξ)^3 σ^4 e^{-σ²|ξ|²/2} e^{-iξ·c}`, which
/// vanishes to third order at `ξ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomField {
    pub amplitudes: Vec<f64>,
    pub widths: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub s: f64,
    pub gamma_low: f64,
    pub gamma: f64,
}

impl RandomField {
    pub fn draw(rng: &mut impl Rng, dim: usize) -> Self {
        let terms = rng.random_range(1..=4);
        let gamma = rng.random_range(0.05..=3.0);
        RandomField {
            amplitudes: (0..terms).map(|_| rng.random_range(-1.0..1.0)).collect(),
            widths: (0..terms).map(|_| rng.random_range(0.5..2.0)).collect(),
            centers: (0..terms)
                .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect(),
            s: rng.random_range(0.01..=1.0),
            gamma_low: rng.random_range(0.0..gamma),
            gamma,
        }
    }

    pub fn sample(&self, grid: &Grid) -> SpectralField {
        use num_complex::Complex64;
        SpectralField::from_spectrum(*grid, |xi| {
            let xi2: f64 = xi.iter().map(|v| v * v).sum();
            // first component carries the odd derivative so the field stays real
            let cube = Complex64::new(0.0, xi[0]).powu(3);
            let mut acc = Complex64::new(0.0, 0.0);
            for ((a, s), c) in self.amplitudes.iter().zip(&self.widths).zip(&self.centers) {
                let phase: f64 = xi.iter().zip(c).map(|(x, y)| x * y).sum();
                acc += Complex64::from_polar(a * s.powi(4) * (-s * s * xi2 / 2.0).exp(), -phase);
            }
            acc * cube
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSuite {
    /// Largest lhs/rhs ratio on the base grid.
    pub constant: f64,
    /// Same on the refined grid.
    pub refined_constant: f64,
    pub fields: usize,
}

impl EmbeddingSuite {
    pub fn relative_drift(&self) -> f64 {
        ((self.refined_constant - self.constant) / self.constant).abs()
    }
}

/// Runs the embedding comparison over `count` random fields on `grid` and on its refinement.
pub fn embedding_suite(grid: &Grid, count: usize, seed: u64) -> Result<EmbeddingSuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<RandomField> = (0..count).map(|_| RandomField::draw(&mut rng, grid.dim())).collect();
    let worst = |g: &Grid| -> Result<f64> {
        let mut c: f64 = 0.0;
        for f in &fields {
            let e = embedding_check(&f.sample(g), f.s, f.gamma_low, f.gamma)?;
            c = c.max(e.ratio);
        }
        Ok(c)
    };
    Ok(EmbeddingSuite {
        constant: worst(grid)?,
        refined_constant: worst(&grid.refined())?,
        fields: count,
    })
}
