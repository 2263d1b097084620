//! Initial-data families with nonnegative Fourier transforms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bump::BumpFunction;
use crate::error::{Error, Result};
use crate::grid::{forward_real, Grid, SpectralField};

/// Minimum number of frequency shells required below the cutoff radius.
pub const MIN_SHELLS: f64 = 8.0;

/// `f̂(ξ) = |ξ|^{γ-n/2} (log(1/|ξ|))^{-log_power}` for `0 < |ξ| < r0`.
///
/// `log_power = 1` is the family with logarithmic correction; `0` drops it and
/// leaves the pure power.
pub fn log_profile(grid: &Grid, gamma: f64, r0: f64, log_power: f64) -> Result<SpectralField> {
    let n = grid.dim() as f64;
    if !(r0 > 0.0 && r0 <= 0.5) {
        return Err(Error::param("r0", r0, "support radius must lie in (0, 1/2]"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", gamma, "weight must be positive"));
    }
    if !(log_power >= 0.0 && log_power.is_finite()) {
        return Err(Error::param("log_power", log_power, "must be finite and >= 0"));
    }
    if r0 / grid.dk() < MIN_SHELLS {
        return Err(Error::param(
            "r0",
            r0,
            format!(
                "fewer than {MIN_SHELLS} frequency shells below the cutoff (dξ = {})",
                grid.dk()
            ),
        ));
    }
    if gamma < n / 2.0 {
        log::warn!("log profile with gamma = {gamma} below n/2 = {}", n / 2.0);
    }
    Ok(SpectralField::from_radial_spectrum(*grid, |r| {
        if r > 0.0 && r < r0 {
            r.powf(gamma - n / 2.0) * (1.0 / r).ln().powf(-log_power)
        } else {
            0.0
        }
    }))
}

/// `f̂(ξ) = |ξ|^{2k} e^{-|ξ|²/2}`, the transform of `(-Δ)^k e^{-|x|²/2}`.
pub fn laplacian_gaussian(grid: &Grid, k: u32) -> Result<SpectralField> {
    let top = grid.xi_max() * grid.xi_max() * grid.dim() as f64;
    if !top.powi(k as i32).is_finite() {
        return Err(Error::param(
            "k",
            k as f64,
            "|ξ|^{2k} overflows at the largest frequency",
        ));
    }
    Ok(SpectralField::from_spectrum(*grid, |xi| {
        let xi2: f64 = xi.iter().map(|v| v * v).sum();
        Complex64::new(xi2.powi(k as i32) * (-xi2 / 2.0).exp(), 0.0)
    }))
}

/// `φ(x/radius)` for the canonical bump `φ = φ̃∗φ̃`.
pub fn bump_data(grid: &Grid, radius: f64) -> Result<SpectralField> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", radius, "must be positive"));
    }
    if 2.0 * radius > grid.half_length() {
        return Err(Error::SupportOutsideBox {
            needed: 2.0 * radius,
            available: grid.half_length(),
        });
    }
    // build the bump on the dilated grid so the samples land on ours
    let unit = Grid::new(grid.dim(), grid.points(), grid.half_length() / radius)?;
    let b = BumpFunction::canonical(&unit)?;
    forward_real(grid, b.phi())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    LogProfile {
        gamma: f64,
        #[serde(default = "default_r0")]
        r0: f64,
        #[serde(default = "default_log_power")]
        log_power: f64,
    },
    LaplacianGaussian {
        k: u32,
    },
    BumpData {
        #[serde(default = "default_radius")]
        radius: f64,
    },
}

fn default_r0() -> f64 {
    0.5
}

fn default_log_power() -> f64 {
    1.0
}

fn default_radius() -> f64 {
    1.0
}

impl Family {
    pub fn build(&self, grid: &Grid) -> Result<SpectralField> {
        match *self {
            Family::LogProfile { gamma, r0, log_power } => log_profile(grid, gamma, r0, log_power),
            Family::LaplacianGaussian { k } => laplacian_gaussian(grid, k),
            Family::BumpData { radius } => bump_data(grid, radius),
        }
    }
}

/// Unit-amplitude data `u0 = u1 = profile` and the amplitude `ε` applied at solve time.
#[derive(Debug, Clone)]
pub struct DataPair {
    pub u0: SpectralField,
    pub u1: SpectralField,
    pub eps: f64,
    pub family: Option<Family>,
}

pub fn assemble_pair(profile: SpectralField, eps: f64) -> Result<DataPair> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", eps, "amplitude must be positive"));
    }
    Ok(DataPair {
        u1: profile.clone(),
        u0: profile,
        eps,
        family: None,
    })
}

impl DataPair {
    pub fn from_family(grid: &Grid, family: Family, eps: f64) -> Result<Self> {
        let mut pair = assemble_pair(family.build(grid)?, eps)?;
        pair.family = Some(family);
        Ok(pair)
    }

    pub fn grid(&self) -> &Grid {
        self.u0.grid()
    }

    /// `û0 + û1` (unit amplitude).
    pub fn sum(&self) -> SpectralField {
        self.u0.combine(1.0, &self.u1, 1.0).expect("pair fields share a grid")
    }

    /// `-min Re(û0 + û1) / max |û0 + û1|`; nonpositive when the sum is nonnegative.
    pub fn positivity_defect(&self) -> f64 {
        let s = self.sum();
        let max = s.max_abs_coeff();
        if max == 0.0 {
            return 0.0;
        }
        -s.coeffs().iter().map(|c| c.re).fold(f64::INFINITY, f64::min) / max
    }
}
