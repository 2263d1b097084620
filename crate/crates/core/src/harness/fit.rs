//! Least-squares power-law fits on log–log axes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    /// Points dropped from the fit because they were censored.
    pub censored: usize,
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn fit_powerlaw(points: &[(f64, f64)]) -> Result<FitResult> {
    fit_censored(points, &vec![false; points.len()])
}

/// As [`fit_powerlaw`], skipping points flagged in `censored`.
pub fn fit_censored(points: &[(f64, f64)], censored: &[bool]) -> Result<FitResult> {
    if points.len() != censored.len() {
        return Err(Error::Insufficient("censoring mask length mismatch".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&(x, y), &c) in points.iter().zip(censored) {
        if c {
            continue;
        }
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(Error::param(
                "point",
                if x > 0.0 { y } else { x },
                "log-log fit needs positive finite data",
            ));
        }
        xs.push(x.ln());
        ys.push(y.ln());
    }
    let m = xs.len();
    if m < 3 {
        return Err(Error::Insufficient(format!(
            "power-law fit needs >= 3 uncensored points, have {m}"
        )));
    }
    let mf = m as f64;
    let mx = xs.iter().sum::<f64>() / mf;
    let my = ys.iter().sum::<f64>() / mf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Insufficient("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        points: m,
        censored: points.len() - m,
    })
}
