//! Critical exponents, the (γ, p) region classifier and predicted lifespan exponents.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the equality `p = p_crit`.
pub const TIE_TOL: f64 = 1e-12;

pub fn fujita(n: u32) -> f64 {
    1.0 + 2.0 / n as f64
}

/// `1 + 4/(n + 2γ)`.
pub fn crit(n: u32, gamma: f64) -> f64 {
    1.0 + 4.0 / (n as f64 + 2.0 * gamma)
}

/// Hölder conjugate `p/(p-1)`.
pub fn conjugate(p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::param("p", p, "conjugate exponent needs p > 1"));
    }
    if p.is_infinite() {
        return Ok(1.0);
    }
    Ok(p / (p - 1.0))
}

/// `(γ_min, p_min)` of the small-data global existence theorem, for `1 ≤ n ≤ 6`.
pub fn thm1_thresholds(n: u32) -> Result<(f64, f64)> {
    if !(1..=6).contains(&n) {
        return Err(Error::param(
            "n",
            n as f64,
            "global existence theorem covers 1 <= n <= 6",
        ));
    }
    let nf = n as f64;
    let root = (nf * nf + 16.0 * nf).sqrt();
    let gamma_min = (nf / 2.0).min((root - nf) / 4.0);
    let p_min = fujita(n).max((root + nf) / (2.0 * nf));
    Ok((gamma_min, p_min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    GlobalThm1,
    GlobalCR,
    GlobalCriticalDabbicco,
    BlowupThm2,
    BlowupThm3,
    BlowupCR,
    Unknown,
}

impl Verdict {
    pub fn is_global(self) -> bool {
        matches!(
            self,
            Verdict::GlobalThm1 | Verdict::GlobalCR | Verdict::GlobalCriticalDabbicco
        )
    }

    pub fn is_blowup(self) -> bool {
        matches!(self, Verdict::BlowupThm2 | Verdict::BlowupThm3 | Verdict::BlowupCR)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub n: u32,
    pub gamma: f64,
    pub p: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifespanExponents {
    /// `1/(p′ - 1 - γ/2 - n/4)`, present for `p < p_crit`.
    pub a_crit: Option<f64>,
    /// `p/(p′ - 1 - n/2)`, present for `p < p_F`.
    pub a_fujita: Option<f64>,
    /// Smallest applicable exponent (the bound `T ≲ min{ε^{-a}}` for small ε).
    pub combined: Option<f64>,
    /// `(4 + 2n)/(n + 2γ)`, where both routes agree.
    pub p_threshold: f64,
}

/// Exponents `a` in `T ≲ ε^{-a}`.
pub fn lifespan_exponents(n: u32, gamma: f64, p: f64) -> Result<LifespanExponents> {
    let pc = conjugate(p)?;
    let nf = n as f64;
    let positive = |d: f64| if d > 0.0 { Some(d) } else { None };
    let a_crit = positive(pc - 1.0 - gamma / 2.0 - nf / 4.0).map(|d| 1.0 / d);
    let a_fujita = positive(pc - 1.0 - nf / 2.0).map(|d| p / d);
    let combined = match (a_crit, a_fujita) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    Ok(LifespanExponents {
        a_crit,
        a_fujita,
        combined,
        p_threshold: (4.0 + 2.0 * nf) / (nf + 2.0 * gamma),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub point: Point,
    /// At most one global tag, or any number of blow-up tags, or `[Unknown]`.
    pub tags: Vec<Verdict>,
    pub p_fujita: f64,
    pub p_crit: f64,
    pub p_crit_conjugate: f64,
    pub thm1: Option<(f64, f64)>,
    pub lifespan: Option<LifespanExponents>,
}

impl RegionVerdict {
    pub fn primary(&self) -> Verdict {
        self.tags[0]
    }

    pub fn has(&self, v: Verdict) -> bool {
        self.tags.contains(&v)
    }

    /// Tags joined with `+`, e.g. `BlowupThm2+BlowupThm3`.
    pub fn label(&self) -> String {
        self.tags.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("+")
    }
}

fn check_domain(n: u32, gamma: f64, p: f64, s: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::param("n", n as f64, "dimension must be >= 1"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", gamma, "need gamma > 0"));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param("p", p, "need p > 1"));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::param("s", s, "need s in (0, 1]"));
    }
    Ok(())
}

pub fn classify(n: u32, gamma: f64, p: f64, s: f64) -> Result<RegionVerdict> {
    check_domain(n, gamma, p, s)?;
    let nf = n as f64;
    let pf = fujita(n);
    let pcrit = crit(n, gamma);
    let thm1 = thm1_thresholds(n).ok();
    let s_ok = nf <= 2.0 * s || p <= nf / (nf - 2.0 * s);
    let at_crit = (p - pcrit).abs() <= TIE_TOL * pcrit;
    let below_half = gamma < nf / 2.0;

    let global = if thm1.is_none() || !s_ok {
        None
    } else if below_half && p > pcrit && !at_crit && p >= 1.0 + 2.0 * gamma / nf {
        Some(Verdict::GlobalCR)
    } else if thm1.is_some_and(|(gmin, pmin)| gamma >= gmin && p > pmin) {
        Some(Verdict::GlobalThm1)
    } else {
        None
    };
    let global = global.or(if below_half && at_crit {
        Some(Verdict::GlobalCriticalDabbicco)
    } else {
        None
    });

    let mut tags = Vec::new();
    if let Some(g) = global {
        tags.push(g);
    } else {
        if p < pcrit && !at_crit {
            tags.push(Verdict::BlowupThm2);
        }
        if p < pf {
            tags.push(Verdict::BlowupThm3);
        }
        if below_half && p < pcrit && !at_crit {
            tags.push(Verdict::BlowupCR);
        }
        if tags.is_empty() {
            tags.push(Verdict::Unknown);
        }
    }
    let lifespan = if tags.iter().any(|t| t.is_blowup()) {
        Some(lifespan_exponents(n, gamma, p)?)
    } else {
        None
    };
    Ok(RegionVerdict {
        point: Point { n, gamma, p, s },
        tags,
        p_fujita: pf,
        p_crit: pcrit,
        p_crit_conjugate: conjugate(pcrit)?,
        thm1,
        lifespan,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterCell {
    pub gamma: f64,
    pub p: f64,
    pub verdict: String,
}

/// Default plotting window: `γ ∈ (0, n]`, `p ∈ (1, 2 + 4/n]`.
pub fn default_window(n: u32) -> ((f64, f64), (f64, f64)) {
    let nf = n as f64;
    ((0.0, nf), (1.0, 2.0 + 4.0 / nf))
}

/// Classifies the centres of a `size × size` lattice over the window, `γ` outer, `p` inner.
pub fn raster(n: u32, size: usize, gamma_range: (f64, f64), p_range: (f64, f64), s: f64) -> Result<Vec<RasterCell>> {
    if size == 0 {
        return Err(Error::param("size", 0.0, "raster needs at least one cell"));
    }
    let centre = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * (i as f64 + 0.5) / size as f64;
    let mut out = Vec::with_capacity(size * size);
    for i in 0..size {
        let gamma = centre(gamma_range, i);
        for j in 0..size {
            let p = centre(p_range, j);
            out.push(RasterCell {
                gamma,
                p,
                verdict: classify(n, gamma, p, s)?.label(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fujita_and_crit() {
        assert_eq!(fujita(1), 3.0);
        assert_eq!(fujita(2), 2.0);
        for n in 1..=6 {
            assert!((crit(n, n as f64 / 2.0) - fujita(n)).abs() < 1e-15);
        }
        assert_eq!(conjugate(2.0).unwrap(), 2.0);
        assert!((conjugate(1.8).unwrap() - 2.25).abs() < 1e-15);
        assert!((crit(3, 1.0) - 1.8).abs() < 1e-15);
        assert!(conjugate(1.0).is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(thm1_thresholds(1).unwrap(), (0.5, 3.0));
        let (g, p) = thm1_thresholds(2).unwrap();
        assert!((g - 1.0).abs() < 1e-15 && (p - 2.0).abs() < 1e-15);
        let (g, p) = thm1_thresholds(6).unwrap();
        let r = 132f64.sqrt();
        assert!((g - (r - 6.0) / 4.0).abs() < 1e-15);
        assert!((p - (r + 6.0) / 12.0).abs() < 1e-15);
        assert!((g - 1.3723).abs() < 1e-4 && (p - 1.4574).abs() < 1e-4);
        assert!(thm1_thresholds(7).is_err());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(1, 0.5, 3.5, 1.0).unwrap().tags, vec![Verdict::GlobalThm1]);
        let v = classify(2, 1.2, 1.8, 1.0).unwrap();
        assert!(v.has(Verdict::BlowupThm2) && v.has(Verdict::BlowupThm3));
        assert!(!v.has(Verdict::BlowupCR));
        assert_eq!(
            classify(3, 1.0, 1.8, 1.0).unwrap().tags,
            vec![Verdict::GlobalCriticalDabbicco]
        );
        assert!(classify(1, 0.0, 2.0, 1.0).is_err());
        assert!(classify(1, 1.0, 2.0, 1.5).is_err());
    }

    #[test]
    fn lifespan_examples() {
        let e = lifespan_exponents(1, 1.0, 2.0).unwrap();
        assert!((e.a_crit.unwrap() - 4.0).abs() < 1e-12);
        assert!((e.a_fujita.unwrap() - 4.0).abs() < 1e-12);
        assert!((e.p_threshold - 2.0).abs() < 1e-15);
        let e = lifespan_exponents(2, 2.0, 1.25).unwrap();
        assert!((e.a_crit.unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(e.combined, e.a_crit);
        let e = lifespan_exponents(1, 0.25, 2.0).unwrap();
        assert!((e.a_crit.unwrap() - 1.6).abs() < 1e-12);
        assert!(lifespan_exponents(1, 0.25, 4.0).unwrap().a_crit.is_none());
    }

    #[test]
    fn raster_shape() {
        let (g, p) = default_window(2);
        let r = raster(2, 50, g, p, 1.0).unwrap();
        assert_eq!(r.len(), 2500);
    }
}
