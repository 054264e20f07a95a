//! The conjugate function `G(ξ)_i = |𝒰(ξ)_i|^{r−2} 𝒰(ξ)_i` and its best linear fit.
//!
//! `G` is linear exactly when `𝒰(ξ)_i = |(Aξ)_i|^{r′−2}(Aξ)_i` for a matrix `A`. The
//! fit uses a line `y = A ξ_i` through the origin per component; its slope has the
//! sign of `ξ·𝒰(ξ)`, hence is positive.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permeability::{PermeabilitySample, SweepResult};

/// `|u|^{r−2} u`, zero at `u = 0`.
pub fn signed_power(u: f64, r: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.abs().powf(r - 2.0) * u
    }
}

#[allow(non_snake_case)]
pub fn conjugate_G(u: [f64; 2], r: f64) -> [f64; 2] {
    [signed_power(u[0], r), signed_power(u[1], r)]
}

fn check_component(i: usize) -> Result<()> {
    if i > 1 {
        Err(Error::InvalidOptions(format!("component {i} must be 0 or 1")))
    } else {
        Ok(())
    }
}

/// Least-squares slope `A = Σ G_i ξ_i / Σ ξ_i²`.
pub fn fit_slope(samples: &[PermeabilitySample], i: usize, r: f64) -> Result<f64> {
    check_component(i)?;
    let ok: Vec<&PermeabilitySample> = samples.iter().filter(|s| s.is_ok()).collect();
    if ok.len() < 3 {
        return Err(Error::DegenerateSampling(format!("slope fit needs 3 samples, got {}", ok.len())));
    }
    let den: f64 = ok.iter().map(|s| s.xi[i] * s.xi[i]).sum();
    if den == 0.0 {
        return Err(Error::DegenerateSampling(format!("all samples have ξ_{i} = 0")));
    }
    let num: f64 = ok.iter().map(|s| signed_power(s.u[i], r) * s.xi[i]).sum();
    Ok(num / den)
}

/// `Δ = [Σ (G_i − A ξ_i)² / Σ G_i²]^{1/2}`.
pub fn relative_distance(samples: &[PermeabilitySample], a: f64, i: usize, r: f64) -> Result<f64> {
    check_component(i)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for s in samples.iter().filter(|s| s.is_ok()) {
        let g = signed_power(s.u[i], r);
        num += (g - a * s.xi[i]).powi(2);
        den += g * g;
    }
    if den == 0.0 {
        return Err(Error::ZeroDenominator(format!("component {i} of G vanishes on every sample")));
    }
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GRecord {
    /// Polar angle of `ξ` in `[0, 2π)`.
    pub angle: f64,
    pub xi: [f64; 2],
    #[serde(rename = "G")]
    pub g: f64,
    pub fit: f64,
    pub gap: f64,
}

fn polar_angle(xi: [f64; 2]) -> f64 {
    let a = xi[1].atan2(xi[0]);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Records `(angle, G_i, A ξ_i, G_i − A ξ_i)` sorted by angle.
pub fn pointwise_gaps(samples: &[PermeabilitySample], a: f64, i: usize, r: f64) -> Vec<GRecord> {
    let mut recs: Vec<GRecord> = samples
        .iter()
        .filter(|s| s.is_ok())
        .map(|s| {
            let g = signed_power(s.u[i], r);
            let fit = a * s.xi[i];
            GRecord { angle: polar_angle(s.xi), xi: s.xi, g, fit, gap: g - fit }
        })
        .collect();
    recs.sort_by(|x, y| x.angle.total_cmp(&y.angle));
    recs
}

/// Angle of the largest `|gap|`.
pub fn max_gap_angle(records: &[GRecord]) -> Option<f64> {
    records.iter().max_by(|x, y| x.gap.abs().total_cmp(&y.gap.abs())).map(|r| r.angle)
}

/// Largest difference quotient `|G(ξᵃ) − G(ξᵇ)| / |ξᵃ − ξᵇ|` over sample pairs.
pub fn lipschitz_estimate(samples: &[PermeabilitySample], r: f64) -> f64 {
    let ok: Vec<&PermeabilitySample> = samples.iter().filter(|s| s.is_ok()).collect();
    let mut best: f64 = 0.0;
    for (a, sa) in ok.iter().enumerate() {
        let ga = conjugate_G(sa.u, r);
        for sb in &ok[a + 1..] {
            let d = (sa.xi[0] - sb.xi[0]).hypot(sa.xi[1] - sb.xi[1]);
            if d > 0.0 {
                let gb = conjugate_G(sb.u, r);
                best = best.max((ga[0] - gb[0]).hypot(ga[1] - gb[1]) / d);
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GAnalysis {
    /// One-based component of `G`.
    pub component: usize,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub max_gap_angle: f64,
    pub lipschitz: f64,
    pub samples: Vec<GRecord>,
}

/// Fit, distance and gap curve of component `i` (zero-based) over the sweep samples.
pub fn analyze_g(sweep: &SweepResult, i: usize) -> Result<GAnalysis> {
    let r = sweep.law.r();
    let samples = &sweep.samples;
    let a = fit_slope(samples, i, r)?;
    let delta = relative_distance(samples, a, i, r)?;
    let records = pointwise_gaps(samples, a, i, r);
    Ok(GAnalysis {
        component: i + 1,
        a,
        delta,
        max_gap_angle: max_gap_angle(&records).unwrap_or(0.0),
        lipschitz: lipschitz_estimate(samples, r),
        samples: records,
    })
}
