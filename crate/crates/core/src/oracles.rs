//! Reference solutions for unidirectional and thin-channel power-law flow.
//!
//! Profiles are written for the stress `η e`. The cell solver uses `2η e`, so a cell
//! viscosity `μ` corresponds to `2μ` here; [`ThinChannelModel::for_cell_law`] applies
//! the conversion.

use serde::{Deserialize, Serialize};

use crate::conjugate::signed_power;

/// `𝒥(ξ₁) = |ξ₁|^{r′−2} ξ₁`.
#[allow(non_snake_case)]
pub fn unidirectional_J(xi1: f64, r: f64) -> f64 {
    signed_power(xi1, r / (r - 1.0))
}

fn profile_scale(r: f64, mu: f64) -> f64 {
    let rp = r / (r - 1.0);
    2.0 / (rp * mu) * (2f64.sqrt() / mu).powf(rp - 2.0)
}

/// `θ(z) = 2/(r′μ) (√2/μ)^{r′−2} [(1/2)^{r′} − |z|^{r′}]` on `[−½, ½]`.
pub fn theta_profile(z: f64, r: f64, mu: f64) -> f64 {
    let rp = r / (r - 1.0);
    profile_scale(r, mu) * (0.5f64.powf(rp) - z.abs().powf(rp))
}

/// `⟨θ⟩ = ∫ θ` over `[−½, ½]` by double-exponential quadrature.
pub fn theta_mean(r: f64, mu: f64) -> f64 {
    let half = quadrature::double_exponential::integrate(|z| theta_profile(z, r, mu), 0.0, 0.5, 1e-13);
    2.0 * half.integral
}

/// `2/((r′+1)μ) (√2/μ)^{r′−2} (1/2)^{r′}`, the exact integral of the profile.
pub fn theta_mean_closed_form(r: f64, mu: f64) -> f64 {
    let rp = r / (r - 1.0);
    2.0 / ((rp + 1.0) * mu) * (2f64.sqrt() / mu).powf(rp - 2.0) * 0.5f64.powf(rp)
}

/// `2/((r′+1)μ) (√2/μ)^{r′−2}`, which omits the factor `(1/2)^{r′}` of the integral.
pub fn mean_omitting_half_power(r: f64, mu: f64) -> f64 {
    let rp = r / (r - 1.0);
    2.0 / ((rp + 1.0) * mu) * (2f64.sqrt() / mu).powf(rp - 2.0)
}

/// Leading-order permeability of channels of thickness `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThinChannelModel {
    pub delta: f64,
    pub r: f64,
    pub r_prime: f64,
    /// Viscosity in the `η e` convention.
    pub mu: f64,
    pub mean: f64,
}

impl ThinChannelModel {
    pub fn new(delta: f64, r: f64, mu: f64) -> Self {
        ThinChannelModel { delta, r, r_prime: r / (r - 1.0), mu, mean: theta_mean(r, mu) }
    }

    /// Model for a cell solve with power law `η = μ |e|^{r−2}`.
    pub fn for_cell_law(delta: f64, r: f64, mu: f64) -> Self {
        Self::new(delta, r, 2.0 * mu)
    }

    pub fn theta(&self, z: f64) -> f64 {
        theta_profile(z, self.r, self.mu)
    }

    /// `⟨θ⟩ 𝒥(ξ_i)` per component.
    pub fn rescaled(&self, xi: [f64; 2]) -> [f64; 2] {
        [self.mean * unidirectional_J(xi[0], self.r), self.mean * unidirectional_J(xi[1], self.r)]
    }

    /// `δ^{r′+1} ⟨θ⟩ 𝒥(ξ_i)` per component.
    pub fn predict(&self, xi: [f64; 2]) -> [f64; 2] {
        let s = self.delta.powf(self.r_prime + 1.0);
        let v = self.rescaled(xi);
        [s * v[0], s * v[1]]
    }
}

#[allow(non_snake_case)]
pub fn thin_channel_U(delta: f64, xi: [f64; 2], r: f64, mu: f64) -> [f64; 2] {
    ThinChannelModel::new(delta, r, mu).predict(xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_power_values() {
        assert_eq!(unidirectional_J(0.0, 1.5), 0.0);
        assert!((unidirectional_J(2.0, 1.5) - 4.0).abs() < 1e-14);
        assert!((unidirectional_J(-1.0, 1.5) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn profile_values() {
        assert_eq!(theta_profile(0.5, 1.5, 1.0), 0.0);
        assert_eq!(theta_profile(-0.5, 1.5, 1.0), 0.0);
        assert!((theta_profile(0.0, 1.5, 1.0) - 0.117851).abs() < 1e-6);
        assert_eq!(theta_profile(0.2, 1.5, 1.0), theta_profile(-0.2, 1.5, 1.0));
    }

    #[test]
    fn mean_matches_closed_form() {
        for (r, mu) in [(1.5, 1.0), (1.3, 0.7), (1.8, 2.0), (2.0, 1.0)] {
            assert!((theta_mean(r, mu) - theta_mean_closed_form(r, mu)).abs() < 1e-10, "{r} {mu}");
        }
        assert!((theta_mean(1.5, 1.0) - 2f64.sqrt() / 16.0).abs() < 1e-10);
        assert!((mean_omitting_half_power(1.5, 1.0) - 0.7071).abs() < 1e-4);
    }

    #[test]
    fn viscosity_scaling() {
        let r: f64 = 1.5;
        let rp = r / (r - 1.0);
        let ratio = theta_mean(r, 2.0) / theta_mean(r, 1.0);
        assert!((ratio - 2f64.powf(-(rp - 1.0))).abs() < 1e-10);
    }

    #[test]
    fn channel_scaling() {
        let a = thin_channel_U(0.2, [1.0, 0.0], 1.5, 1.0);
        let b = thin_channel_U(0.1, [1.0, 0.0], 1.5, 1.0);
        assert_eq!(a[1], 0.0);
        assert!((b[0] / a[0] - 1.0 / 16.0).abs() < 1e-12);
    }
}
