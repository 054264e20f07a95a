//! Quasi-Newtonian viscosity laws.
//!
//! Laws are evaluated as functions of the squared strain norm `τ = |e|²`. Besides the
//! viscosity `η` they return `η'(t)/t = 2 dη/dτ`, the factor of the rank-one part of
//! the tangent of `η(|e|) e`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ViscosityLaw {
    Newtonian { mu: f64 },
    /// `η = μ |e|^{r-2}`.
    PowerLaw { mu: f64, r: f64 },
    /// `η = (η₀ - η_∞)(1 + λ|e|²)^{r/2-1} + η_∞`.
    Carreau { eta0: f64, eta_inf: f64, lambda: f64, r: f64 },
}

impl ViscosityLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidLaw(m));
        let ok_r = |r: f64| r > 1.0 && r <= 2.0;
        match *self {
            ViscosityLaw::Newtonian { mu } if !(mu > 0.0 && mu.is_finite()) => bad(format!("mu = {mu} must be positive")),
            ViscosityLaw::PowerLaw { mu, .. } if !(mu > 0.0 && mu.is_finite()) => bad(format!("mu = {mu} must be positive")),
            ViscosityLaw::PowerLaw { r, .. } if !ok_r(r) => bad(format!("flow index r = {r} must lie in (1, 2]")),
            ViscosityLaw::Carreau { eta0, eta_inf, lambda, r } => {
                if !ok_r(r) {
                    bad(format!("flow index r = {r} must lie in (1, 2]"))
                } else if !(eta_inf >= 0.0 && eta0 > eta_inf && eta0.is_finite()) {
                    bad(format!("need eta0 > eta_inf >= 0, got {eta0}, {eta_inf}"))
                } else if !(lambda > 0.0 && lambda.is_finite()) {
                    bad(format!("lambda = {lambda} must be positive"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Flow index `r` (2 for a Newtonian fluid).
    pub fn r(&self) -> f64 {
        match *self {
            ViscosityLaw::Newtonian { .. } => 2.0,
            ViscosityLaw::PowerLaw { r, .. } | ViscosityLaw::Carreau { r, .. } => r,
        }
    }

    /// Dual exponent `r' = r / (r - 1)`.
    pub fn r_prime(&self) -> f64 {
        let r = self.r();
        r / (r - 1.0)
    }

    /// Viscosity at zero strain, when it is finite.
    pub fn zero_shear_viscosity(&self) -> Option<f64> {
        match *self {
            ViscosityLaw::Newtonian { mu } => Some(mu),
            ViscosityLaw::PowerLaw { mu, r } if r == 2.0 => Some(mu),
            ViscosityLaw::PowerLaw { .. } => None,
            ViscosityLaw::Carreau { eta0, .. } => Some(eta0),
        }
    }

    pub fn is_power_law(&self) -> bool {
        matches!(self, ViscosityLaw::PowerLaw { .. })
    }

    /// Returns `(η, η'/t)` at squared strain norm `t2`, with `t2` shifted by `eps2`
    /// inside the power law.
    #[inline]
    pub fn eval(&self, t2: f64, eps2: f64) -> (f64, f64) {
        match *self {
            ViscosityLaw::Newtonian { mu } => (mu, 0.0),
            ViscosityLaw::PowerLaw { mu, r } => {
                if r == 2.0 {
                    return (mu, 0.0);
                }
                let s = t2 + eps2;
                let eta = mu * s.powf(0.5 * (r - 2.0));
                (eta, (r - 2.0) * eta / s)
            }
            ViscosityLaw::Carreau { eta0, eta_inf, lambda, r } => {
                let a = 0.5 * r - 1.0;
                let c = eta0 - eta_inf;
                let base = 1.0 + lambda * t2;
                let pw = base.powf(a);
                (eta_inf + c * pw, 2.0 * c * a * lambda * pw / base)
            }
        }
    }
}

/// A law together with the regularisation currently applied to it.
#[derive(Debug, Clone, Copy)]
pub struct Viscosity {
    pub law: ViscosityLaw,
    pub eps2: f64,
}

impl Viscosity {
    pub fn new(law: ViscosityLaw) -> Self {
        Viscosity { law, eps2: 0.0 }
    }

    pub fn regularized(law: ViscosityLaw, eps: f64) -> Self {
        Viscosity { law, eps2: eps * eps }
    }

    #[inline]
    pub fn eval(&self, t2: f64) -> (f64, f64) {
        self.law.eval(t2, self.eps2)
    }
}
