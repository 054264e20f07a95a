//! Coefficient vectors of discrete velocity and pressure fields.

use serde::{Deserialize, Serialize};

use crate::layout::DofLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    /// Two components per scalar DOF, interleaved.
    Velocity,
    /// Three barycentric coefficients per triangle.
    Pressure,
}

/// Velocity coefficients are stored unreduced, one entry pair per scalar DOF, so
/// that non-periodic interpolants can be represented as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField {
    pub role: FieldRole,
    pub coeffs: Vec<f64>,
}

impl DiscreteField {
    pub fn zero_velocity(layout: &DofLayout) -> Self {
        DiscreteField { role: FieldRole::Velocity, coeffs: vec![0.0; layout.n_velocity()] }
    }

    pub fn zero_pressure(layout: &DofLayout) -> Self {
        DiscreteField { role: FieldRole::Pressure, coeffs: vec![0.0; layout.n_pressure()] }
    }

    pub fn from_free(layout: &DofLayout, free: &[f64]) -> Self {
        DiscreteField { role: FieldRole::Velocity, coeffs: layout.expand(free) }
    }

    pub fn pressure(coeffs: Vec<f64>) -> Self {
        DiscreteField { role: FieldRole::Pressure, coeffs }
    }

    /// Nodal interpolant of `f` at vertices and edge midpoints.
    pub fn interpolate_velocity(layout: &DofLayout, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let mut coeffs = vec![0.0; layout.n_velocity()];
        for (s, x) in layout.positions.iter().enumerate() {
            let v = f(*x);
            coeffs[2 * s] = v[0];
            coeffs[2 * s + 1] = v[1];
        }
        DiscreteField { role: FieldRole::Velocity, coeffs }
    }

    /// Reduced coefficients (one per free periodic class).
    pub fn free_coeffs(&self, layout: &DofLayout) -> Vec<f64> {
        layout.restrict(&self.coeffs)
    }

    /// True when the field vanishes on the no-slip set and slaves equal masters.
    pub fn conforms(&self, layout: &DofLayout, tol: f64) -> bool {
        if self.role != FieldRole::Velocity || self.coeffs.len() != layout.n_velocity() {
            return false;
        }
        (0..layout.n_scalar()).all(|s| {
            let m = layout.master[s];
            (0..2).all(|c| {
                let v = self.coeffs[2 * s + c];
                if layout.dirichlet[s] {
                    v.abs() <= tol
                } else {
                    (v - self.coeffs[2 * m + c]).abs() <= tol
                }
            })
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        DiscreteField { role: self.role, coeffs: self.coeffs.iter().map(|v| a * v).collect() }
    }
}
