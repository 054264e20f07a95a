//! Element quadrature data and assembly of the augmented-Lagrangian Stokes operator.
//!
//! The viscous stress is `2 η(|e(u)|) e(u)`. Incompressibility is weighted by the
//! element-wise projection `Π` onto the pressure space, so the discrete constraint
//! reads `B u = 0` with `(B u)_a = ∫ ψ_a div u` and the penalty is `ρ Bᵀ M⁻¹ B`.

use serde::{Deserialize, Serialize};

use crate::element::{basis_strain, ddot, scalar_values, Sym2, TriangleGeometry, N_PRES, N_SCALAR, N_VEL};
use crate::error::{Error, Result};
use crate::field::DiscreteField;
use crate::layout::DofLayout;
use crate::mesh::UnitCellMesh;
use crate::quadrature::{N_QUAD, TRI7};
use crate::sparse::SparsePattern;
use crate::viscosity::Viscosity;

/// Multiplier of the viscosity in the stress.
pub const STRESS_FACTOR: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct ElementData {
    pub geometry: TriangleGeometry,
    /// Quadrature weights times the triangle area.
    pub weights: [f64; N_QUAD],
    pub values: [[f64; N_SCALAR]; N_QUAD],
    pub gradients: [[[f64; 2]; N_SCALAR]; N_QUAD],
    /// Strain of every local vector basis function at every quadrature point.
    pub strains: [[Sym2; N_VEL]; N_QUAD],
    pub divergences: [[f64; N_VEL]; N_QUAD],
    /// `B_e[a][i] = ∫ ψ_a div φ_i`.
    pub div_matrix: [[f64; N_VEL]; N_PRES],
    pub mass_inverse: [[f64; 3]; 3],
}

/// Per-triangle basis data at the quadrature points.
#[derive(Debug, Clone)]
pub struct ElementCache {
    pub elements: Vec<ElementData>,
}

impl ElementCache {
    pub fn new(mesh: &UnitCellMesh) -> Self {
        let elements = mesh
            .triangles
            .iter()
            .map(|tri| {
                let geometry = TriangleGeometry::new(tri.map(|i| mesh.nodes[i]));
                let mut weights = [0.0; N_QUAD];
                let mut values = [[0.0; N_SCALAR]; N_QUAD];
                let mut gradients = [[[0.0; 2]; N_SCALAR]; N_QUAD];
                let mut strains = [[[0.0; 3]; N_VEL]; N_QUAD];
                let mut divergences = [[0.0; N_VEL]; N_QUAD];
                let mut div_matrix = [[0.0; N_VEL]; N_PRES];
                for (q, qp) in TRI7.iter().enumerate() {
                    weights[q] = qp.weight * geometry.area;
                    values[q] = scalar_values(qp.bary);
                    let grads = geometry.scalar_gradients(qp.bary);
                    gradients[q] = grads;
                    for s in 0..N_SCALAR {
                        for c in 0..2 {
                            let i = 2 * s + c;
                            strains[q][i] = basis_strain(grads[s], c);
                            divergences[q][i] = grads[s][c];
                            for a in 0..N_PRES {
                                div_matrix[a][i] += weights[q] * qp.bary[a] * grads[s][c];
                            }
                        }
                    }
                }
                ElementData {
                    mass_inverse: geometry.pressure_mass_inverse(),
                    geometry,
                    weights,
                    values,
                    gradients,
                    strains,
                    divergences,
                    div_matrix,
                }
            })
            .collect();
        ElementCache { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Local velocity coefficients of triangle `t`.
#[inline]
pub fn gather(layout: &DofLayout, full: &[f64], t: usize) -> [f64; N_VEL] {
    let mut u = [0.0; N_VEL];
    for (s, &g) in layout.element_scalar[t].iter().enumerate() {
        u[2 * s] = full[2 * g];
        u[2 * s + 1] = full[2 * g + 1];
    }
    u
}

/// Strain of local coefficients `u` at every quadrature point.
#[inline]
pub fn element_strains(el: &ElementData, u: &[f64; N_VEL]) -> [Sym2; N_QUAD] {
    let mut out = [[0.0; 3]; N_QUAD];
    for q in 0..N_QUAD {
        let mut e = [0.0; 3];
        for i in 0..N_VEL {
            let b = &el.strains[q][i];
            e[0] += u[i] * b[0];
            e[1] += u[i] * b[1];
            e[2] += u[i] * b[2];
        }
        out[q] = e;
    }
    out
}

fn element_div(el: &ElementData, u: &[f64; N_VEL]) -> [f64; N_PRES] {
    let mut d = [0.0; N_PRES];
    for a in 0..N_PRES {
        d[a] = (0..N_VEL).map(|i| el.div_matrix[a][i] * u[i]).sum();
    }
    d
}

/// Strain sample at one quadrature point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrainSample {
    /// Components `[xx, xy, yy]` of the symmetric strain.
    pub strain: Sym2,
    pub norm: f64,
    /// Quadrature weight times area.
    pub weight: f64,
}

pub fn strain_samples(cache: &ElementCache, layout: &DofLayout, u: &DiscreteField) -> Vec<StrainSample> {
    let mut out = Vec::with_capacity(cache.len() * N_QUAD);
    for (t, el) in cache.elements.iter().enumerate() {
        let e = element_strains(el, &gather(layout, &u.coeffs, t));
        for q in 0..N_QUAD {
            out.push(StrainSample { strain: e[q], norm: ddot(&e[q], &e[q]).sqrt(), weight: el.weights[q] });
        }
    }
    out
}

pub fn strain_at_quadrature(u: &DiscreteField, mesh: &UnitCellMesh, layout: &DofLayout) -> Vec<StrainSample> {
    strain_samples(&ElementCache::new(mesh), layout, u)
}

/// `‖Π div u‖` in L², the quantity driven to zero by the augmented Lagrangian.
pub fn projected_divergence_norm(cache: &ElementCache, layout: &DofLayout, full: &[f64]) -> f64 {
    let mut s = 0.0;
    for (t, el) in cache.elements.iter().enumerate() {
        let d = element_div(el, &gather(layout, full, t));
        for a in 0..N_PRES {
            for b in 0..N_PRES {
                s += d[a] * el.mass_inverse[a][b] * d[b];
            }
        }
    }
    s.max(0.0).sqrt()
}

/// L² norm of the divergence projected onto the discontinuous linear pressure space.
pub fn divergence_norm(u: &DiscreteField, mesh: &UnitCellMesh, layout: &DofLayout) -> f64 {
    projected_divergence_norm(&ElementCache::new(mesh), layout, &u.coeffs)
}

/// L² norm of the pointwise divergence, including the part orthogonal to the pressure space.
pub fn full_divergence_norm(u: &DiscreteField, mesh: &UnitCellMesh, layout: &DofLayout) -> f64 {
    let cache = ElementCache::new(mesh);
    let mut s = 0.0;
    for (t, el) in cache.elements.iter().enumerate() {
        let ul = gather(layout, &u.coeffs, t);
        for q in 0..N_QUAD {
            let d: f64 = (0..N_VEL).map(|i| el.divergences[q][i] * ul[i]).sum();
            s += el.weights[q] * d * d;
        }
    }
    s.sqrt()
}

pub fn integrate_velocity_cached(cache: &ElementCache, layout: &DofLayout, full: &[f64]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (t, el) in cache.elements.iter().enumerate() {
        let u = gather(layout, full, t);
        for q in 0..N_QUAD {
            for s in 0..N_SCALAR {
                let w = el.weights[q] * el.values[q][s];
                out[0] += w * u[2 * s];
                out[1] += w * u[2 * s + 1];
            }
        }
    }
    out
}

/// `∫_𝒴 u`.
pub fn integrate_velocity(u: &DiscreteField, mesh: &UnitCellMesh, layout: &DofLayout) -> [f64; 2] {
    integrate_velocity_cached(&ElementCache::new(mesh), layout, &u.coeffs)
}

/// `∫ ∇u : ∇v` for two velocity fields.
pub fn gradient_product(cache: &ElementCache, layout: &DofLayout, u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for (t, el) in cache.elements.iter().enumerate() {
        let (gu, gv) = (element_gradients(el, &gather(layout, u, t)), element_gradients(el, &gather(layout, v, t)));
        for q in 0..N_QUAD {
            let dot: f64 = (0..2).map(|c| gu[q][c][0] * gv[q][c][0] + gu[q][c][1] * gv[q][c][1]).sum();
            s += el.weights[q] * dot;
        }
    }
    s
}

/// Velocity gradient rows `∇u_c` at the quadrature points.
fn element_gradients(el: &ElementData, u: &[f64; N_VEL]) -> [[[f64; 2]; 2]; N_QUAD] {
    let mut g = [[[0.0; 2]; 2]; N_QUAD];
    for (gq, grads) in g.iter_mut().zip(&el.gradients) {
        for s in 0..N_SCALAR {
            for c in 0..2 {
                gq[c][0] += u[2 * s + c] * grads[s][0];
                gq[c][1] += u[2 * s + c] * grads[s][1];
            }
        }
    }
    g
}

/// `∫ e(u) : e(v)`.
pub fn strain_product(cache: &ElementCache, layout: &DofLayout, u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for (t, el) in cache.elements.iter().enumerate() {
        let eu = element_strains(el, &gather(layout, u, t));
        let ev = element_strains(el, &gather(layout, v, t));
        for q in 0..N_QUAD {
            s += el.weights[q] * ddot(&eu[q], &ev[q]);
        }
    }
    s
}

/// Reduced load vector `∫ ξ · v`.
pub fn load_vector(cache: &ElementCache, layout: &DofLayout, xi: [f64; 2]) -> Vec<f64> {
    let mut f = vec![0.0; layout.n_velocity_free()];
    for (t, el) in cache.elements.iter().enumerate() {
        let free = layout.element_free(t);
        for s in 0..N_SCALAR {
            let m: f64 = (0..N_QUAD).map(|q| el.weights[q] * el.values[q][s]).sum();
            for c in 0..2 {
                if let Some(g) = free[2 * s + c] {
                    f[g] += m * xi[c];
                }
            }
        }
    }
    f
}

/// Reduced vector `∫ S : e(v)` for a tensor field given at the quadrature points.
pub fn stress_load_vector(cache: &ElementCache, layout: &DofLayout, stress: impl Fn(usize, usize) -> Sym2) -> Vec<f64> {
    let mut f = vec![0.0; layout.n_velocity_free()];
    for (t, el) in cache.elements.iter().enumerate() {
        let free = layout.element_free(t);
        for q in 0..N_QUAD {
            let sq = stress(t, q);
            for i in 0..N_VEL {
                if let Some(g) = free[i] {
                    f[g] += el.weights[q] * ddot(&sq, &el.strains[q][i]);
                }
            }
        }
    }
    f
}

/// Augmented-Lagrangian state needed by the assembly besides the velocity.
pub struct AlState<'a> {
    /// Pressure multiplier, three coefficients per triangle.
    pub pressure: &'a [f64],
    /// Penalty parameter per triangle.
    pub penalty: &'a [f64],
}

/// Internal force `A(u) + ρ Bᵀ M⁻¹ B u − Bᵀ p` (reduced) and, optionally, its tangent.
///
/// The tangent is `2∫[η e(φ):e(ψ) + (η'/t)(e(u):e(φ))(e(u):e(ψ))] + ρ Bᵀ M⁻¹ B` and is
/// accumulated into `matrix` when given.
pub fn assemble_internal(
    cache: &ElementCache,
    layout: &DofLayout,
    pattern: &SparsePattern,
    visc: &Viscosity,
    u_full: &[f64],
    al: &AlState,
    mut matrix: Option<&mut Vec<f64>>,
) -> Result<Vec<f64>> {
    let mut force = vec![0.0; layout.n_velocity_free()];
    if let Some(m) = matrix.as_deref_mut() {
        m.clear();
        m.resize(pattern.nnz(), 0.0);
    }
    let mut local = vec![0.0; N_VEL * N_VEL];
    for (t, el) in cache.elements.iter().enumerate() {
        let u = gather(layout, u_full, t);
        let e = element_strains(el, &u);
        let mut r = [0.0; N_VEL];
        let want_matrix = matrix.is_some();
        if want_matrix {
            local.iter_mut().for_each(|v| *v = 0.0);
        }
        for q in 0..N_QUAD {
            let t2 = ddot(&e[q], &e[q]);
            let (eta, deta) = visc.eval(t2);
            if !(eta.is_finite() && deta.is_finite() && eta > 0.0) {
                return Err(Error::SingularViscosity(format!(
                    "viscosity {eta} (derivative factor {deta}) at strain norm {} in triangle {t}",
                    t2.sqrt()
                )));
            }
            let w = el.weights[q] * STRESS_FACTOR;
            let mut proj = [0.0; N_VEL];
            for i in 0..N_VEL {
                proj[i] = ddot(&e[q], &el.strains[q][i]);
                r[i] += w * eta * proj[i];
            }
            if want_matrix {
                for i in 0..N_VEL {
                    let row = &mut local[i * N_VEL..(i + 1) * N_VEL];
                    let bi = &el.strains[q][i];
                    for j in 0..N_VEL {
                        row[j] += w * (eta * ddot(bi, &el.strains[q][j]) + deta * proj[i] * proj[j]);
                    }
                }
            }
        }
        let rho = al.penalty[t];
        let d = element_div(el, &u);
        let p = &al.pressure[3 * t..3 * t + 3];
        let mut g = [0.0; N_PRES];
        for a in 0..N_PRES {
            g[a] = rho * (0..N_PRES).map(|b| el.mass_inverse[a][b] * d[b]).sum::<f64>() - p[a];
        }
        for i in 0..N_VEL {
            r[i] += (0..N_PRES).map(|a| el.div_matrix[a][i] * g[a]).sum::<f64>();
        }
        if let Some(m) = matrix.as_deref_mut() {
            // ρ Bᵀ M⁻¹ B
            let mut mb = [[0.0; N_VEL]; N_PRES];
            for a in 0..N_PRES {
                for i in 0..N_VEL {
                    mb[a][i] = (0..N_PRES).map(|b| el.mass_inverse[a][b] * el.div_matrix[b][i]).sum();
                }
            }
            for i in 0..N_VEL {
                for j in 0..N_VEL {
                    local[i * N_VEL + j] += rho * (0..N_PRES).map(|a| el.div_matrix[a][i] * mb[a][j]).sum::<f64>();
                }
            }
            pattern.scatter(m, t, &local);
        }
        for (i, fi) in layout.element_free(t).iter().enumerate() {
            if let Some(gi) = fi {
                force[*gi] += r[i];
            }
        }
    }
    Ok(force)
}

/// Coefficients of `Π div u` per triangle, the multiplier correction direction.
pub fn projected_divergence(cache: &ElementCache, layout: &DofLayout, u_full: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; layout.n_pressure()];
    for (t, el) in cache.elements.iter().enumerate() {
        let d = element_div(el, &gather(layout, u_full, t));
        for a in 0..N_PRES {
            out[3 * t + a] = (0..N_PRES).map(|b| el.mass_inverse[a][b] * d[b]).sum();
        }
    }
    out
}

/// Reduced vector `Bᵀ q` for pressure coefficients `q`.
pub fn divergence_transpose(cache: &ElementCache, layout: &DofLayout, q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; layout.n_velocity_free()];
    for (t, el) in cache.elements.iter().enumerate() {
        for (i, fi) in layout.element_free(t).iter().enumerate() {
            if let Some(gi) = fi {
                out[*gi] += (0..N_PRES).map(|a| el.div_matrix[a][i] * q[3 * t + a]).sum::<f64>();
            }
        }
    }
    out
}

/// Largest viscosity over the quadrature points of each triangle.
pub fn element_max_viscosity(cache: &ElementCache, layout: &DofLayout, visc: &Viscosity, u_full: &[f64]) -> Vec<f64> {
    cache
        .elements
        .iter()
        .enumerate()
        .map(|(t, el)| {
            let e = element_strains(el, &gather(layout, u_full, t));
            e.iter().map(|eq| visc.eval(ddot(eq, eq)).0).fold(0.0, f64::max)
        })
        .collect()
}

/// Tangent matrix and residual `load − internal force` at state `(u, p)` for body force `ξ`.
pub fn assemble_stokes(
    mesh: &UnitCellMesh,
    layout: &DofLayout,
    visc: &Viscosity,
    xi: [f64; 2],
    penalty: f64,
    u: &DiscreteField,
    p: &DiscreteField,
) -> Result<(SparsePattern, Vec<f64>, Vec<f64>)> {
    let cache = ElementCache::new(mesh);
    let pattern = SparsePattern::new(layout);
    let rho = vec![penalty; layout.n_triangles];
    let mut matrix = Vec::new();
    let force = assemble_internal(
        &cache,
        layout,
        &pattern,
        visc,
        &u.coeffs,
        &AlState { pressure: &p.coeffs, penalty: &rho },
        Some(&mut matrix),
    )?;
    let load = load_vector(&cache, layout, xi);
    let residual = load.iter().zip(&force).map(|(l, f)| l - f).collect();
    Ok((pattern, matrix, residual))
}
