//! Small-force expansion of the Carreau permeability function.
//!
//! With `C = (η₀ − η_∞) λ (2 − r)` and Darcy strains `eʲ = e(wʲ)`:
//!
//! * `𝒰(ξ)_m ≈ (Kξ)_m + C Σ H⁴[ℓ][m][j][k] ξ_j ξ_k ξ_ℓ`,
//!   `H⁴[ℓ][m][j][k] = ∫ (eʲ:eᵏ)(e^ℓ:eᵐ)`;
//! * the quintic term `C Σ H⁶[m][p][q][j][k][ℓ] ξ_j ξ_k ξ_ℓ ξ_m ξ_p` along `e_q` with
//!   `H⁶ = C T¹ + λ (r − 4)/4 T²`,
//!   `T¹ = ∫ (eʲ:eᵏ)(e(z^{ℓmp}):e^q) + 2 (eʲ:e(z^{ℓmp}))(eᵏ:e^q)`,
//!   `T² = ∫ (eʲ:eᵏ)(e^ℓ:eᵐ)(e^p:e^q)`.
//!
//! The third-order fields `z^{jkℓ}` solve `∫ 2η₀ e(z):e(v) = ∫ S:e(v)` with `S` the
//! symmetrization of `(eʲ:eᵏ) e^ℓ`, so that the cubic velocity correction is
//! `C Σ ξ_j ξ_k ξ_ℓ z^{jkℓ}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{element_strains, gather, stress_load_vector};
use crate::element::{ddot, Sym2};
use crate::error::{Error, Result};
use crate::permeability::{darcy_with_fields, DarcyTensor, PermeabilitySample, SweepResult};
use crate::quadrature::N_QUAD;
use crate::solver::{CellSolution, CellSolver, SolverOptions};
use crate::viscosity::ViscosityLaw;

pub type Rank4 = [[[[f64; 2]; 2]; 2]; 2];
pub type Rank6 = [[[[[[f64; 2]; 2]; 2]; 2]; 2]; 2];

/// Carreau parameters entering the expansion coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarreauParams {
    pub eta0: f64,
    pub eta_inf: f64,
    pub lambda: f64,
    pub r: f64,
}

impl CarreauParams {
    pub fn from_law(law: &ViscosityLaw) -> Result<Self> {
        law.validate()?;
        match *law {
            ViscosityLaw::Carreau { eta0, eta_inf, lambda, r } => Ok(CarreauParams { eta0, eta_inf, lambda, r }),
            other => Err(Error::InvalidLaw(format!("expansion needs a Carreau law, got {other:?}"))),
        }
    }

    pub fn law(&self) -> ViscosityLaw {
        ViscosityLaw::Carreau { eta0: self.eta0, eta_inf: self.eta_inf, lambda: self.lambda, r: self.r }
    }

    /// `(η₀ − η_∞) λ (2 − r)`.
    pub fn cubic_coefficient(&self) -> f64 {
        (self.eta0 - self.eta_inf) * self.lambda * (2.0 - self.r)
    }

    /// Weight of `T²` inside `H⁶`.
    pub fn quintic_weight(&self) -> f64 {
        self.lambda * (self.r - 4.0) / 4.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorTensors {
    #[serde(rename = "K")]
    pub k: DarcyTensor,
    #[serde(rename = "H4")]
    pub h4: Rank4,
    #[serde(rename = "H6_term1")]
    pub h6_term1: Option<Rank6>,
    #[serde(rename = "H6_term2")]
    pub h6_term2: Option<Rank6>,
    pub law: CarreauParams,
}

/// The four distinct fields `z^{jkℓ}`, indexed by the number of indices equal to 1.
pub struct ThirdOrderFields {
    pub fields: Vec<CellSolution>,
}

impl ThirdOrderFields {
    pub fn get(&self, j: usize, k: usize, l: usize) -> &CellSolution {
        &self.fields[j + k + l]
    }
}

/// Darcy strains `[e⁰, e¹]` at the quadrature points of every triangle.
fn strains_of(solver: &CellSolver, sol: &CellSolution) -> Vec<[Sym2; N_QUAD]> {
    solver
        .cache
        .elements
        .iter()
        .enumerate()
        .map(|(t, el)| element_strains(el, &gather(solver.layout, &sol.velocity.coeffs, t)))
        .collect()
}

fn add_scaled(acc: &mut Sym2, a: f64, e: &Sym2) {
    acc[0] += a * e[0];
    acc[1] += a * e[1];
    acc[2] += a * e[2];
}

pub fn third_order_fields(
    solver: &CellSolver,
    darcy: &[CellSolution; 2],
    eta0: f64,
    opts: &SolverOptions,
) -> Result<ThirdOrderFields> {
    let e = [strains_of(solver, &darcy[0]), strains_of(solver, &darcy[1])];
    let triples: [[usize; 3]; 4] = [[0, 0, 0], [0, 0, 1], [0, 1, 1], [1, 1, 1]];
    let solve = |idx: &[usize; 3]| {
        let [j, k, l] = *idx;
        let load = stress_load_vector(&solver.cache, solver.layout, |t, q| {
            let (ej, ek, el) = (&e[j][t][q], &e[k][t][q], &e[l][t][q]);
            let mut s = [0.0; 3];
            add_scaled(&mut s, ddot(ej, ek) / 3.0, el);
            add_scaled(&mut s, ddot(ek, el) / 3.0, ej);
            add_scaled(&mut s, ddot(el, ej) / 3.0, ek);
            s
        });
        solver.solve_stokes_rhs(eta0, &load, opts)
    };
    let fields: Result<Vec<CellSolution>> = if opts.deterministic {
        triples.iter().map(solve).collect()
    } else {
        triples.par_iter().map(solve).collect()
    };
    Ok(ThirdOrderFields { fields: fields? })
}

#[allow(non_snake_case)]
pub fn tensor_H4(solver: &CellSolver, darcy: &[CellSolution; 2]) -> Rank4 {
    let e = [strains_of(solver, &darcy[0]), strains_of(solver, &darcy[1])];
    let mut h = [[[[0.0; 2]; 2]; 2]; 2];
    for (t, el) in solver.cache.elements.iter().enumerate() {
        for q in 0..N_QUAD {
            let w = el.weights[q];
            let a = pair_products(&e[0][t][q], &e[1][t][q]);
            for l in 0..2 {
                for m in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            h[l][m][j][k] += w * a[j][k] * a[l][m];
                        }
                    }
                }
            }
        }
    }
    h
}

fn pair_products(e0: &Sym2, e1: &Sym2) -> [[f64; 2]; 2] {
    let x = ddot(e0, e1);
    [[ddot(e0, e0), x], [x, ddot(e1, e1)]]
}

/// The two law-independent parts `(T¹, T²)` of `H⁶`.
#[allow(non_snake_case)]
pub fn tensor_H6(solver: &CellSolver, darcy: &[CellSolution; 2], third: &ThirdOrderFields) -> (Rank6, Rank6) {
    let e = [strains_of(solver, &darcy[0]), strains_of(solver, &darcy[1])];
    let z: Vec<Vec<[Sym2; N_QUAD]>> = third.fields.iter().map(|f| strains_of(solver, f)).collect();
    let mut t1 = [[[[[[0.0; 2]; 2]; 2]; 2]; 2]; 2];
    let mut t2 = t1;
    for (t, el) in solver.cache.elements.iter().enumerate() {
        for q in 0..N_QUAD {
            let w = el.weights[q];
            let ed = [&e[0][t][q], &e[1][t][q]];
            let a = pair_products(ed[0], ed[1]);
            // b[j][n] = eʲ : e(zₙ)
            let mut b = [[0.0; 4]; 2];
            for (j, row) in b.iter_mut().enumerate() {
                for (n, v) in row.iter_mut().enumerate() {
                    *v = ddot(ed[j], &z[n][t][q]);
                }
            }
            for m in 0..2 {
                for p in 0..2 {
                    for qq in 0..2 {
                        for j in 0..2 {
                            for k in 0..2 {
                                for l in 0..2 {
                                    let n = l + m + p;
                                    t1[m][p][qq][j][k][l] += w * (a[j][k] * b[qq][n] + 2.0 * b[j][n] * a[k][qq]);
                                    t2[m][p][qq][j][k][l] += w * a[j][k] * a[l][m] * a[p][qq];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    (t1, t2)
}

/// Darcy tensor, `H⁴` and, for `order ≥ 5`, the two parts of `H⁶`.
pub fn taylor_tensors(solver: &CellSolver, law: &ViscosityLaw, order: u32, opts: &SolverOptions) -> Result<TaylorTensors> {
    let params = CarreauParams::from_law(law)?;
    if !matches!(order, 1 | 3 | 5) {
        return Err(Error::InvalidOptions(format!("expansion order {order} must be 1, 3 or 5")));
    }
    let (k, darcy) = darcy_with_fields(solver, params.eta0, opts)?;
    let h4 = tensor_H4(solver, &darcy);
    let (h6_term1, h6_term2) = if order >= 5 {
        let third = third_order_fields(solver, &darcy, params.eta0, opts)?;
        let (t1, t2) = tensor_H6(solver, &darcy, &third);
        (Some(t1), Some(t2))
    } else {
        (None, None)
    };
    Ok(TaylorTensors { k, h4, h6_term1, h6_term2, law: params })
}

impl TaylorTensors {
    /// `H⁶` for the stored law.
    pub fn h6(&self) -> Option<Rank6> {
        let (t1, t2) = (self.h6_term1.as_ref()?, self.h6_term2.as_ref()?);
        let c = self.law.cubic_coefficient();
        let d = self.law.quintic_weight();
        let mut h = *t1;
        for (hm, (am, bm)) in h.iter_mut().flatten().flatten().flatten().flatten().zip(
            t1.iter().flatten().flatten().flatten().flatten().zip(t2.iter().flatten().flatten().flatten().flatten()),
        ) {
            for i in 0..2 {
                hm[i] = c * am[i] + d * bm[i];
            }
        }
        Some(h)
    }

    /// Largest violation of the index symmetries of `H⁴`, relative to its largest entry.
    pub fn h4_asymmetry(&self) -> f64 {
        let h = &self.h4;
        let scale = h.iter().flatten().flatten().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut dev: f64 = 0.0;
        for l in 0..2 {
            for m in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let v = h[l][m][j][k];
                        dev = dev
                            .max((v - h[m][l][j][k]).abs())
                            .max((v - h[l][m][k][j]).abs())
                            .max((v - h[j][k][l][m]).abs());
                    }
                }
            }
        }
        dev / scale
    }

    /// Cubic form `Z(h)_m = Σ H⁴[ℓ][m][j][k] h_j h_k h_ℓ`.
    pub fn cubic_form(&self, h: [f64; 2]) -> [f64; 2] {
        let mut z = [0.0; 2];
        for (m, zm) in z.iter_mut().enumerate() {
            for l in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        *zm += self.h4[l][m][j][k] * h[j] * h[k] * h[l];
                    }
                }
            }
        }
        z
    }
}

/// Truncated expansion `𝒱₁`, `𝒱₃` or `𝒱₅` at `ξ`.
pub fn taylor_eval(tensors: &TaylorTensors, xi: [f64; 2], order: u32) -> Result<[f64; 2]> {
    let mut v = tensors.k.apply(xi);
    if order == 1 {
        return Ok(v);
    }
    if order != 3 && order != 5 {
        return Err(Error::InvalidOptions(format!("expansion order {order} must be 1, 3 or 5")));
    }
    let c = tensors.law.cubic_coefficient();
    let z = tensors.cubic_form(xi);
    v[0] += c * z[0];
    v[1] += c * z[1];
    if order == 5 {
        let h6 = tensors.h6().ok_or(Error::MissingTensor(5))?;
        for m in 0..2 {
            for p in 0..2 {
                for q in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            for l in 0..2 {
                                v[q] += c * h6[m][p][q][j][k][l] * xi[j] * xi[k] * xi[l] * xi[m] * xi[p];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub xi: [f64; 2],
    pub delta1: Option<f64>,
    pub delta3: Option<f64>,
    pub delta5: Option<f64>,
    /// Set when `‖𝒰(ξ)‖ = 0` and the gaps are undefined.
    pub skipped: bool,
}

fn rel_gap(u: [f64; 2], v: [f64; 2]) -> f64 {
    (u[0] - v[0]).hypot(u[1] - v[1]) / u[0].hypot(u[1])
}

pub fn gap_record(sample: &PermeabilitySample, tensors: &TaylorTensors) -> Result<GapRecord> {
    let u = sample.u;
    if u[0].hypot(u[1]) == 0.0 {
        return Ok(GapRecord { xi: sample.xi, delta1: None, delta3: None, delta5: None, skipped: true });
    }
    let d = |order| -> Result<Option<f64>> {
        match taylor_eval(tensors, sample.xi, order) {
            Ok(v) => Ok(Some(rel_gap(u, v))),
            Err(Error::MissingTensor(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    Ok(GapRecord { xi: sample.xi, delta1: d(1)?, delta3: d(3)?, delta5: d(5)?, skipped: false })
}

/// Relative gaps between the sampled `𝒰` and the truncated expansions.
pub fn gaps(sweep: &SweepResult, tensors: &TaylorTensors) -> Result<Vec<GapRecord>> {
    if sweep.mesh_hash != tensors.k.mesh_hash {
        return Err(Error::ProvenanceMismatch(format!(
            "sweep mesh {} differs from tensor mesh {}",
            sweep.mesh_hash, tensors.k.mesh_hash
        )));
    }
    if sweep.law != tensors.law.law() {
        return Err(Error::ProvenanceMismatch(format!(
            "sweep law {:?} differs from tensor law {:?}",
            sweep.law, tensors.law
        )));
    }
    sweep.ok_samples().map(|s| gap_record(s, tensors)).collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::DegenerateSampling("slope fit needs two positive points".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateSampling("slope fit needs distinct abscissae".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic() -> TaylorTensors {
        let mut h4 = [[[[0.0; 2]; 2]; 2]; 2];
        for l in 0..2 {
            for m in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        h4[l][m][j][k] = if l == m && j == k { 1.0 } else if l != m && j != k { 0.5 } else { 0.0 };
                    }
                }
            }
        }
        TaylorTensors {
            k: DarcyTensor { k: [[2.0, 0.0], [0.0, 1.0]], energy: [[2.0, 0.0], [0.0, 1.0]], mu: 1.0, mesh_hash: "x".into() },
            h4,
            h6_term1: None,
            h6_term2: None,
            law: CarreauParams { eta0: 1.0, eta_inf: 0.0, lambda: 1.0, r: 1.5 },
        }
    }

    #[test]
    fn missing_quintic_tensor() {
        let t = synthetic();
        assert!(matches!(taylor_eval(&t, [0.3, 0.1], 5), Err(Error::MissingTensor(5))));
        assert_eq!(taylor_eval(&t, [0.0, 0.0], 3).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn odd_polynomial() {
        let t = synthetic();
        let a = taylor_eval(&t, [0.3, -0.2], 3).unwrap();
        let b = taylor_eval(&t, [-0.3, 0.2], 3).unwrap();
        assert_eq!(a, [-b[0], -b[1]]);
        assert_eq!(t.h4_asymmetry(), 0.0);
    }

    #[test]
    fn slope_of_power() {
        let x = [0.1, 0.2, 0.4];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 5.0).abs() < 1e-12);
    }
}
