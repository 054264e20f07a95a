//! The Darcy tensor, the permeability function `𝒰(ξ) = ∫ w_ξ` and sampling sweeps.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::gradient_product;
use crate::error::{Error, Result};
use crate::geometry::{CellSymmetry, GeometrySpec};
use crate::layout::DofLayout;
use crate::mesh::UnitCellMesh;
use crate::solver::{CellSolution, CellSolver, Diagnostics, SolverOptions};
use crate::viscosity::ViscosityLaw;

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DarcyTensor {
    /// `k[i][j] = ∫ wⁱ_j`.
    pub k: Mat2,
    /// `μ ∫ ∇wⁱ : ∇wʲ`.
    pub energy: Mat2,
    pub mu: f64,
    pub mesh_hash: String,
}

impl DarcyTensor {
    pub fn apply(&self, xi: [f64; 2]) -> [f64; 2] {
        [
            self.k[0][0] * xi[0] + self.k[1][0] * xi[1],
            self.k[0][1] * xi[0] + self.k[1][1] * xi[1],
        ]
    }

    pub fn norm(&self) -> f64 {
        self.k.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest entrywise difference between the two formulas, relative to `‖K‖`.
    pub fn consistency(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.k[i][j] - self.energy[i][j]).abs());
            }
        }
        m / self.norm()
    }

    pub fn asymmetry(&self) -> f64 {
        (self.k[0][1] - self.k[1][0]).abs() / self.norm()
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.k[0][0];
        let d = self.k[1][1];
        let b = 0.5 * (self.k[0][1] + self.k[1][0]);
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - rad, mean + rad]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.eigenvalues()[0] > 0.0
    }

    /// `|K₀₀ − K₁₁| / ‖K‖`.
    pub fn anisotropy(&self) -> f64 {
        (self.k[0][0] - self.k[1][1]).abs() / self.norm()
    }

    /// Largest deviation from the tensor invariants, empty when all hold.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.asymmetry() > 1e-8 {
            v.push(format!("K asymmetric: {:.3e}", self.asymmetry()));
        }
        if !self.is_positive_definite() {
            v.push(format!("K not positive definite: eigenvalues {:?}", self.eigenvalues()));
        }
        if self.consistency() > 1e-6 {
            v.push(format!("K formulas disagree: {:.3e}", self.consistency()));
        }
        v
    }
}

/// Darcy tensor together with the two cell solutions it was computed from.
pub fn darcy_with_fields(solver: &CellSolver, mu: f64, opts: &SolverOptions) -> Result<(DarcyTensor, [CellSolution; 2])> {
    let w0 = solver.solve_linear(mu, 0, opts)?;
    let w1 = solver.solve_linear(mu, 1, opts)?;
    let ws = [w0, w1];
    let mut k = [[0.0; 2]; 2];
    let mut energy = [[0.0; 2]; 2];
    for i in 0..2 {
        k[i] = solver.integrate(&ws[i]);
        for j in 0..2 {
            energy[i][j] = mu * gradient_product(&solver.cache, solver.layout, &ws[i].velocity.coeffs, &ws[j].velocity.coeffs);
        }
    }
    let tensor = DarcyTensor { k, energy, mu, mesh_hash: solver.mesh.provenance_hash() };
    Ok((tensor, ws))
}

pub fn darcy_tensor(mesh: &UnitCellMesh, layout: &DofLayout, mu: f64) -> Result<DarcyTensor> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidLaw(format!("viscosity {mu} must be positive")));
    }
    let solver = CellSolver::new(mesh, layout)?;
    Ok(darcy_with_fields(&solver, mu, &SolverOptions::default())?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    pub newton_iterations: usize,
    pub div_norm: f64,
    pub residual: f64,
    pub epsilon: f64,
}

impl From<&Diagnostics> for SampleDiagnostics {
    fn from(d: &Diagnostics) -> Self {
        SampleDiagnostics {
            newton_iterations: d.newton_iterations,
            div_norm: d.div_norm,
            residual: d.residual,
            epsilon: d.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum SampleStatus {
    Solved,
    /// Obtained from another sample by a symmetry of the cell.
    Mirrored,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermeabilitySample {
    pub xi: [f64; 2],
    #[serde(rename = "U")]
    pub u: [f64; 2],
    pub law: ViscosityLaw,
    pub diagnostics: SampleDiagnostics,
    pub status: SampleStatus,
}

impl PermeabilitySample {
    pub fn angle(&self) -> f64 {
        self.xi[1].atan2(self.xi[0])
    }

    pub fn is_ok(&self) -> bool {
        !matches!(self.status, SampleStatus::Failed(_))
    }
}

pub fn permeability_with(solver: &CellSolver, law: &ViscosityLaw, xi: [f64; 2], opts: &SolverOptions) -> Result<PermeabilitySample> {
    let sol = solver.solve_nonlinear(law, xi, opts)?;
    Ok(PermeabilitySample {
        xi,
        u: solver.integrate(&sol),
        law: *law,
        diagnostics: SampleDiagnostics::from(&sol.diagnostics),
        status: SampleStatus::Solved,
    })
}

#[allow(non_snake_case)]
pub fn permeability_U(mesh: &UnitCellMesh, layout: &DofLayout, law: &ViscosityLaw, xi: [f64; 2]) -> Result<PermeabilitySample> {
    let solver = CellSolver::new(mesh, layout)?;
    permeability_with(&solver, law, xi, &SolverOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    /// `ξ = (i/n)(cos jπ/4m, sin jπ/4m)`, `1 ≤ i ≤ n`, `0 ≤ j ≤ m`.
    Grid { n: usize, m: usize },
    /// Unit vectors at angles `jπ/4m`, `0 ≤ j ≤ m`.
    Circle { m: usize },
}

impl Sampling {
    fn radii(&self) -> Vec<f64> {
        match *self {
            Sampling::Grid { n, .. } => (1..=n).map(|i| i as f64 / n as f64).collect(),
            Sampling::Circle { .. } => vec![1.0],
        }
    }

    pub fn m(&self) -> usize {
        match *self {
            Sampling::Grid { m, .. } | Sampling::Circle { m } => m,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Sampling::Grid { n, m } => n >= 1 && m >= 1,
            Sampling::Circle { m } => m >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DegenerateSampling(format!("{self:?} needs n, m ≥ 1")))
        }
    }
}

fn direction(j: usize, m: usize) -> [f64; 2] {
    let a = j as f64 * PI / (4 * m) as f64;
    [a.cos(), a.sin()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Extend the samples to angles `jπ/4m` with `m < j < 4m`.
    pub extend: bool,
    /// Fraction of mirrored samples re-solved to confirm the symmetry.
    pub verify_fraction: Option<f64>,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { extend: false, verify_fraction: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryCheck {
    pub resolved: usize,
    /// Largest `‖𝒰_solved − 𝒰_mirrored‖ / ‖𝒰_solved‖`.
    pub max_relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub samples: Vec<PermeabilitySample>,
    pub sampling: Sampling,
    pub law: ViscosityLaw,
    pub mesh_hash: String,
    pub geometry: Option<GeometrySpec>,
    pub symmetry_check: Option<SymmetryCheck>,
}

impl SweepResult {
    pub fn ok_samples(&self) -> impl Iterator<Item = &PermeabilitySample> {
        self.samples.iter().filter(|s| s.is_ok())
    }

    pub fn failures(&self) -> usize {
        self.samples.len() - self.ok_samples().count()
    }

    /// The samples together with their images under `ξ ↦ −ξ`.
    pub fn with_opposites(&self) -> Vec<PermeabilitySample> {
        let mut out = self.samples.clone();
        for s in &self.samples {
            let mut o = s.clone();
            o.xi = [-s.xi[0], -s.xi[1]];
            o.u = [-s.u[0], -s.u[1]];
            o.status = SampleStatus::Mirrored;
            out.push(o);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Reflection {
    /// `(x, y) ↦ (y, x)`
    Swap,
    /// `(x, y) ↦ (−x, y)`
    FlipX,
}

impl Reflection {
    fn apply(self, v: [f64; 2]) -> [f64; 2] {
        match self {
            Reflection::Swap => [v[1], v[0]],
            Reflection::FlipX => [-v[0], v[1]],
        }
    }
}

/// Primary angle index and the reflections (innermost first) mapping it onto `j`.
fn resolve_angle(j: usize, m: usize) -> (usize, Vec<Reflection>) {
    if j > 2 * m {
        let (s, mut ops) = resolve_angle(4 * m - j, m);
        ops.push(Reflection::FlipX);
        (s, ops)
    } else if j > m {
        let (s, mut ops) = resolve_angle(2 * m - j, m);
        ops.push(Reflection::Swap);
        (s, ops)
    } else {
        (j, Vec::new())
    }
}

fn solve_all(
    solver: &CellSolver,
    law: &ViscosityLaw,
    xis: &[[f64; 2]],
    opts: &SolverOptions,
) -> Vec<PermeabilitySample> {
    let one = |xi: &[f64; 2]| {
        permeability_with(solver, law, *xi, opts).unwrap_or_else(|e| PermeabilitySample {
            xi: *xi,
            u: [f64::NAN; 2],
            law: *law,
            diagnostics: SampleDiagnostics { newton_iterations: 0, div_norm: f64::NAN, residual: f64::NAN, epsilon: 0.0 },
            status: SampleStatus::Failed(e.to_string()),
        })
    };
    if opts.deterministic {
        xis.iter().map(one).collect()
    } else {
        xis.par_iter().map(one).collect()
    }
}

/// Samples `𝒰` over the requested directions and radii, in radius-major order.
pub fn sweep_with(
    solver: &CellSolver,
    law: &ViscosityLaw,
    sampling: Sampling,
    sweep_opts: &SweepOptions,
    opts: &SolverOptions,
) -> Result<SweepResult> {
    sampling.validate()?;
    law.validate()?;
    let m = sampling.m();
    let geometry = solver.mesh.geometry;
    let symmetric = geometry.map(|g| g.symmetry()) == Some(CellSymmetry::Dihedral);
    let n_angles = if sweep_opts.extend { 4 * m } else { m + 1 };
    let radii = sampling.radii();

    // which (radius, angle) pairs must be solved
    let mut to_solve = Vec::new();
    let mut plan = Vec::new();
    for (ri, r) in radii.iter().enumerate() {
        for j in 0..n_angles {
            let (src, ops) = if symmetric { resolve_angle(j, m) } else { (j, Vec::new()) };
            if ops.is_empty() {
                let d = direction(j, m);
                plan.push((ri, j, src, ops, Some(to_solve.len())));
                to_solve.push([r * d[0], r * d[1]]);
            } else {
                plan.push((ri, j, src, ops, None));
            }
        }
    }
    let solved = solve_all(solver, law, &to_solve, opts);
    let lookup = |ri: usize, j: usize| {
        plan.iter()
            .find(|p| p.0 == ri && p.1 == j)
            .and_then(|p| p.4)
            .map(|k| &solved[k])
            .expect("primary sample present")
    };
    let mut samples = Vec::with_capacity(plan.len());
    for (ri, j, src, ops, slot) in &plan {
        if let Some(k) = slot {
            samples.push(solved[*k].clone());
            continue;
        }
        let base = lookup(*ri, *src);
        let d = direction(*j, m);
        let mut s = base.clone();
        s.xi = [radii[*ri] * d[0], radii[*ri] * d[1]];
        s.u = ops.iter().fold(base.u, |u, op| op.apply(u));
        if base.is_ok() {
            s.status = SampleStatus::Mirrored;
        }
        samples.push(s);
    }

    let mut symmetry_check = None;
    if let Some(frac) = sweep_opts.verify_fraction {
        let mirrored: Vec<usize> = (0..samples.len())
            .filter(|&k| samples[k].status == SampleStatus::Mirrored)
            .collect();
        let count = ((frac * mirrored.len() as f64).ceil() as usize).min(mirrored.len());
        let mut rng = ChaCha8Rng::seed_from_u64(sweep_opts.seed);
        let mut pick: Vec<usize> = mirrored.choose_multiple(&mut rng, count).copied().collect();
        pick.sort_unstable();
        let xis: Vec<[f64; 2]> = pick.iter().map(|&k| samples[k].xi).collect();
        let check = solve_all(solver, law, &xis, opts);
        let mut dev: f64 = 0.0;
        for (c, &k) in check.iter().zip(&pick) {
            if let SampleStatus::Failed(msg) = &c.status {
                return Err(Error::NonConvergence(format!("symmetry re-solve at {:?}: {msg}", c.xi)));
            }
            let m = samples[k].u;
            let d = ((c.u[0] - m[0]).powi(2) + (c.u[1] - m[1]).powi(2)).sqrt();
            dev = dev.max(d / (c.u[0].hypot(c.u[1])));
        }
        symmetry_check = Some(SymmetryCheck { resolved: pick.len(), max_relative_deviation: dev });
    }

    Ok(SweepResult {
        samples,
        sampling,
        law: *law,
        mesh_hash: solver.mesh.provenance_hash(),
        geometry,
        symmetry_check,
    })
}

pub fn sweep(mesh: &UnitCellMesh, layout: &DofLayout, law: &ViscosityLaw, sampling: Sampling) -> Result<SweepResult> {
    let solver = CellSolver::new(mesh, layout)?;
    sweep_with(&solver, law, sampling, &SweepOptions::default(), &SolverOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMethod {
    Linearized,
    FiniteDifference,
}

/// `J[i][j] = ∂𝒰_i/∂ξ_j`.
#[allow(non_snake_case)]
pub fn jacobian_with(
    solver: &CellSolver,
    law: &ViscosityLaw,
    xi: [f64; 2],
    method: JacobianMethod,
    opts: &SolverOptions,
) -> Result<Mat2> {
    let size = xi[0].hypot(xi[1]);
    if size == 0.0 {
        return Err(Error::DegenerateBase("Jacobian requested at ξ = 0".into()));
    }
    let mut jac = [[0.0; 2]; 2];
    match method {
        JacobianMethod::Linearized => {
            let base = solver.solve_nonlinear(law, xi, opts)?;
            for j in 0..2 {
                let col = solver.integrate(&solver.solve_derivative(&base, j, opts)?);
                jac[0][j] = col[0];
                jac[1][j] = col[1];
            }
        }
        JacobianMethod::FiniteDifference => {
            let h = 1e-3 * size;
            for j in 0..2 {
                let mut plus = xi;
                let mut minus = xi;
                plus[j] += h;
                minus[j] -= h;
                let up = solver.integrate(&solver.solve_nonlinear(law, plus, opts)?);
                let um = solver.integrate(&solver.solve_nonlinear(law, minus, opts)?);
                jac[0][j] = (up[0] - um[0]) / (2.0 * h);
                jac[1][j] = (up[1] - um[1]) / (2.0 * h);
            }
        }
    }
    Ok(jac)
}

#[allow(non_snake_case)]
pub fn jacobian_U(mesh: &UnitCellMesh, layout: &DofLayout, law: &ViscosityLaw, xi: [f64; 2], method: JacobianMethod) -> Result<Mat2> {
    let solver = CellSolver::new(mesh, layout)?;
    jacobian_with(&solver, law, xi, method, &SolverOptions::default())
}

/// `|J₀₁ − J₁₀| / ‖J‖`.
pub fn jacobian_asymmetry(j: &Mat2) -> f64 {
    let n = j.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    (j[0][1] - j[1][0]).abs() / n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub pairs: usize,
    /// Smallest `(𝒰(ξ) − 𝒰(τ))·(ξ − τ)` and the sample indices attaining it.
    pub min_value: f64,
    pub min_pair: (usize, usize),
    pub violations: Vec<(usize, usize, f64)>,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_monotonicity(samples: &[PermeabilitySample]) -> Result<MonotonicityReport> {
    let ok: Vec<(usize, &PermeabilitySample)> = samples.iter().enumerate().filter(|(_, s)| s.is_ok()).collect();
    if ok.len() < 2 {
        return Err(Error::DegenerateSampling("monotonicity needs at least two samples".into()));
    }
    let mut report = MonotonicityReport { pairs: 0, min_value: f64::INFINITY, min_pair: (0, 0), violations: Vec::new() };
    for (a, (ia, sa)) in ok.iter().enumerate() {
        for (ib, sb) in ok.iter().skip(a + 1) {
            let dx = [sa.xi[0] - sb.xi[0], sa.xi[1] - sb.xi[1]];
            if dx == [0.0, 0.0] {
                continue;
            }
            let v = (sa.u[0] - sb.u[0]) * dx[0] + (sa.u[1] - sb.u[1]) * dx[1];
            report.pairs += 1;
            if v < report.min_value {
                report.min_value = v;
                report.min_pair = (*ia, *ib);
            }
            if !(v > 0.0) {
                report.violations.push((*ia, *ib, v));
            }
        }
    }
    Ok(report)
}

/// Sampled `m`, `M` with `m |ξ|^{r′−1} ≤ |𝒰(ξ)| ≤ M |ξ|^{r′−1}`.
pub fn growth_bounds(samples: &[PermeabilitySample], r: f64) -> Result<(f64, f64)> {
    let rp = r / (r - 1.0);
    let ratios: Vec<f64> = samples
        .iter()
        .filter(|s| s.is_ok())
        .filter_map(|s| {
            let x = s.xi[0].hypot(s.xi[1]);
            (x > 0.0).then(|| s.u[0].hypot(s.u[1]) / x.powf(rp - 1.0))
        })
        .collect();
    if ratios.is_empty() {
        return Err(Error::DegenerateSampling("no nonzero samples".into()));
    }
    Ok((
        ratios.iter().copied().fold(f64::INFINITY, f64::min),
        ratios.iter().copied().fold(0.0, f64::max),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_resolution() {
        let m = 8;
        for j in 0..4 * m {
            let (s, ops) = resolve_angle(j, m);
            assert!(s <= m);
            let mapped = ops.iter().fold(direction(s, m), |v, op| op.apply(v));
            let d = direction(j, m);
            assert!((mapped[0] - d[0]).abs() < 1e-14 && (mapped[1] - d[1]).abs() < 1e-14, "{j}");
        }
    }

    #[test]
    fn grid_directions_match_formula() {
        let g = Sampling::Grid { n: 5, m: 8 };
        assert_eq!(g.radii().len(), 5);
        let d = direction(8, 8);
        assert!((d[0] - d[1]).abs() < 1e-15);
    }

    fn sample(xi: [f64; 2], u: [f64; 2]) -> PermeabilitySample {
        PermeabilitySample {
            xi,
            u,
            law: ViscosityLaw::Newtonian { mu: 1.0 },
            diagnostics: SampleDiagnostics { newton_iterations: 0, div_norm: 0.0, residual: 0.0, epsilon: 0.0 },
            status: SampleStatus::Solved,
        }
    }

    #[test]
    fn monotonicity_flags_flipped_sample() {
        let k = [[2.0, 0.3], [0.3, 1.0]];
        let mut s: Vec<_> = (0..6)
            .map(|j| {
                let a = j as f64 * 0.5;
                let xi = [a.cos(), a.sin()];
                sample(xi, [k[0][0] * xi[0] + k[0][1] * xi[1], k[1][0] * xi[0] + k[1][1] * xi[1]])
            })
            .collect();
        assert!(check_monotonicity(&s).unwrap().holds());
        s[2].u = [-s[2].u[0], -s[2].u[1]];
        let rep = check_monotonicity(&s).unwrap();
        assert!(!rep.holds());
        assert!(rep.violations.iter().all(|v| v.0 == 2 || v.1 == 2));
    }

    #[test]
    fn eigenvalues_of_diagonal_tensor() {
        let t = DarcyTensor { k: [[3.0, 0.0], [0.0, 1.0]], energy: [[3.0, 0.0], [0.0, 1.0]], mu: 1.0, mesh_hash: String::new() };
        assert_eq!(t.eigenvalues(), [1.0, 3.0]);
        assert!(t.violations().is_empty());
    }
}
