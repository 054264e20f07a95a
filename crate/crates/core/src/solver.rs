//! Newton–augmented-Lagrangian solver for the (non)linear Stokes cell problem
//!
//! `−div{2 η(|e(w)|) e(w)} + ∇π = ξ` in 𝒴, `div w = 0`, `w = 0` on S, `w` periodic.
//!
//! Each Newton step solves the linearised saddle-point problem by Uzawa iterations on
//! the augmented tangent `J + ρ Bᵀ M⁻¹ B`, which is symmetric positive definite and
//! factorised once per step.

use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_internal, divergence_transpose, element_max_viscosity, load_vector, projected_divergence,
    strain_product, AlState, ElementCache, STRESS_FACTOR,
};
use crate::error::{Error, Result};
use crate::field::DiscreteField;
use crate::layout::DofLayout;
use crate::mesh::UnitCellMesh;
use crate::sparse::{Factorization, SparsePattern, SymmetricSolver};
use crate::viscosity::{Viscosity, ViscosityLaw};

/// Newton stops within this factor of its tolerance once the residual no longer
/// decreases.
const STALL_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Penalty as a multiple of the largest viscosity in each triangle.
    pub penalty_factor: f64,
    /// Required `‖Π div w‖`.
    pub al_tol: f64,
    /// Newton stops once `‖R‖ ≤ newton_rtol ‖F‖`.
    pub newton_rtol: f64,
    pub max_newton: usize,
    /// Power-law regularisation relative to the strain scale of the solution.
    pub eps_start: f64,
    pub eps_factor: f64,
    pub eps_floor: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub max_al_iters: usize,
    /// Solves are always reproducible; the flag additionally forces sequential sweeps.
    pub deterministic: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            penalty_factor: 1e3,
            al_tol: 1e-8,
            newton_rtol: 1e-10,
            max_newton: 50,
            eps_start: 1e-2,
            eps_factor: 0.1,
            eps_floor: 1e-8,
            backtrack: 0.5,
            max_backtracks: 20,
            max_al_iters: 200,
            deterministic: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("penalty_factor", self.penalty_factor),
            ("al_tol", self.al_tol),
            ("newton_rtol", self.newton_rtol),
            ("eps_start", self.eps_start),
            ("eps_floor", self.eps_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidOptions(format!("{name} = {v} must be positive")));
            }
        }
        for (name, v) in [("backtrack", self.backtrack), ("eps_factor", self.eps_factor)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidOptions(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if self.eps_floor > self.eps_start {
            return Err(Error::InvalidOptions("eps_floor exceeds eps_start".into()));
        }
        if self.max_newton == 0 || self.max_al_iters == 0 {
            return Err(Error::InvalidOptions("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Newton history of one regularisation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub epsilon: f64,
    /// `‖R‖ / ‖F‖` before the first and after every accepted step.
    pub residuals: Vec<f64>,
    pub al_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub newton_iterations: usize,
    /// Final `‖R‖ / ‖F‖`.
    pub residual: f64,
    /// Final `‖Π div w‖`.
    pub div_norm: f64,
    /// Power-law regularisation of the last stage (zero for other laws).
    pub epsilon: f64,
    pub stages: Vec<StageReport>,
}

impl Diagnostics {
    fn empty() -> Self {
        Diagnostics { newton_iterations: 0, residual: 0.0, div_norm: 0.0, epsilon: 0.0, stages: Vec::new() }
    }

    /// True when every stage has a non-increasing residual history.
    pub fn monotone(&self) -> bool {
        self.stages.iter().all(|s| s.residuals.windows(2).all(|w| w[1] <= w[0]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSolution {
    pub xi: [f64; 2],
    pub law: ViscosityLaw,
    pub velocity: DiscreteField,
    /// Pressure with zero mean over 𝒴.
    pub pressure: DiscreteField,
    pub diagnostics: Diagnostics,
}

impl CellSolution {
    pub fn velocity_free(&self, layout: &DofLayout) -> Vec<f64> {
        self.velocity.free_coeffs(layout)
    }
}

struct NewtonOutcome {
    u: Vec<f64>,
    p: Vec<f64>,
    report: StageReport,
    residual: f64,
    div_norm: f64,
}

/// Reusable solver state for one mesh: quadrature cache, sparsity pattern and symbolic factorisation.
pub struct CellSolver<'a> {
    pub mesh: &'a UnitCellMesh,
    pub layout: &'a DofLayout,
    pub cache: ElementCache,
    pub pattern: SparsePattern,
    symmetric: SymmetricSolver,
    pub fluid_area: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl<'a> CellSolver<'a> {
    pub fn new(mesh: &'a UnitCellMesh, layout: &'a DofLayout) -> Result<Self> {
        if layout.n_triangles != mesh.triangles.len() {
            return Err(Error::InconsistentMesh("layout does not belong to this mesh".into()));
        }
        let cache = ElementCache::new(mesh);
        let pattern = SparsePattern::new(layout);
        let symmetric = SymmetricSolver::new(&pattern)?;
        Ok(CellSolver { mesh, layout, cache, pattern, symmetric, fluid_area: mesh.area() })
    }

    fn check_anchor(&self) -> Result<()> {
        if self.layout.has_no_slip() {
            Ok(())
        } else {
            Err(Error::NonConvergence(
                "velocity nullspace: no no-slip boundary, constant velocities solve the homogeneous problem".into(),
            ))
        }
    }

    pub fn load(&self, xi: [f64; 2]) -> Vec<f64> {
        load_vector(&self.cache, self.layout, xi)
    }

    /// Root-mean-square strain `(∫|e(u)|² / |𝒴|)^{1/2}` of a reduced velocity.
    pub fn rms_strain(&self, u_free: &[f64]) -> f64 {
        let full = self.layout.expand(u_free);
        (strain_product(&self.cache, self.layout, &full, &full) / self.fluid_area).sqrt()
    }

    fn div_norm_of(&self, pdiv: &[f64]) -> f64 {
        // ‖Π div u‖² = Σ_e dᵀ M_e d with M_e = (A/12)[2 1 1; 1 2 1; 1 1 2]
        let mut s = 0.0;
        for (t, el) in self.cache.elements.iter().enumerate() {
            let d = &pdiv[3 * t..3 * t + 3];
            let sum = d[0] + d[1] + d[2];
            let sq = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            s += el.geometry.area / 12.0 * (sq + sum * sum);
        }
        s.max(0.0).sqrt()
    }

    pub fn penalties(&self, visc: &Viscosity, u_free: &[f64], opts: &SolverOptions) -> Vec<f64> {
        let full = self.layout.expand(u_free);
        element_max_viscosity(&self.cache, self.layout, visc, &full)
            .into_iter()
            .map(|eta| opts.penalty_factor * eta)
            .collect()
    }

    /// Internal force and optionally the tangent at `(u, p)`.
    fn internal(&self, visc: &Viscosity, u: &[f64], p: &[f64], rho: &[f64], matrix: Option<&mut Vec<f64>>) -> Result<Vec<f64>> {
        let full = self.layout.expand(u);
        assemble_internal(
            &self.cache,
            self.layout,
            &self.pattern,
            visc,
            &full,
            &AlState { pressure: p, penalty: rho },
            matrix,
        )
    }

    /// Uzawa iterations for `J δu − Bᵀ δp = r`, `B (u + δu) = 0`.
    fn saddle_solve(
        &self,
        fac: &Factorization,
        r: &[f64],
        u: &[f64],
        rho: &[f64],
        opts: &SolverOptions,
    ) -> (Vec<f64>, Vec<f64>, usize) {
        let mut dp = vec![0.0; self.layout.n_pressure()];
        let mut prev = f64::INFINITY;
        let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        let mut iters = 0;
        for k in 0..opts.max_al_iters {
            iters = k + 1;
            let bt = divergence_transpose(&self.cache, self.layout, &dp);
            let rhs: Vec<f64> = r.iter().zip(&bt).map(|(a, b)| a + b).collect();
            let du = fac.solve(&rhs);
            let w: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + b).collect();
            let full = self.layout.expand(&w);
            let pdiv = projected_divergence(&self.cache, self.layout, &full);
            let dn = self.div_norm_of(&pdiv);
            let scale = norm(&w) / (w.len().max(1) as f64).sqrt() * self.fluid_area.sqrt();
            let target = (1e-13 * scale).max(1e-6 * opts.al_tol);
            let improved = best.as_ref().map_or(true, |b| dn < b.2);
            if improved {
                best = Some((du, dp.clone(), dn));
            }
            if dn <= target || (k > 0 && dn > 0.5 * prev && dn <= opts.al_tol) {
                break;
            }
            prev = dn;
            for (t, r_t) in rho.iter().enumerate() {
                for a in 0..3 {
                    dp[3 * t + a] -= r_t * pdiv[3 * t + a];
                }
            }
        }
        let (du, dp, _) = best.expect("at least one iteration");
        (du, dp, iters)
    }

    /// Damped Newton iteration on `R(u, p) = F − A(u) − ρ Bᵀ M⁻¹ B u + Bᵀ p`.
    fn newton(
        &self,
        visc: &Viscosity,
        load: &[f64],
        u0: Vec<f64>,
        p0: Vec<f64>,
        rho: &[f64],
        rtol: f64,
        opts: &SolverOptions,
    ) -> Result<NewtonOutcome> {
        let fnorm = norm(load);
        let mut u = u0;
        let mut p = p0;
        let mut report = StageReport { epsilon: visc.eps2.sqrt(), residuals: Vec::new(), al_iterations: 0 };
        if fnorm == 0.0 {
            u.iter_mut().for_each(|v| *v = 0.0);
            p.iter_mut().for_each(|v| *v = 0.0);
            return Ok(NewtonOutcome { u, p, report, residual: 0.0, div_norm: 0.0 });
        }
        let mut matrix = Vec::new();
        let f = self.internal(visc, &u, &p, rho, Some(&mut matrix))?;
        let mut r: Vec<f64> = load.iter().zip(&f).map(|(a, b)| a - b).collect();
        let mut rn = norm(&r);
        report.residuals.push(rn / fnorm);
        let div_of = |u: &[f64]| {
            let full = self.layout.expand(u);
            self.div_norm_of(&projected_divergence(&self.cache, self.layout, &full))
        };
        let mut div = div_of(&u);
        let mut trial_matrix = Vec::new();
        for _ in 0..opts.max_newton {
            if rn <= rtol * fnorm && div <= opts.al_tol {
                return Ok(NewtonOutcome { u, p, report, residual: rn / fnorm, div_norm: div });
            }
            let fac = self.symmetric.factor(&matrix)?;
            let (du, dp, al_iters) = self.saddle_solve(&fac, &r, &u, rho, opts);
            report.al_iterations += al_iters;
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..=opts.max_backtracks {
                let ut: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + alpha * b).collect();
                let pt: Vec<f64> = p.iter().zip(&dp).map(|(a, b)| a + alpha * b).collect();
                match self.internal(visc, &ut, &pt, rho, Some(&mut trial_matrix)) {
                    Ok(ft) => {
                        let rt: Vec<f64> = load.iter().zip(&ft).map(|(a, b)| a - b).collect();
                        let rnt = norm(&rt);
                        if rnt < rn {
                            u = ut;
                            p = pt;
                            r = rt;
                            rn = rnt;
                            std::mem::swap(&mut matrix, &mut trial_matrix);
                            accepted = true;
                            break;
                        }
                    }
                    Err(Error::SingularViscosity(_)) => {}
                    Err(e) => return Err(e),
                }
                alpha *= opts.backtrack;
            }
            div = div_of(&u);
            if !accepted {
                if rn <= STALL_FACTOR * rtol * fnorm && div <= opts.al_tol {
                    return Ok(NewtonOutcome { u, p, report, residual: rn / fnorm, div_norm: div });
                }
                return Err(Error::NonConvergence(format!(
                    "line search failed after {} steps at relative residual {:.3e}, div norm {:.3e}",
                    report.residuals.len() - 1,
                    rn / fnorm,
                    div
                )));
            }
            let prev = report.residuals.last().copied().unwrap_or(f64::INFINITY);
            report.residuals.push(rn / fnorm);
            if rn <= STALL_FACTOR * rtol * fnorm && rn / fnorm > 0.5 * prev && div <= opts.al_tol {
                return Ok(NewtonOutcome { u, p, report, residual: rn / fnorm, div_norm: div });
            }
        }
        if rn <= rtol * fnorm && div <= opts.al_tol {
            Ok(NewtonOutcome { u, p, report, residual: rn / fnorm, div_norm: div })
        } else {
            Err(Error::NonConvergence(format!(
                "{} Newton iterations reached relative residual {:.3e}, div norm {:.3e}",
                opts.max_newton,
                rn / fnorm,
                div
            )))
        }
    }

    fn finish(&self, xi: [f64; 2], law: ViscosityLaw, out: NewtonOutcome, mut diag: Diagnostics) -> CellSolution {
        diag.newton_iterations += out.report.residuals.len().saturating_sub(1);
        diag.residual = out.residual;
        diag.div_norm = out.div_norm;
        diag.stages.push(out.report);
        let mut p = out.p;
        // the pressure is determined up to a constant; pin its mean to zero
        let mut mean = 0.0;
        for (t, el) in self.cache.elements.iter().enumerate() {
            mean += el.geometry.area / 3.0 * (p[3 * t] + p[3 * t + 1] + p[3 * t + 2]);
        }
        mean /= self.fluid_area;
        p.iter_mut().for_each(|v| *v -= mean);
        CellSolution {
            xi,
            law,
            velocity: DiscreteField::from_free(self.layout, &out.u),
            pressure: DiscreteField::pressure(p),
            diagnostics: diag,
        }
    }

    /// Newtonian solve with an arbitrary reduced right-hand side.
    pub fn solve_stokes_rhs(&self, mu: f64, load: &[f64], opts: &SolverOptions) -> Result<CellSolution> {
        opts.validate()?;
        self.check_anchor()?;
        let law = ViscosityLaw::Newtonian { mu };
        law.validate()?;
        let visc = Viscosity::new(law);
        let n = self.layout.n_velocity_free();
        let rho = vec![opts.penalty_factor * mu; self.layout.n_triangles];
        let out = self.newton(&visc, load, vec![0.0; n], vec![0.0; self.layout.n_pressure()], &rho, opts.newton_rtol, opts)?;
        Ok(self.finish([0.0, 0.0], law, out, Diagnostics::empty()))
    }

    /// Darcy cell problem `−μΔwʲ + ∇πʲ = e_j`, assembled in strain form.
    pub fn solve_linear(&self, mu: f64, j: usize, opts: &SolverOptions) -> Result<CellSolution> {
        if j > 1 {
            return Err(Error::InvalidOptions(format!("axis index {j} must be 0 or 1")));
        }
        let mut xi = [0.0; 2];
        xi[j] = 1.0;
        let mut sol = self.solve_stokes_rhs(mu, &self.load(xi), opts)?;
        sol.xi = xi;
        Ok(sol)
    }

    pub fn solve_nonlinear(&self, law: &ViscosityLaw, xi: [f64; 2], opts: &SolverOptions) -> Result<CellSolution> {
        law.validate()?;
        opts.validate()?;
        let n = self.layout.n_velocity_free();
        let np = self.layout.n_pressure();
        if xi == [0.0, 0.0] {
            return Ok(CellSolution {
                xi,
                law: *law,
                velocity: DiscreteField::zero_velocity(self.layout),
                pressure: DiscreteField::zero_pressure(self.layout),
                diagnostics: Diagnostics::empty(),
            });
        }
        if !(xi[0].is_finite() && xi[1].is_finite()) {
            return Err(Error::InvalidOptions(format!("driving force {xi:?} is not finite")));
        }
        self.check_anchor()?;
        let load = self.load(xi);
        match *law {
            ViscosityLaw::Newtonian { mu } => {
                let visc = Viscosity::new(ViscosityLaw::Newtonian { mu });
                let rho = vec![opts.penalty_factor * mu; self.layout.n_triangles];
                let out = self.newton(&visc, &load, vec![0.0; n], vec![0.0; np], &rho, opts.newton_rtol, opts)?;
                Ok(self.finish(xi, *law, out, Diagnostics::empty()))
            }
            ViscosityLaw::PowerLaw { mu, r } if r == 2.0 => {
                let visc = Viscosity::new(ViscosityLaw::Newtonian { mu });
                let rho = vec![opts.penalty_factor * mu; self.layout.n_triangles];
                let out = self.newton(&visc, &load, vec![0.0; n], vec![0.0; np], &rho, opts.newton_rtol, opts)?;
                Ok(self.finish(xi, *law, out, Diagnostics::empty()))
            }
            ViscosityLaw::PowerLaw { mu, r } => self.solve_power_law(law, mu, r, xi, &load, opts),
            ViscosityLaw::Carreau { eta0, .. } => self.solve_carreau(law, eta0, xi, &load, opts),
        }
    }

    fn newtonian_guess(&self, mu: f64, load: &[f64], opts: &SolverOptions) -> Result<NewtonOutcome> {
        let visc = Viscosity::new(ViscosityLaw::Newtonian { mu });
        let rho = vec![opts.penalty_factor * mu; self.layout.n_triangles];
        let n = self.layout.n_velocity_free();
        self.newton(&visc, load, vec![0.0; n], vec![0.0; self.layout.n_pressure()], &rho, 1e-8, opts)
    }

    fn solve_power_law(
        &self,
        law: &ViscosityLaw,
        mu: f64,
        r: f64,
        xi: [f64; 2],
        load: &[f64],
        opts: &SolverOptions,
    ) -> Result<CellSolution> {
        // a Newtonian solve sets the strain scale t with μ t^{r-1} matching the forcing
        let lin = self.newtonian_guess(1.0, load, opts)?;
        let t1 = self.rms_strain(&lin.u);
        if !(t1 > 0.0) {
            return Err(Error::DegenerateBase("Newtonian start has zero strain".into()));
        }
        let t = (t1 / mu).powf(1.0 / (r - 1.0));
        let nu = mu * t.powf(r - 2.0);
        let mut u: Vec<f64> = lin.u.iter().map(|v| v / nu).collect();
        let mut p = lin.p;

        let floor = t * opts.eps_floor;
        let mut eps = t * opts.eps_start;
        let mut diag = Diagnostics::empty();
        loop {
            let last = eps <= floor * (1.0 + 1e-12);
            let eps_here = if last { floor } else { eps };
            let visc = Viscosity::regularized(*law, eps_here);
            let rho = self.penalties(&visc, &u, opts);
            let rtol = if last { opts.newton_rtol } else { opts.newton_rtol.max(1e-6) };
            let out = self.newton(&visc, load, u, p, &rho, rtol, opts).map_err(|e| match e {
                Error::NonConvergence(m) => Error::NonConvergence(format!("power law at eps = {eps_here:.3e}: {m}")),
                other => other,
            })?;
            diag.epsilon = eps_here;
            if last {
                return Ok(self.finish(xi, *law, out, diag));
            }
            diag.newton_iterations += out.report.residuals.len().saturating_sub(1);
            diag.stages.push(out.report);
            u = out.u;
            p = out.p;
            eps *= opts.eps_factor;
        }
    }

    fn solve_carreau(
        &self,
        law: &ViscosityLaw,
        eta0: f64,
        xi: [f64; 2],
        load: &[f64],
        opts: &SolverOptions,
    ) -> Result<CellSolution> {
        let visc = Viscosity::new(*law);
        let lin = self.newtonian_guess(eta0, load, opts)?;
        let rho = self.penalties(&visc, &lin.u, opts);
        match self.newton(&visc, load, lin.u.clone(), lin.p.clone(), &rho, opts.newton_rtol, opts) {
            Ok(out) => return Ok(self.finish(xi, *law, out, Diagnostics::empty())),
            Err(Error::NonConvergence(_)) => {}
            Err(e) => return Err(e),
        }
        // continuation in the forcing magnitude
        let mut last_err = None;
        for steps in [4usize, 16] {
            let mut u = lin.u.iter().map(|v| v / steps as f64).collect::<Vec<_>>();
            let mut p = lin.p.iter().map(|v| v / steps as f64).collect::<Vec<_>>();
            let mut diag = Diagnostics::empty();
            let mut failed = false;
            for k in 1..=steps {
                let s = k as f64 / steps as f64;
                let lk: Vec<f64> = load.iter().map(|v| v * s).collect();
                let rho = self.penalties(&visc, &u, opts);
                let rtol = if k == steps { opts.newton_rtol } else { opts.newton_rtol.max(1e-6) };
                match self.newton(&visc, &lk, u.clone(), p.clone(), &rho, rtol, opts) {
                    Ok(out) if k == steps => return Ok(self.finish(xi, *law, out, diag)),
                    Ok(out) => {
                        diag.newton_iterations += out.report.residuals.len().saturating_sub(1);
                        diag.stages.push(out.report);
                        u = out.u;
                        p = out.p;
                    }
                    Err(e @ Error::NonConvergence(_)) => {
                        last_err = Some(e);
                        failed = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if !failed {
                break;
            }
        }
        Err(last_err.unwrap_or_else(|| Error::NonConvergence("Carreau continuation failed".into())))
    }

    /// Linearised problem at `base`: tangent of the stress at the base strain, load `e_j`.
    pub fn solve_derivative(&self, base: &CellSolution, j: usize, opts: &SolverOptions) -> Result<CellSolution> {
        if j > 1 {
            return Err(Error::InvalidOptions(format!("axis index {j} must be 0 or 1")));
        }
        opts.validate()?;
        if base.xi == [0.0, 0.0] {
            return Err(Error::DegenerateBase("base driving force is zero".into()));
        }
        let u_base = base.velocity_free(self.layout);
        if !(self.rms_strain(&u_base) > 0.0) {
            return Err(Error::DegenerateBase("base strain vanishes identically".into()));
        }
        let visc = Viscosity::regularized(base.law, base.diagnostics.epsilon);
        let rho = self.penalties(&visc, &u_base, opts);
        let mut matrix = Vec::new();
        let zero_p = vec![0.0; self.layout.n_pressure()];
        self.internal(&visc, &u_base, &zero_p, &rho, Some(&mut matrix))?;
        let mut ej = [0.0; 2];
        ej[j] = 1.0;
        let load = self.load(ej);
        let fac = self.symmetric.factor(&matrix)?;
        let zero_u = vec![0.0; self.layout.n_velocity_free()];
        let (du, dp, al_iters) = self.saddle_solve(&fac, &load, &zero_u, &rho, opts);
        // residual of the linear system J δu − Bᵀ δp = F
        let ju = self.pattern.matvec(&matrix, &du);
        let bt = divergence_transpose(&self.cache, self.layout, &dp);
        let res: Vec<f64> = load.iter().zip(ju.iter().zip(&bt)).map(|(f, (a, b))| f - a + b).collect();
        let fnorm = norm(&load);
        let full = self.layout.expand(&du);
        let div = self.div_norm_of(&projected_divergence(&self.cache, self.layout, &full));
        let residual = norm(&res) / fnorm;
        if !(residual.is_finite() && residual <= opts.newton_rtol.max(1e-8)) || div > opts.al_tol {
            return Err(Error::LinearSolveFailed(format!(
                "derivative problem residual {residual:.3e}, div norm {div:.3e}"
            )));
        }
        let report = StageReport { epsilon: base.diagnostics.epsilon, residuals: vec![1.0, residual], al_iterations: al_iters };
        let out = NewtonOutcome { u: du, p: dp, report, residual, div_norm: div };
        let mut diag = Diagnostics::empty();
        diag.epsilon = base.diagnostics.epsilon;
        let mut sol = self.finish(ej, base.law, out, diag);
        sol.diagnostics.newton_iterations = 1;
        Ok(sol)
    }

    pub fn integrate(&self, sol: &CellSolution) -> [f64; 2] {
        crate::assembly::integrate_velocity_cached(&self.cache, self.layout, &sol.velocity.coeffs)
    }

    /// Dissipation `∫ 2 η |e(w)|²` of a solution under its own law.
    pub fn dissipation(&self, sol: &CellSolution) -> f64 {
        let visc = Viscosity::regularized(sol.law, sol.diagnostics.epsilon);
        let mut s = 0.0;
        for (t, el) in self.cache.elements.iter().enumerate() {
            let u = crate::assembly::gather(self.layout, &sol.velocity.coeffs, t);
            let e = crate::assembly::element_strains(el, &u);
            for (q, eq) in e.iter().enumerate() {
                let t2 = crate::element::ddot(eq, eq);
                s += el.weights[q] * STRESS_FACTOR * visc.eval(t2).0 * t2;
            }
        }
        s
    }
}

pub fn solve_linear_cell(mesh: &UnitCellMesh, layout: &DofLayout, mu: f64, j: usize) -> Result<CellSolution> {
    CellSolver::new(mesh, layout)?.solve_linear(mu, j, &SolverOptions::default())
}

pub fn solve_nonlinear_cell(
    mesh: &UnitCellMesh,
    layout: &DofLayout,
    law: &ViscosityLaw,
    xi: [f64; 2],
    opts: &SolverOptions,
) -> Result<CellSolution> {
    CellSolver::new(mesh, layout)?.solve_nonlinear(law, xi, opts)
}

pub fn solve_derivative_cell(mesh: &UnitCellMesh, layout: &DofLayout, base: &CellSolution, j: usize) -> Result<CellSolution> {
    CellSolver::new(mesh, layout)?.solve_derivative(base, j, &SolverOptions::default())
}
