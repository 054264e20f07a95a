//! Oracle and property checks run against one mesh.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::GeometrySpec;
use crate::oracles::{mean_omitting_half_power, theta_mean, theta_mean_closed_form, unidirectional_J, ThinChannelModel};
use crate::permeability::{
    check_monotonicity, darcy_with_fields, jacobian_asymmetry, jacobian_with, permeability_with, sweep_with,
    JacobianMethod, Sampling, SweepOptions,
};
use crate::solver::{CellSolver, SolverOptions};
use crate::taylor::loglog_slope;
use crate::viscosity::ViscosityLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    All,
    Oracles,
    Properties,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Upper bound on `value`; `None` for reported quantities.
    pub tolerance: Option<f64>,
    pub passed: bool,
}

impl Check {
    fn bound(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance: Some(tolerance), passed: value <= tolerance }
    }

    fn flag(name: &str, value: f64, passed: bool) -> Self {
        Check { name: name.into(), value, tolerance: None, passed }
    }

    fn info(name: &str, value: f64) -> Self {
        Check { name: name.into(), value, tolerance: None, passed: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub mesh_hash: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = format!("mesh {}\n", self.mesh_hash);
        for c in &self.checks {
            let tol = c.tolerance.map_or("-".to_string(), |t| format!("{t:.1e}"));
            let verdict = if c.passed { "ok" } else { "VIOLATED" };
            s.push_str(&format!("{:<44} {:>12.5e}  tol {:>8}  {}\n", c.name, c.value, tol, verdict));
        }
        s
    }
}

fn rel(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1]) / b[0].hypot(b[1])
}

pub fn oracle_checks(solver: &CellSolver, opts: &SolverOptions) -> Result<Vec<Check>> {
    let r = 1.5;
    let mut out = vec![
        Check::bound("theta mean: quadrature vs closed form", (theta_mean(r, 1.0) - theta_mean_closed_form(r, 1.0)).abs(), 1e-10),
        Check::info("theta mean: form without (1/2)^r' / quadrature", mean_omitting_half_power(r, 1.0) / theta_mean(r, 1.0)),
        Check::bound("J(2) at r = 1.5", (unidirectional_J(2.0, r) - 4.0).abs(), 1e-12),
    ];
    let law = ViscosityLaw::PowerLaw { mu: 1.0, r };
    match solver.mesh.geometry {
        Some(GeometrySpec::StraightChannel { delta }) => {
            let model = ThinChannelModel::for_cell_law(delta, r, 1.0);
            let xs = [0.5, 1.0, 2.0];
            let mut u1 = Vec::new();
            let mut dev: f64 = 0.0;
            for &x in &xs {
                let u = permeability_with(solver, &law, [x, 0.3], opts)?.u;
                dev = dev.max((u[0] - model.predict([x, 0.0])[0]).abs() / u[0].abs());
                u1.push(u[0]);
            }
            let slope = loglog_slope(&xs, &u1)?;
            out.push(Check::bound("straight channel: exponent error", (slope - (model.r_prime - 1.0)).abs() / (model.r_prime - 1.0), 0.02));
            out.push(Check::bound("straight channel: flux vs profile", dev, 1e-2));
        }
        Some(GeometrySpec::ChannelNetwork { delta }) => {
            let model = ThinChannelModel::for_cell_law(delta, r, 1.0);
            let xi = [0.5, 0.75f64.sqrt()];
            let u = permeability_with(solver, &law, xi, opts)?.u;
            out.push(Check::info("channel network: relative error vs thin-channel limit", rel(u, model.predict(xi))));
        }
        _ => {}
    }
    Ok(out)
}

pub fn property_checks(solver: &CellSolver, opts: &SolverOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let (k, _) = darcy_with_fields(solver, 1.0, opts)?;
    out.push(Check::bound("darcy: asymmetry", k.asymmetry(), 1e-8));
    out.push(Check::flag("darcy: smallest eigenvalue", k.eigenvalues()[0], k.is_positive_definite()));
    out.push(Check::bound("darcy: formula consistency", k.consistency(), 1e-6));

    let r = 1.5;
    let rp = r / (r - 1.0);
    let pl = ViscosityLaw::PowerLaw { mu: 1.0, r };
    let xi = [0.8, 0.35];
    let base = permeability_with(solver, &pl, xi, opts)?;
    let neg = permeability_with(solver, &pl, [-xi[0], -xi[1]], opts)?;
    out.push(Check::bound("power law: oddness", rel([-neg.u[0], -neg.u[1]], base.u), 1e-6));
    let mut hom: f64 = 0.0;
    for l in [0.5f64, 2.0, -3.0] {
        let s = permeability_with(solver, &pl, [l * xi[0], l * xi[1]], opts)?;
        let f = l.abs().powf(rp - 2.0) * l;
        hom = hom.max(rel(s.u, [f * base.u[0], f * base.u[1]]));
    }
    out.push(Check::bound("power law: homogeneity", hom, 1e-4));

    let sweep = sweep_with(solver, &pl, Sampling::Circle { m: 8 }, &SweepOptions::default(), opts)?;
    let mono = check_monotonicity(&sweep.samples)?;
    out.push(Check::flag("power law: smallest monotonicity pair", mono.min_value, mono.holds()));
    let energy = sweep.ok_samples().map(|s| s.xi[0] * s.u[0] + s.xi[1] * s.u[1]).fold(f64::INFINITY, f64::min);
    out.push(Check::flag("power law: smallest xi.U", energy, energy > 0.0));

    let jl = jacobian_with(solver, &pl, [1.0, 0.0], JacobianMethod::Linearized, opts)?;
    let jf = jacobian_with(solver, &pl, [1.0, 0.0], JacobianMethod::FiniteDifference, opts)?;
    let jn = jl.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let jd = jl.iter().flatten().zip(jf.iter().flatten()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    out.push(Check::bound("power law: Jacobian asymmetry", jacobian_asymmetry(&jl), 1e-4));
    out.push(Check::bound("power law: Jacobian vs finite differences", jd / jn, 1e-2));

    let carreau = ViscosityLaw::Carreau { eta0: 1.0, eta_inf: 0.0, lambda: 1e-12, r };
    let c = permeability_with(solver, &carreau, [1.0, 0.0], opts)?;
    out.push(Check::bound("carreau: Newtonian limit", rel(c.u, k.apply([1.0, 0.0])), 1e-6));

    let mut div: f64 = 0.0;
    for s in sweep.samples.iter().chain([&base, &neg, &c]) {
        div = div.max(s.diagnostics.div_norm);
    }
    out.push(Check::bound("hygiene: largest div norm", div, 1e-8));
    let histories = [
        solver.solve_nonlinear(&pl, xi, opts)?,
        solver.solve_nonlinear(&ViscosityLaw::Carreau { eta0: 1.0, eta_inf: 0.0, lambda: 100.0, r }, xi, opts)?,
    ];
    let monotone = histories.iter().all(|s| s.diagnostics.monotone());
    out.push(Check::flag("hygiene: residual histories non-increasing", monotone as u8 as f64, monotone));
    Ok(out)
}

pub fn run_suite(solver: &CellSolver, suite: Suite, opts: &SolverOptions) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::All | Suite::Oracles) {
        checks.extend(oracle_checks(solver, opts)?);
    }
    if matches!(suite, Suite::All | Suite::Properties) {
        checks.extend(property_checks(solver, opts)?);
    }
    Ok(SuiteReport { mesh_hash: solver.mesh.provenance_hash(), checks })
}
