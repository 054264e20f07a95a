mod common;

use std::f64::consts::PI;

use homfilt::conjugate::{analyze_g, conjugate_G, lipschitz_estimate};
use homfilt::geometry::GeometrySpec;
use homfilt::permeability::{growth_bounds, sweep_with, Sampling, SweepOptions, SweepResult};
use homfilt::solver::SolverOptions;
use homfilt::viscosity::ViscosityLaw;

use common::{geom1, geom2, Cell};

const R: f64 = 1.5;
const POWER: ViscosityLaw = ViscosityLaw::PowerLaw { mu: 1.0, r: R };

fn extended(cell: &Cell, sampling: Sampling) -> SweepResult {
    let opts = SweepOptions { extend: true, ..SweepOptions::default() };
    sweep_with(&cell.solver(), &POWER, sampling, &opts, &SolverOptions::default()).unwrap()
}

#[test]
fn sampled_g_is_homogeneous() {
    let sw = extended(geom1(), Sampling::Grid { n: 2, m: 8 });
    let (inner, outer) = sw.samples.split_at(32);
    for (a, b) in inner.iter().zip(outer) {
        assert!((b.xi[0] - 2.0 * a.xi[0]).abs() < 1e-15);
        let ga = conjugate_G(a.u, R);
        let gb = conjugate_G(b.u, R);
        let n = gb[0].hypot(gb[1]);
        assert!((gb[0] - 2.0 * ga[0]).hypot(gb[1] - 2.0 * ga[1]) <= 1e-4 * n);
    }
}

#[test]
fn straight_channel_g_is_linear() {
    let cell = Cell::new(GeometrySpec::StraightChannel { delta: 0.4 }, 1000);
    let sw = extended(&cell, Sampling::Circle { m: 8 });
    let g = analyze_g(&sw, 0).unwrap();
    println!("straight channel: A = {:.6e}, Delta = {:.3e}", g.a, g.delta);
    assert!(g.delta <= 1e-3);
    assert!(g.a > 0.0);
}

#[test]
fn lipschitz_constant_is_capped() {
    let sw = extended(geom1(), Sampling::Grid { n: 2, m: 8 });
    let (_, hi) = growth_bounds(&sw.samples, R).unwrap();
    let lip = lipschitz_estimate(&sw.samples, R);
    // |G(ξ)| ≤ M^{r−1} |ξ| with M the sampled growth bound
    let bound = hi.powf(R - 1.0);
    println!("Lipschitz estimate {lip:.4e}, growth-derived bound {bound:.4e}");
    assert!(lip.is_finite() && lip > 0.0);
    assert!(lip <= 10.0 * bound);
}

#[test]
fn gap_curve_is_antisymmetric() {
    let sw = extended(geom2(), Sampling::Circle { m: 8 });
    let mut full = sw.clone();
    full.samples = sw.with_opposites();
    let a = analyze_g(&full, 0).unwrap();
    let b = analyze_g(&sw, 0).unwrap();
    assert!((a.a - b.a).abs() <= 1e-12 * b.a.abs());
    assert!((a.delta - b.delta).abs() <= 1e-12);
    assert_eq!(a.samples.len(), 64);
    let (first, second) = a.samples.split_at(32);
    for (p, q) in first.iter().zip(second) {
        assert!((q.angle - p.angle - PI).abs() < 1e-12);
        assert!((q.gap + p.gap).abs() <= 1e-14);
    }
    assert!(a.samples.windows(2).all(|w| w[0].angle <= w[1].angle));
}

#[test]
fn second_component_follows_by_symmetry() {
    let sw = extended(geom2(), Sampling::Circle { m: 8 });
    let g1 = analyze_g(&sw, 0).unwrap();
    let g2 = analyze_g(&sw, 1).unwrap();
    assert_eq!(g2.component, 2);
    // the solved diagonal sample carries the small asymmetry of the mesh
    assert!((g1.a - g2.a).abs() <= 1e-5 * g1.a);
    assert!((g1.delta - g2.delta).abs() <= 1e-5 * g1.delta);
    assert!(analyze_g(&sw, 2).is_err());
}

#[test]
fn analysis_file_layout() {
    let sw = extended(geom1(), Sampling::Circle { m: 2 });
    let g = analyze_g(&sw, 0).unwrap();
    let v = serde_json::to_value(&g).unwrap();
    for key in ["component", "A", "Delta", "samples"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    for key in ["angle", "xi", "G", "fit", "gap"] {
        assert!(v["samples"][0].get(key).is_some(), "{key}");
    }
    let mut csv = Vec::new();
    homfilt::io::write_analysis_csv(&mut csv, &g).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "angle,xi_x,xi_y,G,fit,gap");
    assert_eq!(text.lines().count(), 1 + g.samples.len());
}
