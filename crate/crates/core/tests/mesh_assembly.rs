mod common;

use std::f64::consts::PI;

use homfilt::assembly::{assemble_stokes, divergence_norm, integrate_velocity, strain_at_quadrature};
use homfilt::error::Error;
use homfilt::field::DiscreteField;
use homfilt::geometry::{GeometrySpec, Marker};
use homfilt::layout::build_layout;
use homfilt::mesh::{generate_mesh, validate_mesh, UnitCellMesh, PERIODIC_TOL};
use homfilt::viscosity::{Viscosity, ViscosityLaw};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::geom1;

#[test]
fn circle_mesh_matches_target_and_pairs() {
    let mesh = &geom1().mesh;
    let n = mesh.triangles.len() as f64;
    assert!((n / 1000.0 - 1.0).abs() <= 0.3, "{n} triangles");
    let report = validate_mesh(mesh);
    assert!(report.is_valid(), "{:?}", report.violations);
    assert!(report.periodic_mismatch_max <= PERIODIC_TOL);
    assert!(report.min_angle_deg >= 15.0);
    for [i, j] in &mesh.periodic_pairs.left_right {
        assert_eq!(mesh.nodes[*i][0], 0.0);
        assert_eq!(mesh.nodes[*j][0], 1.0);
        assert!((mesh.nodes[*i][1] - mesh.nodes[*j][1]).abs() <= PERIODIC_TOL);
    }
    for [i, j] in &mesh.periodic_pairs.bottom_top {
        assert!((mesh.nodes[*i][0] - mesh.nodes[*j][0]).abs() <= PERIODIC_TOL);
    }
    let spec = GeometrySpec::geom1();
    assert!(mesh.nodes.iter().all(|p| !spec.in_solid(*p, 1e-12)));
}

#[test]
fn periodic_pairing_is_an_involution() {
    let mesh = &geom1().mesh;
    for pairs in [&mesh.periodic_pairs.left_right, &mesh.periodic_pairs.bottom_top] {
        let forward: std::collections::HashMap<usize, usize> = pairs.iter().map(|[a, b]| (*a, *b)).collect();
        let backward: std::collections::HashMap<usize, usize> = pairs.iter().map(|[a, b]| (*b, *a)).collect();
        assert_eq!(forward.len(), pairs.len());
        assert_eq!(backward.len(), pairs.len());
        for (a, b) in &forward {
            assert_eq!(backward[b], *a);
        }
    }
}

#[test]
fn area_sum_of_circle_cell() {
    let exact = 1.0 - PI * 0.25 * 0.25;
    assert!((exact - 0.803650).abs() < 1e-6);
    let coarse = generate_mesh(&GeometrySpec::geom1(), 1000).unwrap();
    let fine = generate_mesh(&GeometrySpec::geom1(), 4000).unwrap();
    let e_coarse = (coarse.area() - exact).abs() / exact;
    let e_fine = (fine.area() - exact).abs() / exact;
    assert!(e_coarse <= 1e-3, "{e_coarse}");
    assert!(e_fine < e_coarse);
    let report = validate_mesh(&coarse);
    let summed: f64 = (0..coarse.triangles.len()).map(|t| coarse.signed_area(t)).sum();
    assert!((report.area_sum - summed).abs() <= 1e-10);
}

#[test]
fn refinement_halves_element_diameter() {
    let a = generate_mesh(&GeometrySpec::geom1(), 300).unwrap();
    let b = generate_mesh(&GeometrySpec::geom1(), 1200).unwrap();
    let ratio = a.max_element_diameter() / b.max_element_diameter();
    assert!((1.6..=2.4).contains(&ratio), "{ratio}");
}

#[test]
fn channel_network_faces() {
    let delta = 0.1;
    let mesh = generate_mesh(&GeometrySpec::ChannelNetwork { delta }, 400).unwrap();
    assert!(validate_mesh(&mesh).is_valid());
    for side in [Marker::Left, Marker::Right, Marker::Bottom, Marker::Top] {
        let len: f64 = mesh
            .boundary_edges
            .iter()
            .filter(|e| e.marker == side)
            .map(|e| {
                let (p, q) = (mesh.nodes[e.a], mesh.nodes[e.b]);
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .sum();
        assert!((len - delta).abs() < 1e-12, "{side:?} {len}");
    }
    assert!(!mesh.periodic_pairs.left_right.is_empty());
    assert!(!mesh.periodic_pairs.bottom_top.is_empty());
    // cross shape: the cell corners are solid
    assert!(mesh.nodes.iter().all(|p| (p[0] - 0.5).abs() <= 0.05 + 1e-12 || (p[1] - 0.5).abs() <= 0.05 + 1e-12));
}

#[test]
fn infeasible_and_coarse_requests() {
    assert!(matches!(generate_mesh(&GeometrySpec::Circle { radius: 0.6 }, 1000), Err(Error::InfeasibleGeometry(_))));
    assert!(matches!(generate_mesh(&GeometrySpec::ChannelNetwork { delta: 1.2 }, 400), Err(Error::InfeasibleGeometry(_))));
    assert!(generate_mesh(&GeometrySpec::geom1(), 10).is_err());
}

#[test]
fn inverted_triangle_is_reported() {
    let mut mesh = geom1().mesh.clone();
    mesh.triangles[7].swap(1, 2);
    let report = validate_mesh(&mesh);
    assert!(report.violations.iter().any(|v| v == "negative area at index 7"), "{:?}", report.violations);
}

#[test]
fn layout_counts_and_constraints() {
    let cell = geom1();
    let l = &cell.layout;
    assert_eq!(l.n_pressure(), 3 * cell.mesh.triangles.len());
    for &m in &l.master {
        assert_eq!(l.master[m], m);
    }
    for e in cell.mesh.boundary_edges.iter().filter(|e| e.marker == Marker::Inclusion) {
        assert!(l.dirichlet[e.a] && l.dirichlet[e.b]);
    }
    let mut broken = cell.mesh.clone();
    broken.periodic_pairs.left_right.remove(3);
    assert!(matches!(build_layout(&broken), Err(Error::InconsistentMesh(_))));
}

#[test]
fn strain_and_divergence_examples() {
    let cell = geom1();
    let (mesh, layout) = (&cell.mesh, &cell.layout);
    let rigid = DiscreteField::interpolate_velocity(layout, |_| [1.5, -0.5]);
    assert!(strain_at_quadrature(&rigid, mesh, layout).iter().all(|s| s.norm < 1e-12));
    let stretch = DiscreteField::interpolate_velocity(layout, |x| [x[0], -x[1]]);
    let samples = strain_at_quadrature(&stretch, mesh, layout);
    assert!(samples.iter().all(|s| (s.norm - 2f64.sqrt()).abs() < 1e-12));
    let wsum: f64 = samples.iter().map(|s| s.weight).sum();
    assert!((wsum - mesh.area()).abs() < 1e-12);
    let shear = DiscreteField::interpolate_velocity(layout, |x| [x[1], 0.0]);
    assert!(strain_at_quadrature(&shear, mesh, layout).iter().all(|s| (s.norm - 0.5f64.sqrt()).abs() < 1e-12));

    assert_eq!(divergence_norm(&DiscreteField::zero_velocity(layout), mesh, layout), 0.0);
    let expand = DiscreteField::interpolate_velocity(layout, |x| [x[0], 0.0]);
    assert!((divergence_norm(&expand, mesh, layout) - mesh.area().sqrt()).abs() < 1e-10);
    let c = integrate_velocity(&rigid, mesh, layout);
    assert!((c[0] - 1.5 * mesh.area()).abs() < 1e-12 && (c[1] + 0.5 * mesh.area()).abs() < 1e-12);
}

fn random_state(layout: &homfilt::layout::DofLayout, rng: &mut ChaCha8Rng, amp: f64) -> Vec<f64> {
    (0..layout.n_velocity_free()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn newtonian_zero_state_residual_is_load() {
    let cell = geom1();
    let (mesh, layout) = (&cell.mesh, &cell.layout);
    let visc = Viscosity::new(ViscosityLaw::Newtonian { mu: 1.0 });
    let zero = DiscreteField::zero_velocity(layout);
    let p = DiscreteField::zero_pressure(layout);
    let (_, _, residual) = assemble_stokes(mesh, layout, &visc, [1.0, 0.0], 1e3, &zero, &p).unwrap();
    let (_, _, unloaded) = assemble_stokes(mesh, layout, &visc, [0.0, 0.0], 1e3, &zero, &p).unwrap();
    assert!(unloaded.iter().all(|v| *v == 0.0));
    assert!(residual.iter().skip(1).step_by(2).all(|v| *v == 0.0));
    let total: f64 = residual.iter().step_by(2).sum();
    assert!(total > 0.0);
}

#[test]
fn unregularized_power_law_is_singular_at_rest() {
    let cell = geom1();
    let (mesh, layout) = (&cell.mesh, &cell.layout);
    let visc = Viscosity::new(ViscosityLaw::PowerLaw { mu: 1.0, r: 1.5 });
    let zero = DiscreteField::zero_velocity(layout);
    let p = DiscreteField::zero_pressure(layout);
    let out = assemble_stokes(mesh, layout, &visc, [1.0, 0.0], 1e3, &zero, &p);
    assert!(matches!(out, Err(Error::SingularViscosity(_))));
}

#[test]
fn carreau_tangent_is_symmetric_positive_definite() {
    let cell = geom1();
    let (mesh, layout) = (&cell.mesh, &cell.layout);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let visc = Viscosity::new(ViscosityLaw::Carreau { eta0: 1.0, eta_inf: 0.0, lambda: 100.0, r: 1.5 });
    let u = DiscreteField::from_free(layout, &random_state(layout, &mut rng, 0.05));
    let p = DiscreteField::zero_pressure(layout);
    let (pattern, matrix, _) = assemble_stokes(mesh, layout, &visc, [1.0, 0.0], 1e3, &u, &p).unwrap();
    assert!(pattern.max_asymmetry(&matrix) <= 1e-10);
    for _ in 0..100 {
        let x = random_state(layout, &mut rng, 1.0);
        let mx = pattern.matvec(&matrix, &x);
        let q: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
        assert!(q > 0.0);
    }
}

#[test]
fn tangent_matches_residual_differences() {
    let cell = geom1();
    let (mesh, layout) = (&cell.mesh, &cell.layout);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = DiscreteField::pressure((0..layout.n_pressure()).map(|_| rng.gen_range(-0.1..0.1)).collect());
    let laws = [
        Viscosity::new(ViscosityLaw::Carreau { eta0: 1.0, eta_inf: 0.1, lambda: 10.0, r: 1.5 }),
        Viscosity::regularized(ViscosityLaw::PowerLaw { mu: 1.0, r: 1.5 }, 1e-2),
    ];
    for visc in laws {
        let u0 = random_state(layout, &mut rng, 0.05);
        let dir = random_state(layout, &mut rng, 1.0);
        let at = |s: f64| {
            let v: Vec<f64> = u0.iter().zip(&dir).map(|(a, d)| a + s * d).collect();
            assemble_stokes(mesh, layout, &visc, [0.3, 0.7], 1e3, &DiscreteField::from_free(layout, &v), &p).unwrap()
        };
        let h = 1e-6;
        let (pattern, matrix, _) = at(0.0);
        let (_, _, plus) = at(h);
        let (_, _, minus) = at(-h);
        let jd = pattern.matvec(&matrix, &dir);
        let fd: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| -(a - b) / (2.0 * h)).collect();
        let diff = jd.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let size = jd.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(diff / size <= 1e-5, "{}", diff / size);
    }
}

#[test]
fn mesh_file_round_trip() {
    let mesh = &geom1().mesh;
    let json = mesh.to_json().unwrap();
    let back = UnitCellMesh::from_json(&json).unwrap();
    assert_eq!(&back, mesh);
    assert_eq!(back.provenance_hash(), mesh.provenance_hash());
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["nodes", "triangles", "boundary_edges", "periodic_pairs", "geometry"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(v["periodic_pairs"].get("left_right").is_some());
}
