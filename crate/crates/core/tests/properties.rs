mod common;

use std::f64::consts::PI;

use homfilt::conjugate::{fit_slope, relative_distance, signed_power};
use homfilt::geometry::GeometrySpec;
use homfilt::io::{read_sweep_csv, write_sweep_csv};
use homfilt::mesh::{generate_mesh, validate_mesh};
use homfilt::oracles::{theta_mean, theta_mean_closed_form};
use homfilt::permeability::{
    check_monotonicity, permeability_with, DarcyTensor, PermeabilitySample, SampleDiagnostics, SampleStatus, Sampling, SweepResult,
};
use homfilt::solver::SolverOptions;
use homfilt::taylor::{taylor_eval, CarreauParams, TaylorTensors};
use homfilt::viscosity::ViscosityLaw;
use proptest::prelude::*;

use common::{coarse, rel, scale};

fn sample(xi: [f64; 2], u: [f64; 2]) -> PermeabilitySample {
    PermeabilitySample {
        xi,
        u,
        law: ViscosityLaw::PowerLaw { mu: 1.0, r: 1.5 },
        diagnostics: SampleDiagnostics { newton_iterations: 3, div_norm: 1e-12, residual: 1e-11, epsilon: 1e-9 },
        status: SampleStatus::Solved,
    }
}

fn tensors(k: [f64; 4], h: Vec<f64>, t1: Vec<f64>, t2: Vec<f64>) -> TaylorTensors {
    let mut h4 = [[[[0.0; 2]; 2]; 2]; 2];
    for (i, v) in h4.iter_mut().flatten().flatten().flatten().enumerate() {
        *v = h[i];
    }
    let mut a = [[[[[[0.0; 2]; 2]; 2]; 2]; 2]; 2];
    let mut b = a;
    for (i, v) in a.iter_mut().flatten().flatten().flatten().flatten().flatten().enumerate() {
        *v = t1[i];
    }
    for (i, v) in b.iter_mut().flatten().flatten().flatten().flatten().flatten().enumerate() {
        *v = t2[i];
    }
    let kt = [[k[0], k[1]], [k[2], k[3]]];
    TaylorTensors {
        k: DarcyTensor { k: kt, energy: kt, mu: 1.0, mesh_hash: "synthetic".into() },
        h4,
        h6_term1: Some(a),
        h6_term2: Some(b),
        law: CarreauParams { eta0: 1.0, eta_inf: 0.0, lambda: 3.0, r: 1.5 },
    }
}

fn direction(a: f64) -> [f64; 2] {
    [a.cos(), a.sin()]
}

proptest! {
    #[test]
    fn truncated_expansions_are_odd(
        k in prop::array::uniform4(-1.0..1.0f64),
        h in prop::collection::vec(-1.0..1.0f64, 16),
        t1 in prop::collection::vec(-1.0..1.0f64, 64),
        t2 in prop::collection::vec(-1.0..1.0f64, 64),
        xi in prop::array::uniform2(-2.0..2.0f64),
    ) {
        let t = tensors(k, h, t1, t2);
        for order in [1, 3, 5] {
            let a = taylor_eval(&t, xi, order).unwrap();
            let b = taylor_eval(&t, [-xi[0], -xi[1]], order).unwrap();
            prop_assert_eq!(a, [-b[0], -b[1]]);
        }
        prop_assert_eq!(taylor_eval(&t, [0.0, 0.0], 5).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn signed_power_is_homogeneous_and_invertible(u in -10.0..10.0f64, l in -5.0..5.0f64, r in 1.1..2.0f64) {
        let rp = r / (r - 1.0);
        let lhs = signed_power(l * u, r);
        let rhs = signed_power(l, r) * signed_power(u, r);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        prop_assert!((signed_power(signed_power(u, rp), r) - u).abs() <= 1e-12 * (1.0 + u.abs()));
        prop_assert_eq!(signed_power(-u, r), -signed_power(u, r));
    }

    #[test]
    fn exact_conjugate_linearity_is_detected(c in 0.05..5.0f64, offset in 0.0..PI, m in 3usize..20, r in 1.2..1.9f64) {
        let rp = r / (r - 1.0);
        let samples: Vec<_> = (0..m)
            .map(|j| {
                let xi = direction(offset + j as f64 * PI / m as f64);
                sample(xi, [signed_power(c * xi[0], rp), signed_power(c * xi[1], rp)])
            })
            .collect();
        for i in 0..2 {
            let a = fit_slope(&samples, i, r).unwrap();
            prop_assert!((a - c).abs() <= 1e-10 * c);
            prop_assert!(relative_distance(&samples, a, i, r).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn spd_linear_samples_are_monotone(a in 0.1..2.0f64, d in 0.1..2.0f64, b in -1.0..1.0f64, n in 2usize..12) {
        let b = b * (a * d).sqrt() * 0.99;
        let samples: Vec<_> = (0..n)
            .map(|j| {
                let xi = scale(1.0 + j as f64 * 0.1, direction(j as f64 * 0.7));
                sample(xi, [a * xi[0] + b * xi[1], b * xi[0] + d * xi[1]])
            })
            .collect();
        let report = check_monotonicity(&samples).unwrap();
        prop_assert!(report.holds());
        prop_assert_eq!(report.pairs, n * (n - 1) / 2);
    }

    #[test]
    fn sweep_files_round_trip(values in prop::collection::vec(prop::array::uniform4(-1e3..1e3f64), 1..20)) {
        let samples: Vec<_> = values.iter().map(|v| sample([v[0], v[1]], [v[2], v[3] * 1e-9])).collect();
        let sweep = SweepResult {
            samples,
            sampling: Sampling::Grid { n: 3, m: 2 },
            law: ViscosityLaw::Carreau { eta0: 1.0, eta_inf: 0.1, lambda: 7.0, r: 1.3 },
            mesh_hash: "feed".into(),
            geometry: Some(GeometrySpec::geom2()),
            symmetry_check: None,
        };
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &sweep).unwrap();
        let back = read_sweep_csv(&buf[..]).unwrap();
        let mut expect = sweep.clone();
        for s in &mut expect.samples {
            s.law = sweep.law;
        }
        prop_assert_eq!(&back, &expect);
        let mut again = Vec::new();
        write_sweep_csv(&mut again, &back).unwrap();
        prop_assert_eq!(buf, again);
    }

    #[test]
    fn theta_mean_matches_closed_form(r in 1.1..2.0f64, mu in 0.1..10.0f64) {
        prop_assert!((theta_mean(r, mu) - theta_mean_closed_form(r, mu)).abs() <= 1e-10);
    }

    #[test]
    fn stress_is_strictly_monotone(t in 1e-3..10.0f64, s in 1e-3..10.0f64, lambda in 1e-3..100.0f64, r in 1.1..2.0f64) {
        prop_assume!((t - s).abs() > 1e-9);
        for law in [ViscosityLaw::PowerLaw { mu: 1.0, r }, ViscosityLaw::Carreau { eta0: 1.0, eta_inf: 0.0, lambda, r }] {
            let stress = |x: f64| law.eval(x * x, 0.0).0 * x;
            prop_assert!((stress(t) - stress(s)) * (t - s) > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn circle_meshes_satisfy_invariants(radius in 0.1..0.35f64) {
        let spec = GeometrySpec::Circle { radius };
        let mesh = generate_mesh(&spec, 600).unwrap();
        let report = validate_mesh(&mesh);
        prop_assert!(report.is_valid());
        prop_assert!((mesh.area() - spec.fluid_area()).abs() <= 5e-3 * spec.fluid_area());
        let left: Vec<f64> = mesh.periodic_pairs.left_right.iter().map(|p| mesh.nodes[p[0]][1]).collect();
        let right: Vec<f64> = mesh.periodic_pairs.left_right.iter().map(|p| mesh.nodes[p[1]][1]).collect();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn power_law_is_odd_and_homogeneous(angle in 0.0..2.0 * PI, size in 0.2..3.0f64, l in prop::sample::select(vec![0.5, 2.0, -3.0])) {
        let s = coarse().solver();
        let opts = SolverOptions::default();
        let law = ViscosityLaw::PowerLaw { mu: 1.0, r: 1.5 };
        let xi = scale(size, direction(angle));
        let u = permeability_with(&s, &law, xi, &opts).unwrap().u;
        let v = permeability_with(&s, &law, scale(-1.0, xi), &opts).unwrap().u;
        prop_assert!(rel(scale(-1.0, v), u) <= 1e-6);
        let w = permeability_with(&s, &law, scale(l, xi), &opts).unwrap().u;
        prop_assert!(rel(w, scale(signed_power(l, 3.0), u)) <= 1e-4);
    }
}
