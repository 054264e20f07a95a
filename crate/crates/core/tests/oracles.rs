mod common;

use homfilt::geometry::GeometrySpec;
use homfilt::oracles::{mean_omitting_half_power, theta_mean, theta_mean_closed_form, theta_profile, unidirectional_J, ThinChannelModel};
use homfilt::permeability::permeability_with;
use homfilt::solver::SolverOptions;
use homfilt::taylor::loglog_slope;
use homfilt::viscosity::ViscosityLaw;

use common::Cell;

const R: f64 = 1.5;
const POWER: ViscosityLaw = ViscosityLaw::PowerLaw { mu: 1.0, r: R };

#[test]
fn profile_invariants() {
    for (r, mu) in [(1.5, 1.0), (1.2, 0.5), (1.9, 3.0)] {
        let m = ThinChannelModel::new(0.1, r, mu);
        assert_eq!(m.theta(0.5), 0.0);
        assert_eq!(m.theta(-0.5), 0.0);
        for k in 1..50 {
            let z = -0.5 + k as f64 / 50.0;
            assert!(m.theta(z) > 0.0);
            assert_eq!(m.theta(z), m.theta(-z));
        }
        assert!(m.mean > 0.0);
    }
    assert!((theta_profile(0.0, 1.5, 1.0) - 2.0 / 3.0 * 2f64.sqrt() / 8.0).abs() < 1e-15);
    for x in [0.0, 0.3, 2.0, 7.5] {
        assert_eq!(unidirectional_J(-x, R), -unidirectional_J(x, R));
    }
}

#[test]
fn mean_against_hand_integration() {
    for (r, mu) in [(1.5, 1.0), (1.25, 2.0), (1.75, 0.3)] {
        let rp: f64 = r / (r - 1.0);
        // ∫ (1/2)^{r′} − |z|^{r′} dz = r′ (1/2)^{r′} / (r′ + 1), times the profile scale 2/(r′μ)(√2/μ)^{r′−2}
        let hand = 2.0 / mu * (2f64.sqrt() / mu).powf(rp - 2.0) * 0.5f64.powf(rp) / (rp + 1.0);
        assert!((theta_mean(r, mu) - hand).abs() <= 1e-10);
        assert!((theta_mean_closed_form(r, mu) - hand).abs() <= 1e-14);
        let ratio = mean_omitting_half_power(r, mu) / theta_mean(r, mu);
        assert!((ratio - 2f64.powf(rp)).abs() <= 1e-8 * ratio);
    }
    assert!((theta_mean(1.5, 1.0) - 0.0883883).abs() < 1e-7);
    assert!((mean_omitting_half_power(1.5, 1.0) - 0.7071).abs() < 1e-4);
}

#[test]
fn mean_scales_with_viscosity() {
    let rp = R / (R - 1.0);
    for mu in [0.5, 1.0, 4.0] {
        let ratio = theta_mean(R, 2.0 * mu) / theta_mean(R, mu);
        assert!((ratio - 2f64.powf(-(rp - 1.0))).abs() <= 1e-10);
    }
}

#[test]
fn cross_channels_approach_the_thin_limit() {
    let opts = SolverOptions::default();
    let xi = [1.0, 0.0];
    let mut errors = Vec::new();
    for delta in [0.2, 0.1] {
        let cell = Cell::new(GeometrySpec::ChannelNetwork { delta }, 1000);
        let model = ThinChannelModel::for_cell_law(delta, R, 1.0);
        let u = permeability_with(&cell.solver(), &POWER, xi, &opts).unwrap().u;
        let rescaled = u[0] * delta.powf(-(1.0 + model.r_prime));
        let limit = model.rescaled(xi)[0];
        errors.push((rescaled - limit).abs() / limit);
    }
    println!("rescaled relative errors at delta 0.2, 0.1: {errors:?}");
    assert!(errors[1] < errors[0]);
    assert!(errors[1] <= 0.15);
    let rate = (errors[0] / errors[1]).log2();
    assert!(rate >= 1.0 / R, "{rate}");
}

#[test]
fn straight_channel_is_unidirectional() {
    let delta = 0.4;
    let cell = Cell::new(GeometrySpec::StraightChannel { delta }, 1000);
    let s = cell.solver();
    let opts = SolverOptions::default();
    let model = ThinChannelModel::for_cell_law(delta, R, 1.0);
    let xs = [0.5, 1.0, 2.0];
    let mut flux = Vec::new();
    for &x in &xs {
        let u = permeability_with(&s, &POWER, [x, 0.3], &opts).unwrap().u;
        assert!(u[1].abs() <= 1e-8 * u[0].abs());
        let p = model.predict([x, 0.0])[0];
        assert!((u[0] - p).abs() <= 1e-2 * p);
        flux.push(u[0]);
    }
    let slope = loglog_slope(&xs, &flux).unwrap();
    assert!((slope - (model.r_prime - 1.0)).abs() <= 0.02 * (model.r_prime - 1.0), "{slope}");
}
