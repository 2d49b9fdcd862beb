use std::f64::consts::PI;
use std::sync::Arc;

use stochclifford::algebra::{Multivector, ParaVector};
use stochclifford::calculus::{fueter_product, fueter_variable, CliffordField};
use stochclifford::dirichlet::{
    cone_hitting_probability, liouville_experiment, solve_dirichlet, survival_closed_form, wos_walk, BoundaryData,
    ConeExperiment, Domain, LiouvilleConfig, WosParams,
};
use stochclifford::rng::substream;
use stochclifford::stats::chunked_moments;

fn pv(c: &[f64]) -> ParaVector {
    ParaVector::from_slice(c).unwrap()
}

#[test]
fn exit_points_from_centre_are_uniform_on_the_sphere() {
    // Exit distribution from the centre is uniform: E[y] = 0, E[y_i^2] = 1/3 in R^3.
    let ball = Domain::ball(ParaVector::zeros(2), 1.0).unwrap();
    let m = chunked_moments(30_000, 6, |i, out| {
        let s = wos_walk(&ball, &ParaVector::zeros(2), 1e-4, 100, &mut substream(4, i as u64)).unwrap();
        for c in 0..3 {
            out[c] = s.point.get(c);
            out[3 + c] = s.point.get(c).powi(2);
        }
    });
    for c in 0..3 {
        assert!(m.mean(c).abs() <= 3.0 * m.stderr(c));
        assert!((m.mean(3 + c) - 1.0 / 3.0).abs() <= 3.0 * m.stderr(3 + c));
    }
}

#[test]
fn monogenic_data_is_reproduced_inside_ball_and_box() {
    let z1: Arc<dyn CliffordField> = Arc::new(fueter_variable(2, 1).unwrap());
    let z12: Arc<dyn CliffordField> = Arc::new(fueter_product(2, &[1, 2]).unwrap());
    let ball = Domain::ball(pv(&[0.5, 0.0, 0.0]), 1.0).unwrap();
    let cube = Domain::boxed(pv(&[-1.0; 3]), pv(&[1.0; 3])).unwrap();
    let pts = [pv(&[0.4, 0.2, -0.1]), pv(&[0.9, -0.3, 0.3])];
    for domain in [&ball, &cube] {
        for f in [&z1, &z12] {
            let data = BoundaryData::from_field(f.clone());
            let est = solve_dirichlet(domain, &data, &pts, 20_000, &WosParams::default(), 21).unwrap();
            for e in &est {
                let exact = f.eval(&e.point);
                assert!(e.value.within_sigma(&exact, 4.0), "{}: {:?} vs {exact:?}", f.label(), e.value);
                assert_eq!(e.censored, 0);
            }
        }
    }
}

#[test]
fn stderr_halves_when_walks_quadruple() {
    let ball = Domain::ball(ParaVector::zeros(2), 1.0).unwrap();
    let data = BoundaryData::from_fn(2, |y| Multivector::scalar(2, y.get(1)));
    let pts = [pv(&[0.1, 0.2, 0.3])];
    let a = solve_dirichlet(&ball, &data, &pts, 4000, &WosParams::default(), 1).unwrap();
    let b = solve_dirichlet(&ball, &data, &pts, 16_000, &WosParams::default(), 1).unwrap();
    let ratio = b[0].value.stderr[0] / a[0].value.stderr[0];
    assert!((0.4..=0.6).contains(&ratio), "{ratio}");
}

#[test]
fn half_space_estimates_with_censoring() {
    // y_0 restricted to the plane y_0 = 1 is the constant 1.
    let hs = Domain::half_space(pv(&[1.0, 0.0, 0.0]), 1.0).unwrap();
    let data = BoundaryData::from_fn(2, |y| Multivector::scalar(2, y.get(0)));
    let params = WosParams {
        max_steps: 200,
        ..Default::default()
    };
    let est = solve_dirichlet(&hs, &data, &[pv(&[0.5, 0.0, 0.0])], 2000, &params, 3).unwrap();
    assert!((est[0].value.mean.sc() - 1.0).abs() < 1e-3);
    assert!(est[0].censored < 2000);
}

#[test]
fn wedge_hitting_probabilities_follow_the_harmonic_measure_series() {
    // In the plane, the complement of a quarter cone is a wedge of angle 3 pi / 2.
    // Starting on its bisector at radius r in the unit disc, the chance of
    // reaching the arc first is (4/pi) sum_{m odd} (-1)^{(m-1)/2} r^{2m/3} / m.
    let series = |r: f64| {
        (0..200)
            .map(|j| {
                let m = (2 * j + 1) as f64;
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * r.powf(2.0 * m / 3.0) / m
            })
            .sum::<f64>()
            * 4.0
            / PI
    };
    let mut e = ConeExperiment::new(1, PI / 2.0, 1.0, 1, 2000, 17);
    e.dt_factor = 1e-4;
    let r = cone_hitting_probability(&e).unwrap();
    let exact = series(e.start_radius());
    // Discrete monitoring misses some cone entries, so the estimate sits at or above the series.
    assert!(r.probability.mean > exact - 3.0 * r.probability.stderr, "{r:?} vs {exact}");
    assert!(r.probability.mean < exact + 0.05, "{r:?} vs {exact}");
}

#[test]
fn survival_matches_closed_form_and_bias_without_bridge() {
    let mut cfg = LiouvilleConfig::new(1.0, vec![1.0, 4.0], 20_000, 5);
    let rows = liouville_experiment(&cfg).unwrap();
    for r in &rows {
        assert!(r.survival.z_score(r.closed_form).abs() <= 3.0, "{r:?}");
        assert_eq!(r.closed_form, survival_closed_form(1.0, r.t));
    }
    cfg.bridge_correction = false;
    cfg.steps_per_unit = 4;
    let coarse = liouville_experiment(&cfg).unwrap();
    // Without the bridge kill, coarse monitoring overstates survival.
    assert!(coarse[0].survival.mean > coarse[0].closed_form + 3.0 * coarse[0].survival.stderr);
}
