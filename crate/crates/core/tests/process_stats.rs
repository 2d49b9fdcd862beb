use stochclifford::algebra::ParaVector;
use stochclifford::process::{
    compensated_square, drifted, ensemble_moments, first_hit_index, identity_process, mart_norm_estimate,
    martingale_test, martingale_test_streamed, norm_sq_minus_nt, quadratic_covariation, reflect_path, sample_bm,
    sample_bm_indexed, sample_ensemble, square_minus_t, PathConfig, TestFunctional,
};
use stochclifford::stats::{ks_two_sample, normal_cdf, try_chunked_moments};

#[test]
fn single_step_is_one_standard_gaussian_draw() {
    let cfg = PathConfig::standard(2, 1.0, 1, 11).unwrap();
    let p = sample_bm(&cfg);
    assert_eq!(p.n_steps(), 1);
    assert_eq!(p.row(0), &[0.0, 0.0, 0.0]);
    assert_eq!(p, sample_bm(&cfg));
    assert_ne!(p.row(1), sample_bm(&cfg.with_seed(12)).row(1));
}

#[test]
fn terminal_variance_lies_in_band() {
    let cfg = PathConfig::standard(2, 1.0, 4, 2024).unwrap();
    let m = ensemble_moments(&cfg, 100_000, 3, |p, out| {
        out.copy_from_slice(p.row(4));
        Ok(true)
    })
    .unwrap();
    for c in 0..3 {
        assert!(m.mean(c).abs() <= 3.0 * m.stderr(c), "mean {c}: {}", m.mean(c));
        assert!((0.97..=1.03).contains(&m.variance(c)), "variance {c}: {}", m.variance(c));
    }
}

#[test]
fn increments_on_disjoint_intervals_are_uncorrelated() {
    let cfg = PathConfig::standard(1, 1.0, 10, 5).unwrap();
    let n = 20_000;
    // Products of increments over [0, 0.5] and [0.5, 1], within and across components.
    let m = ensemble_moments(&cfg, n, 4, |p, out| {
        let a: Vec<f64> = (0..2).map(|c| p.component(5, c) - p.component(0, c)).collect();
        let b: Vec<f64> = (0..2).map(|c| p.component(10, c) - p.component(5, c)).collect();
        out[0] = a[0] * b[0];
        out[1] = a[1] * b[1];
        out[2] = a[0] * b[1];
        out[3] = a[0] * a[1];
        Ok(true)
    })
    .unwrap();
    for c in 0..4 {
        assert!(m.mean(c).abs() <= 3.0 * m.stderr(c), "product {c}: {} +- {}", m.mean(c), m.stderr(c));
    }
}

#[test]
fn quadratic_covariation_error_decreases_with_grid() {
    let mut rms = Vec::new();
    for n_steps in [100, 1000, 10_000] {
        let cfg = PathConfig::standard(1, 1.0, n_steps, 77).unwrap();
        let m = ensemble_moments(&cfg, 200, 2, |p, out| {
            let qv = quadratic_covariation(p, 0, 0)?;
            let cross = quadratic_covariation(p, 0, 1)?;
            out[0] = (qv[n_steps] - 1.0).powi(2);
            out[1] = cross[n_steps].powi(2);
            Ok(true)
        })
        .unwrap();
        rms.push((m.mean(0).sqrt(), m.mean(1).sqrt()));
    }
    assert!(rms.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1), "{rms:?}");
    // Variance of the sum of n squared Gaussian increments is 2/n.
    assert!((rms[2].0 - (2e-4f64).sqrt()).abs() < 0.3 * (2e-4f64).sqrt(), "{rms:?}");
}

#[test]
fn covariation_mean_at_unit_time_is_kronecker_delta() {
    let cfg = PathConfig::standard(1, 1.0, 1000, 3).unwrap();
    let m = ensemble_moments(&cfg, 2000, 3, |p, out| {
        out[0] = *quadratic_covariation(p, 0, 0)?.last().unwrap();
        out[1] = *quadratic_covariation(p, 1, 1)?.last().unwrap();
        out[2] = *quadratic_covariation(p, 0, 1)?.last().unwrap();
        Ok(true)
    })
    .unwrap();
    assert!((m.mean(0) - 1.0).abs() <= 3.0 * m.stderr(0));
    assert!((m.mean(1) - 1.0).abs() <= 3.0 * m.stderr(1));
    assert!(m.mean(2).abs() <= 3.0 * m.stderr(2));
}

#[test]
fn martingale_suite_on_stored_and_streamed_ensembles() {
    let cfg = PathConfig::standard(2, 1.0, 20, 99).unwrap();
    let paths = sample_ensemble(&cfg, 20_000);
    let g = TestFunctional::defaults();
    let bm = martingale_test(&paths, 0.5, 1.0, &identity_process, &g).unwrap();
    assert!(bm.passed, "{:?}", bm.failures().collect::<Vec<_>>());
    let streamed = martingale_test_streamed(&cfg, 20_000, 0.5, 1.0, &identity_process, &g).unwrap();
    assert_eq!(bm, streamed);

    let comp = martingale_test(&paths, 0.5, 1.0, &compensated_square, &g).unwrap();
    assert!(comp.passed, "{:?}", comp.failures().collect::<Vec<_>>());
    let norm = martingale_test(&paths, 0.5, 1.0, &norm_sq_minus_nt, &g).unwrap();
    assert!(norm.passed, "{:?}", norm.failures().collect::<Vec<_>>());

    // With e_j^2 = -1 the scalar part of B^2 - t drifts by -n t.
    let sq = martingale_test(&paths, 0.5, 1.0, &square_minus_t, &g).unwrap();
    let one_scalar = sq.entries.iter().find(|e| e.functional == "one" && e.blade == 0).unwrap();
    assert!(!sq.passed);
    assert!((one_scalar.mean + 2.0 * 0.5).abs() <= 4.0 * one_scalar.stderr, "{one_scalar:?}");

    let drift = martingale_test(&paths, 0.5, 1.0, &drifted, &[TestFunctional::One]).unwrap();
    let e1 = drift.entries.iter().find(|e| e.blade == 1).unwrap();
    assert!(!drift.passed && !e1.passed);
    assert!((e1.mean - 0.5).abs() <= 4.0 * e1.stderr);
}

#[test]
fn reflected_terminal_law_matches_unreflected() {
    let cfg = PathConfig::standard(1, 1.0, 200, 401).unwrap();
    let other = cfg.with_seed(402);
    let n = 4000;
    let reflected: Vec<f64> = (0..n)
        .map(|i| {
            let p = sample_bm_indexed(&cfg, i);
            let (stop, _) = first_hit_index(&p, |row| row[0] >= 0.3);
            reflect_path(&p, stop).unwrap().row(200)[0]
        })
        .collect();
    let plain: Vec<f64> = (0..n).map(|i| sample_bm_indexed(&other, i).row(200)[0]).collect();
    let ks = ks_two_sample(&reflected, &plain).unwrap();
    assert!(ks.p_value > 1e-3, "{ks:?}");
}

#[test]
fn hitting_probability_matches_reflection_formula() {
    // The scalar component alone is a standard BM from 0 on [0, 4]:
    // P(max >= 1) = 2 (1 - Phi(1/2)).
    let cfg = PathConfig::standard(1, 4.0, 4000, 8).unwrap();
    let m = try_chunked_moments(10_000, 1, |i, out| {
        let p = sample_bm_indexed(&cfg, i as u64);
        let (_, reason) = first_hit_index(&p, |row| row[0] >= 1.0);
        out[0] = if reason == stochclifford::process::StopReason::BoundaryHit { 1.0 } else { 0.0 };
        Ok(true)
    })
    .unwrap();
    let exact = 2.0 * (1.0 - normal_cdf(0.5));
    assert!((m.mean(0) - exact).abs() <= 3.0 * m.stderr(0), "{} vs {exact}", m.mean(0));
}

#[test]
fn sup_norm_is_bracketed_and_grows_with_horizon() {
    let mut last = 0.0;
    for t_max in [0.5, 1.0, 2.0] {
        let cfg = PathConfig::standard(1, t_max, 500, 13).unwrap();
        let paths = sample_ensemble(&cfg, 4000);
        let est = mart_norm_estimate(&paths).unwrap();
        // Doob: E|B_t|^2 = 2t <= E[sup_{s<=t} |B_s|^2] <= 8t, up to sampling noise
        assert!(est * est >= 0.95 * 2.0 * t_max && est * est <= 8.0 * t_max, "t {t_max}: {est}");
        assert!(est > last);
        last = est;
    }
}

#[test]
fn csv_round_trip_has_header_and_rows() {
    let cfg = PathConfig::new(1, ParaVector::from_slice(&[1.0, 2.0]).unwrap(), 1.0, 3, 1).unwrap();
    let mut buf = Vec::new();
    sample_bm(&cfg).write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x_0,x_1");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,1,2"));
}
