use stochclifford::calculus::{coordinate, fueter_product, fueter_variable, squared_norm, CliffordField};
use stochclifford::ito::{
    classical_ito_residual, clifford_ito_residual, ito_integral_adapted, ito_scaling, monogenic_reduction_residual,
    write_scaling_csv, Autonomous, Covariation, DzConvention, ItoOptions,
};
use stochclifford::process::{ensemble_moments, sample_bm_indexed, PathConfig};
use stochclifford::Error;

#[test]
fn regrouping_holds_on_many_paths() {
    let cfg = PathConfig::standard(2, 1.0, 200, 31).unwrap();
    let fields: Vec<Box<dyn CliffordField>> = vec![
        Box::new(fueter_product(2, &[1, 2]).unwrap()),
        Box::new(fueter_product(2, &[1, 1, 2]).unwrap()),
        Box::new(squared_norm(2).unwrap()),
        Box::new(coordinate(2, 0).unwrap()),
    ];
    for i in 0..20 {
        let p = sample_bm_indexed(&cfg, i);
        for f in &fields {
            for opts in [ItoOptions::default(), ItoOptions::brownian()] {
                let r = clifford_ito_residual(f.as_ref(), &p, &opts).unwrap();
                assert!(r.regrouping_gap <= 1e-10, "{}: {}", f.label(), r.regrouping_gap);
            }
        }
    }
}

#[test]
fn increment_products_make_quadratics_exact_and_cubics_small() {
    let cfg = PathConfig::standard(2, 1.0, 1000, 8).unwrap();
    let p = sample_bm_indexed(&cfg, 0);
    let quad = fueter_product(2, &[1, 2]).unwrap();
    let r = clifford_ito_residual(&quad, &p, &ItoOptions::default()).unwrap();
    assert!(r.report.residual_norm < 1e-10, "{}", r.report.residual_norm);
    let cubic = fueter_product(2, &[1, 1, 2]).unwrap();
    let r = clifford_ito_residual(&cubic, &p, &ItoOptions::default()).unwrap();
    assert!(r.report.residual_norm < 0.1, "{}", r.report.residual_norm);
}

#[test]
fn classical_formula_residual_shrinks_on_average() {
    let f = Autonomous(fueter_product(2, &[1, 1, 2]).unwrap());
    let mut rms = Vec::new();
    for n in [100, 1000] {
        let cfg = PathConfig::standard(2, 1.0, n, 12).unwrap();
        let m = ensemble_moments(&cfg, 100, 1, |p, out| {
            out[0] = classical_ito_residual(&f, p, Covariation::IncrementProducts)?.residual_norm.powi(2);
            Ok(true)
        })
        .unwrap();
        rms.push(m.mean(0).sqrt());
    }
    assert!(rms[1] < 0.5 * rms[0], "{rms:?}");
}

#[test]
fn scaling_slope_is_one_half_in_brownian_mode() {
    let f = fueter_product(2, &[1, 2]).unwrap();
    let base = PathConfig::standard(2, 1.0, 10, 4).unwrap();
    let rows = ito_scaling(&f, &base, &[100, 400, 1600], 200, &ItoOptions::brownian()).unwrap();
    let slope = rows.last().unwrap().slope_so_far.unwrap();
    assert!((0.35..=0.65).contains(&slope), "{rows:?}");
    let mut buf = Vec::new();
    write_scaling_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("n_steps,dt,rms_residual,slope_so_far\n100,"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn reduction_agrees_with_full_formula_for_monogenic_fields() {
    let cfg = PathConfig::standard(2, 1.0, 500, 6).unwrap();
    let opts = ItoOptions::brownian();
    for ks in [&[1][..], &[1, 2], &[1, 1, 2]] {
        let f = fueter_product(2, ks).unwrap();
        for i in 0..5 {
            let p = sample_bm_indexed(&cfg, i);
            let full = clifford_ito_residual(&f, &p, &opts).unwrap().report;
            let red = monogenic_reduction_residual(&f, &p, &opts, 1e-8).unwrap();
            assert!((&full.rhs - &red.rhs).norm() <= 1e-10, "{ks:?}");
            assert!((full.residual_norm - red.residual_norm).abs() <= 1e-10);
        }
    }
    let p = sample_bm_indexed(&cfg, 0);
    assert!(matches!(
        monogenic_reduction_residual(&coordinate(2, 0).unwrap(), &p, &opts, 1e-8),
        Err(Error::NotMonogenic { .. })
    ));
}

#[test]
fn plus_convention_breaks_the_identity_for_z1() {
    let cfg = PathConfig::standard(2, 1.0, 100, 2).unwrap();
    let p = sample_bm_indexed(&cfg, 0);
    let z1 = fueter_variable(2, 1).unwrap();
    let minus = clifford_ito_residual(&z1, &p, &ItoOptions::default()).unwrap();
    let plus = clifford_ito_residual(
        &z1,
        &p,
        &ItoOptions {
            dz: DzConvention::Plus,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(minus.report.residual_norm < 1e-12);
    assert!(plus.report.residual_norm > 1e-3);
}

#[test]
fn adapted_integral_of_b_against_b_matches_ito_identity() {
    // int_0^1 B dB = (B_1^2 - [B]_1) / 2 exactly on the grid.
    let cfg = PathConfig::standard(1, 1.0, 500, 9).unwrap();
    let p = sample_bm_indexed(&cfg, 3);
    let int = ito_integral_adapted(&p, 0, |pre| stochclifford::Multivector::scalar(1, pre.last_row()[0])).unwrap();
    let qv = stochclifford::process::quadratic_covariation(&p, 0, 0).unwrap();
    let b1 = p.component(500, 0);
    assert!((int.sc() - 0.5 * (b1 * b1 - qv[500])).abs() < 1e-12);
}
