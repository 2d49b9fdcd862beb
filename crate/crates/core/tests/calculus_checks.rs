use stochclifford::algebra::{Multivector, ParaVector};
use stochclifford::calculus::{
    cr_apply, cr_apply_with, fixture_registry, fueter_product, fueter_variable, mean_value_check, monogenicity_check,
    monogenicity_check_with, partial, sample_box_points, squared_norm, CliffordField, Stencil,
};
use stochclifford::stats::ols_slope;

#[test]
fn central_difference_error_shrinks_like_h_squared() {
    let x = ParaVector::from_slice(&[0.3, -0.7, 0.4]).unwrap();
    let hs = [1e-1, 1e-2, 1e-3];
    // Pairs whose third derivative along x_i is non-zero; elsewhere the
    // central difference is exact for cubics.
    for (ks, i) in [(&[1, 1, 1][..], 0), (&[1, 1, 1], 1), (&[2, 2, 2], 2), (&[1, 1, 2], 0)] {
        let f = fueter_product(2, ks).unwrap();
        let exact = f.partial(&x, i).unwrap();
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| (&partial(&f, &x, i, &Stencil::central(h)).unwrap() - &exact).norm())
            .collect();
        let slope = ols_slope(&hs.map(f64::ln), &errs.iter().map(|e| e.ln()).collect::<Vec<_>>()).unwrap();
        assert!((1.8..=2.2).contains(&slope), "{ks:?} along x{i}: slope {slope}, errors {errs:?}");
    }
}

#[test]
fn fueter_variables_are_monogenic_up_to_dim_4() {
    for dim in 1..=4 {
        let pts = sample_box_points(dim, -1.0, 1.0, 100, 7).unwrap();
        for k in 1..=dim {
            let z = fueter_variable(dim, k).unwrap();
            let r = monogenicity_check_with(&z, &pts, &Stencil::central(1e-3), 1e-8).unwrap();
            assert!(r.passed, "z{k} in Cl({dim}): {}", r.max_residual);
        }
    }
}

#[test]
fn symmetrized_products_are_left_and_right_monogenic() {
    let pts = sample_box_points(3, -1.0, 1.0, 100, 8).unwrap();
    for ks in [&[1, 1][..], &[1, 2], &[2, 3], &[1, 1, 2], &[1, 2, 3], &[3, 3, 3]] {
        let f = fueter_product(3, ks).unwrap();
        let left = monogenicity_check(&f, &pts, 1e-3, 1e-6).unwrap();
        let right = monogenicity_check_with(&f, &pts, &Stencil::new(1e-3).right(), 1e-6).unwrap();
        assert!(left.passed && right.passed, "{ks:?}: {left:?} {right:?}");
    }
}

#[test]
fn registry_flags_match_a_fresh_check() {
    let pts = sample_box_points(3, -1.0, 1.0, 50, 9).unwrap();
    for entry in fixture_registry() {
        let f = (entry.build)(3).unwrap();
        let r = monogenicity_check(f.as_ref(), &pts, 1e-3, 1e-6).unwrap();
        assert_eq!(r.passed, entry.monogenic, "{}: {}", entry.name, r.max_residual);
    }
}

#[test]
fn non_monogenic_controls_have_the_expected_derivative() {
    let x = ParaVector::from_slice(&[0.2, 0.1, -0.4]).unwrap();
    let abs2 = squared_norm(2).unwrap();
    // D |x|^2 = 2 x0 + 2 sum x_k e_k
    let expect = Multivector::from_coeffs(2, vec![0.4, 0.2, -0.8, 0.0]).unwrap();
    assert!((&cr_apply(&abs2, &x, 1e-3).unwrap() - &expect).norm() < 1e-12);
    let fd = cr_apply_with(&abs2, &x, &Stencil::central(1e-3)).unwrap();
    assert!((&fd - &expect).norm() < 1e-9);
}

#[test]
fn sphere_average_reproduces_centre_value() {
    let center = ParaVector::from_slice(&[0.1, -0.2, 0.3]).unwrap();
    for f in [
        Box::new(fueter_variable(2, 1).unwrap()) as Box<dyn CliffordField>,
        Box::new(fueter_product(2, &[1, 2]).unwrap()),
    ] {
        let r = mean_value_check(f.as_ref(), &center, 0.5, 20_000, 3).unwrap();
        assert!(r.within_sigma(4.0), "{}: gap {}", f.label(), r.gap);
    }
    // |x|^2 averages to |c|^2 + r^2 on the sphere, so the check must fail.
    let r = mean_value_check(&squared_norm(2).unwrap(), &center, 0.5, 20_000, 3).unwrap();
    let shifted = Multivector::scalar(2, center.norm_sq() + 0.25);
    assert!(r.sphere_avg.within_sigma(&shifted, 4.0));
    assert!(!r.within_sigma(4.0));
}
