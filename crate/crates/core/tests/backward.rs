mod common;

use common::{random_hermitian, random_hpd, random_spec, rng};
use nlme_core::backward::{
    backward_error_from_scalars, backward_error_theta, power_difference_bound_check, ResidualScalars,
};
use nlme_core::experiments::{example2_data, example2_iterates, example2_reference, EXAMPLE2_P};
use nlme_core::linalg::{spectral_norm, HpdMatrix};
use nlme_core::solver::{solve, SolveOptions};

#[test]
fn certifies_example_iterates() {
    let (a, q) = example2_data();
    let reference = example2_reference(1e-14).unwrap();
    let iterates = example2_iterates(7).unwrap();
    let mut last_bound = f64::INFINITY;
    for xk in &iterates[4..=7] {
        let rep = backward_error_from_scalars(&ResidualScalars::from_general(xk, &a, &q, EXAMPLE2_P).unwrap());
        assert!(rep.applicable);
        let err = spectral_norm(&(xk - &reference));
        assert!(err <= rep.bound, "{err:e} > {:e}", rep.bound);
        assert!(rep.bound <= rep.legacy_nu_bound);
        assert!(rep.bound < last_bound);
        last_bound = rep.bound;
    }
}

#[test]
fn certifies_perturbed_solutions_of_random_specs() {
    let mut r = rng(20);
    let mut applicable = 0;
    for i in 0..20 {
        let p = 0.1 + 0.85 * (i as f64 / 19.0);
        let spec = random_spec(3, p, 0.3 + 0.05 * (i % 10) as f64, 0.8, 2.0, &mut r);
        let rep = solve(&spec, SolveOptions::with_tol(1e-14)).unwrap();
        assert!(rep.converged());
        let e = random_hermitian(3, &mut r);
        let e = e.scale(10f64.powi(-3 - (i % 4)) / e.spectral_norm());
        let xt = HpdMatrix::new(rep.x.as_hermitian() + &e).unwrap();
        let report = backward_error_theta(&xt, &spec).unwrap();
        if report.applicable {
            applicable += 1;
            let err = spectral_norm(&(xt.as_matrix() - rep.x.as_matrix()));
            assert!(err <= report.bound, "spec {i}: {err:e} > {:e}", report.bound);
        }
    }
    assert!(applicable >= 15, "only {applicable} applicable instances");
}

#[test]
fn power_difference_bound_holds_on_random_instances() {
    let mut r = rng(71);
    for i in 0..100 {
        let n = 2 + i % 3;
        let p = 0.05 + 0.9 * ((i * 37) % 100) as f64 / 100.0;
        let x = random_hpd(n, 0.3, 3.0, &mut r);
        let a = common::random_complex(n, &mut r);
        let dx = random_hermitian(n, &mut r);
        let dx = dx.scale(0.2 * x.lambda_min() * ((i % 7) as f64 + 1.0) / 7.0 / dx.spectral_norm());
        let shifted = HpdMatrix::new(x.as_hermitian() + &dx).unwrap();
        let nu = 1.0 / shifted.lambda_min();
        let (lhs, rhs) = power_difference_bound_check(&x, &dx, &a, p, nu).unwrap();
        assert!(lhs <= rhs * (1.0 + 1e-12), "instance {i}: {lhs:e} > {rhs:e}");
    }
}

#[test]
fn bound_grows_with_residual() {
    let spec = random_spec(3, 0.5, 0.5, 1.0, 2.0, &mut rng(5));
    let x = solve(&spec, SolveOptions::with_tol(1e-14)).unwrap().x;
    let mut last = 0.0;
    for t in [1e-8, 1e-7, 1e-6, 1e-5, 1e-4] {
        let xt = x.scale(1.0 + t);
        let rep = backward_error_theta(&xt, &spec).unwrap();
        assert!(rep.applicable && rep.bound > last);
        last = rep.bound;
    }
}
