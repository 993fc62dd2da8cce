mod common;

use std::f64::consts::PI;

use common::{c, gauss_sum_direct, rng, simpson, theta_direct};
use lll_core::lattice::hexagonal_gamma;
use lll_core::specfun::*;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::Rng;

fn pol() -> TruncationPolicy {
    TruncationPolicy::default()
}

#[test]
fn theta_vanishes_at_origin() {
    assert!(theta(c(0.0, 0.0), C64::i(), &pol()).unwrap().norm() < 1e-12);
}

#[test]
fn theta_antiperiodic_under_unit_shift() {
    let z = c(0.3, 0.2);
    let a = theta(z + 1.0, C64::i(), &pol()).unwrap();
    let b = theta(z, C64::i(), &pol()).unwrap();
    assert!((a + b).norm() < 1e-13);
}

#[test]
fn theta_matches_long_direct_sum() {
    let z = c(0.3, 0.2);
    let v = theta(z, C64::i(), &pol()).unwrap();
    let oracle = theta_direct(z, C64::i(), 200);
    assert!((v - oracle).norm() < 1e-13, "{v} vs {oracle}");
    let r = theta(z, C64::i(), &TruncationPolicy::reference()).unwrap();
    assert!((v - r).norm() < 1e-13);
}

#[test]
fn theta_matches_direct_sum_at_hexagonal_shape() {
    let tau = lll_core::lattice::hexagonal_tau();
    let mut r = rng(1);
    for _ in 0..20 {
        let z = c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let v = theta(z, tau, &pol()).unwrap();
        assert!((v - theta_direct(z, tau, 60)).norm() < 1e-12 * (1.0 + v.norm()));
    }
}

#[test]
fn theta_rejects_lower_half_plane() {
    assert!(theta(c(0.1, 0.0), c(0.0, -1.0), &pol()).is_err());
}

#[test]
fn theta_tail_not_met_for_tiny_imaginary_part() {
    let p = TruncationPolicy::new(1e-14, 8).unwrap();
    assert_eq!(theta(c(0.1, 0.0), c(0.0, 1e-3), &p).unwrap_err().name(), "TailNotMet");
}

#[test]
fn quasi_period_multiplier_at_origin() {
    let m = theta_quasi_period(c(0.0, 0.0), C64::i());
    assert!((m - c(-PI.exp(), 0.0)).norm() < 1e-12 * PI.exp());
}

#[test]
fn quasi_period_matches_two_theta_evaluations() {
    let z = c(0.2, 0.1);
    let tau = C64::i();
    let ratio = theta(z + tau, tau, &pol()).unwrap() / theta(z, tau, &pol()).unwrap();
    let m = theta_quasi_period(z, tau);
    assert!((ratio - m).norm() < 1e-11 * m.norm());
}

#[test]
fn quasi_period_modulus() {
    let tau = c(0.3, 1.2);
    let z = c(0.4, -0.7);
    let m = theta_quasi_period(z, tau);
    let expect = (PI * tau.im + 2.0 * PI * z.im).exp();
    assert!((m.norm() - expect).abs() < 1e-12 * expect);
}

#[test]
fn theta_odd_on_random_points() {
    let mut r = rng(7);
    let tau = C64::i();
    for _ in 0..100 {
        let z = c(r.gen::<f64>(), r.gen::<f64>());
        let s = theta(z, tau, &pol()).unwrap() + theta(-z, tau, &pol()).unwrap();
        assert!(s.norm() < 1e-12);
    }
}

#[test]
fn theta_zero_set_is_the_lattice() {
    for tau in [C64::i(), lll_core::lattice::hexagonal_tau()] {
        for m in -2..=2 {
            for n in -2..=2 {
                let z = m as f64 + n as f64 * tau;
                let v = theta(z, tau, &pol()).unwrap();
                assert!(v.norm() < 1e-10, "theta({z}) = {v}");
            }
        }
    }
}

#[test]
fn odd_order_sums_vanish_exactly() {
    for order in [1, 3, 5] {
        for parity in [Parity::All, Parity::Odd] {
            assert_eq!(gauss_sum(order, 1.7, parity, &pol()).unwrap(), 0.0);
        }
    }
}

#[test]
fn zeroth_sum_unrolled() {
    let g = 2.2;
    let q = (-PI * PI / (g * g)).exp();
    let expect = 1.0 + 2.0 * q + 2.0 * q.powi(4) + 2.0 * q.powi(9) + 2.0 * q.powi(16) + 2.0 * q.powi(25);
    assert!((gauss_sum(0, g, Parity::All, &pol()).unwrap() - expect).abs() < 1e-14);
}

#[test]
fn sums_match_wide_direct_sums() {
    let g = hexagonal_gamma();
    for order in [0, 2, 4] {
        for (parity, odd) in [(Parity::All, false), (Parity::Odd, true)] {
            let v = gauss_sum(order, g, parity, &pol()).unwrap();
            let oracle = gauss_sum_direct(order, g, odd, 50);
            assert!((v - oracle).abs() < 1e-14 * oracle.abs().max(1.0), "order {order}: {v} vs {oracle}");
        }
    }
}

#[test]
fn ell_at_origin_is_zeroth_sum() {
    let g = 1.9;
    let l = symbol_ell(0.0, g, 0, &pol()).unwrap();
    assert!((l - gauss_sum(0, g, Parity::All, &pol()).unwrap()).abs() < 1e-15);
}

#[test]
fn ell_symmetric_about_half() {
    let g = 2.3;
    let a = symbol_ell(0.3, g, 0, &pol()).unwrap();
    let b = symbol_ell(0.7, g, 0, &pol()).unwrap();
    assert!((a - b).abs() < 1e-14);
}

#[test]
fn ell_first_derivative_by_finite_difference() {
    let g = hexagonal_gamma();
    let h = 1e-5;
    let fd = (symbol_ell(0.2 + h, g, 0, &pol()).unwrap() - symbol_ell(0.2 - h, g, 0, &pol()).unwrap()) / (2.0 * h);
    assert!((symbol_ell(0.2, g, 1, &pol()).unwrap() - fd).abs() < 1e-7);
}

#[test]
fn even_and_odd_parts_add_up() {
    let g = hexagonal_gamma();
    for d in 0..=4 {
        let s = symbol_g(0.37, g, d, &pol()).unwrap() + symbol_h(0.37, g, d, &pol()).unwrap();
        let l = symbol_ell(0.37, g, d, &pol()).unwrap();
        assert!((s - l).abs() < 1e-13 * l.abs().max(1.0));
    }
}

#[test]
fn odd_series_at_origin() {
    let g = hexagonal_gamma();
    let q = (-PI * PI / (g * g)).exp();
    assert!((q - 0.0658).abs() < 5e-5);
    let expect = 2.0 * q + 2.0 * q.powi(9) + 2.0 * q.powi(25);
    assert!((symbol_h(0.0, g, 0, &pol()).unwrap() - expect).abs() < 1e-15);
}

#[test]
fn odd_series_vanishes_at_quarter() {
    for g in [1.0, hexagonal_gamma(), 3.0] {
        assert!(symbol_h(0.25, g, 0, &pol()).unwrap().abs() < 1e-13);
    }
}

#[test]
fn derivatives_agree_with_finite_differences() {
    let g = hexagonal_gamma();
    let h = 1e-5;
    let mut r = rng(11);
    for _ in 0..20 {
        let xi = r.gen_range(0.02..0.98);
        for series in [CosineSeries::Ell, CosineSeries::Odd, CosineSeries::Even] {
            for d in 1..=4 {
                let fd = (series.eval(xi + h, g, d - 1, &pol()).unwrap() - series.eval(xi - h, g, d - 1, &pol()).unwrap())
                    / (2.0 * h);
                let v = series.eval(xi, g, d, &pol()).unwrap();
                let scale = v.abs().max(series.eval(xi, g, d - 1, &pol()).unwrap().abs()).max(1.0);
                assert!((v - fd).abs() < 1e-6 * scale, "{series:?} d={d} xi={xi}: {v} vs {fd}");
            }
        }
    }
}

#[test]
fn odd_derivatives_vanish_at_origin() {
    let g = hexagonal_gamma();
    for d in [1, 3] {
        assert_eq!(symbol_ell(0.0, g, d, &pol()).unwrap(), 0.0);
    }
}

#[test]
fn drop_matches_difference_away_from_origin() {
    let g = 2.0;
    for xi in [0.1, 0.33, 0.5] {
        let d = CosineSeries::Ell.drop_from_origin(xi, g, &pol()).unwrap();
        let diff = symbol_ell(0.0, g, 0, &pol()).unwrap() - symbol_ell(xi, g, 0, &pol()).unwrap();
        assert!((d - diff).abs() < 1e-14);
    }
    // near the origin the drop keeps full relative accuracy
    let xi = 1e-7;
    let w1 = (-PI * PI / (g * g)).exp();
    let leading = 4.0 * w1 * (PI * xi).sin().powi(2);
    let d = CosineSeries::Ell.drop_from_origin(xi, g, &pol()).unwrap();
    assert!(d > leading && d < 1.01 * leading * (1.0 + 4.0 * w1.powi(3)));
}

#[test]
fn hexagonal_sign_condition() {
    let g = hexagonal_gamma();
    let l = symbol_ell(0.0, g, 0, &pol()).unwrap();
    let h = symbol_h(0.0, g, 0, &pol()).unwrap();
    assert!(l > 2.0 * h && h > 0.0);
}

#[test]
fn poisson_residuals() {
    assert!(poisson_residual(PI, c(0.0, 0.0), &pol()).unwrap() < 1e-12);
    let g = hexagonal_gamma();
    assert!(poisson_residual(g * g, c(0.5, 0.0), &pol()).unwrap() < 1e-12);
    let a = poisson_residual(2.0, c(0.1, 0.0), &pol()).unwrap();
    let b = poisson_residual(2.0, c(1.1, 0.0), &pol()).unwrap();
    assert!((a - b).abs() < 1e-13);
}

#[test]
fn poisson_residual_rejects_nonpositive_alpha() {
    assert!(poisson_residual(0.0, c(0.0, 0.0), &pol()).is_err());
}

#[test]
fn gaussian_integral_closed_forms() {
    assert!((gaussian_integral(1.0, 0.0) - PI.sqrt()).abs() < 1e-15);
    assert!((gaussian_integral(2.0, 0.0) - (PI / 2.0).sqrt()).abs() < 1e-15);
}

#[test]
fn gaussian_integral_against_adaptive_quadrature() {
    let g = hexagonal_gamma();
    let b = -2.0 * PI / g * 2.0;
    let f = |y: f64| (-4.0 * y * y + b * y).exp();
    let q = simpson(&f, -12.0, 12.0, 1e-13);
    let v = gaussian_integral(4.0, b);
    assert!((q - v).abs() < 1e-12 * v, "{q} vs {v}");
}

#[test]
fn policy_validation() {
    assert!(TruncationPolicy::new(0.0, 10).is_err());
    assert!(TruncationPolicy::new(1e-10, 0).is_err());
    assert!(TruncationPolicy::new(1e-10, 1).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn theta_unit_shift_property(x in -1.0f64..1.0, y in -0.8f64..0.8, t in 0.5f64..2.0) {
        let tau = c(0.0, t);
        let z = c(x, y);
        let a = theta(z + 1.0, tau, &pol()).unwrap();
        let b = theta(z, tau, &pol()).unwrap();
        prop_assert!((a + b).norm() < 1e-12 * (1.0 + b.norm()));
    }

    #[test]
    fn theta_tau_shift_property(x in -0.5f64..0.5, y in -0.3f64..0.3) {
        let tau = lll_core::lattice::hexagonal_tau();
        let z = c(x, y);
        let lhs = theta(z + tau, tau, &pol()).unwrap();
        let rhs = theta_quasi_period(z, tau) * theta(z, tau, &pol()).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-11 * (1.0 + rhs.norm()));
    }

    #[test]
    fn ell_is_even_about_origin(xi in 0.0f64..1.0, g in 1.0f64..3.5) {
        let a = symbol_ell(xi, g, 0, &pol()).unwrap();
        let b = symbol_ell(1.0 - xi, g, 0, &pol()).unwrap();
        prop_assert!((a - b).abs() < 1e-13);
    }
}
