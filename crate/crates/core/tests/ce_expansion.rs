use kinetic_closure::ce_expansion::{self, build_moment_matrix, ce_recursion, equilibrium_moment, format_rational};
use kinetic_closure::dispersion::{self, DispersionQuery};
use kinetic_closure::{Complex64, Error};
use num_bigint::BigInt;
use num_rational::BigRational;

fn int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn lambda_star(k: f64, tau: f64) -> f64 {
    dispersion::lambda_star(DispersionQuery::new(k, tau).unwrap()).unwrap().lambda_star
}

#[test]
fn equilibrium_moments() {
    assert_eq!(equilibrium_moment(0).unwrap(), int(1));
    assert_eq!(equilibrium_moment(2).unwrap(), int(1));
    assert_eq!(equilibrium_moment(3).unwrap(), int(0));
    assert_eq!(equilibrium_moment(4).unwrap(), int(3));
    assert_eq!(equilibrium_moment(10).unwrap(), int(945));
    assert!(matches!(equilibrium_moment(-1), Err(Error::Domain(_))));
    assert!(ce_expansion::odd_moments_vanish(41));
}

#[test]
fn moment_matrix_layout() {
    let m = build_moment_matrix(2.0, 0.5, 6).unwrap();
    let z = Complex64::new(0.0, 0.0);
    assert_eq!(m.rows[(0, 0)], z);
    assert_eq!(m.rows[(0, 1)], Complex64::new(0.0, -2.0));
    assert_eq!(m.rows[(1, 0)], z);
    assert_eq!(m.rows[(1, 1)], Complex64::new(-2.0, 0.0));
    assert_eq!(m.rows[(2, 0)], Complex64::new(1.0 / 0.5, 0.0));
    assert_eq!(m.rows[(3, 0)], z);
    assert_eq!(m.rows[(4, 0)], Complex64::new(3.0 / 0.5, 0.0));
    assert!(build_moment_matrix(1.0, 0.1, 1).is_err());
}

#[test]
fn exact_terms_through_order_five() {
    let ce = ce_recursion(5).unwrap();
    let shape: Vec<(u32, u32)> = ce.terms.iter().map(|t| (t.tau_power, t.k_power)).collect();
    assert_eq!(shape, [(1, 2), (3, 4), (5, 6)]);
    assert_eq!(ce.terms[0].coeff, int(-1));
    assert_eq!(ce.terms[1].coeff, int(1));
    assert_eq!(ce.terms[2].coeff, int(-4));
    assert_eq!(format_rational(&ce.terms[2].coeff), "-4");
    assert_eq!(ce.truncated(3).len(), 2);
    assert_eq!(ce.truncated(1).len(), 1);
}

#[test]
fn moment_coefficients_at_first_row() {
    let ce = ce_recursion(5).unwrap();
    let k = 1.7;
    let m11 = ce.moment(1, 1, k).unwrap();
    assert_eq!(m11, Complex64::new(0.0, -k));
    assert_eq!(ce.moment(1, 2, k).unwrap(), Complex64::new(0.0, 0.0));
    // m_{1,3} in exact arithmetic is i k^3.
    let m13 = ce.moment(1, 3, k).unwrap();
    assert!((m13 - Complex64::new(0.0, k * k * k)).norm() < 1e-14);
    assert!(ce.moment_coefficient(40, 0).is_none());
}

#[test]
fn matches_series_at_orders_one_three_five() {
    let ce = ce_recursion(5).unwrap();
    for (k, tau) in [(1.0, 0.1), (2.0, 0.05), (7.0, 0.01)] {
        let q = DispersionQuery::new(k, tau).unwrap();
        for order in [1u32, 3, 5] {
            let terms: f64 = ce
                .truncated(order)
                .iter()
                .map(|t| num_traits::ToPrimitive::to_f64(&t.coeff).unwrap() * k.powi(t.k_power as i32) * tau.powi(t.tau_power as i32))
                .sum();
            let s = dispersion::lambda_series(q, order).unwrap();
            assert!((terms - s).abs() <= 1e-15 * s.abs(), "k = {k}, tau = {tau}, order {order}");
        }
    }
}

#[test]
fn matches_buermann_route_at_order_seven() {
    let ce = ce_recursion(7).unwrap();
    let b = dispersion::buermann_coefficients(9).unwrap();
    for t in &ce.terms {
        let p = t.tau_power as usize;
        assert_eq!(t.coeff, b.lambda_rational[p], "tau^{p}");
    }
    assert_eq!(ce.terms[3].coeff, int(27));
    assert!(matches!(ce_recursion(8), Err(Error::Resource(_))));
}

/// Coefficient of `s^6` in `lambda* tau` from the root solve, by Richardson
/// extrapolation in `s = k tau`.
#[test]
fn root_solve_confirms_order_five_coefficient() {
    let tau = 1.0;
    let f = |s: f64| (lambda_star(s / tau, tau) * tau + s * s - s.powi(4)) / s.powi(6);
    let (a, b) = (f(0.01), f(0.02));
    let c6 = (4.0 * a - b) / 3.0;
    assert!((c6 + 4.0).abs() < 1e-4, "{c6}");
    let c8 = (a + 4.0) / (0.01f64 * 0.01);
    assert!((c8 - 27.0).abs() < 0.5, "{c8}");
}

/// The first omitted term is `27 k^8 tau^7`; the ratio of the difference to
/// `k^8 tau^7` stays below 28 for `k tau <= 0.05`.
#[test]
fn small_tau_agreement_constant() {
    let ce = ce_recursion(5).unwrap();
    let mut worst = 0.0f64;
    for k in [1.0, 3.0, 10.0] {
        for s in [0.05, 0.03, 0.02, 0.01] {
            let tau = s / k;
            let d = (ce.evaluate(k, tau) - lambda_star(k, tau)).abs();
            let c = d / (k.powi(8) * tau.powi(7));
            worst = worst.max(c);
        }
    }
    println!("fitted small-tau constant: {worst:.4}");
    assert!(worst <= 28.0, "{worst}");
    assert!(worst >= 26.0);
}
