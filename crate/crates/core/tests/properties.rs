use proptest::prelude::*;
use solitons_core::em_coupling::{solve_phi_c, solve_phi_infty};
use solitons_core::functionals::{evaluate, scaling_path, ScalingPolynomial};
use solitons_core::params::admissible;
use solitons_core::{Params, RadialField, RadialGrid};

fn grid() -> RadialGrid {
    RadialGrid::new(400, 15.0).unwrap()
}

// sum of two gaussian bumps, strictly positive and decaying
fn bumps() -> impl Strategy<Value = RadialField> {
    (0.1..3.0f64, 0.2..2.0f64, 0.0..1.5f64, 0.3..3.0f64, 0.0..4.0f64).prop_map(
        |(a1, b1, a2, b2, r2)| {
            RadialField::from_fn(grid(), move |r| {
                a1 * (-b1 * r * r).exp() + a2 * (-b2 * (r - r2) * (r - r2)).exp()
            })
        },
    )
}

fn relativistic() -> impl Strategy<Value = Params> {
    (0.3..3.0f64, 0.3..3.0f64, 0.01..5.0f64, 1.05..30.0f64, 2.05..5.95f64).prop_map(
        |(m, mu, q, k, p)| Params::nmkg(m, mu, q, k * (mu / m).sqrt(), p),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn screened_potential_stays_in_bracket(u in bumps(), params in relativistic(), amp in 0.1..200.0f64) {
        let u = u.scale(amp);
        let phi = solve_phi_c(&u, &params).unwrap().phi;
        let floor = params.potential_floor().unwrap();
        for &v in phi.values() {
            prop_assert!(v <= 0.0 && v >= floor, "{v} outside [{floor}, 0]");
        }
    }

    #[test]
    fn screening_weakens_the_potential(u in bumps(), params in relativistic()) {
        let screened = solve_phi_c(&u, &params).unwrap().phi;
        let bare = solve_phi_c(&u, &params.with_c(None)).unwrap().phi;
        let tol = 1e-12 * bare.max_abs();
        for (s, b) in screened.values().iter().zip(bare.values()) {
            prop_assert!(*s >= b - tol, "{s} < {b}");
        }
    }

    #[test]
    fn coulomb_potential_is_negative_monotone_and_linear_in_q(u in bumps(), q in 0.01..5.0f64) {
        let params = Params::nsp(1.0, 1.0, q, 4.0);
        let phi = solve_phi_infty(&u, &params).phi;
        let v = phi.values();
        prop_assert!(v.iter().all(|&x| x < 0.0));
        let tol = 1e-14 * phi.max_abs();
        prop_assert!(v.windows(2).all(|w| w[1] >= w[0] - tol));
        let doubled = solve_phi_infty(&u, &params.with_q(2.0 * q)).phi;
        for (a, b) in v.iter().zip(doubled.values()) {
            prop_assert!((2.0 * a - b).abs() <= 1e-13 * b.abs());
        }
    }

    #[test]
    fn energy_identity_holds_off_shell(u in bumps(), params in relativistic(), positive in any::<bool>()) {
        for params in [params, params.with_c(None)] {
            let r = evaluate(&u, &params, positive).unwrap();
            let (lhs, rhs) = r.energy_identity(&params);
            let scale = r.scale(&params) + r.terms.power + (params.coupling() * r.terms.coulomb).abs();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn scaling_polynomial_endpoints_and_slope(u in bumps(), t in 0.2..3.0f64, p in 3.05..5.95f64) {
        let params = Params::nsp(1.0, 1.0, 0.5, p);
        let poly = ScalingPolynomial::new(&u, &params);
        prop_assert_eq!(poly.energy(0.0), 0.0);
        prop_assert_eq!(scaling_path(&u, 1.0), u);
        let h = 1e-5 * t;
        let fd = (poly.energy(t + h) - poly.energy(t - h)) / (2.0 * h);
        let d = poly.derivative(t);
        prop_assert!((fd - d).abs() <= 1e-6 * (1.0 + d.abs()), "{fd} vs {d}");
    }

    #[test]
    fn admissibility_matches_the_parameter_box(
        m in -1.0..3.0f64, mu in -1.0..3.0f64, q in -1.0..3.0f64, p in 1.0..7.0f64, c in proptest::option::of(0.0..10.0f64),
    ) {
        let params = Params { m, mu, q, c, p };
        let d = admissible(&params);
        let expected = m > 0.0 && mu > 0.0 && q > 0.0 && p > 2.0 && p < 6.0
            && c.is_none_or(|c| c > (mu / m).sqrt());
        prop_assert_eq!(d.admissible, expected);
        prop_assert_eq!(d.admissible, d.violations.is_empty());
        prop_assert_eq!(params.validate().is_ok(), expected);
        if !(p > 2.0 && p < 6.0) {
            prop_assert!(d.violations.iter().any(|v| v.contains("2 < p < 6")));
        }
    }
}
