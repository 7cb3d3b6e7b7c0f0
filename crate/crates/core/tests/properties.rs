use dilute_cw::cumulants::{cumulants_contour, ContourConfig, PressureSource};
use dilute_cw::exact::{exact_cumulants, log_partition_exact, magnetization_pmf};
use dilute_cw::params::{strip_fixed_point_t, strip_halfwidth};
use dilute_cw::saddle::{limit_pressure, limit_saddle, mean_field_magnetization, solve_saddle};
use dilute_cw::{effective_params, validate_params, Precision};
use num_complex::Complex64;
use proptest::prelude::*;

fn beta() -> impl Strategy<Value = f64> {
    0.05..0.95f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classical_case_reduces_exactly(beta in beta(), n in 1i64..100_000) {
        let e = effective_params(&validate_params(n, 1.0, beta, 0.0).unwrap()).unwrap();
        prop_assert_eq!(e.log_a, 0.0);
        prop_assert!((e.beta_eff - beta).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn dilute_effective_beta_is_close(beta in beta(), n in 100i64..10_000, p in 0.2..1.0f64) {
        let e = effective_params(&validate_params(n, p, beta, 0.0).unwrap()).unwrap();
        let indicator = p.powi(3) * (n as f64).powi(2);
        prop_assert!(e.log_a >= 0.0);
        prop_assert!((e.beta_eff - beta).abs() * indicator / beta.powi(3) < 1.0);
    }

    #[test]
    fn fixed_point_t_is_bounded_and_increasing(b1 in beta(), b2 in beta(), frac in 0.0..0.99f64) {
        let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
        prop_assume!(hi - lo > 1e-6);
        let y = frac * strip_halfwidth(hi);
        let t_lo = strip_fixed_point_t(lo, y).unwrap();
        let t_hi = strip_fixed_point_t(hi, y).unwrap();
        prop_assert!(t_hi <= (hi * (1.0 - hi)).sqrt());
        prop_assert!(t_lo <= (lo * (1.0 - lo)).sqrt());
        prop_assert!(t_lo < t_hi);
    }

    #[test]
    fn pmf_is_normalized_and_field_symmetric(
        n in 1i64..80, p in 0.3..1.0f64, beta in beta(), h in -1.0..1.0f64,
    ) {
        let m = validate_params(n, p, beta, h).unwrap();
        let e = effective_params(&m).unwrap();
        let prec = Precision::default();
        let plus = magnetization_pmf(&m, &e, h, prec);
        let minus = magnetization_pmf(&m, &e, -h, prec);
        let total: f64 = plus.pmf().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-14);
        let n = n as usize;
        for k in 0..=n {
            prop_assert_eq!(plus.pmf()[k], minus.pmf()[n - k]);
        }
    }

    #[test]
    fn partition_function_reflects(
        n in 1i64..60, p in 0.3..1.0f64, beta in beta(), re in -1.0..1.0f64, im in -0.2..0.2f64,
    ) {
        let m = validate_params(n, p, beta, re).unwrap();
        let e = effective_params(&m).unwrap();
        let prec = Precision::default();
        let h = Complex64::new(re, im);
        let a = log_partition_exact(&m, &e, h, prec).unwrap();
        let b = log_partition_exact(&m, &e, h.conj(), prec).unwrap();
        prop_assert!((a.conj() - b).norm() < 1e-12);
    }

    #[test]
    fn odd_cumulants_vanish_without_field(n in 2i64..60, p in 0.3..1.0f64, beta in beta()) {
        let m = validate_params(n, p, beta, 0.0).unwrap();
        let e = effective_params(&m).unwrap();
        let c = exact_cumulants(&magnetization_pmf(&m, &e, 0.0, Precision::default()), 5).unwrap();
        for j in [1, 3, 5] {
            prop_assert!(c.raw(j).abs() < 1e-12);
        }
    }

    #[test]
    fn saddle_certificates_hold_in_strip(beta in beta(), re in -2.0..2.0f64, frac in -0.95..0.95f64) {
        let m = validate_params(400, 1.0, beta, 0.0).unwrap();
        let e = effective_params(&m).unwrap();
        let h = Complex64::new(re, frac * e.strip_halfwidth);
        let sol = solve_saddle(&e, h, 1e-13).unwrap();
        let residual = (sol.s - e.beta_eff * (h + sol.s).tanh()).norm();
        prop_assert!(residual <= 1e-13);
        prop_assert!(sol.s.im.abs() <= e.delta_n);
        prop_assert!(sol.curvature.re < 0.0);
    }

    #[test]
    fn real_saddle_is_mean_field(beta in beta(), h in -3.0..3.0f64) {
        let s = limit_saddle(beta, Complex64::new(h, 0.0)).unwrap().s;
        prop_assert!(s.im == 0.0);
        prop_assert!((s.re - beta * mean_field_magnetization(beta, h)).abs() < 1e-12);
    }

    #[test]
    fn pressure_derivative_is_magnetization(beta in beta(), h in -2.0..2.0f64) {
        let step = 1e-5;
        let f = |x: f64| limit_pressure(beta, Complex64::new(x, 0.0)).unwrap().re;
        let derivative = (f(h + step) - f(h - step)) / (2.0 * step);
        prop_assert!((derivative - mean_field_magnetization(beta, h)).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn contour_cumulants_converge_in_nodes(
        n in 20i64..300, beta in beta(), h0 in -0.5..0.5f64,
    ) {
        let order = 6;
        let m = validate_params(n, 1.0, beta, h0).unwrap();
        let e = effective_params(&m).unwrap();
        let prec = Precision::default();
        let mut cfg = ContourConfig::new(&e, m.n(), h0, order);
        cfg.source = PressureSource::Exact;
        cfg.nodes = 128;
        let coarse = cumulants_contour(&m, &e, &cfg, order, prec).unwrap();
        cfg.nodes = 256;
        let fine = cumulants_contour(&m, &e, &cfg, order, prec).unwrap();
        let var = fine[1].kappa_raw;
        for (a, b) in coarse.iter().zip(&fine) {
            let scale = b.kappa_raw.abs() + var.powf(b.j as f64 / 2.0);
            prop_assert!((a.kappa_raw - b.kappa_raw).abs() <= 1e-10 * scale, "j = {}", a.j);
        }
    }
}
