//! Values frozen from an independent 60-digit evaluation of the closed-form
//! sums (no shared code with this crate).

#![allow(clippy::excessive_precision)]

use dilute_cw::cumulants::{cumulants_contour, ContourConfig, PressureSource};
use dilute_cw::exact::{exact_cumulants, log_partition_exact, magnetization_pmf};
use dilute_cw::saddle::{limit_pressure, limit_saddle, mean_field_magnetization};
use dilute_cw::{effective_params, validate_params, Precision};
use num_complex::Complex64;

fn close(got: f64, want: f64, rtol: f64) {
    assert!(
        (got - want).abs() <= rtol * want.abs(),
        "{got} vs {want} (rel {:.2e})",
        ((got - want) / want).abs()
    );
}

#[test]
fn effective_parameters_of_dilute_model() {
    let m = validate_params(50, 0.3, 0.7, 0.0).unwrap();
    let e = effective_params(&m).unwrap();
    close(e.beta_eff, 0.700_017_784_449_300_6, 1e-15);
    close(e.log_a, 5.716_599_231_135_272_6e-5, 1e-13);
}

#[test]
fn log_partition_real_field() {
    let m = validate_params(30, 0.3, 0.6, 0.15).unwrap();
    let e = effective_params(&m).unwrap();
    let lz = log_partition_exact(&m, &e, Complex64::new(0.15, 0.0), Precision::default()).unwrap();
    close(lz.re, 22.075_605_802_010_013, 1e-14);
    assert!(lz.im.abs() < 1e-14);
}

#[test]
fn log_partition_complex_field() {
    let h = Complex64::new(0.2, 0.1);
    let m = validate_params(40, 1.0, 0.5, 0.2).unwrap();
    let e = effective_params(&m).unwrap();
    let lz = log_partition_exact(&m, &e, h, Precision::default()).unwrap();
    close(lz.re, 29.230_528_662_305_717, 1e-14);
    let two_pi = std::f64::consts::TAU;
    let d = (lz.im - 1.433_452_240_038_460_2).rem_euclid(two_pi);
    assert!(d.min(two_pi - d) < 1e-12, "imaginary part {}", lz.im);
}

const KAPPA_N60: [f64; 6] = [
    21.095_350_111_440_571,
    165.108_625_289_095_5,
    -988.426_615_817_699_3,
    3_738.758_851_798_884_4,
    127_318.695_594_814_97,
    -5_241_893.292_685_695,
];

#[test]
fn cumulants_by_recursion() {
    let m = validate_params(60, 0.5, 0.8, 0.1).unwrap();
    let e = effective_params(&m).unwrap();
    let d = magnetization_pmf(&m, &e, 0.1, Precision::default());
    let c = exact_cumulants(&d, 6).unwrap();
    for (j, want) in KAPPA_N60.iter().enumerate() {
        close(c.raw(j + 1), *want, 1e-12);
    }
}

#[test]
fn cumulants_by_contour() {
    let m = validate_params(60, 0.5, 0.8, 0.1).unwrap();
    let e = effective_params(&m).unwrap();
    let mut cfg = ContourConfig::new(&e, 60, 0.1, 6);
    cfg.nodes = 128;
    cfg.source = PressureSource::Exact;
    let reports = cumulants_contour(&m, &e, &cfg, 6, Precision::default()).unwrap();
    for (rep, want) in reports.iter().zip(KAPPA_N60) {
        close(rep.kappa_raw, want, 1e-9);
    }
}

#[test]
fn complex_saddle_point() {
    let s = limit_saddle(0.6, Complex64::new(0.3, 0.1)).unwrap().s;
    assert!((s - Complex64::new(0.349_280_950_992_689_1, 0.067_869_913_123_899_28)).norm() < 1e-14);
}

#[test]
fn limit_pressure_and_magnetization() {
    let psi = limit_pressure(0.5, Complex64::new(0.3, 0.0)).unwrap();
    close(psi.re, 0.774_835_433_309_249_2, 1e-15);
    close(
        mean_field_magnetization(0.5, 0.3),
        0.500_831_887_669_865,
        1e-14,
    );
}
