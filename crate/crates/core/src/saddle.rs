//! Saddle-point analysis of the Hubbard–Stratonovich representation
//!
//! `Z = a^{N^2} sqrt(N / (2 pi beta_eff)) ∫ exp(N Phi_N(s, h)) ds`,
//! `Phi_N(s, h) = -s^2 / (2 beta_eff) + log(2 cosh(h + s))`.
//!
//! For `h` in the strip `U_N` the saddle equation `s = beta_eff tanh(h + s)`
//! has a unique solution with `|Im s| <= delta_N`; the map is a contraction
//! there, so plain iteration from `s = 0` converges and Newton polishes it.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{strip_membership, EffectiveParams, ModelParams};

pub const DEFAULT_TOLERANCE: f64 = 1e-13;
pub const MAX_ITERATIONS: usize = 10_000;
const NEWTON_STEPS: usize = 3;
const POLE_THRESHOLD: f64 = 1e-12;

/// Integrand truncation, relative to the peak modulus.
const QUADRATURE_CUTOFF: f64 = 1e-20;
const QUADRATURE_MIN_NODES: usize = 2001;
const QUADRATURE_MAX_LEVELS: usize = 8;
const QUADRATURE_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleSolution {
    pub h: Complex64,
    pub s: Complex64,
    /// `|s - beta_eff tanh(h + s)|`
    pub residual: f64,
    /// `H_N = -1/beta_eff + 1/cosh^2(h + s)`
    pub curvature: Complex64,
    pub iterations: usize,
}

/// Saddle point `s_N(h)` of `Phi_N` for `h` in the strip.
pub fn solve_saddle(eff: &EffectiveParams, h: Complex64, tol: f64) -> Result<SaddleSolution> {
    if !strip_membership(h, eff) {
        return Err(Error::OutsideStrip {
            re: h.re,
            im: h.im,
            halfwidth: eff.strip_halfwidth,
        });
    }
    let beta = eff.beta_eff;
    let map = |s: Complex64| beta * (h + s).tanh();

    let mut s = Complex64::new(0.0, 0.0);
    let mut iterations = 0;
    loop {
        let next = map(s);
        iterations += 1;
        let step = (next - s).norm();
        s = next;
        if step <= tol / 10.0 {
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                residual: (s - map(s)).norm(),
            });
        }
    }

    let mut residual = (s - map(s)).norm();
    for _ in 0..NEWTON_STEPS {
        if residual == 0.0 {
            break;
        }
        let c = (h + s).cosh();
        let g = -s / beta + (h + s).tanh();
        let dg = -1.0 / beta + 1.0 / (c * c);
        let candidate = s - g / dg;
        let r = (candidate - map(candidate)).norm();
        if r >= residual {
            break;
        }
        s = candidate;
        residual = r;
    }
    if residual > tol {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    if s.im.abs() > eff.delta_n * (1.0 + 1e-12) {
        return Err(Error::StripBoundViolated {
            im: s.im.abs(),
            bound: eff.delta_n,
        });
    }
    let c = (h + s).cosh();
    Ok(SaddleSolution {
        h,
        s,
        residual,
        curvature: -1.0 / beta + 1.0 / (c * c),
        iterations,
    })
}

/// Saddle of the infinite-volume `Phi` (inverse temperature `beta`).
pub fn limit_saddle(beta: f64, h: Complex64) -> Result<SaddleSolution> {
    solve_saddle(&EffectiveParams::from_beta(beta)?, h, DEFAULT_TOLERANCE)
}

/// Unique real root of `m = tanh(h + beta m)`, by Newton's method kept
/// inside a shrinking bracket.
pub fn mean_field_magnetization(beta: f64, h: f64) -> f64 {
    let f = |m: f64| m - (h + beta * m).tanh();
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    let mut m = h.tanh();
    for _ in 0..200 {
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm > 0.0 {
            hi = m;
        } else {
            lo = m;
        }
        let sech2 = 1.0 - (h + beta * m).tanh().powi(2);
        let mut next = m - fm / (1.0 - beta * sech2);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == m {
            break;
        }
        m = next;
    }
    m
}

/// `chi = (1 - m^2) / (1 - beta (1 - m^2))`.
pub fn susceptibility(beta: f64, m: f64) -> f64 {
    let q = 1.0 - m * m;
    q / (1.0 - beta * q)
}

/// Principal `log(2 cosh z)` for `|Im z| < pi/2`.
fn log_two_cosh(z: Complex64) -> Complex64 {
    if z.re >= 0.0 {
        z + (1.0 + (-2.0 * z).exp()).ln()
    } else {
        -z + (1.0 + (2.0 * z).exp()).ln()
    }
}

/// `Phi(s, h) = -s^2/(2 beta) + log(2 cosh(h + s))`.
pub fn phi(s: Complex64, h: Complex64, beta: f64) -> Result<Complex64> {
    let z = h + s;
    if z.im.abs() >= FRAC_PI_2 {
        return Err(Error::OutsidePrincipalStrip(z.im.abs()));
    }
    let c = z.cosh().norm();
    if c < POLE_THRESHOLD {
        return Err(Error::PoleProximity(c));
    }
    Ok(-s * s / (2.0 * beta) + log_two_cosh(z))
}

/// `Phi_s(s, h) = -s/beta + tanh(h + s)`.
pub fn phi_s(s: Complex64, h: Complex64, beta: f64) -> Complex64 {
    -s / beta + (h + s).tanh()
}

fn checked_saddle(eff: &EffectiveParams, h: Complex64) -> Result<SaddleSolution> {
    let sol = solve_saddle(eff, h, DEFAULT_TOLERANCE)?;
    if sol.curvature.re >= 0.0 {
        return Err(Error::DegenerateCurvature(sol.curvature.re));
    }
    Ok(sol)
}

/// `1/2 log(-1 / (beta_eff H_N))`, principal branch (the argument lies in
/// the right half-plane because `Re H_N < 0`).
fn gaussian_log_factor(beta_eff: f64, curvature: Complex64) -> Complex64 {
    0.5 * (-1.0 / (beta_eff * curvature)).ln()
}

/// Leading saddle-point asymptotics of `log Z`:
/// `N^2 log a + N Phi_N(s_N, h) + 1/2 log(-1/(beta_eff H_N))`.
pub fn asymptotic_log_partition(
    params: &ModelParams,
    eff: &EffectiveParams,
    h: Complex64,
) -> Result<Complex64> {
    let n = params.n() as f64;
    let sol = checked_saddle(eff, h)?;
    let bulk = phi(sol.s, h, eff.beta_eff)?;
    Ok(n * n * eff.log_a + n * bulk + gaussian_log_factor(eff.beta_eff, sol.curvature))
}

/// Asymptotic finite-volume pressure split into its pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureValue {
    pub h: Complex64,
    pub phi_at_saddle: Complex64,
    /// `(1/N) 1/2 log(-1/(beta_eff H_N))`, zero unless requested.
    pub correction: Complex64,
    /// `N log a`, zero unless requested.
    pub prefactor_log_a_density: f64,
}

impl PressureValue {
    pub fn total(&self) -> Complex64 {
        self.phi_at_saddle + self.correction + self.prefactor_log_a_density
    }
}

pub fn asymptotic_pressure(
    params: &ModelParams,
    eff: &EffectiveParams,
    h: Complex64,
    include_correction: bool,
) -> Result<PressureValue> {
    let n = params.n() as f64;
    let sol = checked_saddle(eff, h)?;
    let phi_at_saddle = phi(sol.s, h, eff.beta_eff)?;
    let (correction, prefactor) = if include_correction {
        (
            gaussian_log_factor(eff.beta_eff, sol.curvature) / n,
            n * eff.log_a,
        )
    } else {
        (Complex64::new(0.0, 0.0), 0.0)
    };
    Ok(PressureValue {
        h,
        phi_at_saddle,
        correction,
        prefactor_log_a_density: prefactor,
    })
}

/// Infinite-volume pressure `Phi(s(h), h)`.
pub fn limit_pressure(beta: f64, h: Complex64) -> Result<Complex64> {
    let sol = limit_saddle(beta, h)?;
    phi(sol.s, h, beta)
}

/// `log Z` by direct quadrature of the Hubbard–Stratonovich integral along
/// `Im s = 0` (`shift = false`) or through the saddle (`shift = true`).
///
/// The integrand is truncated where it falls below `1e-20` of its peak and
/// integrated with the trapezoid rule (exponentially accurate for this
/// analytic, rapidly decaying integrand), refined by node doubling until
/// successive Richardson estimates agree.
pub fn hs_quadrature_log_partition(
    params: &ModelParams,
    eff: &EffectiveParams,
    h: Complex64,
    shift: bool,
) -> Result<Complex64> {
    let n = params.n() as f64;
    let beta = eff.beta_eff;
    let sol = solve_saddle(eff, h, DEFAULT_TOLERANCE)?;
    let offset = if shift { sol.s.im } else { 0.0 };
    let exponent =
        |x: f64| -> Result<Complex64> { Ok(n * phi(Complex64::new(x, offset), h, beta)?) };

    // walk outwards from the saddle until the modulus is below the cutoff
    let cutoff = QUADRATURE_CUTOFF.ln();
    let step = 0.25 / n.sqrt();
    let mut peak = exponent(sol.s.re)?.re;
    let mut bounds = [sol.s.re, sol.s.re];
    for (side, dir) in [(0usize, -1.0_f64), (1, 1.0)] {
        let mut x = sol.s.re;
        loop {
            x += dir * step;
            let e = exponent(x)?.re;
            peak = peak.max(e);
            if e - peak < cutoff {
                break;
            }
        }
        bounds[side] = x;
    }
    let [a, b] = bounds;

    let trapezoid = |nodes: usize| -> Result<Complex64> {
        let h_step = (b - a) / (nodes - 1) as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..nodes {
            let w = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
            acc += w * (exponent(a + i as f64 * h_step)? - peak).exp();
        }
        Ok(acc * h_step)
    };

    let mut nodes = QUADRATURE_MIN_NODES;
    let mut coarse = trapezoid(nodes)?;
    let mut previous: Option<Complex64> = None;
    let mut last_change = f64::INFINITY;
    for _ in 0..QUADRATURE_MAX_LEVELS {
        nodes = 2 * nodes - 1;
        let fine = trapezoid(nodes)?;
        let extrapolated = fine + (fine - coarse) / 3.0;
        if let Some(prev) = previous {
            last_change = (extrapolated - prev).norm() / extrapolated.norm();
            if last_change <= QUADRATURE_RTOL {
                let log_integral = extrapolated.ln() + peak;
                return Ok(n * n * eff.log_a + 0.5 * (n / (2.0 * PI * beta)).ln() + log_integral);
            }
        }
        previous = Some(extrapolated);
        coarse = fine;
    }
    Err(Error::QuadratureNotConverged(last_change))
}

/// Distance between two complex logarithms, ignoring multiples of `2 pi i`.
pub fn branch_distance(a: Complex64, b: Complex64) -> f64 {
    let d = a - b;
    let im = d.im - 2.0 * PI * (d.im / (2.0 * PI)).round();
    Complex64::new(d.re, im).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::log_partition_exact;
    use crate::params::{effective_params, validate_params};
    use crate::xprec::Precision;

    fn classical(n: i64, beta: f64) -> (ModelParams, EffectiveParams) {
        let m = validate_params(n, 1.0, beta, 0.0).unwrap();
        let e = effective_params(&m).unwrap();
        (m, e)
    }

    fn bisect_mean_field(beta: f64, h: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - (h + beta * mid).tanh() > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    #[test]
    fn zero_field_saddle_is_origin() {
        let (_, e) = classical(10, 0.5);
        let sol = solve_saddle(&e, Complex64::new(0.0, 0.0), DEFAULT_TOLERANCE).unwrap();
        assert_eq!(sol.s, Complex64::new(0.0, 0.0));
        assert_eq!(sol.curvature.re, -1.0);
    }

    #[test]
    fn real_saddle_matches_mean_field() {
        let (_, e) = classical(10, 0.5);
        let sol = solve_saddle(&e, Complex64::new(0.2, 0.0), DEFAULT_TOLERANCE).unwrap();
        let m = bisect_mean_field(0.5, 0.2);
        // 60-digit value of m(0.2) at beta = 0.5
        assert!((m - 0.364_782_198_287_614_55).abs() < 1e-15);
        assert!((sol.s.re - 0.5 * m).abs() < 1e-13);
        assert!(sol.s.im.abs() == 0.0);
        let mf = mean_field_magnetization(0.5, 0.2);
        assert!((mf - (0.2 + 0.5 * mf).tanh()).abs() <= 1e-14);
        assert!((sol.s.re - 0.5 * mf).abs() < 1e-12);
    }

    #[test]
    fn complex_saddle_certificates() {
        let (_, e) = classical(10, 0.5);
        let h = Complex64::new(0.2, 0.1);
        let sol = solve_saddle(&e, h, DEFAULT_TOLERANCE).unwrap();
        let independent = (sol.s - 0.5 * (h + sol.s).tanh()).norm();
        assert!(independent <= 1e-13);
        assert!(sol.s.im.abs() <= 0.5);
        assert!(sol.curvature.re < 0.0);
    }

    #[test]
    fn outside_strip_is_rejected() {
        let (_, e) = classical(10, 0.5);
        assert!(matches!(
            solve_saddle(&e, Complex64::new(0.0, 0.3), DEFAULT_TOLERANCE),
            Err(Error::OutsideStrip { .. })
        ));
    }

    #[test]
    fn mean_field_examples() {
        assert_eq!(mean_field_magnetization(0.5, 0.0), 0.0);
        for &(beta, h) in &[(0.3, 0.7), (0.9, 0.05), (0.5, 2.0), (0.99, 0.3)] {
            let m = mean_field_magnetization(beta, h);
            assert!((m - bisect_mean_field(beta, h)).abs() < 1e-14);
            assert_eq!(mean_field_magnetization(beta, -h), -m);
        }
    }

    #[test]
    fn susceptibility_examples() {
        assert!((susceptibility(0.5, 0.0) - 2.0).abs() < 1e-15);
        let m = bisect_mean_field(0.5, 0.2);
        assert!((susceptibility(0.5, m) - 1.530_244_324_483_496_2).abs() < 1e-14);
        assert!((susceptibility(1e-12, 0.4) - 0.84).abs() < 1e-11);
    }

    #[test]
    fn phi_values() {
        assert!(
            (phi(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.5)
                .unwrap()
                .re
                - 2f64.ln())
            .abs()
                < 1e-16
        );
        let v = phi(Complex64::new(0.1, 0.0), Complex64::new(0.2, 0.0), 0.5).unwrap();
        assert!((v.re - 0.727_487_950_485_885_626_5).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
        assert!(phi(Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.6), 0.5).is_err());
    }

    #[test]
    fn phi_is_stationary_at_saddle() {
        let (_, e) = classical(10, 0.5);
        let h = Complex64::new(0.15, -0.12);
        let sol = solve_saddle(&e, h, DEFAULT_TOLERANCE).unwrap();
        let d = 1e-6;
        let fd = (phi(sol.s + d, h, 0.5).unwrap() - phi(sol.s - d, h, 0.5).unwrap()) / (2.0 * d);
        assert!(fd.norm() < 1e-9);
        assert!(phi_s(sol.s, h, 0.5).norm() < 1e-12);
    }

    #[test]
    fn derivative_of_limit_pressure_is_magnetization() {
        let beta = 0.5;
        for &h in &[-0.4, 0.0, 0.2, 0.9] {
            let d = 1e-5;
            let up = limit_pressure(beta, Complex64::new(h + d, 0.0)).unwrap().re;
            let down = limit_pressure(beta, Complex64::new(h - d, 0.0)).unwrap().re;
            let fd = (up - down) / (2.0 * d);
            assert!((fd - mean_field_magnetization(beta, h)).abs() < 1e-8);
        }
    }

    #[test]
    fn asymptotics_agree_with_exact_engine() {
        let prec = Precision::default();
        let h = Complex64::new(0.3, 0.0);
        let (m, e) = classical(40, 0.5);
        let exact = log_partition_exact(&m, &e, h, prec).unwrap();
        let asym = asymptotic_log_partition(&m, &e, h).unwrap();
        assert!((exact - asym).norm() <= 0.5);
        assert_eq!(asym.im, 0.0);
        let (m, e) = classical(160, 0.5);
        let exact = log_partition_exact(&m, &e, h, prec).unwrap();
        let asym = asymptotic_log_partition(&m, &e, h).unwrap();
        assert!((exact - asym).norm() <= 0.15);

        let mut prev = f64::INFINITY;
        for n in [50, 100, 200, 400] {
            let (m, e) = classical(n, 0.5);
            let h = Complex64::new(0.2, 0.0);
            let gap = (log_partition_exact(&m, &e, h, prec).unwrap()
                - asymptotic_log_partition(&m, &e, h).unwrap())
            .norm();
            assert!(gap < prev, "N={n}: {gap} >= {prev}");
            prev = gap;
        }
    }

    #[test]
    fn pressure_at_zero_field() {
        let (m, e) = classical(100, 0.5);
        let p = asymptotic_pressure(&m, &e, Complex64::new(0.0, 0.0), false).unwrap();
        assert!((p.total().re - 2f64.ln()).abs() < 1e-15);
        let q = asymptotic_pressure(&m, &e, Complex64::new(0.0, 0.0), true).unwrap();
        // correction is log(sqrt(2))/N at h = 0, beta = 1/2
        assert!((q.correction.re - 0.5 * 2f64.ln() / 100.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_matches_exact_and_is_shift_invariant() {
        let prec = Precision::default();
        let (m, e) = classical(20, 0.5);
        let h = Complex64::new(0.3, 0.0);
        let exact = log_partition_exact(&m, &e, h, prec).unwrap();
        let plain = hs_quadrature_log_partition(&m, &e, h, false).unwrap();
        let shifted = hs_quadrature_log_partition(&m, &e, h, true).unwrap();
        assert!(branch_distance(plain, exact) < 1e-8);
        assert!(branch_distance(shifted, plain) < 1e-8);

        let (m, e) = classical(40, 0.5);
        let h = Complex64::new(0.2, 0.15);
        let plain = hs_quadrature_log_partition(&m, &e, h, false).unwrap();
        let shifted = hs_quadrature_log_partition(&m, &e, h, true).unwrap();
        assert!(branch_distance(plain, shifted) < 1e-7);
    }
}
