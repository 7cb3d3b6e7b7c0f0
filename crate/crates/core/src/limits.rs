//! Finite-`N` diagnostics for the limit theorems implied by the
//! Statulevičius condition: Berry–Esseen rate, concentration, Cramér-type
//! corrections, moderate deviations and mod-Gaussian convergence.
//!
//! Every quantity is computed from the exact law of `M_N`; tails stay in
//! extended precision until the final ratio.

use num_complex::Complex64;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::cumulants::StatuleviciusConstants;
use crate::error::{Error, Result};
use crate::exact::{
    characteristic_function_standardized, kolmogorov_distance, MagnetizationDistribution, TailSide,
};
use crate::xprec::{self, normal_upper_tail};

/// Allowed growth of a quantity expected to decrease, per step of a sweep.
pub const TREND_SLACK: f64 = 0.2;
/// Slack on the non-increasing trend of `ks * sqrt(N)`.
pub const BERRY_ESSEEN_SLACK: f64 = 0.3;

pub fn default_concentration_grid() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0, 4.0, 8.0]
}

/// `x = 0.5, 1, ...` up to `N^{1/3}`.
pub fn default_cramer_grid(n: usize) -> Vec<f64> {
    let cap = (n as f64).cbrt();
    (1..)
        .map(|i| 0.5 * i as f64)
        .take_while(|&x| x <= cap)
        .collect()
}

pub fn default_mdp_grid() -> Vec<f64> {
    vec![0.5, 1.0, 1.5]
}

/// `s = -2, -1.75, ..., 2`.
pub fn default_mod_gaussian_grid() -> Vec<f64> {
    (-8..=8).map(|i| 0.25 * i as f64).collect()
}

/// Default moderate-deviation scale `a_N = N^{1/4}`.
pub fn default_mdp_scale(n: usize) -> f64 {
    (n as f64).powf(0.25)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsPoint {
    pub n: usize,
    pub ks_distance: f64,
    pub ks_times_sqrt_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerryEsseenReport {
    pub points: Vec<KsPoint>,
    /// `max ks sqrt(N)` over the fitted points.
    pub constant: f64,
    /// `ks(N_{i+1}) / ks(N_i)` over the fitted points.
    pub ratios: Vec<f64>,
    /// `ks sqrt(N)` non-increasing within 30% per step.
    pub trend_ok: bool,
}

/// Kolmogorov distances along a sweep in `N`; `N = 1` is reported but
/// excluded from the fit.
pub fn berry_esseen_report(dists: &[&MagnetizationDistribution]) -> BerryEsseenReport {
    let points: Vec<KsPoint> = dists
        .iter()
        .map(|d| {
            let ks = kolmogorov_distance(d);
            KsPoint {
                n: d.n(),
                ks_distance: ks,
                ks_times_sqrt_n: ks * (d.n() as f64).sqrt(),
            }
        })
        .collect();
    let fitted: Vec<&KsPoint> = points.iter().filter(|p| p.n > 1).collect();
    let constant = fitted.iter().map(|p| p.ks_times_sqrt_n).fold(0.0, f64::max);
    let ratios = fitted
        .windows(2)
        .map(|w| w[1].ks_distance / w[0].ks_distance)
        .collect();
    let trend_ok = fitted
        .windows(2)
        .all(|w| w[1].ks_times_sqrt_n <= (1.0 + BERRY_ESSEEN_SLACK) * w[0].ks_times_sqrt_n);
    BerryEsseenReport {
        points,
        constant,
        ratios,
        trend_ok,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub x: f64,
    pub tail: f64,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub points: Vec<ConcentrationPoint>,
    pub violations: usize,
}

/// `exp(-x^2 / 2 / (2C + x^2 / (R sqrt N)))`.
pub fn concentration_bound(x: f64, c: f64, r: f64, n: usize) -> f64 {
    (-0.5 * x * x / (2.0 * c + x * x / (r * (n as f64).sqrt()))).exp()
}

/// Compares `P(m_N >= x)` with the concentration bound; only `x >= 0`
/// is covered by the inequality.
pub fn concentration_check(
    dist: &MagnetizationDistribution,
    c: f64,
    r: f64,
    x_grid: &[f64],
) -> ConcentrationReport {
    let points: Vec<ConcentrationPoint> = x_grid
        .iter()
        .filter(|&&x| x >= 0.0)
        .map(|&x| {
            let tail = dist.tail_prob_ext(x, TailSide::AtLeast);
            let bound = concentration_bound(x, c, r, dist.n());
            let violated = tail > bound;
            ConcentrationPoint {
                x,
                tail: tail.to_f64(),
                bound,
                violated,
            }
        })
        .collect();
    let violations = points.iter().filter(|p| p.violated).count();
    ConcentrationReport { points, violations }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CramerPoint {
    pub x: f64,
    /// Midpoint between the two lattice atoms around `x`, in `m_N` units.
    pub x_mid: f64,
    /// `log(P(m_N >= x_mid) / P(Z >= x_mid))`
    pub log_ratio: f64,
    /// `log(P(m_N >= x) / P(Z >= x))`
    pub log_ratio_at_least: f64,
    /// `log(P(m_N > x) / P(Z >= x))`
    pub log_ratio_above: f64,
    /// `|log_ratio| sqrt(N) / max(x_mid^3, x_mid)`
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CramerReport {
    pub n: usize,
    pub points: Vec<CramerPoint>,
    pub ratio_sup: f64,
}

/// `P(M_N >= m_min)` in extended precision.
fn tail_from_atom(dist: &MagnetizationDistribution, m_min: i64) -> Float {
    let terms = (0..=dist.n())
        .filter(|&k| dist.magnetization(k) >= m_min)
        .map(|k| dist.pmf_ext()[k].clone())
        .collect();
    xprec::sum_sorted(terms, dist.precision())
}

fn log_ratio(tail: &Float, gauss: &Float) -> f64 {
    Float::with_val(tail.prec(), tail / gauss).ln().to_f64()
}

/// Empirical Cramér correction `log(P(m_N >= x) / P(Z >= x))` on a grid of
/// positive `x`.
///
/// The step cdf makes the ratio ambiguous at atoms, so the primary value is
/// taken at the midpoint between neighbouring atoms; both one-sided values at
/// the requested `x` are reported as well.
pub fn cramer_diagnostic(dist: &MagnetizationDistribution, x_grid: &[f64]) -> Result<CramerReport> {
    let n = dist.n();
    let bits = dist.precision().bits();
    let sd = dist.std_dev();
    let mut points = Vec::with_capacity(x_grid.len());
    for &x in x_grid.iter().filter(|&&x| x > 0.0) {
        let threshold = Float::with_val(bits, &sd * x) + dist.mean();
        // smallest atom N - 2k at or above the threshold
        let gap = Float::with_val(bits, n as i64 - &threshold) / 2u32;
        let k = gap.floor().to_f64();
        if k < 0.0 {
            return Err(Error::TailUnderflow(x));
        }
        let m_atom = n as i64 - 2 * k as i64;
        let mid = Float::with_val(bits, m_atom - 1);
        let x_mid = Float::with_val(bits, &mid - dist.mean()) / &sd;

        let tail_mid = tail_from_atom(dist, m_atom);
        let tail_at_least = dist.tail_prob_ext(x, TailSide::AtLeast);
        let tail_above = dist.tail_prob_ext(x, TailSide::Above);
        if tail_mid.is_zero() || tail_above.is_zero() {
            return Err(Error::TailUnderflow(x));
        }
        let gauss_mid = normal_upper_tail(&x_mid);
        let gauss = normal_upper_tail(&Float::with_val(bits, x));
        let lr = log_ratio(&tail_mid, &gauss_mid);
        let xm = x_mid.to_f64();
        points.push(CramerPoint {
            x,
            x_mid: xm,
            log_ratio: lr,
            log_ratio_at_least: log_ratio(&tail_at_least, &gauss),
            log_ratio_above: log_ratio(&tail_above, &gauss),
            scaled: lr.abs() * (n as f64).sqrt() / xm.powi(3).max(xm),
        });
    }
    let ratio_sup = points.iter().map(|p| p.scaled).fold(0.0, f64::max);
    Ok(CramerReport {
        n,
        points,
        ratio_sup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdpPoint {
    pub n: usize,
    pub a_n: f64,
    pub x: f64,
    /// `-(1/a_N^2) log P(m_N / a_N >= x)`
    pub rate: f64,
    /// `|rate - x^2/2|`
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpReport {
    pub points: Vec<MdpPoint>,
    /// `max_x error` per size, in sweep order.
    pub max_errors: Vec<(usize, f64)>,
    pub trend_ok: bool,
}

/// Moderate-deviation rates at one size.
pub fn mdp_points(
    dist: &MagnetizationDistribution,
    a_n: f64,
    x_grid: &[f64],
) -> Result<Vec<MdpPoint>> {
    x_grid
        .iter()
        .map(|&x| {
            let tail = dist.tail_prob_ext(a_n * x, TailSide::AtLeast);
            if tail.is_zero() {
                return Err(Error::TailUnderflow(a_n * x));
            }
            let rate = -tail.ln().to_f64() / (a_n * a_n);
            Ok(MdpPoint {
                n: dist.n(),
                a_n,
                x,
                rate,
                error: (rate - 0.5 * x * x).abs(),
            })
        })
        .collect()
}

/// Moderate deviations along a sweep with scale `a_N = scale(N)`.
pub fn mdp_diagnostic(
    dists: &[&MagnetizationDistribution],
    scale: &dyn Fn(usize) -> f64,
    x_grid: &[f64],
) -> Result<MdpReport> {
    let mut points = Vec::new();
    let mut max_errors = Vec::new();
    for d in dists {
        let pts = mdp_points(d, scale(d.n()), x_grid)?;
        max_errors.push((d.n(), pts.iter().map(|p| p.error).fold(0.0, f64::max)));
        points.extend(pts);
    }
    let trend_ok = non_increasing(
        &max_errors.iter().map(|e| e.1).collect::<Vec<_>>(),
        TREND_SLACK,
    );
    Ok(MdpReport {
        points,
        max_errors,
        trend_ok,
    })
}

/// Each value at most `(1 + slack)` times its predecessor.
pub fn non_increasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= (1.0 + slack) * w[0])
}

/// `Delta = (R / C~) sqrt(N)`.
pub fn statulevicius_delta(constants: &StatuleviciusConstants, n: usize) -> f64 {
    constants.r / constants.c_tilde * (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModGaussianPoint {
    pub s: f64,
    pub lhs: Complex64,
    pub limit: Complex64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModGaussianReport {
    pub n: usize,
    pub delta: f64,
    pub c3: f64,
    pub points: Vec<ModGaussianPoint>,
    pub sup_error: f64,
}

/// Sup distance between `exp(Delta^{2/3} s^2 / 2) E[exp(i s Y_N)]`,
/// `Y_N = Delta^{1/3} m_N`, and the limit `exp(c3 (is)^3 / 6)`.
pub fn mod_gaussian_diagnostic(
    dist: &MagnetizationDistribution,
    delta: f64,
    c3: f64,
    s_grid: &[f64],
) -> ModGaussianReport {
    let t = delta.cbrt();
    let points: Vec<ModGaussianPoint> = s_grid
        .iter()
        .map(|&s| {
            let cf = characteristic_function_standardized(dist, s * t);
            let lhs = cf * (0.5 * t * t * s * s).exp();
            let is = Complex64::new(0.0, s);
            let limit = (c3 * is * is * is / 6.0).exp();
            ModGaussianPoint {
                s,
                lhs,
                limit,
                error: (lhs - limit).norm(),
            }
        })
        .collect();
    let sup_error = points.iter().map(|p| p.error).fold(0.0, f64::max);
    ModGaussianReport {
        n: dist.n(),
        delta,
        c3,
        points,
        sup_error,
    }
}

/// Summary of all diagnostics at a single size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitDiagnostics {
    pub n: usize,
    pub ks_distance: f64,
    pub ks_times_sqrt_n: f64,
    pub concentration_violations: usize,
    pub cramer_ratio_sup: f64,
    pub mdp_errors: Vec<MdpPoint>,
    pub mod_gaussian_sup_error: f64,
}

/// All diagnostics at one size with default grids; `c3` is taken from this
/// size, `kappa_3(m_N) Delta`.
pub fn limit_diagnostics(
    dist: &MagnetizationDistribution,
    kappa3_std: f64,
    constants: &StatuleviciusConstants,
) -> Result<LimitDiagnostics> {
    let n = dist.n();
    let ks = kolmogorov_distance(dist);
    let conc = concentration_check(
        dist,
        constants.c_tilde,
        constants.r,
        &default_concentration_grid(),
    );
    let cramer = cramer_diagnostic(dist, &default_cramer_grid(n))?;
    let mdp = mdp_points(dist, default_mdp_scale(n), &default_mdp_grid())?;
    let delta = statulevicius_delta(constants, n);
    let mg = mod_gaussian_diagnostic(
        dist,
        delta,
        kappa3_std * delta,
        &default_mod_gaussian_grid(),
    );
    Ok(LimitDiagnostics {
        n,
        ks_distance: ks,
        ks_times_sqrt_n: ks * (n as f64).sqrt(),
        concentration_violations: conc.violations,
        cramer_ratio_sup: cramer.ratio_sup,
        mdp_errors: mdp,
        mod_gaussian_sup_error: mg.sup_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{kolmogorov_distance_discrete, magnetization_pmf};
    use crate::params::{effective_params, validate_params};
    use crate::xprec::Precision;

    fn dist(n: i64, beta: f64, h: f64) -> MagnetizationDistribution {
        let m = validate_params(n, 1.0, beta, h).unwrap();
        let e = effective_params(&m).unwrap();
        magnetization_pmf(&m, &e, h, Precision::default())
    }

    fn binomial_ks(n: usize) -> f64 {
        let sd = (n as f64).sqrt();
        let mut atoms = Vec::new();
        let mut probs = Vec::new();
        let mut lc = 0.0_f64; // log C(n, j)
        for j in 0..=n {
            if j > 0 {
                lc += ((n - j + 1) as f64).ln() - (j as f64).ln();
            }
            atoms.push((2.0 * j as f64 - n as f64) / sd);
            probs.push((lc - n as f64 * 2f64.ln()).exp());
        }
        kolmogorov_distance_discrete(&atoms, &probs)
    }

    #[test]
    fn berry_esseen_ratios_at_zero_field() {
        let ds: Vec<_> = [1, 100, 400, 1600]
            .iter()
            .map(|&n| dist(n, 0.5, 0.0))
            .collect();
        let refs: Vec<_> = ds.iter().collect();
        let rep = berry_esseen_report(&refs);
        assert_eq!(rep.points.len(), 4);
        assert_eq!(rep.ratios.len(), 2);
        for r in &rep.ratios {
            assert!((0.35..=0.65).contains(r), "{r}");
        }
        assert!(rep.trend_ok);
    }

    #[test]
    fn independent_spins_match_binomial() {
        let d = dist(400, 1e-8, 0.0);
        let ks = kolmogorov_distance(&d);
        let reference = binomial_ks(400);
        assert!((ks - reference).abs() <= 0.1 * reference);
    }

    #[test]
    fn concentration_edges() {
        let d = dist(400, 0.5, 0.0);
        assert_eq!(concentration_bound(0.0, 1.0, 0.25, 400), 1.0);
        let rep = concentration_check(&d, 1.0, 0.2568, &[0.0, 0.5, 1.0, 2.0, 4.0, 100.0]);
        assert_eq!(rep.violations, 0);
        assert_eq!(rep.points.last().unwrap().tail, 0.0);
    }

    #[test]
    fn cramer_correction_is_small_near_origin() {
        let small: Vec<f64> = [400, 1600, 6400]
            .iter()
            .map(|&n| {
                let d = dist(n, 0.5, 0.0);
                let x = (n as f64).powf(-0.25);
                cramer_diagnostic(&d, &[x]).unwrap().points[0]
                    .log_ratio
                    .abs()
            })
            .collect();
        assert!(small[1] < small[0] && small[2] < small[1], "{small:?}");
    }

    #[test]
    fn cramer_reports_both_sides_and_underflow() {
        let d = dist(100, 0.5, 0.0);
        let rep = cramer_diagnostic(&d, &default_cramer_grid(100)).unwrap();
        for p in &rep.points {
            assert!(p.log_ratio_above <= p.log_ratio_at_least);
        }
        assert!(matches!(
            cramer_diagnostic(&d, &[50.0]),
            Err(Error::TailUnderflow(_))
        ));
    }

    #[test]
    fn mdp_errors_decrease() {
        let ds: Vec<_> = [400, 1600, 6400]
            .iter()
            .map(|&n| dist(n, 0.5, 0.0))
            .collect();
        let refs: Vec<_> = ds.iter().collect();
        let rep = mdp_diagnostic(&refs, &default_mdp_scale, &[1.0]).unwrap();
        assert!(rep.max_errors[1].1 < rep.max_errors[0].1);
        assert!(rep.max_errors[2].1 < rep.max_errors[1].1);
        assert!(rep.trend_ok);
    }

    #[test]
    fn mdp_independent_spins() {
        let d = dist(6400, 1e-8, 0.0);
        let pts = mdp_points(&d, default_mdp_scale(6400), &[1.0]).unwrap();
        assert!(pts[0].error < 0.1);
    }

    #[test]
    fn mod_gaussian_trivial_cases() {
        let d = dist(400, 0.5, 0.0);
        let rep = mod_gaussian_diagnostic(&d, 5.0, 0.0, &[0.0, 0.5]);
        assert_eq!(rep.points[0].error, 0.0);
        assert_eq!(rep.points[0].lhs, Complex64::new(1.0, 0.0));
    }
}
