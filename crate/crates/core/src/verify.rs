//! Verification suites: every cross-check between the exact engine, the
//! saddle-point machinery and the limit diagnostics, at fixed tolerances.
//!
//! Checks never panic; numerical errors are reported as failures.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::cumulants::{
    calibrate_statulevicius, cumulants_contour, exact_reports, radius_default, scaled_cumulant,
    statulevicius_check, ContourConfig, PressureSource, StatuleviciusConstants,
};
use crate::error::Result;
use crate::exact::{
    brute_force_oracle, exact_cumulants, log_partition_exact, magnetization_pmf,
    MagnetizationDistribution,
};
use crate::limits::{
    berry_esseen_report, concentration_check, cramer_diagnostic, default_concentration_grid,
    default_cramer_grid, default_mdp_grid, default_mdp_scale, default_mod_gaussian_grid,
    mdp_diagnostic, mod_gaussian_diagnostic, non_increasing, statulevicius_delta, TREND_SLACK,
};
use crate::params::{effective_params, validate_params, EffectiveParams, ModelParams};
use crate::saddle::{
    branch_distance, hs_quadrature_log_partition, limit_pressure, solve_saddle, susceptibility,
    DEFAULT_TOLERANCE,
};
use crate::xprec::Precision;

const ORACLE_SEED: u64 = 0x5eed_c0de;
const ORACLE_TUPLES: usize = 50;
const ORACLE_RTOL: f64 = 1e-10;
const CLASSICAL_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Brute-force oracles, classical reduction and one saddle grid.
    Quick,
    Full,
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "quick" => Ok(Profile::Quick),
            "full" => Ok(Profile::Full),
            other => Err(format!(
                "unknown profile `{other}` (expected quick or full)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type CheckFn = fn(Precision) -> Result<(bool, String)>;

/// Every check with a stable id and name.
pub fn all_checks() -> Vec<(usize, &'static str, CheckFn)> {
    vec![
        (1, "oracle equivalence", oracle_equivalence as CheckFn),
        (2, "classical reduction", classical_reduction),
        (
            3,
            "Hubbard-Stratonovich contour shift",
            hubbard_stratonovich_identity,
        ),
        (4, "saddle certificates", saddle_certificates),
        (5, "cross-method cumulants", cross_method_cumulants),
        (6, "Statulevicius scaling", statulevicius_scaling),
        (7, "mean and variance limits", mean_variance_limits),
        (8, "Berry-Esseen trend", berry_esseen_trend),
        (9, "pressure convergence rate", pressure_convergence_rate),
        (10, "limit-theorem diagnostics", limit_theorem_checks),
    ]
}

pub fn profile_ids(profile: Profile) -> Vec<usize> {
    match profile {
        Profile::Quick => vec![1, 2, 4],
        Profile::Full => (1..=10).collect(),
    }
}

pub fn run_check(id: usize, prec: Precision) -> Option<CheckOutcome> {
    let (id, name, check) = all_checks().into_iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let (passed, detail) = match check(prec) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Some(CheckOutcome {
        id,
        name: name.to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_profile(profile: Profile, prec: Precision) -> Vec<CheckOutcome> {
    profile_ids(profile)
        .into_iter()
        .filter_map(|id| run_check(id, prec))
        .collect()
}

/// `max` that propagates NaN, so a broken comparison cannot pass.
fn worst(acc: f64, value: f64) -> f64 {
    if acc.is_nan() || value.is_nan() {
        f64::NAN
    } else {
        acc.max(value)
    }
}

fn model(n: usize, p: f64, beta: f64, h0: f64) -> Result<(ModelParams, EffectiveParams)> {
    let m = validate_params(n as i64, p, beta, h0)?;
    let e = effective_params(&m)?;
    Ok((m, e))
}

fn dist(
    n: usize,
    p: f64,
    beta: f64,
    h0: f64,
    prec: Precision,
) -> Result<MagnetizationDistribution> {
    let (m, e) = model(n, p, beta, h0)?;
    Ok(magnetization_pmf(&m, &e, h0, prec))
}

/// Cumulants from raw moments of a pmf given in `k` order.
fn cumulants_from_pmf(n: usize, pmf: &[f64], order: usize, prec: Precision) -> Vec<f64> {
    let bits = prec.bits();
    let mut moments = vec![prec.float(1)];
    for j in 1..=order {
        let mut acc = prec.zero();
        for (k, &w) in pmf.iter().enumerate() {
            let m = prec.float(n as i64 - 2 * k as i64);
            acc += Float::with_val(bits, m.pow(j as u32)) * w;
        }
        moments.push(acc);
    }
    let binom = |a: usize, b: usize| -> f64 {
        (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
    };
    let mut kappa: Vec<Float> = vec![prec.zero()];
    for j in 1..=order {
        let mut kj = moments[j].clone();
        for i in 1..j {
            kj -= Float::with_val(bits, &kappa[i] * &moments[j - i]) * binom(j - 1, i - 1);
        }
        kappa.push(kj);
    }
    kappa[1..].iter().map(Float::to_f64).collect()
}

/// Randomized tuples with `N <= 12` against full enumeration.
pub fn oracle_equivalence(prec: Precision) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let (mut err_pmf, mut err_real, mut err_complex, mut err_cum) =
        (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut done = 0;
    let mut resampled = 0;
    while done < ORACLE_TUPLES {
        let n: usize = rng.gen_range(1..=12);
        let beta: f64 = rng.gen_range(0.01..0.99);
        let p: f64 = 1.0 - rng.gen_range(0.0..0.95);
        let h: f64 = rng.gen_range(-1.0..=1.0);
        let (m, e) = match model(n, p, beta, h) {
            Ok(v) => v,
            Err(_) => {
                // beta_eff >= 1 for very small N p
                resampled += 1;
                continue;
            }
        };
        done += 1;

        let brute = brute_force_oracle(&m, Complex64::new(h, 0.0))?;
        let d = magnetization_pmf(&m, &e, h, prec);
        let bpmf = brute.pmf.expect("real field");
        for (a, b) in d.pmf().iter().zip(&bpmf) {
            err_pmf = worst(err_pmf, (a - b).abs() / b);
        }
        let lz = log_partition_exact(&m, &e, Complex64::new(h, 0.0), prec)?;
        err_real = worst(
            err_real,
            (lz - brute.log_z).norm() / brute.log_z.norm().max(1.0),
        );

        let y = rng.gen_range(-0.8..=0.8) * e.strip_halfwidth;
        let hc = Complex64::new(h, y);
        let bc = brute_force_oracle(&m, hc)?;
        let lc = log_partition_exact(&m, &e, hc, prec)?;
        err_complex = worst(
            err_complex,
            branch_distance(lc, bc.log_z) / bc.log_z.norm().max(1.0),
        );

        let ours = exact_cumulants(&d, 6)?;
        let theirs = cumulants_from_pmf(n, &bpmf, 6, prec);
        let k2 = theirs[1].abs();
        for (j, b) in theirs.iter().enumerate() {
            let a = ours.raw(j + 1);
            let scale = b.abs() + k2.powf((j + 1) as f64 / 2.0);
            if scale > 0.0 {
                err_cum = worst(err_cum, (a - b).abs() / scale);
            }
        }
    }
    let overall = [err_real, err_complex, err_cum]
        .into_iter()
        .fold(err_pmf, worst);
    Ok((
        overall <= ORACLE_RTOL,
        format!(
            "{ORACLE_TUPLES} tuples ({resampled} resampled with beta_eff >= 1); max rel err pmf {err_pmf:.1e}, \
             log Z real {err_real:.1e}, log Z complex {err_complex:.1e}, cumulants {err_cum:.1e}"
        ),
    ))
}

/// `p = 1` gives `log a = 0` and `beta_eff = beta`.
pub fn classical_reduction(_prec: Precision) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED + 1);
    let eps = f64::EPSILON;
    let (mut worst_a, mut worst_b) = (0.0_f64, 0.0_f64);
    for _ in 0..CLASSICAL_SAMPLES {
        let beta: f64 = rng.gen_range(1e-6..0.999_999);
        let n: i64 = rng.gen_range(1..=100_000);
        let (_, e) = model(n as usize, 1.0, beta, 0.0)?;
        worst_a = worst(worst_a, e.log_a.abs());
        worst_b = worst(worst_b, (e.beta_eff - beta).abs() / beta);
    }
    Ok((
        worst_a <= 4.0 * eps && worst_b <= 4.0 * eps,
        format!("{CLASSICAL_SAMPLES} samples; max |log a| {worst_a:.1e}, max rel |beta_eff - beta| {worst_b:.1e}"),
    ))
}

/// Quadrature of the Hubbard–Stratonovich integral on and off the real
/// line against the exact sum.
pub fn hubbard_stratonovich_identity(prec: Precision) -> Result<(bool, String)> {
    let mut max_gap = 0.0_f64;
    for n in [20, 40] {
        let (m, e) = model(n, 1.0, 0.5, 0.0)?;
        for h in [Complex64::new(0.3, 0.0), Complex64::new(0.2, 0.15)] {
            let exact = log_partition_exact(&m, &e, h, prec)?;
            for shift in [false, true] {
                let q = hs_quadrature_log_partition(&m, &e, h, shift)?;
                max_gap = worst(max_gap, branch_distance(q, exact));
            }
        }
    }
    Ok((
        max_gap <= 1e-7,
        format!("N in {{20, 40}}, max |log Z_quad - log Z_exact| {max_gap:.1e}"),
    ))
}

/// Residual, strip bound and curvature sign of the saddle on a 20x20 grid.
pub fn saddle_certificates(_prec: Precision) -> Result<(bool, String)> {
    let n = 400;
    let (_, e) = model(n, 1.0, 0.5, 0.0)?;
    let h0 = 0.0;
    let steps = 20;
    let (mut worst_residual, mut worst_im, mut worst_curv) = (0.0_f64, 0.0_f64, f64::NEG_INFINITY);
    for i in 0..steps {
        for j in 0..steps {
            let re = h0 - 0.3 + 0.6 * i as f64 / (steps - 1) as f64;
            let im = (-0.8 + 1.6 * j as f64 / (steps - 1) as f64) * e.strip_halfwidth;
            let h = Complex64::new(re, im);
            let sol = solve_saddle(&e, h, DEFAULT_TOLERANCE)?;
            let residual = (sol.s - e.beta_eff * (h + sol.s).tanh()).norm();
            worst_residual = worst(worst_residual, residual);
            worst_im = worst(worst_im, sol.s.im.abs());
            worst_curv = worst(worst_curv, sol.curvature.re);
        }
    }
    let passed = worst_residual <= 1e-13 && worst_im <= e.delta_n && worst_curv < 0.0;
    Ok((
        passed,
        format!(
            "N = {n}, 400 nodes; max residual {worst_residual:.1e}, max |Im s| {worst_im:.4} (delta_N {:.4}), max Re H {worst_curv:.4}",
            e.delta_n
        ),
    ))
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Contour cumulants against the exact recursion, and radius independence.
pub fn cross_method_cumulants(prec: Precision) -> Result<(bool, String)> {
    let (n, h0, order) = (200, 0.2, 6);
    let (m, e) = model(n, 1.0, 0.5, h0)?;
    let cfg = ContourConfig {
        h0,
        radius: radius_default(&e),
        nodes: 128,
        source: PressureSource::Exact,
    };
    let contour = cumulants_contour(&m, &e, &cfg, order, prec)?;
    let small = ContourConfig {
        radius: 0.6 * e.strip_halfwidth,
        ..cfg
    };
    let contour_small = cumulants_contour(&m, &e, &small, order, prec)?;
    let exact = exact_reports(&m, &e, order, prec)?;
    let mut worst_method = 0.0_f64;
    let mut worst_radius = 0.0_f64;
    for j in 0..order {
        worst_method = worst(
            worst_method,
            relative(contour[j].kappa_raw, exact[j].kappa_raw),
        );
        worst_radius = worst(
            worst_radius,
            relative(contour_small[j].kappa_raw, contour[j].kappa_raw),
        );
    }
    Ok((
        worst_method <= 1e-6 && worst_radius <= 1e-8,
        format!("N = {n}, j <= {order}; contour vs recursion {worst_method:.1e}, radius change {worst_radius:.1e}"),
    ))
}

/// Pilot calibration of `C~` at `N = 100` with `R = 0.9 w(beta)`.
pub fn pilot_constants(
    beta: f64,
    h0: f64,
    p_of_n: &dyn Fn(usize) -> f64,
    prec: Precision,
) -> Result<StatuleviciusConstants> {
    let r = radius_default(&EffectiveParams::from_beta(beta)?);
    let (m, e) = model(100, p_of_n(100), beta, h0)?;
    calibrate_statulevicius(&m, &e, r, 10, prec)
}

/// Variation `(max - min) / max` of a positive sequence; zero when all
/// values vanish.
fn variation(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max < 1e-12 {
        0.0
    } else {
        (max - min) / max
    }
}

pub fn statulevicius_scaling(prec: Precision) -> Result<(bool, String)> {
    let sizes = [400, 1600];
    let mut passed = true;
    let mut worst_margin = f64::INFINITY;
    let mut worst_variation = 0.0_f64;
    let mut cases = 0;
    for (beta, h0) in [(0.5, 0.0), (0.5, 0.3), (0.8, 0.1)] {
        for dilute in [false, true] {
            let p_of_n = move |n: usize| if dilute { (n as f64).powf(-0.25) } else { 1.0 };
            let constants = pilot_constants(beta, h0, &p_of_n, prec)?;
            let mut scaled = [vec![], vec![]];
            for &n in &sizes {
                let (m, e) = model(n, p_of_n(n), beta, h0)?;
                let reports = exact_reports(&m, &e, 10, prec)?;
                let summary = statulevicius_check(&reports, &constants, n);
                passed &= summary.satisfied;
                for entry in &summary.entries {
                    worst_margin = worst_margin.min(entry.margin / entry.bound);
                }
                scaled[0].push(scaled_cumulant(reports[2].kappa_std, 3, n));
                scaled[1].push(scaled_cumulant(reports[3].kappa_std, 4, n));
                cases += 1;
            }
            for s in &scaled {
                let v = variation(s);
                worst_variation = worst(worst_variation, v);
                passed &= v <= 0.5;
            }
        }
    }
    Ok((
        passed,
        format!(
            "{cases} (beta, h0, p, N) cases, j <= 10; min margin/bound {worst_margin:.3}, \
             max variation of |kappa_j(m_N)| N^((j-2)/2) for j = 3, 4: {worst_variation:.3}"
        ),
    ))
}

/// Root of `m = tanh(h + beta m)` by plain bisection.
pub fn mean_field_bisection(beta: f64, h: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - (h + beta * mid).tanh() > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn mean_variance_limits(prec: Precision) -> Result<(bool, String)> {
    let (n, beta, h) = (1600, 0.5, 0.2);
    let d = dist(n, 1.0, beta, h, prec)?;
    let c = exact_cumulants(&d, 2)?;
    let m = mean_field_bisection(beta, h);
    let chi = susceptibility(beta, m);
    let err_mean = (c.raw(1) / n as f64 - m).abs();
    let err_var = (c.raw(2) / n as f64 - chi).abs();
    Ok((
        err_mean <= 1e-2 && err_var <= 3e-2,
        format!("N = {n}; |kappa_1/N - m| {err_mean:.2e}, |kappa_2/N - chi| {err_var:.2e}"),
    ))
}

pub fn berry_esseen_trend(prec: Precision) -> Result<(bool, String)> {
    let dists = [100, 400, 1600]
        .iter()
        .map(|&n| dist(n, 1.0, 0.5, 0.0, prec))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&MagnetizationDistribution> = dists.iter().collect();
    let report = berry_esseen_report(&refs);
    let ratios_ok = report.ratios.iter().all(|r| (0.35..=0.65).contains(r));
    let scaled: Vec<String> = report
        .points
        .iter()
        .map(|p| format!("{:.4}", p.ks_times_sqrt_n))
        .collect();
    let ratios: Vec<String> = report.ratios.iter().map(|r| format!("{r:.3}")).collect();
    Ok((
        ratios_ok && report.trend_ok,
        format!(
            "ks sqrt(N) = [{}], consecutive ratios [{}]",
            scaled.join(", "),
            ratios.join(", ")
        ),
    ))
}

/// `|psi_N(h) - Phi(s(h), h)| p N` along `p = N^{-1/4}`.
pub fn pressure_convergence_rate(prec: Precision) -> Result<(bool, String)> {
    let beta = 0.5;
    let mut passed = true;
    let mut parts = Vec::new();
    for h in [0.0, 0.2] {
        let mut scaled = Vec::new();
        for n in [256usize, 1024, 4096] {
            let p = (n as f64).powf(-0.25);
            let (m, e) = model(n, p, beta, h)?;
            let hz = Complex64::new(h, 0.0);
            let psi = log_partition_exact(&m, &e, hz, prec)?.re / n as f64;
            let limit = limit_pressure(beta, hz)?.re;
            scaled.push((psi - limit).abs() * p * n as f64);
        }
        let max = scaled.iter().copied().fold(0.0, f64::max);
        let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        passed &= max.is_finite() && min > 0.0 && max / min <= 3.0;
        let s: Vec<String> = scaled.iter().map(|v| format!("{v:.4}")).collect();
        parts.push(format!("h = {h}: [{}]", s.join(", ")));
    }
    Ok((passed, format!("scaled errors {}", parts.join("; "))))
}

pub fn limit_theorem_checks(prec: Precision) -> Result<(bool, String)> {
    let beta = 0.5;
    let mut notes = Vec::new();

    // concentration with calibrated constants
    let mut violations = 0;
    for (b, h0) in [(0.5, 0.0), (0.5, 0.3), (0.8, 0.1)] {
        for dilute in [false, true] {
            let p_of_n = move |n: usize| if dilute { (n as f64).powf(-0.25) } else { 1.0 };
            let constants = pilot_constants(b, h0, &p_of_n, prec)?;
            for n in [400, 1600] {
                let d = dist(n, p_of_n(n), b, h0, prec)?;
                violations += concentration_check(
                    &d,
                    constants.c_tilde,
                    constants.r,
                    &default_concentration_grid(),
                )
                .violations;
            }
        }
    }
    notes.push(format!("concentration violations {violations}"));

    // moderate deviations at h = 0
    let mdp_sizes = [400, 1600, 6400];
    let dists = mdp_sizes
        .iter()
        .map(|&n| dist(n, 1.0, beta, 0.0, prec))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&MagnetizationDistribution> = dists.iter().collect();
    let mdp = mdp_diagnostic(&refs, &default_mdp_scale, &default_mdp_grid())?;
    let errs: Vec<String> = mdp
        .max_errors
        .iter()
        .map(|(_, e)| format!("{e:.4}"))
        .collect();
    notes.push(format!("MDP errors [{}]", errs.join(", ")));

    // Cramer ratio at N = 400 and 1600
    let sup: Vec<f64> = dists[..2]
        .iter()
        .map(|d| cramer_diagnostic(d, &default_cramer_grid(d.n())).map(|r| r.ratio_sup))
        .collect::<Result<Vec<_>>>()?;
    let cramer_ok = sup[0] > 0.0 && sup[1] > 0.0 && (0.5..=2.0).contains(&(sup[1] / sup[0]));
    notes.push(format!("Cramer sup [{:.4}, {:.4}]", sup[0], sup[1]));

    // mod-Gaussian at h = 0.3
    let h0 = 0.3;
    let constants = pilot_constants(beta, h0, &|_| 1.0, prec)?;
    let mg_dists = mdp_sizes
        .iter()
        .map(|&n| dist(n, 1.0, beta, h0, prec))
        .collect::<Result<Vec<_>>>()?;
    let last = mg_dists.last().expect("nonempty schedule");
    let c3 = exact_cumulants(last, 3)?.standardized(3) * statulevicius_delta(&constants, last.n());
    let mg: Vec<f64> = mg_dists
        .iter()
        .map(|d| {
            mod_gaussian_diagnostic(
                d,
                statulevicius_delta(&constants, d.n()),
                c3,
                &default_mod_gaussian_grid(),
            )
            .sup_error
        })
        .collect();
    let mg_s: Vec<String> = mg.iter().map(|e| format!("{e:.4}")).collect();
    notes.push(format!(
        "mod-Gaussian sup errors [{}] (c3 = {c3:.4})",
        mg_s.join(", ")
    ));

    let passed = violations == 0 && mdp.trend_ok && non_increasing(&mg, TREND_SLACK) && cramer_ok;
    Ok((passed, notes.join("; ")))
}

/// Convenience for callers that only need a yes/no answer.
pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}
