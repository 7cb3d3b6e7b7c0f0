//! Cumulants of the magnetization by Cauchy-contour differentiation of the
//! pressure, and the Statulevičius bound on their growth.
//!
//! With `psi_N(h) = log Z_N(h) / N`, `kappa_j(M_N) = N psi_N^{(j)}(h0)`. The
//! derivatives are read off the Fourier coefficients of `log Z` sampled on
//! the circle `h0 + R e^{i theta}`:
//! `kappa_j = j!/R^j (1/K) sum_k log Z(h_k) e^{-i j theta_k}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{
    exact_cumulants, magnetization_pmf, ExactCumulants, MagnetizationDistribution,
    MAX_CUMULANT_ORDER,
};
use crate::params::{EffectiveParams, ModelParams};
use crate::saddle::{phi, solve_saddle, DEFAULT_TOLERANCE};
use crate::xprec::{Precision, XComplex};

pub const MIN_NODES: usize = 64;
pub const NODES_PER_ORDER: usize = 8;
/// Above this size the asymptotic pressure is the default source.
pub const EXACT_SOURCE_MAX_N: usize = 5000;
/// Tolerance on `Im kappa_j` for real centers, relative to `max(|kappa_j|, N)`.
pub const IMAGINARY_RESIDUE_TOLERANCE: f64 = 1e-8;
const DEFAULT_RADIUS_FRACTION: f64 = 0.9;
/// Bisection depth for phase tracking between neighbouring nodes.
const MAX_UNWRAP_DEPTH: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PressureSource {
    /// Exact `log Z` from the collapsed sum, phase tracked along the circle.
    Exact,
    /// Leading saddle-point term `N Phi_N(s_N(h), h)`.
    Asymptotic,
}

impl PressureSource {
    pub fn default_for(n: usize) -> Self {
        if n <= EXACT_SOURCE_MAX_N {
            PressureSource::Exact
        } else {
            PressureSource::Asymptotic
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CumulantMethod {
    Contour,
    ExactRecursion,
}

impl CumulantMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CumulantMethod::Contour => "contour",
            CumulantMethod::ExactRecursion => "exact-recursion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourConfig {
    pub h0: f64,
    pub radius: f64,
    pub nodes: usize,
    pub source: PressureSource,
}

impl ContourConfig {
    /// Default radius and node count for cumulants up to order `order`.
    pub fn new(eff: &EffectiveParams, n: usize, h0: f64, order: usize) -> Self {
        Self {
            h0,
            radius: radius_default(eff),
            nodes: required_nodes(order),
            source: PressureSource::default_for(n),
        }
    }

    pub fn validate(&self, eff: &EffectiveParams, order: usize) -> Result<()> {
        if order == 0 || order > MAX_CUMULANT_ORDER {
            return Err(Error::OrderTooHigh {
                requested: order,
                max: MAX_CUMULANT_ORDER,
            });
        }
        if !(self.radius > 0.0 && self.radius < eff.strip_halfwidth) {
            return Err(Error::ContourExitsStrip {
                radius: self.radius,
                halfwidth: eff.strip_halfwidth,
            });
        }
        let required = required_nodes(order);
        if self.nodes < required {
            return Err(Error::TooFewNodes {
                nodes: self.nodes,
                required,
            });
        }
        if !self.h0.is_finite() {
            return Err(Error::NonFiniteField(self.h0));
        }
        Ok(())
    }
}

pub fn required_nodes(order: usize) -> usize {
    MIN_NODES.max(NODES_PER_ORDER * order)
}

/// `0.9 * (arccos sqrt(beta_eff) - sqrt(beta_eff (1 - beta_eff)))`.
pub fn radius_default(eff: &EffectiveParams) -> f64 {
    DEFAULT_RADIUS_FRACTION * eff.strip_halfwidth
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantReport {
    pub j: usize,
    /// `kappa_j(M_N)`
    pub kappa_raw: f64,
    /// `kappa_j(m_N)`, with `m_N = (M_N - kappa_1) / sqrt(kappa_2)`
    pub kappa_std: f64,
    /// `j! / Delta^{j-2}`, `Delta = (R / C~) sqrt(N)`; set for `j >= 3`
    pub bound: Option<f64>,
    pub margin: Option<f64>,
    pub method: CumulantMethod,
}

fn standardize(j: usize, kappa: f64, kappa2: f64) -> f64 {
    match j {
        1 => 0.0,
        2 => 1.0,
        _ => kappa / kappa2.powf(j as f64 / 2.0),
    }
}

fn reports_from_raw(raw: &[f64], method: CumulantMethod) -> Vec<CumulantReport> {
    let kappa2 = raw.get(1).copied().unwrap_or(f64::NAN);
    raw.iter()
        .enumerate()
        .map(|(i, &kappa)| CumulantReport {
            j: i + 1,
            kappa_raw: kappa,
            kappa_std: standardize(i + 1, kappa, kappa2),
            bound: None,
            margin: None,
            method,
        })
        .collect()
}

pub fn reports_from_exact(cumulants: &ExactCumulants) -> Vec<CumulantReport> {
    (1..=cumulants.order())
        .map(|j| CumulantReport {
            j,
            kappa_raw: cumulants.raw(j),
            kappa_std: cumulants.standardized(j),
            bound: None,
            margin: None,
            method: CumulantMethod::ExactRecursion,
        })
        .collect()
}

/// Exact-recursion reports at the field `params.h0()`.
pub fn exact_reports(
    params: &ModelParams,
    eff: &EffectiveParams,
    order: usize,
    prec: Precision,
) -> Result<Vec<CumulantReport>> {
    let dist = magnetization_pmf(params, eff, params.h0(), prec);
    Ok(reports_from_exact(&exact_cumulants(&dist, order)?))
}

/// Cumulants `kappa_1..kappa_order` of `M_N` by contour integration.
pub fn cumulants_contour(
    params: &ModelParams,
    eff: &EffectiveParams,
    cfg: &ContourConfig,
    order: usize,
    prec: Precision,
) -> Result<Vec<CumulantReport>> {
    cfg.validate(eff, order)?;
    let raw = match cfg.source {
        PressureSource::Exact => contour_exact(params, eff, cfg, order, prec)?,
        PressureSource::Asymptotic => contour_asymptotic(params, eff, cfg, order)?,
    };
    let n = params.n() as f64;
    for (i, kappa) in raw.iter().enumerate() {
        let tolerance = IMAGINARY_RESIDUE_TOLERANCE * kappa.re.abs().max(n);
        if kappa.im.abs() > tolerance {
            return Err(Error::ImaginaryResidueTooLarge {
                order: i + 1,
                residue: kappa.im.abs(),
                tolerance,
            });
        }
    }
    let real: Vec<f64> = raw.iter().map(|k| k.re).collect();
    Ok(reports_from_raw(&real, CumulantMethod::Contour))
}

/// On the circle `|E[exp(u (M - c))]|` dips to about `exp(-kappa_2 R^2 / 2)`
/// through cancellation, so the working precision grows with `kappa_2 R^2`.
fn contour_precision(
    params: &ModelParams,
    eff: &EffectiveParams,
    cfg: &ContourConfig,
    prec: Precision,
) -> Precision {
    let h0 = Complex64::new(cfg.h0, 0.0);
    let kappa2 = match solve_saddle(eff, h0, DEFAULT_TOLERANCE) {
        Ok(sol) => {
            let m = (h0 + sol.s).tanh().re;
            params.n() as f64 * crate::saddle::susceptibility(eff.beta_eff, m)
        }
        Err(_) => params.n() as f64 / (1.0 - eff.beta_eff),
    };
    let lost = kappa2 * cfg.radius * cfg.radius / (2.0 * std::f64::consts::LN_10);
    Precision::from_digits(prec.digits().max(prec.digits() + lost.ceil() as u32))
}

/// Samples `log E_{h0}[exp(u (M_N - c))] = log Z(h0 + u) - log Z(h0) - u c` on
/// the circle `|u| = R` in extended precision, with `c` the saddle-point mean.
fn contour_exact(
    params: &ModelParams,
    eff: &EffectiveParams,
    cfg: &ContourConfig,
    order: usize,
    prec: Precision,
) -> Result<Vec<Complex64>> {
    let n = params.n();
    let prec = contour_precision(params, eff, cfg, prec);
    let dist = magnetization_pmf(params, eff, cfg.h0, prec);
    let h0 = Complex64::new(cfg.h0, 0.0);
    let saddle = solve_saddle(eff, h0, DEFAULT_TOLERANCE)?;
    let center = prec.float(n as f64 * (h0 + saddle.s).tanh().re);
    let radius = prec.float(cfg.radius);
    let k = cfg.nodes;
    let two_pi = prec.pi() * 2u32;
    let theta = |num: u64, den: u64| Float::with_val(prec.bits(), &two_pi * num) / den;

    let sample = |angle: &Float| -> (XComplex, PhaseSample) {
        let u = XComplex::cis(angle).scale(&radius);
        let (value, derivative) = dist.shifted_mgf_with_derivative(&u, &center);
        // d/dtheta arg = Re(u g'(u)), g' = E[(M - c) e^{u(M - c)}] / E[e^{u(M - c)}]
        let slope = u.mul(&derivative.div(&value)).re.to_f64();
        let phase = PhaseSample {
            arg: value.arg().to_f64(),
            slope,
        };
        (value, phase)
    };
    let samples: Vec<(XComplex, PhaseSample)> = (0..k as u64)
        .into_par_iter()
        .map(|i| sample(&theta(i, k as u64)))
        .collect();
    let (values, phases): (Vec<XComplex>, Vec<PhaseSample>) = samples.into_iter().unzip();

    let unwrapped = unwrap_phase(&values, &phases, &|a: &Float| sample(a).1, prec, &theta)?;

    // Fourier coefficients a_j = (1/K) sum_k g_k e^{-i j theta_k}
    let mut out = Vec::with_capacity(order);
    let mut factorial = prec.float(1);
    let mut radius_pow = prec.float(1);
    for j in 1..=order as u64 {
        factorial *= j;
        radius_pow *= &radius;
        let terms: Vec<XComplex> = (0..k)
            .into_par_iter()
            .map(|i| {
                let g = XComplex::new(values[i].abs().ln(), unwrapped[i].clone());
                let angle = -theta((j * i as u64) % k as u64, k as u64);
                g.mul(&XComplex::cis(&angle))
            })
            .collect();
        let mut sum = XComplex::zero(prec);
        for t in &terms {
            sum.add_assign(t);
        }
        let scale = Float::with_val(prec.bits(), &factorial / &radius_pow) / k as u64;
        let mut kappa = sum.scale(&scale);
        if j == 1 {
            kappa.re += &center;
        }
        out.push(kappa.to_c64());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct PhaseSample {
    /// principal argument
    arg: f64,
    /// derivative of the continuous argument with respect to theta
    slope: f64,
}

/// Continuous branch of `arg` along the closed node sequence.
///
/// A nonzero winding number around the circle means a zero of `Z` inside
/// the disc and is reported as a failure.
fn unwrap_phase(
    values: &[XComplex],
    phases: &[PhaseSample],
    phase_at: &(dyn Fn(&Float) -> PhaseSample + Sync),
    prec: Precision,
    theta: &dyn Fn(u64, u64) -> Float,
) -> Result<Vec<Float>> {
    let k = values.len();
    let mut turns = vec![0i64; k];
    let mut phase = phases[0].arg;
    for i in 0..k {
        let next = (i + 1) % k;
        phase += track_increment(
            (i as u64, k as u64),
            phases[i],
            phases[next],
            phase_at,
            theta,
            MAX_UNWRAP_DEPTH,
        )?;
        if next == 0 {
            if (phase - phases[0].arg).abs() > PI {
                return Err(Error::PhaseUnwrapFailure { theta: 0.0 });
            }
        } else {
            turns[next] = ((phase - phases[next].arg) / (2.0 * PI)).round() as i64;
        }
    }
    let two_pi = prec.pi() * 2u32;
    Ok(values
        .iter()
        .zip(&turns)
        .map(|(v, &t)| v.arg() + Float::with_val(prec.bits(), &two_pi * t))
        .collect())
}

/// Increment of the continuous argument over the arc `[num/den, (num+1)/den]`
/// of a full turn.
///
/// The multiple of `2 pi` is fixed by the trapezoid prediction from the end
/// slopes; arcs on which the slope varies too much, or the prediction is
/// ambiguous, are bisected.
fn track_increment(
    arc: (u64, u64),
    a: PhaseSample,
    b: PhaseSample,
    phase_at: &(dyn Fn(&Float) -> PhaseSample + Sync),
    theta: &dyn Fn(u64, u64) -> Float,
    depth: u32,
) -> Result<f64> {
    let (num, den) = arc;
    let width = 2.0 * PI / den as f64;
    let predicted = 0.5 * (a.slope + b.slope) * width;
    let principal = wrap(b.arg - a.arg);
    let delta = principal + 2.0 * PI * ((predicted - principal) / (2.0 * PI)).round();
    let smooth = (a.slope - b.slope).abs() * width < PI / 4.0;
    if smooth && (delta - predicted).abs() < PI / 4.0 {
        return Ok(delta);
    }
    if depth == 0 {
        return Err(Error::PhaseUnwrapFailure {
            theta: 2.0 * PI * num as f64 / den as f64,
        });
    }
    let mid = phase_at(&theta(2 * num + 1, 2 * den));
    let left = track_increment((2 * num, 2 * den), a, mid, phase_at, theta, depth - 1)?;
    let right = track_increment((2 * num + 1, 2 * den), mid, b, phase_at, theta, depth - 1)?;
    Ok(left + right)
}

fn wrap(x: f64) -> f64 {
    x - 2.0 * PI * (x / (2.0 * PI)).round()
}

/// Samples `N Phi_N(s_N(h), h)` on the circle in double precision.
fn contour_asymptotic(
    params: &ModelParams,
    eff: &EffectiveParams,
    cfg: &ContourConfig,
    order: usize,
) -> Result<Vec<Complex64>> {
    let n = params.n() as f64;
    let k = cfg.nodes;
    let nodes: Vec<Complex64> = (0..k)
        .map(|i| Complex64::from_polar(cfg.radius, 2.0 * PI * i as f64 / k as f64))
        .collect();
    let values = nodes
        .par_iter()
        .map(|&u| {
            let h = Complex64::new(cfg.h0, 0.0) + u;
            let sol = solve_saddle(eff, h, DEFAULT_TOLERANCE)?;
            Ok(n * phi(sol.s, h, eff.beta_eff)?)
        })
        .collect::<Result<Vec<Complex64>>>()?;

    let mut out = Vec::with_capacity(order);
    let mut factorial = 1.0;
    for j in 1..=order {
        factorial *= j as f64;
        let sum: Complex64 = values
            .iter()
            .enumerate()
            .map(|(i, g)| {
                g * Complex64::from_polar(1.0, -2.0 * PI * ((j * i) % k) as f64 / k as f64)
            })
            .sum();
        out.push(sum * factorial / (cfg.radius.powi(j as i32) * k as f64));
    }
    Ok(out)
}

/// Constants of the Statulevičius bound
/// `|kappa_j(m_N)| <= j! / ((R / C~) sqrt(N))^{j-2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatuleviciusConstants {
    pub r: f64,
    /// Smallest `C` with `|kappa_j| <= C j!/(R sqrt N)^{j-2}` at the pilot size.
    pub c: f64,
    /// Smallest `C~ >= 1` with `|kappa_j| <= j! C~^{j-2}/(R sqrt N)^{j-2}`.
    pub c_tilde: f64,
    pub pilot_n: usize,
}

/// Calibrates `C` and `C~` from the standardized cumulants `j = 3..` of a
/// pilot run.
pub fn calibrate_from_reports(
    reports: &[CumulantReport],
    r: f64,
    pilot_n: usize,
) -> StatuleviciusConstants {
    let scale = r * (pilot_n as f64).sqrt();
    let mut c: f64 = 0.0;
    let mut c_tilde: f64 = 1.0;
    for rep in reports.iter().filter(|rep| rep.j >= 3) {
        let ratio = rep.kappa_std.abs() * scale.powi(rep.j as i32 - 2) / factorial(rep.j);
        c = c.max(ratio);
        c_tilde = c_tilde.max(ratio.powf(1.0 / (rep.j - 2) as f64));
    }
    StatuleviciusConstants {
        r,
        c,
        c_tilde,
        pilot_n,
    }
}

/// Calibration from exact cumulants at the pilot model `pilot`.
pub fn calibrate_statulevicius(
    pilot: &ModelParams,
    eff: &EffectiveParams,
    r: f64,
    max_order: usize,
    prec: Precision,
) -> Result<StatuleviciusConstants> {
    let reports = exact_reports(pilot, eff, max_order, prec)?;
    Ok(calibrate_from_reports(&reports, r, pilot.n()))
}

fn factorial(j: usize) -> f64 {
    (1..=j).map(|i| i as f64).product()
}

pub fn statulevicius_bound(j: usize, r: f64, c_tilde: f64, n: usize) -> f64 {
    let delta = r / c_tilde * (n as f64).sqrt();
    factorial(j) / delta.powi(j as i32 - 2)
}

/// Fills `bound` and `margin` for `j >= 3`.
pub fn with_bounds(
    reports: &[CumulantReport],
    constants: &StatuleviciusConstants,
    n: usize,
) -> Vec<CumulantReport> {
    reports
        .iter()
        .map(|rep| {
            let mut rep = *rep;
            if rep.j >= 3 {
                let bound = statulevicius_bound(rep.j, constants.r, constants.c_tilde, n);
                rep.bound = Some(bound);
                rep.margin = Some(bound - rep.kappa_std.abs());
            }
            rep
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatuleviciusEntry {
    pub j: usize,
    pub kappa_std: f64,
    pub bound: f64,
    pub margin: f64,
    /// `C j! / (R sqrt N)^{j-2}`
    pub intermediate_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatuleviciusSummary {
    pub n: usize,
    pub constants: StatuleviciusConstants,
    pub entries: Vec<StatuleviciusEntry>,
    pub satisfied: bool,
    /// Order with the largest `|kappa_j| / bound`.
    pub tightest_order: Option<usize>,
}

pub fn statulevicius_check(
    reports: &[CumulantReport],
    constants: &StatuleviciusConstants,
    n: usize,
) -> StatuleviciusSummary {
    let scale = constants.r * (n as f64).sqrt();
    let entries: Vec<StatuleviciusEntry> = reports
        .iter()
        .filter(|rep| rep.j >= 3)
        .map(|rep| {
            let bound = statulevicius_bound(rep.j, constants.r, constants.c_tilde, n);
            StatuleviciusEntry {
                j: rep.j,
                kappa_std: rep.kappa_std,
                bound,
                margin: bound - rep.kappa_std.abs(),
                intermediate_bound: constants.c * factorial(rep.j) / scale.powi(rep.j as i32 - 2),
            }
        })
        .collect();
    let satisfied = entries.iter().all(|e| e.margin >= 0.0);
    let tightest_order = entries
        .iter()
        .max_by(|a, b| {
            (a.kappa_std.abs() / a.bound)
                .partial_cmp(&(b.kappa_std.abs() / b.bound))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|e| e.j);
    StatuleviciusSummary {
        n,
        constants: *constants,
        entries,
        satisfied,
        tightest_order,
    }
}

/// `|kappa_j(m_N)| N^{(j-2)/2}`, bounded in `N` under the Statulevičius condition.
pub fn scaled_cumulant(kappa_std: f64, j: usize, n: usize) -> f64 {
    kappa_std.abs() * (n as f64).powf((j as f64 - 2.0) / 2.0)
}

/// Exact-recursion reports from an already computed distribution.
pub fn reports_from_distribution(
    dist: &MagnetizationDistribution,
    order: usize,
) -> Result<Vec<CumulantReport>> {
    Ok(reports_from_exact(&exact_cumulants(dist, order)?))
}
