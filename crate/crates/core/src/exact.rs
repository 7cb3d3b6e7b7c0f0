//! Exact finite-`N` computations for the annealed model.
//!
//! After integrating out the edges, the weight of a configuration depends on
//! the spins only through `M_N`, so the partition function collapses to a
//! sum over `k`, the number of `-1` spins:
//!
//! `Z = a^{N^2} sum_k C(N,k) exp(beta_eff/(2N) (N-2k)^2 + h (N-2k))`.
//!
//! Everything here is evaluated in extended precision; this module is the
//! ground truth the asymptotic machinery is checked against.

use num_complex::Complex64;
use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{EffectiveParams, ModelParams};
use crate::xprec::{self, Precision, XComplex};

pub const MAX_CUMULANT_ORDER: usize = 16;
pub const BRUTE_FORCE_MAX_N: usize = 12;
/// `|sum| < NEAR_ZERO_RATIO * max term` is treated as a zero of `Z`.
pub const NEAR_ZERO_RATIO: f64 = 1e-30;

/// `ln k!` for `k = 0..=n`.
fn log_factorials(n: usize, prec: Precision) -> Vec<Float> {
    (0..=n)
        .map(|k| prec.float(k as u64 + 1).ln_gamma())
        .collect()
}

/// Real part of the collapsed log-weights, `log C(N,k) + c M_k^2 + h M_k`.
fn collapsed_log_weights(n: usize, beta_eff: f64, h: f64, prec: Precision) -> Vec<Float> {
    let lf = log_factorials(n, prec);
    let coef = prec.float(beta_eff) / (2 * n as u64);
    let h = prec.float(h);
    (0..=n)
        .map(|k| {
            let m = magnetization_of(n, k);
            // lf[k] + lf[n-k] commutes exactly, keeping l_k == l_{n-k} at h = 0
            let denom = Float::with_val(prec.bits(), &lf[k] + &lf[n - k]);
            let mut l = Float::with_val(prec.bits(), &lf[n] - &denom);
            l += Float::with_val(prec.bits(), &coef * (m * m));
            l += Float::with_val(prec.bits(), &h * m);
            l
        })
        .collect()
}

/// `M = N - 2k`.
pub fn magnetization_of(n: usize, k: usize) -> i64 {
    n as i64 - 2 * k as i64
}

/// Exact law of `M_N` on `{N, N-2, ..., -N}`, indexed by the number `k` of
/// down spins.
#[derive(Debug, Clone)]
pub struct MagnetizationDistribution {
    n: usize,
    h: f64,
    prec: Precision,
    log_weights: Vec<Float>,
    log_norm: Float,
    pmf_ext: Vec<Float>,
    pmf: Vec<f64>,
    mean: Float,
    variance: Float,
}

impl MagnetizationDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    pub fn log_weights(&self) -> &[Float] {
        &self.log_weights
    }

    pub fn log_norm(&self) -> &Float {
        &self.log_norm
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn pmf_ext(&self) -> &[Float] {
        &self.pmf_ext
    }

    pub fn magnetization(&self, k: usize) -> i64 {
        magnetization_of(self.n, k)
    }

    pub fn mean(&self) -> &Float {
        &self.mean
    }

    pub fn variance(&self) -> &Float {
        &self.variance
    }

    pub fn std_dev(&self) -> Float {
        self.variance.clone().sqrt()
    }

    /// Standardized atom `(M_k - E M) / sd(M)`.
    pub fn standardized_atom(&self, k: usize) -> Float {
        let bits = self.prec.bits();
        let centered = Float::with_val(bits, self.magnetization(k)) - &self.mean;
        centered / self.std_dev()
    }

    /// Largest standardized atom (the all-up configuration).
    pub fn max_standardized_atom(&self) -> f64 {
        self.standardized_atom(0).to_f64()
    }

    /// `P(m_N >= x)` (or `P(m_N > x)`) summed smallest term first.
    pub fn tail_prob_ext(&self, x: f64, side: TailSide) -> Float {
        let sd = self.std_dev();
        let bits = self.prec.bits();
        let threshold = Float::with_val(bits, &sd * x) + &self.mean;
        let terms = (0..=self.n)
            .filter(|&k| {
                let m = Float::with_val(bits, self.magnetization(k));
                match side {
                    TailSide::AtLeast => m >= threshold,
                    TailSide::Above => m > threshold,
                }
            })
            .map(|k| self.pmf_ext[k].clone())
            .collect();
        xprec::sum_sorted(terms, self.prec)
    }

    /// `E[exp(u (M_N - center))]` for complex `u`.
    ///
    /// Successive atoms differ by a factor `exp(-2u)`, so only two complex
    /// exponentials are evaluated.
    pub fn shifted_mgf(&self, u: &XComplex, center: &Float) -> XComplex {
        self.shifted_mgf_with_derivative(u, center).0
    }

    /// `E[exp(u (M_N - c))]` together with `E[(M_N - c) exp(u (M_N - c))]`.
    pub fn shifted_mgf_with_derivative(
        &self,
        u: &XComplex,
        center: &Float,
    ) -> (XComplex, XComplex) {
        let bits = self.prec.bits();
        let top = Float::with_val(bits, self.n as u64) - center;
        let mut factor = u.scale(&top).exp();
        let ratio = u.scale(&self.prec.float(-2)).exp();
        let mut acc = XComplex::zero(self.prec);
        let mut acc_d = XComplex::zero(self.prec);
        for k in 0..=self.n {
            let term = factor.scale(&self.pmf_ext[k]);
            let d = Float::with_val(bits, self.magnetization(k)) - center;
            acc_d.add_assign(&term.scale(&d));
            acc.add_assign(&term);
            factor = factor.mul(&ratio);
        }
        (acc, acc_d)
    }

    /// Rows `(k, M, log_weight, pmf)` for export.
    pub fn rows(&self) -> impl Iterator<Item = (usize, i64, &Float, f64)> + '_ {
        (0..=self.n).map(move |k| (k, self.magnetization(k), &self.log_weights[k], self.pmf[k]))
    }
}

/// Which side of the threshold an atom sitting exactly on it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailSide {
    /// `P(m_N >= x)`
    AtLeast,
    /// `P(m_N > x)`
    Above,
}

/// Exact law of `M_N` at real field `h`.
pub fn magnetization_pmf(
    params: &ModelParams,
    eff: &EffectiveParams,
    h: f64,
    prec: Precision,
) -> MagnetizationDistribution {
    let n = params.n();
    let bits = prec.bits();
    let log_weights = collapsed_log_weights(n, eff.beta_eff, h, prec);
    let log_norm = xprec::log_sum_exp(&log_weights, prec);
    let pmf_ext: Vec<Float> = log_weights
        .iter()
        .map(|l| Float::with_val(bits, l - &log_norm).exp())
        .collect();
    let pmf = pmf_ext.iter().map(Float::to_f64).collect();

    let mut mean = prec.zero();
    for (k, w) in pmf_ext.iter().enumerate() {
        mean += Float::with_val(bits, w * magnetization_of(n, k));
    }
    let mut variance = prec.zero();
    for (k, w) in pmf_ext.iter().enumerate() {
        let d = Float::with_val(bits, magnetization_of(n, k)) - &mean;
        variance += Float::with_val(bits, w * d.square());
    }

    MagnetizationDistribution {
        n,
        h,
        prec,
        log_weights,
        log_norm,
        pmf_ext,
        pmf,
        mean,
        variance,
    }
}

/// `log Z_{N,p,beta}(h)` for complex `h`.
///
/// The imaginary part is `Im(h) M_* + arg(sum)`, where `M_*` is the atom
/// with the largest real log-weight. It is a continuous branch in `h` as
/// long as `M_*` does not change.
pub fn log_partition_exact(
    params: &ModelParams,
    eff: &EffectiveParams,
    h: Complex64,
    prec: Precision,
) -> Result<Complex64> {
    let n = params.n();
    let bits = prec.bits();
    let real = collapsed_log_weights(n, eff.beta_eff, h.re, prec);
    let (k_star, max) = real
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(k, v)| (k, v.clone()))
        .expect("at least one atom");
    let im_h = prec.float(h.im);
    let m_star = magnetization_of(n, k_star);

    let mut sum = XComplex::zero(prec);
    for (k, l) in real.iter().enumerate() {
        let dm = magnetization_of(n, k) - m_star;
        let z = XComplex::new(
            Float::with_val(bits, l - &max),
            Float::with_val(bits, &im_h * dm),
        );
        sum.add_assign(&z.exp());
    }
    if sum.abs() < NEAR_ZERO_RATIO {
        return Err(Error::PartitionNearZero { re: h.re, im: h.im });
    }
    let log_sum = sum.ln();
    let prefactor = (n as f64) * (n as f64) * eff.log_a;
    let re = Float::with_val(bits, &max + &log_sum.re) + prefactor;
    let im = Float::with_val(bits, &im_h * m_star) + &log_sum.im;
    Ok(Complex64::new(re.to_f64(), im.to_f64()))
}

/// Cumulants of `M_N` and of the standardized `m_N`.
#[derive(Debug, Clone)]
pub struct ExactCumulants {
    order: usize,
    raw: Vec<Float>,
    standardized: Vec<Float>,
}

impl ExactCumulants {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `kappa_j(M_N)` for `1 <= j <= order`.
    pub fn raw(&self, j: usize) -> f64 {
        self.raw[j - 1].to_f64()
    }

    pub fn raw_ext(&self, j: usize) -> &Float {
        &self.raw[j - 1]
    }

    /// `kappa_j(m_N)`; 0 and 1 for `j = 1, 2`.
    pub fn standardized(&self, j: usize) -> f64 {
        self.standardized[j - 1].to_f64()
    }

    pub fn standardized_ext(&self, j: usize) -> &Float {
        &self.standardized[j - 1]
    }
}

/// Cumulants up to order `order` from central moments about the exact mean.
pub fn exact_cumulants(dist: &MagnetizationDistribution, order: usize) -> Result<ExactCumulants> {
    if order == 0 || order > MAX_CUMULANT_ORDER {
        return Err(Error::OrderTooHigh {
            requested: order,
            max: MAX_CUMULANT_ORDER,
        });
    }
    let prec = dist.prec;
    let bits = prec.bits();
    let top = order.max(2);

    // central[j] = E[(M - mean)^j]
    let mut central = vec![prec.zero(); top + 1];
    central[0] = prec.float(1);
    for k in 0..=dist.n {
        let d = Float::with_val(bits, dist.magnetization(k)) - &dist.mean;
        let mut power = Float::with_val(bits, &dist.pmf_ext[k]);
        for c in central.iter_mut().skip(1) {
            power *= &d;
            *c += &power;
        }
    }

    let binom = binomial_table(top);
    let mut kappa: Vec<Float> = vec![prec.zero(); top + 1];
    for j in 1..=top {
        let mut value = central[j].clone();
        for i in 1..j {
            let term = Float::with_val(bits, &kappa[i] * &central[j - i]) * binom[j - 1][i - 1];
            value -= term;
        }
        kappa[j] = value;
    }
    kappa[1] = dist.mean.clone();

    let var = kappa[2].clone();
    let raw: Vec<Float> = kappa[1..=order].to_vec();
    let standardized = (1..=order)
        .map(|j| match j {
            1 => prec.zero(),
            2 => prec.float(1),
            _ => {
                let scale = Float::with_val(bits, var.clone().sqrt()).pow(j as u32);
                Float::with_val(bits, &kappa[j] / &scale)
            }
        })
        .collect();
    Ok(ExactCumulants {
        order,
        raw,
        standardized,
    })
}

fn binomial_table(n: usize) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; n + 1]; n + 1];
    for i in 0..=n {
        t[i][0] = 1;
        for j in 1..=i {
            t[i][j] = t[i - 1][j - 1] + if j < i { t[i - 1][j] } else { 0 };
        }
    }
    t
}

/// `sup_x |P(m_N <= x) - Phi(x)|`, attained at an atom from the left or right.
pub fn kolmogorov_distance(dist: &MagnetizationDistribution) -> f64 {
    let bits = dist.prec.bits();
    let mut atoms = Vec::with_capacity(dist.n + 1);
    let mut probs = Vec::with_capacity(dist.n + 1);
    // ascending magnetization is descending k
    for k in (0..=dist.n).rev() {
        atoms.push(dist.standardized_atom(k).to_f64());
        probs.push(dist.pmf_ext[k].clone());
    }
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = Float::new(bits);
    for p in &probs {
        acc += p;
        cdf.push(acc.to_f64());
    }
    sup_distance(&atoms, &cdf)
}

/// Kolmogorov distance to the standard normal of an arbitrary discrete law
/// with ascending `atoms`.
pub fn kolmogorov_distance_discrete(atoms: &[f64], probs: &[f64]) -> f64 {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cdf.push(acc);
    }
    sup_distance(atoms, &cdf)
}

fn sup_distance(atoms: &[f64], cdf: &[f64]) -> f64 {
    let mut sup = 0.0_f64;
    let mut left = 0.0;
    for (x, &right) in atoms.iter().zip(cdf) {
        let phi = xprec::normal_cdf(*x);
        sup = sup.max((left - phi).abs()).max((right - phi).abs());
        left = right;
    }
    sup
}

/// `P(m_N >= x)`.
pub fn tail_prob(dist: &MagnetizationDistribution, x: f64) -> f64 {
    dist.tail_prob_ext(x, TailSide::AtLeast).to_f64()
}

/// `E[exp(i t M_N)]`.
pub fn characteristic_function(dist: &MagnetizationDistribution, t: f64) -> Complex64 {
    let bits = dist.prec.bits();
    let t = dist.prec.float(t);
    let mut acc = XComplex::zero(dist.prec);
    for k in 0..=dist.n {
        let phase = Float::with_val(bits, &t * dist.magnetization(k));
        acc.add_assign(&XComplex::cis(&phase).scale(&dist.pmf_ext[k]));
    }
    acc.to_c64()
}

/// `E[exp(i u m_N)]` for the standardized magnetization.
pub fn characteristic_function_standardized(dist: &MagnetizationDistribution, u: f64) -> Complex64 {
    let bits = dist.prec.bits();
    let u = dist.prec.float(u);
    let mut acc = XComplex::zero(dist.prec);
    for k in 0..=dist.n {
        let phase = Float::with_val(bits, &u * &dist.standardized_atom(k));
        acc.add_assign(&XComplex::cis(&phase).scale(&dist.pmf_ext[k]));
    }
    acc.to_c64()
}

/// Result of direct enumeration of all `2^N` spin configurations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BruteForce {
    pub log_z: Complex64,
    /// Law of `k` (number of down spins); only defined for real `h`.
    pub pmf: Option<Vec<f64>>,
}

/// Enumerates every configuration and every directed pair `(i, j)`.
///
/// Each pair contributes `log((1-p) + p e^{±beta/(2pN)})` according to the
/// sign of `sigma_i sigma_j`; the closed forms for `a` and `b` are never
/// used, so this path is independent of [`magnetization_pmf`].
pub fn brute_force_oracle(params: &ModelParams, h: Complex64) -> Result<BruteForce> {
    let n = params.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::NTooLargeForBruteForce {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let p = params.p();
    let x = params.beta() / (2.0 * p * n as f64);
    let log_aligned = ((1.0 - p) + p * x.exp()).ln();
    let log_opposed = ((1.0 - p) + p * (-x).exp()).ln();

    let mut log_terms: Vec<(usize, Complex64)> = Vec::with_capacity(1 << n);
    for config in 0u32..(1u32 << n) {
        let spin = |i: usize| if config >> i & 1 == 1 { -1i32 } else { 1i32 };
        let (mut aligned, mut opposed) = (0u32, 0u32);
        for i in 0..n {
            for j in 0..n {
                if spin(i) * spin(j) == 1 {
                    aligned += 1;
                } else {
                    opposed += 1;
                }
            }
        }
        let down = config.count_ones() as usize;
        let m = f64::from((0..n).map(spin).sum::<i32>());
        let lw = f64::from(aligned) * log_aligned + f64::from(opposed) * log_opposed;
        log_terms.push((down, Complex64::new(lw, 0.0) + h * m));
    }

    let max = log_terms
        .iter()
        .map(|(_, l)| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<(usize, Complex64)> = log_terms
        .iter()
        .map(|&(k, l)| (k, (l - max).exp()))
        .collect();
    let total: Complex64 = weights.iter().map(|(_, w)| w).sum();
    let log_z = total.ln() + max;

    let pmf = (h.im == 0.0).then(|| {
        let mut pmf = vec![0.0; n + 1];
        for (k, w) in &weights {
            pmf[*k] += w.re;
        }
        pmf.iter_mut().for_each(|v| *v /= total.re);
        pmf
    });
    Ok(BruteForce { log_z, pmf })
}
