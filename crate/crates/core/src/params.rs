//! Model inputs, effective parameters of the annealed model, and the
//! geometry of the strip on which the finite-volume pressure is holomorphic.
//!
//! Averaging the Boltzmann weight over the directed Erdős–Rényi edges turns
//! the dilute model into a Curie–Weiss model with an `N`-dependent inverse
//! temperature `beta_eff = b / p` and a constant prefactor `a^{N^2}`. Both
//! come from solving `a e^{±b/(2pN)} = (1 - p) + p e^{±beta/(2pN)}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this value of `p^3 N^2` the asymptotic statements are not trusted.
pub const DILUTION_WARNING_THRESHOLD: f64 = 10.0;

/// Validated model inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: usize,
    p: f64,
    beta: f64,
    h0: f64,
}

impl ModelParams {
    pub fn new(n: i64, p: f64, beta: f64, h0: f64) -> Result<Self> {
        validate_params(n, p, beta, h0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    /// Same parameters at a different system size.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        validate_params(n as i64, self.p, self.beta, self.h0)
    }

    pub fn with_h0(&self, h0: f64) -> Result<Self> {
        validate_params(self.n as i64, self.p, self.beta, h0)
    }

    /// Diluteness indicator `p^3 N^2`; the theory needs it to diverge.
    pub fn dilution_indicator(&self) -> f64 {
        let n = self.n as f64;
        self.p.powi(3) * n * n
    }

    pub fn regime_warning(&self) -> bool {
        self.dilution_indicator() < DILUTION_WARNING_THRESHOLD
    }
}

pub fn validate_params(n: i64, p: f64, beta: f64, h0: f64) -> Result<ModelParams> {
    if n < 1 {
        return Err(Error::NonpositiveN(n));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::BetaOutOfRange(beta));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    if !h0.is_finite() {
        return Err(Error::NonFiniteField(h0));
    }
    Ok(ModelParams {
        n: n as usize,
        p,
        beta,
        h0,
    })
}

/// `N`-dependent parameters of the equivalent classical model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    /// `log a`, so that the prefactor is `exp(N^2 log_a)`.
    pub log_a: f64,
    pub b: f64,
    pub beta_eff: f64,
    /// `arccos(sqrt(beta_eff))`
    pub alpha_n: f64,
    /// `sqrt(beta_eff (1 - beta_eff))`
    pub delta_n: f64,
    /// `alpha_n - delta_n`, half-width of the strip `U_N`.
    pub strip_halfwidth: f64,
}

impl EffectiveParams {
    /// Strip geometry for a given effective inverse temperature, with the
    /// prefactor switched off. Used for the infinite-volume model.
    pub fn from_beta(beta_eff: f64) -> Result<Self> {
        if !(beta_eff > 0.0 && beta_eff < 1.0) {
            return Err(Error::EffectiveBetaOutOfRange(beta_eff));
        }
        let alpha_n = beta_eff.sqrt().acos();
        let delta_n = (beta_eff * (1.0 - beta_eff)).sqrt();
        Ok(Self {
            log_a: 0.0,
            b: beta_eff,
            beta_eff,
            alpha_n,
            delta_n,
            strip_halfwidth: alpha_n - delta_n,
        })
    }

    /// Coefficient `b / (2pN)` of `M_N^2` in the collapsed weight.
    pub fn quadratic_coefficient(&self, params: &ModelParams) -> f64 {
        self.beta_eff / (2.0 * params.n as f64)
    }
}

/// Half-width `arccos(sqrt(beta)) - sqrt(beta (1 - beta))` of the strip.
pub fn strip_halfwidth(beta: f64) -> f64 {
    beta.sqrt().acos() - (beta * (1.0 - beta)).sqrt()
}

/// Solves for `a` and `b` without cancellation.
///
/// With `x = beta/(2pN)` and `L± = log(1 + p (e^{±x} - 1))`:
/// `L+ + L- = log1p(4p(1-p) sinh^2(x/2))` and
/// `L+ - L- = log1p(2p sinh(x) / (1 + p expm1(-x)))`.
pub fn effective_params(params: &ModelParams) -> Result<EffectiveParams> {
    let p = params.p;
    let n = params.n as f64;
    let (log_a, beta_eff) = if p == 1.0 {
        (0.0, params.beta)
    } else {
        let x = params.beta / (2.0 * p * n);
        let sh = (0.5 * x).sinh();
        let sum = (4.0 * p * (1.0 - p) * sh * sh).ln_1p();
        let diff = (2.0 * p * x.sinh() / (1.0 + p * (-x).exp_m1())).ln_1p();
        (0.5 * sum, n * diff)
    };
    let mut eff = EffectiveParams::from_beta(beta_eff)?;
    eff.log_a = log_a;
    eff.b = beta_eff * p;
    Ok(eff)
}

/// Membership in `U_N = {|Im h| < alpha_N - delta_N}`.
pub fn strip_membership(h: Complex64, eff: &EffectiveParams) -> bool {
    h.im.abs() < eff.strip_halfwidth
}

/// Unique fixed point of `t = beta' tan(y + t)` on `[0, sqrt(beta'(1 - beta'))]`.
///
/// The map is a contraction there but its constant tends to one as `y`
/// approaches the admissible limit, so the root is located by bisection on
/// `g(t) = t - beta' tan(y + t)`, which is increasing on the interval.
pub fn strip_fixed_point_t(beta_prime: f64, y: f64) -> Result<f64> {
    if !(beta_prime > 0.0 && beta_prime < 1.0) {
        return Err(Error::EffectiveBetaOutOfRange(beta_prime));
    }
    let limit = strip_halfwidth(beta_prime);
    if !(y >= 0.0 && y < limit) {
        return Err(Error::OutsideAdmissibleRegion {
            beta: beta_prime,
            y,
            limit,
        });
    }
    let g = |t: f64| t - beta_prime * (y + t).tan();
    let mut lo = 0.0_f64;
    let mut hi = (beta_prime * (1.0 - beta_prime)).sqrt();
    if g(lo) >= 0.0 {
        return Ok(lo);
    }
    if g(hi) <= 0.0 {
        return Ok(hi);
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(if g(hi).abs() < g(lo).abs() { hi } else { lo })
}
