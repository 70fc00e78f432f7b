//! Analytic photon-counting statistics for an n-fold multiplexed detector
//! array fed by a Poissonian source.
//!
//! Covers the click-number distribution for a fixed photon number, its
//! Poisson mixture, the Bayes-rule single-photon error ratio, and the
//! extractable-length bound used by the extractor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::{CompensatedSum, Real};

/// Default Poisson series truncation; escalated automatically when the tail
/// mass at the configured mean is not negligible.
pub const DEFAULT_TRUNCATION: u32 = 32;

/// Relative Poisson tail mass tolerated beyond the truncation point.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Negative click-probability magnitude treated as an internal inconsistency
/// rather than roundoff.
const NEGATIVE_PROB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PhotonStatsError {
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),
    #[error("click-number distribution inconsistent: Pr(k={k}) = {value}")]
    Inconsistent { k: usize, value: f64 },
    #[error("conditional probability undefined: Pr(k=1) = 0")]
    UndefinedConditional,
    #[error("insufficient entropy: extractable length {length} <= 0")]
    InsufficientEntropy { length: i64 },
}

/// Source and detector noise parameters.
///
/// `mu` is the mean photon number per pulse (`|alpha|^2` for a coherent
/// source of amplitude `alpha`), `eta` the per-photon detection efficiency,
/// `dark_prob` the per-detector-per-window dark-count probability, and
/// `channels` the number of detectors or time bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel<R: Real> {
    pub mu: R,
    pub eta: R,
    pub dark_prob: R,
    pub channels: usize,
    #[serde(default = "default_truncation")]
    pub truncation: u32,
}

fn default_truncation() -> u32 {
    DEFAULT_TRUNCATION
}

impl<R: Real> NoiseModel<R> {
    pub fn new(mu: R, eta: R, dark_prob: R, channels: usize) -> Result<Self, PhotonStatsError> {
        let model = Self {
            mu,
            eta,
            dark_prob,
            channels,
            truncation: DEFAULT_TRUNCATION,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), PhotonStatsError> {
        let zero = R::zero();
        let one = R::one();
        if !(self.mu >= zero) || !self.mu.is_finite() {
            return Err(PhotonStatsError::ParamDomain(format!(
                "mu must be finite and >= 0, got {}",
                self.mu
            )));
        }
        if !(self.eta >= zero && self.eta <= one) {
            return Err(PhotonStatsError::ParamDomain(format!(
                "eta must lie in [0, 1], got {}",
                self.eta
            )));
        }
        if !(self.dark_prob >= zero && self.dark_prob < one) {
            return Err(PhotonStatsError::ParamDomain(format!(
                "dark_prob must lie in [0, 1), got {}",
                self.dark_prob
            )));
        }
        if self.channels == 0 {
            return Err(PhotonStatsError::ParamDomain(
                "channels must be >= 1".into(),
            ));
        }
        if self.truncation == 0 {
            return Err(PhotonStatsError::ParamDomain(
                "truncation must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Truncation point with the Poisson tail mass beyond it below
    /// [`TAIL_TOLERANCE`], starting from the configured value.
    pub fn effective_truncation(&self) -> u32 {
        let mut n_max = self.truncation;
        while poisson_tail_mass(self.mu, n_max) > R::of(TAIL_TOLERANCE) {
            n_max *= 2;
        }
        n_max
    }
}

/// Inputs of the extractable-length bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionParams<R: Real> {
    /// Raw bit count before extraction.
    pub raw_len: u64,
    /// Probability that a kept click did not come from a single photon.
    pub qber: R,
    /// Statistical distance from uniform tolerated in the output.
    pub epsilon: R,
}

impl<R: Real> ExtractionParams<R> {
    pub fn new(raw_len: u64, qber: R, epsilon: R) -> Result<Self, PhotonStatsError> {
        let params = Self {
            raw_len,
            qber,
            epsilon,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), PhotonStatsError> {
        if self.raw_len == 0 {
            return Err(PhotonStatsError::ParamDomain("raw_len must be >= 1".into()));
        }
        if !(self.qber >= R::zero() && self.qber <= R::one()) {
            return Err(PhotonStatsError::ParamDomain(format!(
                "qber must lie in [0, 1], got {}",
                self.qber
            )));
        }
        if !(self.epsilon > R::zero() && self.epsilon < R::one()) {
            return Err(PhotonStatsError::ParamDomain(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Poisson mass beyond `n_max` relative to total, i.e. `1 - CDF(n_max)`.
pub fn poisson_tail_mass<R: Real>(mu: R, n_max: u32) -> R {
    if mu == R::zero() {
        return R::zero();
    }
    let mut term = (-mu).exp();
    let mut cdf = term;
    for n in 1..=n_max {
        term = term * mu / R::of_usize(n as usize);
        cdf = cdf + term;
    }
    (R::one() - cdf).max(R::zero())
}

/// Click-number distribution `Pr(k | N)` for `N` photons spread uniformly
/// over `n` detectors with efficiency `eta` and dark-count probability
/// `p_d` per detector.
///
/// The alternating inner sum is evaluated with compensated summation on the
/// normalized power `((n - (n-k+l) eta) / n)^N` so the result stays accurate
/// to ~1e-13 absolute for n <= 8, N <= 64. Roundoff-negative entries are
/// clamped to zero; anything below -1e-9 is reported as inconsistent.
pub fn click_distribution<R: Real>(
    photons: u32,
    model: &NoiseModel<R>,
) -> Result<Vec<R>, PhotonStatsError> {
    model.validate()?;
    let n = model.channels;
    let n_r = R::of_usize(n);
    let one_minus_pd = R::one() - model.dark_prob;

    let mut probs = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut acc = CompensatedSum::new();
        for l in 0..=k {
            // ((n - (n-k+l) eta) / n)^N, kept in [0, 1] to bound the terms.
            let quiet = n - k + l;
            let base = (n_r - R::of_usize(quiet) * model.eta) / n_r;
            let power = if photons == 0 {
                R::one()
            } else {
                base.powi(photons as i32)
            };
            let term = one_minus_pd.powi(quiet as i32)
                * R::of(binomial(k, l))
                * power;
            if l % 2 == 0 {
                acc.add(term);
            } else {
                acc.add(-term);
            }
        }
        let mut p = R::of(binomial(n, k)) * acc.value();
        if p < R::zero() {
            if p < -R::of(NEGATIVE_PROB_TOLERANCE) {
                return Err(PhotonStatsError::Inconsistent {
                    k,
                    value: p.to_f64().unwrap_or(f64::NAN),
                });
            }
            p = R::zero();
        }
        probs.push(p.min(R::one()));
    }
    Ok(probs)
}

/// Probability of `k` simultaneous clicks under the Poisson-mixed source,
/// truncated where the tail mass drops below [`TAIL_TOLERANCE`].
pub fn click_prob<R: Real>(clicks: usize, model: &NoiseModel<R>) -> Result<R, PhotonStatsError> {
    model.validate()?;
    if clicks > model.channels {
        return Err(PhotonStatsError::ParamDomain(format!(
            "click count {} exceeds {} channels",
            clicks, model.channels
        )));
    }
    let n_max = model.effective_truncation();
    let mut weight = (-model.mu).exp();
    let mut acc = CompensatedSum::new();
    for photons in 0..=n_max {
        if photons > 0 {
            weight = weight * model.mu / R::of_usize(photons as usize);
        }
        let conditional = click_distribution(photons, model)?[clicks];
        acc.add(weight * conditional);
    }
    Ok(acc.value().clamp(R::zero(), R::one()))
}

/// Single-photon error ratio `Q = 1 - Pr(N=1 | k=1)` by the Bayes rule.
pub fn qber<R: Real>(model: &NoiseModel<R>) -> Result<R, PhotonStatsError> {
    model.validate()?;
    let p_click_one = click_prob(1, model)?;
    if p_click_one <= R::zero() {
        return Err(PhotonStatsError::UndefinedConditional);
    }
    let p_one_photon = (-model.mu).exp() * model.mu;
    let conditional = click_distribution(1, model)?[1];
    let posterior = conditional * p_one_photon / p_click_one;
    let q = R::one() - posterior;
    if q < -R::of(NEGATIVE_PROB_TOLERANCE) || q > R::one() + R::of(NEGATIVE_PROB_TOLERANCE) {
        return Err(PhotonStatsError::Inconsistent {
            k: 1,
            value: q.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(q.clamp(R::zero(), R::one()))
}

/// Extractable output length `l_q = floor(T (1 - Q) - 2 log2(1/eps))`.
///
/// Refuses extraction when the bound is not positive.
pub fn extractable_length<R: Real>(params: &ExtractionParams<R>) -> Result<u64, PhotonStatsError> {
    params.validate()?;
    let t = R::of(params.raw_len as f64);
    let penalty = R::of(2.0) * (R::one() / params.epsilon).log2();
    let raw = t * (R::one() - params.qber) - penalty;
    let length = raw.floor().to_f64().unwrap_or(f64::NEG_INFINITY) as i64;
    if length <= 0 {
        return Err(PhotonStatsError::InsufficientEntropy { length });
    }
    Ok(length as u64)
}

/// Companion compression rate `R = l_q / T`.
pub fn compression_rate<R: Real>(params: &ExtractionParams<R>) -> Result<R, PhotonStatsError> {
    let l_q = extractable_length(params)?;
    Ok(R::of(l_q as f64) / R::of(params.raw_len as f64))
}

/// Exact binomial coefficient as f64; callers stay within n <= 8.
fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut value = 1.0f64;
    for i in 0..k {
        value = value * (n - i) as f64 / (i + 1) as f64;
    }
    value.round()
}
