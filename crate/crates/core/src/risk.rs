//! Generalization risk: exact conditional Gaussian form, Monte Carlo
//! estimation, and evaluable theoretical bound curves.
//!
//! For Gaussian noise the conditional misclassification probability of
//! `sign(w^T .)` has the closed form `Phi(-w^T theta / sqrt(w^T Sigma w))`;
//! Monte Carlo estimation remains available for sub-Gaussian noise with no
//! closed form. The bound curves carry explicit absolute constants
//! (defaulting to 1) and are qualitative overlays, never pass/fail
//! oracles.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::classify::LinearClassifier;
use crate::error::{Error, Result};
use crate::mixture::{sample_observation, MixtureParams};
use crate::rng::stream;
use crate::spectra::{cone_member, k_star, CovarianceModel};

/// Standard normal CDF via the complementary error function; relative
/// accuracy is far below 1e-12 across the range used here and the erfc
/// tail expansion covers the extreme-deviation regime.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Risk evaluation outcome: exact value, Monte Carlo estimate, or both.
#[derive(Debug, Clone, Default)]
pub struct RiskReport {
    pub exact: Option<f64>,
    pub mc_estimate: Option<f64>,
    /// Three-sigma binomial half-width.
    pub mc_halfwidth: Option<f64>,
    pub replicates: usize,
}

/// Conditional misclassification probability of the rule `sign(w^T .)`
/// under Gaussian noise: `Phi(-w^T theta / sqrt(w^T Sigma w))`.
pub fn exact_gaussian_risk(
    w: &DVector<f64>,
    theta: &DVector<f64>,
    model: &CovarianceModel,
) -> Result<f64> {
    if w.len() != theta.len() || w.len() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "w, theta, Sigma dimensions: {}, {}, {}",
            w.len(),
            theta.len(),
            model.dim()
        )));
    }
    if w.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateClassifier);
    }
    let variance = model.quad_form(w);
    if !(variance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "w^T Sigma w = {variance} must be positive for a full-rank covariance"
        )));
    }
    Ok(normal_cdf(-w.dot(theta) / variance.sqrt()))
}

const MC_BLOCK: usize = 8192;

/// Monte Carlo risk: error frequency over fresh draws, with a three-sigma
/// binomial half-width `3 sqrt(R(1-R)/m + 1/m^2)`.
///
/// Samples are drawn in fixed blocks with independent derived streams, so
/// the estimate is deterministic per seed regardless of thread schedule.
pub fn mc_risk(
    classifier: &LinearClassifier,
    params: &MixtureParams,
    samples: usize,
    seed: u64,
) -> Result<RiskReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    if classifier.dim() != params.dim() {
        return Err(Error::DimensionMismatch(format!(
            "classifier dimension {} but mixture dimension {}",
            classifier.dim(),
            params.dim()
        )));
    }
    let blocks = samples.div_ceil(MC_BLOCK);
    let errors: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, "mc-block", b as u64);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut errs = 0u64;
            for _ in 0..count {
                let (y, label) = sample_observation(params, &mut rng);
                let predicted = if classifier.decision(&y) >= 0.0 { 1.0 } else { -1.0 };
                if predicted != label {
                    errs += 1;
                }
            }
            errs
        })
        .sum();

    let m = samples as f64;
    let estimate = errors as f64 / m;
    let halfwidth = 3.0 * (estimate * (1.0 - estimate) / m + 1.0 / (m * m)).sqrt();
    Ok(RiskReport {
        exact: None,
        mc_estimate: Some(estimate),
        mc_halfwidth: Some(halfwidth),
        replicates: samples,
    })
}

fn clamp_unit(x: f64) -> f64 {
    // The bounds are mathematically positive; keep them positive even when
    // the exponential underflows.
    x.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Minimax lower bound curve `C exp(-c delta^4 / (delta^2 + r / n))`,
/// clamped to one. `delta` is the signal strength in units of the spectral
/// norm and `r` the effective rank of `Sigma^2`.
pub fn bound_minimax_lower(delta: f64, r: f64, n: usize, c: f64, big_c: f64) -> Result<f64> {
    if !(delta > 0.0) || !(r >= 1.0) || n == 0 {
        return Err(Error::InvalidArgument(
            "bound_minimax_lower requires delta > 0, r >= 1, n >= 1".into(),
        ));
    }
    let d2 = delta * delta;
    Ok(clamp_unit(big_c * (-c * d2 * d2 / (d2 + r / n as f64)).exp()))
}

/// Averaging upper bound curve
/// `C exp(-c ||theta||^4 / (theta^T Sigma theta + (Tr(Sigma^2) + ||Sigma||^2 log(1/delta)) / n))`.
pub fn bound_averaging_upper(
    theta: &DVector<f64>,
    model: &CovarianceModel,
    n: usize,
    delta_prob: f64,
    c: f64,
    big_c: f64,
) -> Result<f64> {
    if theta.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidArgument("theta must be nonzero".into()));
    }
    if !(delta_prob > 0.0 && delta_prob < 1.0) {
        return Err(Error::InvalidArgument("delta_prob must lie in (0, 1)".into()));
    }
    let norm_sq = theta.norm_squared();
    let spectral = model.spectral_norm();
    let denom = model.quad_form(theta)
        + (model.trace_sq() + spectral * spectral * (1.0 / delta_prob).ln()) / n as f64;
    Ok(clamp_unit(big_c * (-c * norm_sq * norm_sq / denom).exp()))
}

/// Ridge-family upper bound at one regularization level.
#[derive(Debug, Clone)]
pub struct RidgeBound {
    /// Bound value; `None` when `k* > n / 2` makes the bound inapplicable.
    pub value: Option<f64>,
    pub k_star: usize,
    /// Whether `theta` satisfies the top-eigenspace mass condition.
    pub cone_ok: bool,
}

/// Ridge / interpolation upper bound curve with spike count
/// `k* = k*_Sigma(lambda)`:
/// `C exp(-c ||theta||^4 / (theta^T Sigma theta (1 + k*)
///   + (k* lambda_{k*}^2 + sum_{i>k*} lambda_i^2) / n
///   + (k* lambda_{k*}^2 + lambda_{k*+1}^2) log(1/delta) / n))`.
#[allow(clippy::too_many_arguments)] // mirrors the bound's own parameter list
pub fn bound_ridge_upper(
    theta: &DVector<f64>,
    model: &CovarianceModel,
    lambda: f64,
    n: usize,
    delta_prob: f64,
    c: f64,
    big_c: f64,
    c1: f64,
) -> Result<RidgeBound> {
    if theta.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidArgument("theta must be nonzero".into()));
    }
    if !(delta_prob > 0.0 && delta_prob < 1.0) {
        return Err(Error::InvalidArgument("delta_prob must lie in (0, 1)".into()));
    }
    let ks = k_star(model, lambda, n, c1);
    if ks > model.dim() {
        // Sentinel: no admissible spike count at all.
        return Ok(RidgeBound { value: None, k_star: ks, cone_ok: false });
    }
    let cone_ok = cone_member(theta, model, ks)?;
    if 2 * ks > n {
        return Ok(RidgeBound { value: None, k_star: ks, cone_ok });
    }
    // k* = 0 uses the convention k* lambda_{k*}^2 = 0.
    let spike_term = if ks == 0 {
        0.0
    } else {
        let lam = model.eigenvalue(ks);
        ks as f64 * lam * lam
    };
    let lam_next = model.eigenvalue(ks + 1);
    let nf = n as f64;
    let norm_sq = theta.norm_squared();
    let denom = model.quad_form(theta) * (1.0 + ks as f64)
        + (spike_term + model.tail_trace_sq(ks)) / nf
        + (spike_term + lam_next * lam_next) * (1.0 / delta_prob).ln() / nf;
    let value = clamp_unit(big_c * (-c * norm_sq * norm_sq / denom).exp());
    Ok(RidgeBound { value: Some(value), k_star: ks, cone_ok })
}

/// LDA lower bound curve
/// `C exp(-c ||theta||_Sigma^4 / (||theta||_Sigma^2 + p / n))` with the
/// squared Mahalanobis norm `||theta||_Sigma^2 = theta^T Sigma^{-1} theta`.
/// Requires `p >= n`.
pub fn bound_lda_lower(
    theta: &DVector<f64>,
    model: &CovarianceModel,
    n: usize,
    c: f64,
    big_c: f64,
) -> Result<f64> {
    let p = model.dim();
    if p < n {
        return Err(Error::InvalidArgument(format!(
            "LDA lower bound requires p >= n, got p = {p}, n = {n}"
        )));
    }
    if theta.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "theta has length {} but model dimension is {p}",
            theta.len()
        )));
    }
    let maha = model.mahalanobis_sq(theta);
    Ok(clamp_unit(big_c * (-c * maha * maha / (maha + p as f64 / n as f64)).exp()))
}
