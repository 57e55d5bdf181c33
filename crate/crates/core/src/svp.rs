//! Support-vector proliferation: detection and sufficient conditions.
//!
//! The hard-margin SVM and the minimum-norm interpolator coincide exactly
//! when every margin quantity `eta_i e_i^T (Y^T Y)^{-1} eta` is positive.
//! [`svp_margins`] computes those quantities along two independent routes
//! (direct Gram inversion and the leave-one-column-out Schur formula) and
//! refuses to answer if the routes disagree.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{loo_row_inverse, SpdFactor};
use crate::mixture::Dataset;
use crate::spectra::{k_star, CovarianceModel};

/// Agreement tolerance between the two margin routes, relative to the
/// largest margin magnitude.
pub const CROSS_CHECK_TOL: f64 = 1e-8;

/// Outcome of the proliferation test on one training sample.
#[derive(Debug, Clone)]
pub struct SvpReport {
    /// True iff every margin is strictly positive, i.e. the SVM and the
    /// interpolator coincide.
    pub holds: bool,
    /// `eta_i e_i^T (Y^T Y)^{-1} eta` for each observation.
    pub margins: DVector<f64>,
    pub min_margin: f64,
}

/// Compute all `n` proliferation margins, cross-checked between direct
/// Gram inversion and the Schur-complement route.
pub fn svp_margins(data: &Dataset) -> Result<SvpReport> {
    let n = data.len();
    if data.dim() < n {
        return Err(Error::InvalidConfig(format!(
            "proliferation test requires p >= n, got p = {}, n = {}",
            data.dim(),
            n
        )));
    }
    let gram = data.y.transpose() * &data.y;
    let factor = SpdFactor::new(&gram)?;
    let solved = factor.solve(&data.labels);
    let direct = DVector::from_fn(n, |i, _| data.labels[i] * solved[i]);

    let scale = direct.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        // Move column i to the front and evaluate the closed form.
        let mut w = data.y.clone();
        w.swap_columns(0, i);
        let mut omega = data.labels.clone();
        omega.swap_rows(0, i);
        let schur = data.labels[i] * loo_row_inverse(&w, &omega)?;
        if (schur - direct[i]).abs() > CROSS_CHECK_TOL * scale {
            return Err(Error::CrossCheckFailed { direct: direct[i], schur });
        }
    }

    let min_margin = direct.min();
    Ok(SvpReport { holds: min_margin > 0.0, margins: direct, min_margin })
}

/// Evaluation of the three sufficient conditions for proliferation.
#[derive(Debug, Clone)]
pub struct ProlifReport {
    /// `k* = k*_Sigma(0)` used by all three conditions.
    pub k_star: usize,
    /// `k* log^2(n) <= C n`.
    pub dimension_ok: bool,
    /// `(sum_{i>k*} lambda_i^2) n log(n) <= C (sum_{i>k*} lambda_i)^2`.
    pub tail_ok: bool,
    /// `sqrt(theta^T Sigma theta (1 + k*) log n) <= C (sum_{i>k*} lambda_i) / n`.
    pub signal_ok: bool,
}

impl ProlifReport {
    pub fn all(&self) -> bool {
        self.dimension_ok && self.tail_ok && self.signal_ok
    }
}

/// Check the sufficient conditions for proliferation with explicit
/// constants. The absolute constant `c` is unspecified by the theory, so
/// this is a diagnostic rather than a certificate; `c1` is the threshold
/// constant inside `k*`.
pub fn prolif_conditions(
    model: &CovarianceModel,
    theta: &DVector<f64>,
    n: usize,
    c: f64,
    c1: f64,
) -> Result<ProlifReport> {
    if n < 2 {
        return Err(Error::InvalidArgument("n must be >= 2".into()));
    }
    if theta.len() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "theta has length {} but model dimension is {}",
            theta.len(),
            model.dim()
        )));
    }
    let ks = k_star(model, 0.0, n, c1);
    let nf = n as f64;
    let log_n = nf.ln();
    let tail = model.tail_trace(ks.min(model.dim()));
    let tail_sq = model.tail_trace_sq(ks.min(model.dim()));
    let signal_energy = model.quad_form(theta);

    Ok(ProlifReport {
        k_star: ks,
        dimension_ok: ks as f64 * log_n * log_n <= c * nf,
        tail_ok: tail_sq * nf * log_n <= c * tail * tail,
        signal_ok: (signal_energy * (1.0 + ks as f64) * log_n).sqrt() <= c * tail / nf,
    })
}
