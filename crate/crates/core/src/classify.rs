//! The five linear classifiers.
//!
//! Every classifier is a weight vector `w` predicting `sign(w^T y)` with
//! `sign(0) := +1`. Predictions are invariant under positive rescaling of
//! `w`; no classifier normalizes its output.
//!
//! The ridge family is computed in its dual n-by-n form
//! `w = (1/n) Y (lambda I_n + Y^T Y / n)^{-1} eta`, which is cheap when
//! `p >> n`; the primal p-by-p form exists only as a test oracle. The
//! hard-margin SVM is solved by dual coordinate ascent with a KKT
//! certificate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::SpdFactor;
use crate::mixture::Dataset;
use crate::spectra::CovarianceModel;

/// Condition-number limit for the Gram matrix when interpolating.
pub const GRAM_COND_LIMIT: f64 = 1e12;

/// Relative tolerance on the interpolation constraints `eta_i w^T Y_i = 1`.
pub const INTERPOLATION_TOL: f64 = 1e-8;

/// Stop the SVM solver once no KKT violation exceeds this.
pub const SVM_KKT_TOL: f64 = 1e-8;

/// Hard cap on full coordinate sweeps of the SVM solver.
pub const SVM_MAX_SWEEPS: usize = 1_000_000;

/// Dual variables beyond this magnitude mean the data is not separable.
const SVM_ALPHA_CAP: f64 = 1e12;

/// Linear classification rule `y -> sign(w^T y)`, `sign(0) := +1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    weights: DVector<f64>,
}

impl LinearClassifier {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if !weights.iter().all(|x| x.is_finite()) || weights.iter().all(|&x| x == 0.0) {
            return Err(Error::DegenerateClassifier);
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `w^T y` without a dimension check; callers on hot paths verify
    /// dimensions once up front.
    pub fn decision(&self, y: &DVector<f64>) -> f64 {
        self.weights.dot(y)
    }

    /// Predicted label in {-1, +1}.
    pub fn predict(&self, y: &DVector<f64>) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "classifier dimension {} but input has length {}",
                self.dim(),
                y.len()
            )));
        }
        Ok(if self.decision(y) >= 0.0 { 1.0 } else { -1.0 })
    }
}

/// Averaging classifier `w = sum_i Y_i eta_i`.
pub fn averaging(data: &Dataset) -> Result<LinearClassifier> {
    LinearClassifier::new(&data.y * &data.labels)
}

/// Oracle LDA classifier `w = Sigma^{-1} sum_i Y_i eta_i`.
pub fn lda(data: &Dataset, covariance: &CovarianceModel) -> Result<LinearClassifier> {
    if covariance.dim() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "covariance dimension {} but data dimension {}",
            covariance.dim(),
            data.dim()
        )));
    }
    LinearClassifier::new(covariance.apply_inv(&(&data.y * &data.labels)))
}

/// `lambda I_n + Y^T Y / n`.
fn dual_matrix(data: &Dataset, lambda: f64) -> DMatrix<f64> {
    let n = data.len();
    let mut a = data.y.transpose() * &data.y / n as f64;
    for i in 0..n {
        a[(i, i)] += lambda;
    }
    a
}

/// Ridge-regularized least-squares classifier in dual form.
///
/// `lambda = 0` requires `p >= n` and a Gram matrix with condition number
/// at most [`GRAM_COND_LIMIT`]; it produces the minimum-norm interpolator.
pub fn ridge(data: &Dataset, lambda: f64) -> Result<LinearClassifier> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ridge parameter must be >= 0, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return interpolator(data);
    }
    let n = data.len();
    let factor = SpdFactor::new(&dual_matrix(data, lambda))?;
    let coeffs = factor.solve(&data.labels);
    LinearClassifier::new(&data.y * coeffs / n as f64)
}

/// Minimum-norm interpolator `w = Y (Y^T Y)^{-1} eta`; identical to
/// `ridge(data, 0)`. The interpolation constraints are verified before the
/// classifier is returned.
pub fn interpolator(data: &Dataset) -> Result<LinearClassifier> {
    let (p, n) = (data.dim(), data.len());
    if p < n {
        return Err(Error::InvalidConfig(format!(
            "interpolation requires p >= n, got p = {p}, n = {n}"
        )));
    }
    let gram = data.y.transpose() * &data.y;
    let eig = nalgebra::SymmetricEigen::try_new(gram.clone(), f64::EPSILON, 100_000)
        .ok_or(Error::EigNoConvergence)?;
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if cond > GRAM_COND_LIMIT {
        return Err(Error::IllPosedInterpolation { cond, limit: GRAM_COND_LIMIT });
    }
    let factor = SpdFactor::new(&gram)?;
    let coeffs = factor.solve(&data.labels);
    let classifier = LinearClassifier::new(&data.y * coeffs)?;

    // Postcondition: eta_i w^T Y_i = 1 within 1e-8 * (1 + ||w|| ||Y_i||).
    let w_norm = classifier.weights().norm();
    for i in 0..n {
        let col: DVector<f64> = data.y.column(i).into();
        let residual = data.labels[i] * classifier.decision(&col) - 1.0;
        let scale = 1.0 + w_norm * col.norm();
        if residual.abs() > INTERPOLATION_TOL * scale {
            return Err(Error::IllPosedInterpolation { cond, limit: GRAM_COND_LIMIT });
        }
    }
    Ok(classifier)
}

/// Hard-margin SVM fit with its dual certificate.
#[derive(Debug, Clone)]
pub struct SvmFit {
    pub classifier: LinearClassifier,
    /// Dual coefficients: `w = sum_i alpha_i eta_i Y_i`, `alpha_i >= 0`.
    pub alpha: DVector<f64>,
    pub sweeps: usize,
    pub max_kkt_violation: f64,
}

/// Hard-margin SVM via dual coordinate ascent on
/// `max sum_i alpha_i - 1/2 || sum_i alpha_i eta_i Y_i ||^2`, `alpha >= 0`.
///
/// Sweeps coordinates until no KKT violation exceeds [`SVM_KKT_TOL`];
/// errors on non-separable data (diverging dual) or sweep exhaustion.
pub fn svm_hard(data: &Dataset) -> Result<SvmFit> {
    let n = data.len();
    // Label-signed Gram: K[i, j] = eta_i eta_j Y_i^T Y_j.
    let mut k = data.y.transpose() * &data.y;
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] *= data.labels[i] * data.labels[j];
        }
    }
    for i in 0..n {
        if k[(i, i)] <= 0.0 {
            return Err(Error::NotSeparable);
        }
    }

    let mut alpha: DVector<f64> = DVector::zeros(n);
    let mut margins: DVector<f64> = DVector::zeros(n); // (K alpha)_i = eta_i w^T Y_i
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        for i in 0..n {
            let gradient = 1.0 - margins[i];
            let updated = (alpha[i] + gradient / k[(i, i)]).max(0.0);
            let delta = updated - alpha[i];
            if delta != 0.0 {
                alpha[i] = updated;
                margins += k.column(i) * delta;
            }
        }

        let mut max_violation = 0.0_f64;
        for i in 0..n {
            let gradient = 1.0 - margins[i];
            let violation = if alpha[i] > 0.0 { gradient.abs() } else { gradient.max(0.0) };
            max_violation = max_violation.max(violation);
        }
        if max_violation <= SVM_KKT_TOL {
            let mut w = DVector::zeros(data.dim());
            for i in 0..n {
                w += DVector::from(data.y.column(i)) * (alpha[i] * data.labels[i]);
            }
            return Ok(SvmFit {
                classifier: LinearClassifier::new(w)?,
                alpha,
                sweeps,
                max_kkt_violation: max_violation,
            });
        }
        let at_cap = sweeps >= SVM_MAX_SWEEPS;
        if sweeps.is_multiple_of(65_536) || alpha.amax() > SVM_ALPHA_CAP || at_cap {
            // Unbounded-ray certificate: a nonnegative alpha far from zero
            // with K alpha ~ 0 witnesses that no separating margin exists.
            let energy = alpha.dot(&margins); // alpha^T K alpha = ||w||^2
            let scale: f64 = (0..n).map(|i| alpha[i] * alpha[i] * k[(i, i)]).sum();
            if scale > 0.0 && energy <= 1e-9 * scale {
                return Err(Error::NotSeparable);
            }
            if alpha.amax() > SVM_ALPHA_CAP {
                return Err(Error::NotSeparable);
            }
        }
        if at_cap {
            return Err(Error::SvmNoConvergence(format!(
                "max KKT violation {max_violation:.3e} after {sweeps} sweeps"
            )));
        }
    }
}
