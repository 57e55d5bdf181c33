//! Covariance models, effective-rank functionals and spectral projectors.
//!
//! A [`CovarianceModel`] is a full-rank covariance given by its eigenvalue
//! spectrum in descending order plus an eigenbasis. Diagonal covariances
//! (the common case in the experiments) keep the basis implicit so that
//! quadratic forms and square-root applications stay O(p).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default threshold constant in the definition of `k*`. Any value > 1 is
/// admissible; 2 reproduces the published spike counts for the reference
/// spectra.
pub const DEFAULT_C1: f64 = 2.0;

/// Orthonormality tolerance for explicit eigenbases.
pub const BASIS_TOL: f64 = 1e-10;

/// Eigenbasis of a covariance model.
#[derive(Debug, Clone)]
pub enum Eigenbasis {
    /// `v_i = e_i`; the covariance is diagonal with descending entries.
    Canonical,
    /// `v_i = e_{perm[i]}`; diagonal covariance whose entries were
    /// re-sorted into descending order, keeping coordinate identity.
    Permutation(Vec<usize>),
    /// Explicit orthonormal columns.
    Dense(DMatrix<f64>),
}

/// Full-rank covariance `Sigma = V diag(lambda) V^T` with
/// `lambda_1 >= ... >= lambda_p > 0`.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    eigenvalues: DVector<f64>,
    basis: Eigenbasis,
}

impl CovarianceModel {
    /// Diagonal covariance from descending positive eigenvalues.
    pub fn from_spectrum(eigenvalues: Vec<f64>) -> Result<Self> {
        Self::new(DVector::from_vec(eigenvalues), Eigenbasis::Canonical)
    }

    pub fn new(eigenvalues: DVector<f64>, basis: Eigenbasis) -> Result<Self> {
        let p = eigenvalues.len();
        if p == 0 {
            return Err(Error::InvalidArgument("empty spectrum".into()));
        }
        for i in 0..p {
            if !(eigenvalues[i] > 0.0) || !eigenvalues[i].is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "eigenvalue {} is {}, must be finite and positive",
                    i + 1,
                    eigenvalues[i]
                )));
            }
            if i > 0 && eigenvalues[i] > eigenvalues[i - 1] {
                return Err(Error::InvalidArgument(
                    "eigenvalues must be sorted non-increasing".into(),
                ));
            }
        }
        match &basis {
            Eigenbasis::Canonical => {}
            Eigenbasis::Permutation(perm) => {
                if perm.len() != p {
                    return Err(Error::DimensionMismatch(format!(
                        "permutation length {} != dimension {p}",
                        perm.len()
                    )));
                }
                let mut seen = vec![false; p];
                for &j in perm {
                    if j >= p || seen[j] {
                        return Err(Error::InvalidArgument("invalid permutation".into()));
                    }
                    seen[j] = true;
                }
            }
            Eigenbasis::Dense(v) => {
                if v.nrows() != p || v.ncols() != p {
                    return Err(Error::DimensionMismatch(format!(
                        "eigenbasis is {}x{}, expected {p}x{p}",
                        v.nrows(),
                        v.ncols()
                    )));
                }
                let gram = v.transpose() * v;
                if (&gram - DMatrix::identity(p, p)).norm() > BASIS_TOL {
                    return Err(Error::InvalidArgument(
                        "eigenbasis is not orthonormal within tolerance".into(),
                    ));
                }
            }
        }
        Ok(Self { eigenvalues, basis })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Descending eigenvalues.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &Eigenbasis {
        &self.basis
    }

    /// `lambda_k` with 1-based indexing, `1 <= k <= p`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k - 1]
    }

    /// Spectral norm `lambda_1`.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.sum()
    }

    /// `Tr(Sigma^2)`.
    pub fn trace_sq(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l * l).sum()
    }

    /// Tail sum `sum_{i > k} lambda_i` (0-based count of leading terms
    /// dropped; `k = 0` gives the full trace).
    pub fn tail_trace(&self, k: usize) -> f64 {
        self.eigenvalues.iter().skip(k).sum()
    }

    /// Tail sum of squares `sum_{i > k} lambda_i^2`.
    pub fn tail_trace_sq(&self, k: usize) -> f64 {
        self.eigenvalues.iter().skip(k).map(|l| l * l).sum()
    }

    /// Coordinates of `x` in the eigenbasis, `V^T x`.
    fn to_eigen_coords(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Eigenbasis::Canonical => x.clone(),
            Eigenbasis::Permutation(perm) => {
                DVector::from_iterator(x.len(), perm.iter().map(|&j| x[j]))
            }
            Eigenbasis::Dense(v) => v.transpose() * x,
        }
    }

    /// Map eigen-coordinates back to the ambient basis, `V c`.
    fn eigen_to_ambient(&self, c: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Eigenbasis::Canonical => c.clone(),
            Eigenbasis::Permutation(perm) => {
                let mut out = DVector::zeros(c.len());
                for (i, &j) in perm.iter().enumerate() {
                    out[j] = c[i];
                }
                out
            }
            Eigenbasis::Dense(v) => v * c,
        }
    }

    fn scaled_map(&self, x: &DVector<f64>, f: impl Fn(f64) -> f64) -> DVector<f64> {
        let mut c = self.to_eigen_coords(x);
        for i in 0..c.len() {
            c[i] *= f(self.eigenvalues[i]);
        }
        self.eigen_to_ambient(&c)
    }

    /// `Sigma x`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.scaled_map(x, |l| l)
    }

    /// `Sigma^{-1} x`.
    pub fn apply_inv(&self, x: &DVector<f64>) -> DVector<f64> {
        self.scaled_map(x, |l| 1.0 / l)
    }

    /// `Sigma^{1/2} x`.
    pub fn apply_sqrt(&self, x: &DVector<f64>) -> DVector<f64> {
        self.scaled_map(x, |l| l.sqrt())
    }

    /// `x^T Sigma x`.
    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        let c = self.to_eigen_coords(x);
        (0..c.len()).map(|i| self.eigenvalues[i] * c[i] * c[i]).sum()
    }

    /// Squared Mahalanobis norm `x^T Sigma^{-1} x`.
    pub fn mahalanobis_sq(&self, x: &DVector<f64>) -> f64 {
        let c = self.to_eigen_coords(x);
        (0..c.len()).map(|i| c[i] * c[i] / self.eigenvalues[i]).sum()
    }

    /// `||pi_k x||^2`: squared mass of `x` in the top-k eigenspace.
    pub fn projected_sq_norm(&self, x: &DVector<f64>, k: usize) -> f64 {
        let c = self.to_eigen_coords(x);
        (0..k.min(c.len())).map(|i| c[i] * c[i]).sum()
    }

    /// Dense covariance matrix; test and diagnostic use only.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let p = self.dim();
        match &self.basis {
            Eigenbasis::Canonical => DMatrix::from_diagonal(&self.eigenvalues),
            Eigenbasis::Permutation(perm) => {
                let mut m = DMatrix::zeros(p, p);
                for (i, &j) in perm.iter().enumerate() {
                    m[(j, j)] = self.eigenvalues[i];
                }
                m
            }
            Eigenbasis::Dense(v) => {
                let mut scaled = v.clone();
                for (j, mut col) in scaled.column_iter_mut().enumerate() {
                    col *= self.eigenvalues[j];
                }
                &scaled * v.transpose()
            }
        }
    }
}

/// Effective rank `Tr(Sigma) / lambda_1`, in `[1, p]`.
pub fn effective_rank(model: &CovarianceModel) -> f64 {
    model.trace() / model.spectral_norm()
}

/// k-effective rank `(sum_{i > k} lambda_i) / lambda_{k+1}` for
/// `0 <= k <= p - 1`.
pub fn k_effective_rank(model: &CovarianceModel, k: usize) -> Result<f64> {
    if k >= model.dim() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} out of range for dimension {}",
            model.dim()
        )));
    }
    Ok(model.tail_trace(k) / model.eigenvalue(k + 1))
}

/// Spike-count threshold: smallest `k >= 0` with
/// `r_k(Sigma) + n * ridge / lambda_{k+1} >= c1 * n`, or the sentinel
/// `p + 1` when no such `k` exists.
pub fn k_star(model: &CovarianceModel, ridge: f64, n: usize, c1: f64) -> usize {
    let p = model.dim();
    let mut tail = model.trace();
    for k in 0..p {
        let lam_next = model.eigenvalue(k + 1);
        if tail / lam_next + (n as f64) * ridge / lam_next >= c1 * n as f64 {
            return k;
        }
        tail -= lam_next;
    }
    p + 1
}

/// Orthogonal projector onto the top-k eigenspace, `sum_{i <= k} v_i v_i^T`.
pub fn projector(model: &CovarianceModel, k: usize) -> Result<DMatrix<f64>> {
    let p = model.dim();
    if k > p {
        return Err(Error::InvalidArgument(format!(
            "k = {k} out of range for dimension {p}"
        )));
    }
    let mut m = DMatrix::zeros(p, p);
    match model.basis() {
        Eigenbasis::Canonical => {
            for i in 0..k {
                m[(i, i)] = 1.0;
            }
        }
        Eigenbasis::Permutation(perm) => {
            for &j in perm.iter().take(k) {
                m[(j, j)] = 1.0;
            }
        }
        Eigenbasis::Dense(v) => {
            if k > 0 {
                let vk = v.columns(0, k);
                m = vk * vk.transpose();
            }
        }
    }
    Ok(m)
}

/// Whether `theta` puts at most 1/5 of its squared mass in the top-k
/// eigenspace: `||pi_k theta||^2 <= ||theta||^2 / 5`.
pub fn cone_member(theta: &DVector<f64>, model: &CovarianceModel, k: usize) -> Result<bool> {
    if theta.len() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "theta has length {} but model dimension is {}",
            theta.len(),
            model.dim()
        )));
    }
    let norm_sq = theta.norm_squared();
    if norm_sq == 0.0 {
        return Err(Error::InvalidArgument("theta must be nonzero".into()));
    }
    Ok(model.projected_sq_norm(theta, k) <= norm_sq / 5.0)
}

/// Linearly decaying spectrum `lambda_i = (p - i + 1) / p`.
pub fn spectrum_linear(p: usize) -> Result<CovarianceModel> {
    CovarianceModel::from_spectrum((0..p).map(|i| (p - i) as f64 / p as f64).collect())
}

/// `k` leading eigenvalues at `high`, the remaining `p - k` at `low`.
pub fn spectrum_spiked(p: usize, k: usize, high: f64, low: f64) -> Result<CovarianceModel> {
    if k > p {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds p = {p}")));
    }
    if high < low {
        return Err(Error::InvalidArgument(
            "spike level must be >= bulk level".into(),
        ));
    }
    CovarianceModel::from_spectrum(
        (0..p).map(|i| if i < k { high } else { low }).collect(),
    )
}

pub fn spectrum_identity(p: usize) -> Result<CovarianceModel> {
    CovarianceModel::from_spectrum(vec![1.0; p])
}

/// `I_p + sum_{i in R} O_i e_i e_i^T`, re-sorted descending with the
/// coordinate permutation recorded so that projectors follow eigenvalue
/// order rather than coordinate order. Indices are 0-based.
pub fn spectrum_corrupted(
    p: usize,
    indices: &[usize],
    magnitudes: &[f64],
) -> Result<CovarianceModel> {
    if indices.len() != magnitudes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} indices but {} magnitudes",
            indices.len(),
            magnitudes.len()
        )));
    }
    let mut diag = vec![1.0_f64; p];
    for (&i, &o) in indices.iter().zip(magnitudes) {
        if i >= p {
            return Err(Error::InvalidArgument(format!(
                "corrupted index {i} out of range for p = {p}"
            )));
        }
        if !(o > 0.0) {
            return Err(Error::InvalidArgument(
                "corruption magnitudes must be positive".into(),
            ));
        }
        diag[i] += o;
    }
    let mut order: Vec<usize> = (0..p).collect();
    // Stable sort keeps coordinate order among ties.
    order.sort_by(|&a, &b| diag[b].partial_cmp(&diag[a]).unwrap());
    let eigenvalues = DVector::from_iterator(p, order.iter().map(|&j| diag[j]));
    CovarianceModel::new(eigenvalues, Eigenbasis::Permutation(order))
}

/// Serializable description of a covariance spectrum.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumSpec {
    Linear { p: usize },
    Spiked { p: usize, k: usize, high: f64, low: f64 },
    Identity { p: usize },
    Corrupted { p: usize, indices: Vec<usize>, magnitudes: Vec<f64> },
    Explicit { eigenvalues: Vec<f64> },
}

impl SpectrumSpec {
    pub fn build(&self) -> Result<CovarianceModel> {
        match self {
            SpectrumSpec::Linear { p } => spectrum_linear(*p),
            SpectrumSpec::Spiked { p, k, high, low } => spectrum_spiked(*p, *k, *high, *low),
            SpectrumSpec::Identity { p } => spectrum_identity(*p),
            SpectrumSpec::Corrupted { p, indices, magnitudes } => {
                spectrum_corrupted(*p, indices, magnitudes)
            }
            SpectrumSpec::Explicit { eigenvalues } => {
                CovarianceModel::from_spectrum(eigenvalues.clone())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SpectrumSpec::Linear { p }
            | SpectrumSpec::Spiked { p, .. }
            | SpectrumSpec::Identity { p }
            | SpectrumSpec::Corrupted { p, .. } => *p,
            SpectrumSpec::Explicit { eigenvalues } => eigenvalues.len(),
        }
    }

    /// The medium-effective-rank reference spectrum: three unit spikes over
    /// a 0.01 bulk.
    pub fn medium_reference(p: usize) -> Self {
        SpectrumSpec::Spiked { p, k: 3, high: 1.0, low: 0.01 }
    }
}
