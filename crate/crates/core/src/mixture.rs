//! Sampling from the two-component mixture `Y_i = theta * eta_i + W_i`
//! and the adversarial covariance-corruption operator.
//!
//! All sampling is a pure function of `(params, n, seed)`; replicates must
//! use distinct derived seeds, never a shared mutable generator.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::spectra::CovarianceModel;

/// Noise driver for the columns of `W`: entries of `w_i` are i.i.d.
/// standard normal or symmetric ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    Rademacher,
}

/// Parameters of the sampling law: center `theta`, noise covariance and
/// noise driver.
#[derive(Debug, Clone)]
pub struct MixtureParams {
    pub theta: DVector<f64>,
    pub covariance: CovarianceModel,
    pub noise_kind: NoiseKind,
}

impl MixtureParams {
    pub fn new(theta: DVector<f64>, covariance: CovarianceModel, noise_kind: NoiseKind) -> Result<Self> {
        if theta.len() != covariance.dim() {
            return Err(Error::DimensionMismatch(format!(
                "theta has length {} but covariance dimension is {}",
                theta.len(),
                covariance.dim()
            )));
        }
        Ok(Self { theta, covariance, noise_kind })
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

/// Training sample: observations as columns of `y`, labels in ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: DMatrix<f64>,
    pub labels: DVector<f64>,
}

impl Dataset {
    pub fn new(y: DMatrix<f64>, labels: DVector<f64>) -> Result<Self> {
        if y.ncols() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} observations but {} labels",
                y.ncols(),
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l != 1.0 && l != -1.0) {
            return Err(Error::InvalidArgument("labels must be exactly +-1".into()));
        }
        Ok(Self { y, labels })
    }

    pub fn dim(&self) -> usize {
        self.y.nrows()
    }

    pub fn len(&self) -> usize {
        self.y.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Debug CSV export, one row per observation:
    /// `col,label,y_1..y_p`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let p = self.dim();
        let mut header = String::from("col,label");
        for j in 1..=p {
            header.push_str(&format!(",y_{j}"));
        }
        writeln!(out, "{header}")?;
        for i in 0..self.len() {
            let mut line = format!("{},{}", i + 1, if self.labels[i] > 0.0 { 1 } else { -1 });
            for j in 0..p {
                line.push_str(&format!(",{}", crate::experiments::fmt_f64(self.y[(j, i)])));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Adversarial corruption: indices `R` (0-based coordinates), one positive
/// magnitude per index, and the adversary's budget `|R| <= budget`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub indices: Vec<usize>,
    pub magnitudes: Vec<f64>,
    pub budget: usize,
}

impl CorruptionSpec {
    pub fn uniform(indices: Vec<usize>, magnitude: f64, budget: usize) -> Self {
        let magnitudes = vec![magnitude; indices.len()];
        Self { indices, magnitudes, budget }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.indices.len() > self.budget {
            return Err(Error::BudgetExceeded {
                requested: self.indices.len(),
                budget: self.budget,
            });
        }
        if self.indices.len() != self.magnitudes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} indices but {} magnitudes",
                self.indices.len(),
                self.magnitudes.len()
            )));
        }
        let mut seen = vec![false; p];
        for &i in &self.indices {
            if i >= p {
                return Err(Error::InvalidArgument(format!(
                    "corruption index {i} out of range for p = {p}"
                )));
            }
            if seen[i] {
                return Err(Error::InvalidArgument(format!("duplicate corruption index {i}")));
            }
            seen[i] = true;
        }
        if self.magnitudes.iter().any(|&o| !(o > 0.0)) {
            return Err(Error::InvalidArgument("corruption magnitudes must be positive".into()));
        }
        Ok(())
    }
}

fn noise_entry(rng: &mut impl Rng, kind: NoiseKind) -> f64 {
    match kind {
        NoiseKind::Gaussian => rng.sample(StandardNormal),
        NoiseKind::Rademacher => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
    }
}

/// Draw `n` labelled observations. Labels come from the `labels` stream,
/// column `i`'s noise from the `("noise", i)` stream, so output is
/// independent of evaluation order.
pub fn sample_dataset(params: &MixtureParams, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let p = params.dim();
    let mut label_rng = stream(seed, "labels", 0);
    let labels = DVector::from_fn(n, |_, _| if label_rng.random::<bool>() { 1.0 } else { -1.0 });

    let mut y = DMatrix::zeros(p, n);
    for i in 0..n {
        let mut rng = stream(seed, "noise", i as u64);
        let w = DVector::from_fn(p, |_, _| noise_entry(&mut rng, params.noise_kind));
        let noise = params.covariance.apply_sqrt(&w);
        for j in 0..p {
            y[(j, i)] = params.theta[j] * labels[i] + noise[j];
        }
    }
    Dataset::new(y, labels)
}

/// Single fresh observation `(y, eta)` from the mixture; used by Monte
/// Carlo risk evaluation.
pub fn sample_observation(params: &MixtureParams, rng: &mut impl Rng) -> (DVector<f64>, f64) {
    let label = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let w = DVector::from_fn(params.dim(), |_, _| noise_entry(rng, params.noise_kind));
    let noise = params.covariance.apply_sqrt(&w);
    (&params.theta * label + noise, label)
}

/// Uniform direction on the unit sphere scaled to the requested norm.
pub fn sample_theta_spherical(p: usize, norm: f64, seed: u64) -> Result<DVector<f64>> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be >= 1".into()));
    }
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("norm must be positive".into()));
    }
    let mut rng = stream(seed, "theta", 0);
    loop {
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let len = z.norm();
        if len > 1e-8 {
            return Ok(z * (norm / len));
        }
    }
}

/// Add adversarial noise `O^{1/2} eps_i` on the corrupted coordinates of
/// every training observation. Coordinates outside `R` are untouched.
pub fn corrupt(data: &Dataset, spec: &CorruptionSpec, seed: u64) -> Result<Dataset> {
    spec.validate(data.dim())?;
    let mut y = data.y.clone();
    let roots: Vec<f64> = spec.magnitudes.iter().map(|o| o.sqrt()).collect();
    for i in 0..data.len() {
        let mut rng = stream(seed, "corrupt", i as u64);
        for (&coord, &root) in spec.indices.iter().zip(&roots) {
            let eps: f64 = rng.sample(StandardNormal);
            y[(coord, i)] += root * eps;
        }
    }
    Dataset::new(y, data.labels.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::spectrum_identity;

    fn identity_params(p: usize, theta: DVector<f64>, kind: NoiseKind) -> MixtureParams {
        MixtureParams::new(theta, spectrum_identity(p).unwrap(), kind).unwrap()
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let params = identity_params(8, DVector::from_element(8, 0.3), NoiseKind::Gaussian);
        let a = sample_dataset(&params, 12, 99).unwrap();
        let b = sample_dataset(&params, 12, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_dataset(&params, 12, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pooled_sample_covariance_near_identity() {
        let p = 5;
        let n = 20_000;
        let params = identity_params(p, DVector::zeros(p), NoiseKind::Gaussian);
        let data = sample_dataset(&params, n, 7).unwrap();
        for j in 0..p {
            let mut sum_sq = 0.0;
            for i in 0..n {
                sum_sq += data.y[(j, i)] * data.y[(j, i)];
            }
            let var = sum_sq / n as f64;
            assert!((var - 1.0).abs() < 0.05, "coordinate {j}: variance {var}");
        }
    }

    #[test]
    fn rademacher_noise_support() {
        let p = 6;
        let theta = DVector::from_element(p, 2.0);
        let params = identity_params(p, theta.clone(), NoiseKind::Rademacher);
        let data = sample_dataset(&params, 50, 5).unwrap();
        for i in 0..data.len() {
            for j in 0..p {
                let w = data.y[(j, i)] - theta[j] * data.labels[i];
                assert!(
                    (w - 1.0).abs() < 1e-12 || (w + 1.0).abs() < 1e-12,
                    "noise entry {w} is not +-1"
                );
            }
        }
    }

    #[test]
    fn label_balance() {
        let params = identity_params(2, DVector::zeros(2), NoiseKind::Gaussian);
        let n = 100_000;
        let data = sample_dataset(&params, n, 123).unwrap();
        let mean = data.labels.sum() / n as f64;
        assert!(mean.abs() < 0.02, "label mean {mean}");
    }

    #[test]
    fn theta_spherical_norm_and_symmetry() {
        let theta = sample_theta_spherical(1, 2.5, 4).unwrap();
        assert!((theta[0].abs() - 2.5).abs() < 1e-12);

        for seed in 0..20 {
            let theta = sample_theta_spherical(50, 3.0, seed).unwrap();
            assert!((theta.norm() - 3.0).abs() < 1e-12 * 3.0);
        }

        // Empirical mean over many draws stays near the origin.
        let p = 50;
        let draws = 10_000;
        let mut mean = DVector::zeros(p);
        for seed in 0..draws {
            mean += sample_theta_spherical(p, 1.0, seed as u64).unwrap();
        }
        mean /= draws as f64;
        assert!(mean.norm() <= 0.05);
    }

    #[test]
    fn corrupt_empty_set_is_identity() {
        let params = identity_params(4, DVector::zeros(4), NoiseKind::Gaussian);
        let data = sample_dataset(&params, 6, 1).unwrap();
        let spec = CorruptionSpec::uniform(vec![], 1000.0, 3);
        let out = corrupt(&data, &spec, 42).unwrap();
        assert_eq!(out, data);
    }

    #[test]
    fn corrupt_touches_only_selected_coordinates() {
        let params = identity_params(10, DVector::zeros(10), NoiseKind::Gaussian);
        let data = sample_dataset(&params, 8, 2).unwrap();
        let spec = CorruptionSpec::uniform(vec![3, 7], 100.0, 2);
        let out = corrupt(&data, &spec, 42).unwrap();
        for i in 0..data.len() {
            for j in 0..10 {
                if j == 3 || j == 7 {
                    continue;
                }
                assert_eq!(out.y[(j, i)], data.y[(j, i)], "coordinate {j} changed");
            }
        }
        assert_ne!(out.y[(3, 0)], data.y[(3, 0)]);
    }

    #[test]
    fn corrupt_variance_matches_magnitude() {
        let p = 4;
        let n = 200;
        let params = identity_params(p, DVector::zeros(p), NoiseKind::Gaussian);
        let spec = CorruptionSpec::uniform(vec![1, 2], 1000.0, 2);
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for rep in 0..500u64 {
            let data = sample_dataset(&params, n, 1000 + rep).unwrap();
            let out = corrupt(&data, &spec, 2000 + rep).unwrap();
            for i in 0..n {
                for &j in &[1usize, 2] {
                    sum_sq += out.y[(j, i)] * out.y[(j, i)];
                    count += 1;
                }
            }
        }
        let var = sum_sq / count as f64;
        assert!(
            (var - 1001.0).abs() < 10.0,
            "corrupted coordinate variance {var}, expected about 1001"
        );
    }

    #[test]
    fn corrupt_budget_and_range_checks() {
        let params = identity_params(4, DVector::zeros(4), NoiseKind::Gaussian);
        let data = sample_dataset(&params, 3, 1).unwrap();
        let over = CorruptionSpec::uniform(vec![0, 1, 2], 10.0, 2);
        assert!(matches!(corrupt(&data, &over, 1), Err(Error::BudgetExceeded { .. })));
        let out_of_range = CorruptionSpec::uniform(vec![9], 10.0, 2);
        assert!(corrupt(&data, &out_of_range, 1).is_err());
    }

    #[test]
    fn dataset_csv_layout() {
        let y = DMatrix::from_column_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let labels = DVector::from_vec(vec![1.0, -1.0]);
        let data = Dataset::new(y, labels).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "col,label,y_1,y_2");
        assert!(lines.next().unwrap().starts_with("1,1,"));
        assert!(lines.next().unwrap().starts_with("2,-1,"));
    }
}
