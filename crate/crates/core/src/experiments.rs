//! Configurable experiment sweeps and result aggregation.
//!
//! A sweep walks a grid of signal strengths; for every grid point and
//! replicate it draws a spherical center, samples a training set,
//! optionally corrupts it, fits the requested classifiers and evaluates
//! their risk against the clean test distribution. Replicates are
//! independent work items with derived random streams, so results are
//! byte-identical for any thread count.

use std::io::Write;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{averaging, interpolator, lda, ridge, svm_hard, LinearClassifier};
use crate::error::{Error, Result};
use crate::mixture::{
    corrupt, sample_dataset, sample_theta_spherical, CorruptionSpec, Dataset, MixtureParams,
    NoiseKind,
};
use crate::risk::{exact_gaussian_risk, mc_risk};
use crate::rng::{derive_seed, stream};
use crate::spectra::{CovarianceModel, SpectrumSpec};
use crate::svp::svp_margins;

/// Render a double with 17 significant digits so CSV values round-trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Exact CSV header of sweep results.
pub const RESULTS_HEADER: &str =
    "experiment,signal_norm_sq,classifier,lambda,mean_risk,stderr,replicates,failures";

/// A ridge level: finite `lambda >= 0`, or infinity (the averaging limit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Finite(f64),
    Infinite,
}

impl Serialize for Lambda {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Lambda::Finite(x) => s.serialize_f64(*x),
            Lambda::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Lambda {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) if x.is_finite() && x >= 0.0 => Ok(Lambda::Finite(x)),
            Repr::Num(x) => Err(serde::de::Error::custom(format!(
                "lambda must be a finite value >= 0, got {x}"
            ))),
            Repr::Text(t) if t == "inf" => Ok(Lambda::Infinite),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "unrecognized lambda {t:?}, expected a number or \"inf\""
            ))),
        }
    }
}

/// Classifier families selectable in a config; `ridge` expands over the
/// config's lambda list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Averaging,
    Lda,
    Ridge,
    Interpolator,
    Svm,
}

/// A fully resolved classifier cell of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifierSpec {
    Averaging,
    Lda,
    Ridge(f64),
    Interpolator,
    Svm,
}

impl ClassifierSpec {
    pub fn id(&self) -> &'static str {
        match self {
            ClassifierSpec::Averaging => "averaging",
            ClassifierSpec::Lda => "lda",
            ClassifierSpec::Ridge(_) => "ridge",
            ClassifierSpec::Interpolator => "interpolator",
            ClassifierSpec::Svm => "svm",
        }
    }

    /// Value of the CSV `lambda` column: the ridge level where one exists
    /// (`inf` for averaging, 0 for the interpolator), empty otherwise.
    pub fn lambda_label(&self) -> String {
        match self {
            ClassifierSpec::Averaging => "inf".into(),
            ClassifierSpec::Interpolator => fmt_f64(0.0),
            ClassifierSpec::Ridge(l) => fmt_f64(*l),
            ClassifierSpec::Lda | ClassifierSpec::Svm => String::new(),
        }
    }

    fn dedup_key(&self) -> (u8, u64) {
        match self {
            ClassifierSpec::Averaging => (0, 0),
            ClassifierSpec::Lda => (1, 0),
            ClassifierSpec::Ridge(l) => (2, l.to_bits()),
            ClassifierSpec::Interpolator => (3, 0),
            ClassifierSpec::Svm => (4, 0),
        }
    }

    fn needs_overparametrization(&self) -> bool {
        matches!(self, ClassifierSpec::Interpolator | ClassifierSpec::Svm)
    }
}

/// How per-replicate risk is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMode {
    /// Closed-form conditional risk; requires Gaussian noise.
    Exact,
    /// Empirical error frequency over fresh draws.
    Mc { samples: usize },
}

/// Corruption described at config level; `random` draws the coordinate set
/// once per run from the master seed.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorruptionPlan {
    Random {
        count: usize,
        magnitude: f64,
        #[serde(default)]
        budget: Option<usize>,
    },
    Explicit {
        indices: Vec<usize>,
        magnitudes: Vec<f64>,
        #[serde(default)]
        budget: Option<usize>,
    },
}

impl CorruptionPlan {
    /// Materialize the coordinate set for this run.
    pub fn resolve(&self, seed: u64, p: usize) -> Result<CorruptionSpec> {
        let spec = match self {
            CorruptionPlan::Random { count, magnitude, budget } => {
                if *count > p {
                    return Err(Error::InvalidConfig(format!(
                        "cannot corrupt {count} of {p} coordinates"
                    )));
                }
                let mut rng = stream(seed, "corrupt-coords", 0);
                let mut pool: Vec<usize> = (0..p).collect();
                for i in 0..*count {
                    let j = i + rng.random_range(0..p - i);
                    pool.swap(i, j);
                }
                let mut indices = pool[..*count].to_vec();
                indices.sort_unstable();
                CorruptionSpec::uniform(indices, *magnitude, budget.unwrap_or(*count))
            }
            CorruptionPlan::Explicit { indices, magnitudes, budget } => CorruptionSpec {
                indices: indices.clone(),
                magnitudes: magnitudes.clone(),
                budget: budget.unwrap_or(indices.len()),
            },
        };
        spec.validate(p)?;
        Ok(spec)
    }
}

fn default_name() -> String {
    "custom".into()
}

fn default_lambdas() -> Vec<Lambda> {
    vec![Lambda::Finite(0.0), Lambda::Finite(0.5), Lambda::Finite(3.0), Lambda::Infinite]
}

fn default_classifiers() -> Vec<ClassifierKind> {
    vec![ClassifierKind::Ridge]
}

fn default_risk_mode() -> RiskMode {
    RiskMode::Exact
}

fn default_noise() -> NoiseKind {
    NoiseKind::Gaussian
}

/// Full description of a sweep. JSON config files mirror these field
/// names; missing optional fields fall back to the defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub p: usize,
    pub n: usize,
    /// Grid of center norms `||theta||`; empty means the default grid of
    /// 12 log-spaced squared norms spanning `[0.25 p/n, 16 p/n]`.
    #[serde(default)]
    pub signal_norms: Vec<f64>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<Lambda>,
    pub spectrum: SpectrumSpec,
    #[serde(default)]
    pub corruption: Option<CorruptionPlan>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_risk_mode")]
    pub risk_mode: RiskMode,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierKind>,
    #[serde(default = "default_noise")]
    pub noise_kind: NoiseKind,
    /// Also run the proliferation detector on every training sample and
    /// report the per-cell rate.
    #[serde(default)]
    pub track_svp: bool,
}

/// `count` log-spaced squared norms over `[lo_sq, hi_sq]`, returned as
/// norms.
pub fn log_spaced_norms(lo_sq: f64, hi_sq: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo_sq > 0.0 && hi_sq > lo_sq);
    let (a, b) = (lo_sq.ln(), hi_sq.ln());
    (0..count)
        .map(|i| ((a + (b - a) * i as f64 / (count - 1) as f64).exp()).sqrt())
        .collect()
}

/// Default grid: 12 log-spaced squared norms spanning `[0.25 p/n, 16 p/n]`.
pub fn default_signal_grid(p: usize, n: usize) -> Vec<f64> {
    let ratio = p as f64 / n as f64;
    log_spaced_norms(0.25 * ratio, 16.0 * ratio, 12)
}

/// Grid tied to the consistency scale of a specific spectrum,
/// `s = ||Sigma|| sqrt(r(Sigma^2) / n)`: 12 log-spaced squared norms over
/// `[0.25 s, 16 s]`. Used when the flat `p/n` scale is far from the
/// spectrum's own transition region.
pub fn consistency_signal_grid(model: &CovarianceModel, n: usize) -> Vec<f64> {
    let spectral = model.spectral_norm();
    let rank_sq = model.trace_sq() / (spectral * spectral);
    let scale = spectral * (rank_sq / n as f64).sqrt();
    log_spaced_norms(0.25 * scale, 16.0 * scale, 12)
}

impl ExperimentConfig {
    /// Signal grid with the default applied.
    pub fn resolved_signal_norms(&self) -> Vec<f64> {
        if self.signal_norms.is_empty() {
            default_signal_grid(self.p, self.n)
        } else {
            self.signal_norms.clone()
        }
    }

    /// Expand `classifiers` x `lambdas` into concrete cells, deduplicated
    /// in first-appearance order. `lambda = 0` is the interpolator and
    /// `lambda = inf` the averaging classifier, shared with the
    /// correspondingly named families.
    pub fn resolved_classifiers(&self) -> Result<Vec<ClassifierSpec>> {
        let mut out: Vec<ClassifierSpec> = Vec::new();
        let mut push = |spec: ClassifierSpec| {
            if !out.iter().any(|s| s.dedup_key() == spec.dedup_key()) {
                out.push(spec);
            }
        };
        for kind in &self.classifiers {
            match kind {
                ClassifierKind::Averaging => push(ClassifierSpec::Averaging),
                ClassifierKind::Lda => push(ClassifierSpec::Lda),
                ClassifierKind::Interpolator => push(ClassifierSpec::Interpolator),
                ClassifierKind::Svm => push(ClassifierSpec::Svm),
                ClassifierKind::Ridge => {
                    if self.lambdas.is_empty() {
                        return Err(Error::InvalidConfig(
                            "ridge classifier requested with an empty lambda list".into(),
                        ));
                    }
                    for lambda in &self.lambdas {
                        match lambda {
                            Lambda::Infinite => push(ClassifierSpec::Averaging),
                            Lambda::Finite(l) if *l == 0.0 => push(ClassifierSpec::Interpolator),
                            Lambda::Finite(l) => push(ClassifierSpec::Ridge(*l)),
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidConfig("no classifiers requested".into()));
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be >= 1".into()));
        }
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidConfig("p and n must be >= 1".into()));
        }
        if self.spectrum.dim() != self.p {
            return Err(Error::InvalidConfig(format!(
                "spectrum dimension {} does not match p = {}",
                self.spectrum.dim(),
                self.p
            )));
        }
        let norms = self.resolved_signal_norms();
        if norms.is_empty() {
            return Err(Error::InvalidConfig("signal grid is empty".into()));
        }
        if norms.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidConfig("signal norms must be positive and finite".into()));
        }
        let classifiers = self.resolved_classifiers()?;
        if classifiers.iter().any(ClassifierSpec::needs_overparametrization) && self.p < self.n {
            return Err(Error::InvalidConfig(format!(
                "interpolator/svm require p >= n, got p = {}, n = {}",
                self.p, self.n
            )));
        }
        if matches!(self.risk_mode, RiskMode::Exact) && self.noise_kind != NoiseKind::Gaussian {
            return Err(Error::InvalidConfig(
                "exact risk mode requires gaussian noise; use mc mode".into(),
            ));
        }
        if let RiskMode::Mc { samples } = self.risk_mode {
            if samples == 0 {
                return Err(Error::InvalidConfig("mc samples must be >= 1".into()));
            }
        }
        if let Some(plan) = &self.corruption {
            plan.resolve(self.seed, self.p)?;
        }
        Ok(())
    }
}

/// Aggregated outcome for one `(signal norm, classifier)` cell.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub experiment: String,
    /// Center norm `||theta||` of the cell.
    pub signal_norm: f64,
    pub classifier: ClassifierSpec,
    /// Mean risk over successful replicates; NaN when the cell was
    /// excluded (more than 1% of replicates failed).
    pub mean_risk: f64,
    /// Standard error of the mean over replicates.
    pub stderr: f64,
    /// Number of successful replicates.
    pub replicates: usize,
    pub failures: usize,
    pub svp_rate: Option<f64>,
}

struct ItemOutcome {
    risks: Vec<std::result::Result<f64, Error>>,
    svp_holds: Option<std::result::Result<bool, Error>>,
}

fn fit_classifier(
    spec: ClassifierSpec,
    train: &Dataset,
    clean: &CovarianceModel,
) -> Result<LinearClassifier> {
    match spec {
        ClassifierSpec::Averaging => averaging(train),
        ClassifierSpec::Lda => lda(train, clean),
        ClassifierSpec::Ridge(l) => ridge(train, l),
        ClassifierSpec::Interpolator => interpolator(train),
        ClassifierSpec::Svm => svm_hard(train).map(|fit| fit.classifier),
    }
}

fn run_item(
    config: &ExperimentConfig,
    model: &CovarianceModel,
    corruption: Option<&CorruptionSpec>,
    classifiers: &[ClassifierSpec],
    norm: f64,
    signal_index: usize,
    replicate: usize,
) -> ItemOutcome {
    let item_seed = derive_seed(
        config.seed,
        "item",
        ((signal_index as u64) << 32) | replicate as u64,
    );
    let setup = (|| -> Result<(DVector<f64>, MixtureParams, Dataset)> {
        let theta = sample_theta_spherical(config.p, norm, derive_seed(item_seed, "theta", 0))?;
        let clean_params = MixtureParams::new(theta.clone(), model.clone(), config.noise_kind)?;
        let mut train = sample_dataset(&clean_params, config.n, derive_seed(item_seed, "train", 0))?;
        if let Some(spec) = corruption {
            train = corrupt(&train, spec, derive_seed(item_seed, "corrupt", 0))?;
        }
        Ok((theta, clean_params, train))
    })();

    let (theta, clean_params, train) = match setup {
        Ok(t) => t,
        Err(e) => {
            return ItemOutcome {
                risks: classifiers.iter().map(|_| Err(e.clone())).collect(),
                svp_holds: config.track_svp.then(|| Err(e.clone())),
            }
        }
    };

    let risks = classifiers
        .iter()
        .enumerate()
        .map(|(ci, &spec)| {
            let classifier = fit_classifier(spec, &train, model)?;
            match config.risk_mode {
                RiskMode::Exact => exact_gaussian_risk(classifier.weights(), &theta, model),
                RiskMode::Mc { samples } => {
                    let report = mc_risk(
                        &classifier,
                        &clean_params,
                        samples,
                        derive_seed(item_seed, "mc-eval", ci as u64),
                    )?;
                    Ok(report.mc_estimate.expect("mc_risk always sets an estimate"))
                }
            }
        })
        .collect();

    let svp_holds = config
        .track_svp
        .then(|| svp_margins(&train).map(|report| report.holds));

    ItemOutcome { risks, svp_holds }
}

fn aggregate_cell(values: &[f64], failures: usize, total: usize) -> (f64, f64) {
    // A cell with more than 1% failed replicates is excluded.
    if failures * 100 > total || values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let stderr = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    };
    (mean, stderr)
}

/// Run a sweep. Deterministic in `(config, seed)`; the rayon schedule
/// never affects output.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let model = config.spectrum.build()?;
    let classifiers = config.resolved_classifiers()?;
    let corruption = match &config.corruption {
        Some(plan) => Some(plan.resolve(config.seed, config.p)?),
        None => None,
    };
    let norms = config.resolved_signal_norms();

    let items: Vec<(usize, usize)> = (0..norms.len())
        .flat_map(|s| (0..config.replicates).map(move |r| (s, r)))
        .collect();
    let outcomes: Vec<ItemOutcome> = items
        .par_iter()
        .map(|&(s, r)| {
            run_item(config, &model, corruption.as_ref(), &classifiers, norms[s], s, r)
        })
        .collect();

    let mut rows = Vec::with_capacity(norms.len() * classifiers.len());
    for (s, &norm) in norms.iter().enumerate() {
        let cell_outcomes = &outcomes[s * config.replicates..(s + 1) * config.replicates];
        let svp_rate = if config.track_svp {
            let oks: Vec<bool> = cell_outcomes
                .iter()
                .filter_map(|o| o.svp_holds.as_ref().and_then(|r| r.as_ref().ok()).copied())
                .collect();
            if oks.is_empty() {
                None
            } else {
                Some(oks.iter().filter(|&&h| h).count() as f64 / oks.len() as f64)
            }
        } else {
            None
        };
        for (ci, &spec) in classifiers.iter().enumerate() {
            let mut values = Vec::with_capacity(config.replicates);
            let mut failures = 0usize;
            for outcome in cell_outcomes {
                match &outcome.risks[ci] {
                    Ok(v) => values.push(*v),
                    Err(_) => failures += 1,
                }
            }
            let (mean_risk, stderr) = aggregate_cell(&values, failures, config.replicates);
            rows.push(ResultRow {
                experiment: config.name.clone(),
                signal_norm: norm,
                classifier: spec,
                mean_risk,
                stderr,
                replicates: values.len(),
                failures,
                svp_rate,
            });
        }
    }
    Ok(rows)
}

/// Run a sweep inside a dedicated thread pool. `threads = None` uses the
/// global pool; the result is identical either way.
pub fn run_sweep_with_threads(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<Vec<ResultRow>> {
    match threads {
        None => run_sweep(config),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| run_sweep(config))
        }
    }
}

/// Write rows in the fixed CSV layout.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.experiment,
            fmt_f64(row.signal_norm * row.signal_norm),
            row.classifier.id(),
            row.classifier.lambda_label(),
            fmt_f64(row.mean_risk),
            fmt_f64(row.stderr),
            row.replicates,
            row.failures,
        )?;
    }
    Ok(())
}

pub fn results_csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_results_csv(rows, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// The two covariance regimes of the first reference experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fig1Variant {
    LargeRank,
    MediumRank,
}

/// First reference experiment: p = 500, n = 30, 1000 replicates, ridge
/// levels {0, 0.5, 3, inf}, exact risk.
///
/// The large-rank variant uses the linear spectrum with the default
/// `p/n`-scaled grid. The medium-rank spectrum concentrates almost all of
/// `Tr(Sigma^2)` in three spikes, which moves its risk transition two
/// orders of magnitude down; its grid is therefore tied to the spectrum's
/// own consistency scale.
pub fn preset_fig1(variant: Fig1Variant, seed: u64) -> ExperimentConfig {
    let p = 500;
    let n = 30;
    let (name, spectrum) = match variant {
        Fig1Variant::LargeRank => ("fig1-large", SpectrumSpec::Linear { p }),
        Fig1Variant::MediumRank => ("fig1-medium", SpectrumSpec::medium_reference(p)),
    };
    let signal_norms = match variant {
        Fig1Variant::LargeRank => default_signal_grid(p, n),
        Fig1Variant::MediumRank => {
            consistency_signal_grid(&spectrum.build().expect("reference spectrum"), n)
        }
    };
    ExperimentConfig {
        name: name.into(),
        p,
        n,
        signal_norms,
        lambdas: default_lambdas(),
        spectrum,
        corruption: None,
        replicates: 1000,
        seed,
        risk_mode: RiskMode::Exact,
        classifiers: vec![ClassifierKind::Ridge],
        noise_kind: NoiseKind::Gaussian,
        track_svp: false,
    }
}

/// Second reference experiment: isotropic noise with 15 training
/// coordinates corrupted to variance 1000 (the test distribution stays
/// clean), otherwise as the first experiment.
pub fn preset_fig2(seed: u64) -> ExperimentConfig {
    let p = 500;
    let n = 30;
    ExperimentConfig {
        name: "fig2".into(),
        p,
        n,
        signal_norms: default_signal_grid(p, n),
        lambdas: default_lambdas(),
        spectrum: SpectrumSpec::Identity { p },
        corruption: Some(CorruptionPlan::Random {
            count: n / 2,
            magnitude: 999.0,
            budget: Some(n / 2),
        }),
        replicates: 1000,
        seed,
        risk_mode: RiskMode::Exact,
        classifiers: vec![ClassifierKind::Ridge],
        noise_kind: NoiseKind::Gaussian,
        track_svp: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            name: "tiny".into(),
            p: 40,
            n: 8,
            signal_norms: vec![1.0],
            lambdas: vec![Lambda::Finite(0.5)],
            spectrum: SpectrumSpec::Identity { p: 40 },
            corruption: None,
            replicates: 1,
            seed: 7,
            risk_mode: RiskMode::Exact,
            classifiers: vec![ClassifierKind::Averaging],
            noise_kind: NoiseKind::Gaussian,
            track_svp: false,
        }
    }

    #[test]
    fn minimal_config_yields_one_row() {
        let rows = run_sweep(&tiny_config()).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert_eq!(row.classifier.id(), "averaging");
        assert_eq!(row.replicates, 1);
        assert_eq!(row.failures, 0);
        assert_eq!(row.stderr, 0.0);
        assert!(row.mean_risk >= 0.0 && row.mean_risk <= 1.0);
    }

    #[test]
    fn lambda_expansion_and_dedup() {
        let mut config = tiny_config();
        config.classifiers = vec![ClassifierKind::Ridge, ClassifierKind::Interpolator];
        config.lambdas = vec![
            Lambda::Finite(0.0),
            Lambda::Finite(0.5),
            Lambda::Infinite,
            Lambda::Finite(0.5),
        ];
        let specs = config.resolved_classifiers().unwrap();
        assert_eq!(
            specs,
            vec![
                ClassifierSpec::Interpolator,
                ClassifierSpec::Ridge(0.5),
                ClassifierSpec::Averaging,
            ]
        );
    }

    #[test]
    fn infinite_lambda_is_the_averaging_cell() {
        let mut config = tiny_config();
        config.classifiers = vec![ClassifierKind::Ridge];
        config.lambdas = vec![Lambda::Infinite];
        let rows = run_sweep(&config).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].classifier.id(), "averaging");

        config.classifiers = vec![ClassifierKind::Averaging];
        config.lambdas = vec![];
        let direct = run_sweep(&config).unwrap();
        assert_eq!(rows[0].mean_risk.to_bits(), direct[0].mean_risk.to_bits());
    }

    #[test]
    fn sweep_deterministic_across_thread_counts() {
        let mut config = tiny_config();
        config.signal_norms = vec![0.8, 2.0];
        config.replicates = 6;
        config.classifiers = vec![ClassifierKind::Ridge, ClassifierKind::Svm];
        config.track_svp = true;
        let single = run_sweep_with_threads(&config, Some(1)).unwrap();
        let multi = run_sweep_with_threads(&config, Some(4)).unwrap();
        assert_eq!(results_csv_string(&single), results_csv_string(&multi));
        let svp_single: Vec<_> = single.iter().map(|r| r.svp_rate).collect();
        let svp_multi: Vec<_> = multi.iter().map(|r| r.svp_rate).collect();
        assert_eq!(svp_single, svp_multi);
    }

    #[test]
    fn csv_layout_and_formatting() {
        let rows = run_sweep(&tiny_config()).unwrap();
        let text = results_csv_string(&rows);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RESULTS_HEADER);
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[0], "tiny");
        assert_eq!(fields[1], fmt_f64(1.0));
        assert_eq!(fields[2], "averaging");
        assert_eq!(fields[3], "inf");
        // 17 significant digits round-trip.
        let parsed: f64 = fields[4].parse().unwrap();
        assert_eq!(parsed.to_bits(), rows[0].mean_risk.to_bits());
    }

    #[test]
    fn aggregation_excludes_cells_with_too_many_failures() {
        let (mean, stderr) = aggregate_cell(&[0.1; 990], 11, 1000);
        assert!(mean.is_nan() && stderr.is_nan());
        let (mean, _) = aggregate_cell(&[0.1; 990], 10, 1000);
        assert!((mean - 0.1).abs() < 1e-12);
        // replicates = 1 tolerates no failure at all.
        let (mean, _) = aggregate_cell(&[], 1, 1);
        assert!(mean.is_nan());
    }

    #[test]
    fn aggregation_mean_and_stderr() {
        let (mean, stderr) = aggregate_cell(&[0.1, 0.2, 0.3], 0, 3);
        assert!((mean - 0.2).abs() < 1e-15);
        let expected = (0.01_f64 / 3.0).sqrt(); // sample sd 0.1 over sqrt(3)
        assert!((stderr - expected).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut config = tiny_config();
        config.replicates = 0;
        assert!(config.validate().is_err());

        let mut config = tiny_config();
        config.p = 4; // below n with svm requested
        config.spectrum = SpectrumSpec::Identity { p: 4 };
        config.classifiers = vec![ClassifierKind::Svm];
        assert!(config.validate().is_err());

        let mut config = tiny_config();
        config.noise_kind = NoiseKind::Rademacher;
        assert!(config.validate().is_err()); // exact risk needs gaussian
        config.risk_mode = RiskMode::Mc { samples: 1000 };
        assert!(config.validate().is_ok());

        let mut config = tiny_config();
        config.spectrum = SpectrumSpec::Identity { p: 39 };
        assert!(config.validate().is_err()); // dimension mismatch
    }

    #[test]
    fn config_json_round_trip() {
        let mut config = preset_fig2(11);
        config.track_svp = true;
        let json = serde_json::to_string_pretty(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.name, config.name);
        assert_eq!(back.lambdas, config.lambdas);
        assert_eq!(back.corruption, config.corruption);
        assert_eq!(back.seed, config.seed);

        // Spot-check the external schema.
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["risk_mode"], "exact");
        assert_eq!(value["lambdas"][3], "inf");
        assert_eq!(value["corruption"]["kind"], "random");
    }

    #[test]
    fn preset_fig1_reference_parameters() {
        for variant in [Fig1Variant::LargeRank, Fig1Variant::MediumRank] {
            let config = preset_fig1(variant, 3);
            assert_eq!((config.p, config.n, config.replicates), (500, 30, 1000));
            assert_eq!(config.lambdas.len(), 4);
            assert_eq!(config.resolved_classifiers().unwrap().len(), 4);
            assert_eq!(config.signal_norms.len(), 12);
            config.validate().unwrap();
        }
        let large = preset_fig1(Fig1Variant::LargeRank, 3);
        assert_eq!(large.spectrum, SpectrumSpec::Linear { p: 500 });
        let medium = preset_fig1(Fig1Variant::MediumRank, 3);
        let model = medium.spectrum.build().unwrap();
        assert_eq!(model.eigenvalue(1), 1.0);
        assert_eq!(model.eigenvalue(3), 1.0);
        assert_eq!(model.eigenvalue(4), 0.01);
        assert_eq!(model.eigenvalue(500), 0.01);
    }

    #[test]
    fn preset_fig2_reference_parameters() {
        let config = preset_fig2(9);
        assert_eq!(config.spectrum, SpectrumSpec::Identity { p: 500 });
        let plan = config.corruption.clone().unwrap();
        let spec = plan.resolve(config.seed, config.p).unwrap();
        assert_eq!(spec.indices.len(), 15); // n / 2
        assert_eq!(spec.budget, 15);
        assert!(spec.magnitudes.iter().all(|&o| o == 999.0)); // variance 1000
        assert!(spec.indices.iter().all(|&i| i < 500));
        // Coordinate set is a function of the seed alone.
        let again = plan.resolve(config.seed, config.p).unwrap();
        assert_eq!(spec.indices, again.indices);
        let other = plan.resolve(config.seed + 1, config.p).unwrap();
        assert_ne!(spec.indices, other.indices);
    }

    #[test]
    fn default_grid_brackets_stated_range() {
        let grid = default_signal_grid(500, 30);
        assert_eq!(grid.len(), 12);
        let lo_sq = grid[0] * grid[0];
        let hi_sq = grid[11] * grid[11];
        assert!((lo_sq - 0.25 * 500.0 / 30.0).abs() < 1e-9);
        assert!((hi_sq - 16.0 * 500.0 / 30.0).abs() < 1e-9);
        for w in grid.windows(2) {
            assert!(w[1] > w[0]);
        }
    }
}
