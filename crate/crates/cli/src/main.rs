//! Command-line harness for the anisomix library: dataset generation,
//! single-shot classification diagnostics, k* and proliferation probes,
//! bound-curve tables, and experiment sweeps.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical or configuration
//! error. Every stochastic subcommand requires an explicit `--seed`;
//! rerunning with identical arguments reproduces output byte for byte.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use anisomix::classify::{averaging, interpolator, lda, ridge, svm_hard, LinearClassifier};
use anisomix::experiments::{
    fmt_f64, preset_fig1, preset_fig2, results_csv_string, run_sweep_with_threads,
    ExperimentConfig, Fig1Variant, Lambda, RiskMode,
};
use anisomix::mixture::{sample_dataset, sample_theta_spherical, MixtureParams, NoiseKind};
use anisomix::risk::{
    bound_averaging_upper, bound_lda_lower, bound_minimax_lower, bound_ridge_upper,
    exact_gaussian_risk, mc_risk,
};
use anisomix::rng::derive_seed;
use anisomix::spectra::{k_star, SpectrumSpec, DEFAULT_C1};
use anisomix::svp::svp_margins;

#[derive(Parser)]
#[command(name = "anisomix", version, about = "Linear classification in anisotropic Gaussian mixtures", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a labelled training set and write it as CSV
    Generate(GenerateArgs),
    /// Fit classifiers on one sampled training set and report their risk
    Fit(FitArgs),
    /// Print the spike-count threshold k* of a spectrum
    Kstar(KstarArgs),
    /// Estimate the support-vector proliferation rate over random trials
    SvpCheck(SvpCheckArgs),
    /// Tabulate theoretical bound curves over a signal grid
    Bounds(BoundsArgs),
    /// Run an experiment sweep described by a JSON config file
    Run(RunArgs),
    /// Reference sweep: four ridge levels on the large- or medium-rank spectrum
    Fig1(Fig1Args),
    /// Reference sweep: isotropic noise with corrupted training covariance
    Fig2(Fig2Args),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    Gaussian,
    Rademacher,
}

impl From<NoiseArg> for NoiseKind {
    fn from(value: NoiseArg) -> Self {
        match value {
            NoiseArg::Gaussian => NoiseKind::Gaussian,
            NoiseArg::Rademacher => NoiseKind::Rademacher,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Ambient dimension
    #[arg(long)]
    p: usize,
    /// Sample size
    #[arg(long)]
    n: usize,
    /// Master seed (all randomness derives from it)
    #[arg(long)]
    seed: u64,
    /// Spectrum: a name (large-fig1, medium-fig1, `identity:<p>`, `linear:<p>`),
    /// inline JSON, or @file.json; defaults to `identity:<p>`
    #[arg(long)]
    spectrum: Option<String>,
    /// Euclidean norm of the center vector (0 gives pure noise)
    #[arg(long, default_value_t = 1.0)]
    theta_norm: f64,
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    noise: NoiseArg,
    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    spectrum: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    theta_norm: f64,
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    noise: NoiseArg,
    /// Comma-separated subset of averaging,lda,ridge,interpolator,svm
    #[arg(long, default_value = "averaging,lda,ridge,interpolator,svm")]
    classifiers: String,
    /// Ridge levels for the ridge family (comma-separated, `inf` allowed)
    #[arg(long, default_value = "0.5,3")]
    lambda: String,
    /// exact or `mc:<samples>`
    #[arg(long, default_value = "exact")]
    risk_mode: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KstarArgs {
    /// Spectrum name, inline JSON, or @file.json
    #[arg(long)]
    spectrum: String,
    #[arg(long)]
    n: usize,
    /// Ridge level lambda
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Threshold constant C1 > 1
    #[arg(long, default_value_t = DEFAULT_C1)]
    c1: f64,
}

#[derive(Args)]
struct SvpCheckArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: usize,
    /// Number of independent trials
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    spectrum: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    theta_norm: f64,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    spectrum: String,
    #[arg(long)]
    n: usize,
    /// Which curves: comma-separated subset of minimax,averaging,ridge,lda
    #[arg(long, default_value = "minimax,averaging,ridge,lda")]
    which: String,
    /// Ridge level used by the ridge bound
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Failure probability delta inside the probability-form bounds
    #[arg(long, default_value_t = 0.1)]
    delta_prob: f64,
    /// Absolute constant c in the exponents
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Absolute constant C in front of the exponentials
    #[arg(long, default_value_t = 1.0)]
    big_c: f64,
    #[arg(long, default_value_t = DEFAULT_C1)]
    c1: f64,
    /// Signal grid as `<lo>:<hi>:<count>` over squared norms (log-spaced);
    /// defaults to 0.25*p/n : 16*p/n : 12
    #[arg(long)]
    grid: Option<String>,
    /// Seed for the center direction (required by theta-dependent curves)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file mirroring the ExperimentConfig schema
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's replicate count
    #[arg(long)]
    replicates: Option<usize>,
    /// Override the config's risk mode (exact or `mc:<samples>`)
    #[arg(long)]
    risk_mode: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Large,
    Medium,
}

#[derive(Args)]
struct Fig1Args {
    #[arg(long, value_enum)]
    variant: VariantArg,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    risk_mode: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Fig2Args {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    risk_mode: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
struct AppError(String);

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<E: std::error::Error> From<E> for AppError {
    fn from(e: E) -> Self {
        AppError(e.to_string())
    }
}

type AppResult<T> = Result<T, AppError>;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = err.print();
                std::process::exit(0);
            }
            let _ = err.print();
            std::process::exit(1);
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Kstar(args) => cmd_kstar(args),
        Command::SvpCheck(args) => cmd_svp_check(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Run(args) => cmd_run(args),
        Command::Fig1(args) => cmd_fig1(args),
        Command::Fig2(args) => cmd_fig2(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

fn parse_spectrum(text: &str, default_p: Option<usize>) -> AppResult<SpectrumSpec> {
    let spec = match text {
        "large-fig1" | "linear-fig1" => SpectrumSpec::Linear { p: 500 },
        "medium-fig1" => SpectrumSpec::medium_reference(500),
        other => {
            if let Some(rest) = other.strip_prefix("identity:") {
                SpectrumSpec::Identity { p: rest.parse().map_err(AppError::from)? }
            } else if let Some(rest) = other.strip_prefix("linear:") {
                SpectrumSpec::Linear { p: rest.parse().map_err(AppError::from)? }
            } else if let Some(path) = other.strip_prefix('@') {
                serde_json::from_str(&fs::read_to_string(path)?)?
            } else if other.starts_with('{') {
                serde_json::from_str(other)?
            } else {
                return Err(AppError(format!(
                    "unrecognized spectrum {other:?}; expected large-fig1, medium-fig1, \
                     identity:<p>, linear:<p>, inline JSON, or @file.json"
                )));
            }
        }
    };
    if let Some(p) = default_p {
        if spec.dim() != p {
            return Err(AppError(format!(
                "spectrum dimension {} does not match --p {p}",
                spec.dim()
            )));
        }
    }
    Ok(spec)
}

fn spectrum_or_identity(arg: &Option<String>, p: usize) -> AppResult<SpectrumSpec> {
    match arg {
        Some(text) => parse_spectrum(text, Some(p)),
        None => Ok(SpectrumSpec::Identity { p }),
    }
}

fn parse_risk_mode(text: &str) -> AppResult<RiskMode> {
    if text == "exact" {
        return Ok(RiskMode::Exact);
    }
    if let Some(rest) = text.strip_prefix("mc:") {
        let samples: usize = rest.parse().map_err(AppError::from)?;
        return Ok(RiskMode::Mc { samples });
    }
    Err(AppError(format!("unrecognized risk mode {text:?}; expected exact or mc:<samples>")))
}

fn parse_lambdas(text: &str) -> AppResult<Vec<Lambda>> {
    text.split(',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            if t == "inf" {
                Ok(Lambda::Infinite)
            } else {
                let v: f64 = t.parse().map_err(AppError::from)?;
                if !(v >= 0.0) {
                    return Err(AppError(format!("lambda must be >= 0, got {t}")));
                }
                Ok(Lambda::Finite(v))
            }
        })
        .collect()
}

fn write_output(out: &Option<PathBuf>, content: &str) -> AppResult<()> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

fn build_theta(p: usize, norm: f64, seed: u64) -> AppResult<anisomix::nalgebra::DVector<f64>> {
    if norm == 0.0 {
        Ok(anisomix::nalgebra::DVector::zeros(p))
    } else {
        Ok(sample_theta_spherical(p, norm, derive_seed(seed, "cli-theta", 0))?)
    }
}

fn cmd_generate(args: GenerateArgs) -> AppResult<()> {
    let spectrum = spectrum_or_identity(&args.spectrum, args.p)?;
    let theta = build_theta(args.p, args.theta_norm, args.seed)?;
    let params = MixtureParams::new(theta, spectrum.build()?, args.noise.into())?;
    let data = sample_dataset(&params, args.n, derive_seed(args.seed, "cli-data", 0))?;
    let mut buf = Vec::new();
    data.write_csv(&mut buf)?;
    write_output(&args.out, &String::from_utf8(buf).expect("CSV is ASCII"))
}

fn cmd_fit(args: FitArgs) -> AppResult<()> {
    let spectrum = spectrum_or_identity(&args.spectrum, args.p)?;
    let model = spectrum.build()?;
    let theta = build_theta(args.p, args.theta_norm, args.seed)?;
    let params = MixtureParams::new(theta.clone(), model.clone(), args.noise.into())?;
    let data = sample_dataset(&params, args.n, derive_seed(args.seed, "cli-data", 0))?;
    let risk_mode = parse_risk_mode(&args.risk_mode)?;
    let lambdas = parse_lambdas(&args.lambda)?;

    let mut fits: Vec<(String, String, LinearClassifier)> = Vec::new();
    for token in args.classifiers.split(',').filter(|t| !t.is_empty()) {
        match token {
            "averaging" => fits.push(("averaging".into(), "inf".into(), averaging(&data)?)),
            "lda" => fits.push(("lda".into(), String::new(), lda(&data, &model)?)),
            "interpolator" => {
                fits.push(("interpolator".into(), fmt_f64(0.0), interpolator(&data)?))
            }
            "svm" => fits.push(("svm".into(), String::new(), svm_hard(&data)?.classifier)),
            "ridge" => {
                for lambda in &lambdas {
                    match lambda {
                        Lambda::Infinite => {
                            fits.push(("averaging".into(), "inf".into(), averaging(&data)?))
                        }
                        Lambda::Finite(l) => {
                            fits.push(("ridge".into(), fmt_f64(*l), ridge(&data, *l)?))
                        }
                    }
                }
            }
            other => return Err(AppError(format!("unknown classifier {other:?}"))),
        }
    }

    let mut out = String::from("classifier,lambda,risk,weight_norm\n");
    for (i, (name, lambda, classifier)) in fits.iter().enumerate() {
        let risk = match risk_mode {
            RiskMode::Exact => {
                if args.noise == NoiseArg::Rademacher {
                    return Err(AppError("exact risk mode requires gaussian noise".into()));
                }
                exact_gaussian_risk(classifier.weights(), &theta, &model)?
            }
            RiskMode::Mc { samples } => mc_risk(
                classifier,
                &params,
                samples,
                derive_seed(args.seed, "cli-mc", i as u64),
            )?
            .mc_estimate
            .expect("mc_risk always sets an estimate"),
        };
        out.push_str(&format!(
            "{name},{lambda},{},{}\n",
            fmt_f64(risk),
            fmt_f64(classifier.weights().norm())
        ));
    }
    write_output(&args.out, &out)
}

fn cmd_kstar(args: KstarArgs) -> AppResult<()> {
    if !(args.c1 > 1.0) {
        return Err(AppError(format!("--c1 must be > 1, got {}", args.c1)));
    }
    if !(args.lambda >= 0.0) {
        return Err(AppError(format!("--lambda must be >= 0, got {}", args.lambda)));
    }
    if args.n == 0 {
        return Err(AppError("--n must be >= 1".into()));
    }
    let model = parse_spectrum(&args.spectrum, None)?.build()?;
    println!("{}", k_star(&model, args.lambda, args.n, args.c1));
    Ok(())
}

fn cmd_svp_check(args: SvpCheckArgs) -> AppResult<()> {
    if args.trials == 0 {
        return Err(AppError("--trials must be >= 1".into()));
    }
    let spectrum = spectrum_or_identity(&args.spectrum, args.p)?;
    let model = spectrum.build()?;
    let run = || -> AppResult<usize> {
        use rayon::prelude::*;
        let holds: Vec<bool> = (0..args.trials)
            .into_par_iter()
            .map(|t| -> AppResult<bool> {
                let trial_seed = derive_seed(args.seed, "svp-trial", t as u64);
                let theta = build_theta(args.p, args.theta_norm, trial_seed)?;
                let params = MixtureParams::new(theta, model.clone(), NoiseKind::Gaussian)?;
                let data = sample_dataset(&params, args.n, derive_seed(trial_seed, "data", 0))?;
                Ok(svp_margins(&data)?.holds)
            })
            .collect::<AppResult<Vec<bool>>>()?;
        Ok(holds.iter().filter(|&&h| h).count())
    };
    let held = match args.threads {
        None => run()?,
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| AppError(e.to_string()))?
            .install(run)?,
    };
    println!("{}", fmt_f64(held as f64 / args.trials as f64));
    Ok(())
}

fn parse_grid(text: &Option<String>, p: usize, n: usize) -> AppResult<Vec<f64>> {
    match text {
        None => Ok(anisomix::experiments::default_signal_grid(p, n)),
        Some(t) => {
            let parts: Vec<&str> = t.split(':').collect();
            if parts.len() != 3 {
                return Err(AppError(format!("grid must be <lo>:<hi>:<count>, got {t:?}")));
            }
            let lo: f64 = parts[0].parse().map_err(AppError::from)?;
            let hi: f64 = parts[1].parse().map_err(AppError::from)?;
            let count: usize = parts[2].parse().map_err(AppError::from)?;
            if !(lo > 0.0 && hi > lo && count >= 2) {
                return Err(AppError("grid requires 0 < lo < hi and count >= 2".into()));
            }
            Ok(anisomix::experiments::log_spaced_norms(lo, hi, count))
        }
    }
}

fn cmd_bounds(args: BoundsArgs) -> AppResult<()> {
    let model = parse_spectrum(&args.spectrum, None)?.build()?;
    let p = model.dim();
    let norms = parse_grid(&args.grid, p, args.n)?;
    let which: Vec<&str> = args.which.split(',').filter(|t| !t.is_empty()).collect();
    for name in &which {
        if !matches!(*name, "minimax" | "averaging" | "ridge" | "lda") {
            return Err(AppError(format!("unknown bound {name:?}")));
        }
    }
    let needs_theta = which.iter().any(|&w| w != "minimax");
    let direction = if needs_theta {
        let seed = args.seed.ok_or_else(|| {
            AppError("--seed is required for the theta-dependent bounds".into())
        })?;
        Some(sample_theta_spherical(p, 1.0, derive_seed(seed, "bounds-theta", 0))?)
    } else {
        None
    };

    // Effective rank of Sigma^2 feeds the minimax curve.
    let spectral = model.spectral_norm();
    let rank_sq = model.trace_sq() / (spectral * spectral);

    let mut out = String::from("bound,signal_norm_sq,lambda,k_star,cone,value\n");
    for &norm in &norms {
        let theta = direction.as_ref().map(|d| d * norm);
        for name in &which {
            let (lambda, kstar, cone, value) = match *name {
                "minimax" => {
                    let delta = norm / spectral.sqrt();
                    let v = bound_minimax_lower(delta, rank_sq, args.n, args.c, args.big_c)?;
                    (String::new(), String::new(), String::new(), fmt_f64(v))
                }
                "averaging" => {
                    let v = bound_averaging_upper(
                        theta.as_ref().expect("theta present"),
                        &model,
                        args.n,
                        args.delta_prob,
                        args.c,
                        args.big_c,
                    )?;
                    (String::new(), String::new(), String::new(), fmt_f64(v))
                }
                "ridge" => {
                    let b = bound_ridge_upper(
                        theta.as_ref().expect("theta present"),
                        &model,
                        args.lambda,
                        args.n,
                        args.delta_prob,
                        args.c,
                        args.big_c,
                        args.c1,
                    )?;
                    (
                        fmt_f64(args.lambda),
                        b.k_star.to_string(),
                        b.cone_ok.to_string(),
                        b.value.map(fmt_f64).unwrap_or_else(|| "not_applicable".into()),
                    )
                }
                "lda" => {
                    let v = bound_lda_lower(
                        theta.as_ref().expect("theta present"),
                        &model,
                        args.n,
                        args.c,
                        args.big_c,
                    )?;
                    (String::new(), String::new(), String::new(), fmt_f64(v))
                }
                _ => unreachable!(),
            };
            out.push_str(&format!(
                "{name},{},{lambda},{kstar},{cone},{value}\n",
                fmt_f64(norm * norm)
            ));
        }
    }
    write_output(&args.out, &out)
}

fn run_config(
    mut config: ExperimentConfig,
    seed: Option<u64>,
    replicates: Option<usize>,
    risk_mode: Option<String>,
    threads: Option<usize>,
    out: Option<PathBuf>,
) -> AppResult<()> {
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(r) = replicates {
        config.replicates = r;
    }
    if let Some(mode) = risk_mode {
        config.risk_mode = parse_risk_mode(&mode)?;
    }
    let rows = run_sweep_with_threads(&config, threads)?;
    write_output(&out, &results_csv_string(&rows))
}

fn cmd_run(args: RunArgs) -> AppResult<()> {
    let config: ExperimentConfig = serde_json::from_str(&fs::read_to_string(&args.config)?)?;
    run_config(config, args.seed, args.replicates, args.risk_mode, args.threads, args.out)
}

fn cmd_fig1(args: Fig1Args) -> AppResult<()> {
    let variant = match args.variant {
        VariantArg::Large => Fig1Variant::LargeRank,
        VariantArg::Medium => Fig1Variant::MediumRank,
    };
    let config = preset_fig1(variant, args.seed);
    run_config(config, None, args.replicates, args.risk_mode, args.threads, args.out)
}

fn cmd_fig2(args: Fig2Args) -> AppResult<()> {
    let config = preset_fig2(args.seed);
    run_config(config, None, args.replicates, args.risk_mode, args.threads, args.out)
}
