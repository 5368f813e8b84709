//! Subcommand implementations.

use crate::benchmark;
use clap::Args;
use pileup_core::deconvolution::{select_cutoff, CutoffSelection, DEFAULT_FFT_SIZE};
use pileup_core::harness::NoiseSpec;
use pileup_core::io::{read_positive_csv, write_value_csv};
use pileup_core::projection::{default_interval, select_model};
use pileup_core::samplers::sample_pileup;
use pileup_core::{CoreError, GeneratingModel, NoiseModel, Result, Sample, TargetDistribution};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Args)]
pub struct EstimateArgs {
    /// Sample CSV: one strictly positive decimal per line, no header.
    #[arg(long)]
    pub input: PathBuf,
    /// Poisson intensity of the photon-count model.
    #[arg(long)]
    pub mu: f64,
    /// Noise spec `exp:theta`, `biexp:alpha,beta,nu,tau` or `file:path`;
    /// enables the deconvolution estimator.
    #[arg(long)]
    pub noise: Option<String>,
    /// Rescale the noise to this variance.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Penalty constant of the trigonometric estimator.
    #[arg(long, default_value_t = 0.5)]
    pub kappa: f64,
    /// Leading penalty constant of the deconvolution estimator.
    #[arg(long, default_value_t = 1.0)]
    pub kappa_prime: f64,
    /// Logarithmic penalty constant of the deconvolution estimator.
    #[arg(long = "kappa-pp", default_value_t = 0.001)]
    pub kappa_double_prime: f64,
    /// Estimation interval `lo:hi` (default `0:max(Z)(1+1/n)`).
    #[arg(long)]
    pub interval: Option<String>,
    /// Output grid size for the density CSV.
    #[arg(long, default_value_t = 2048)]
    pub grid: usize,
    /// FFT grid size of the deconvolution estimator.
    #[arg(long, default_value_t = DEFAULT_FFT_SIZE)]
    pub fft_size: usize,
    /// Seed recorded in the manifest (estimation itself is deterministic).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ablation switches: `no-pileup`, `no-deconv` (repeatable).
    #[arg(long)]
    pub ablation: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Target: `gamma33`, `exp3`, `pareto`, `weibull` or `exp:rate`.
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct BenchmarkArgs {
    /// Bundled spec name (`figure2`, `table1-lite`) or a JSON path.
    #[arg(long)]
    pub spec: String,
    /// Output directory for the table CSV and report JSON.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn parse_target(text: &str) -> Result<TargetDistribution> {
    match text.to_ascii_lowercase().as_str() {
        "gamma33" | "gamma" => Ok(TargetDistribution::Gamma33),
        "exp3" | "exponential" => Ok(TargetDistribution::Exp3),
        "pareto" => Ok(TargetDistribution::Pareto),
        "weibull" => Ok(TargetDistribution::Weibull),
        other => {
            if let Some(rate) = other.strip_prefix("exp:") {
                let rate: f64 = rate
                    .parse()
                    .map_err(|_| CoreError::input(format!("bad exponential rate {rate:?}")))?;
                let dist = TargetDistribution::UserExponential { rate };
                dist.validate()?;
                Ok(dist)
            } else {
                Err(CoreError::input(format!(
                    "unknown target {text:?}; expected gamma33, exp3, pareto, weibull or exp:rate"
                )))
            }
        }
    }
}

/// Parses `exp:theta`, `biexp:a,b,nu,tau` or `file:path` into a spec.
pub fn parse_noise(text: &str, sigma2: Option<f64>) -> Result<NoiseSpec> {
    if let Some(theta) = text.strip_prefix("exp:") {
        let theta: f64 = theta
            .parse()
            .map_err(|_| CoreError::input(format!("bad noise rate {theta:?}")))?;
        Ok(NoiseSpec::Exponential { theta, sigma2 })
    } else if let Some(rest) = text.strip_prefix("biexp:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 4 {
            return Err(CoreError::input(format!(
                "biexp noise needs 4 comma-separated values, got {text:?}"
            )));
        }
        let mut vals = [0.0f64; 4];
        for (slot, part) in vals.iter_mut().zip(&parts) {
            *slot = part
                .trim()
                .parse()
                .map_err(|_| CoreError::input(format!("bad biexp parameter {part:?}")))?;
        }
        Ok(NoiseSpec::Biexponential {
            alpha: vals[0],
            beta: vals[1],
            nu: vals[2],
            tau: vals[3],
            sigma2,
        })
    } else if let Some(path) = text.strip_prefix("file:") {
        Ok(NoiseSpec::Empirical {
            file: path.to_string(),
            sigma2,
        })
    } else {
        Err(CoreError::input(format!(
            "unknown noise spec {text:?}; expected exp:theta, biexp:a,b,nu,tau or file:path"
        )))
    }
}

fn parse_interval(text: &str) -> Result<(f64, f64)> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| CoreError::input(format!("interval must be lo:hi, got {text:?}")))?;
    let lo: f64 = lo
        .parse()
        .map_err(|_| CoreError::input(format!("bad interval bound {lo:?}")))?;
    let hi: f64 = hi
        .parse()
        .map_err(|_| CoreError::input(format!("bad interval bound {hi:?}")))?;
    if !(hi > lo) {
        return Err(CoreError::input(format!("interval needs lo < hi, got {text:?}")));
    }
    Ok((lo, hi))
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    input: String,
    n: usize,
    dropped: usize,
    selected_m: usize,
    estimator: String,
    mu: f64,
    kappa: f64,
    kappa_prime: f64,
    kappa_double_prime: f64,
    sigma2: Option<f64>,
    seed: u64,
    wall_time_seconds: f64,
    timestamp_unix: u64,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CoreError::input(format!("serialization failure: {e}")))?;
    std::fs::write(path, text.as_bytes())
        .map_err(|e| CoreError::input(format!("cannot write {}: {e}", path.display())))
}

fn write_density_grid(path: &Path, hi: f64, points: usize, f: impl Fn(f64) -> f64) -> Result<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| CoreError::input(format!("cannot create {}: {e}", path.display())))?;
    let mut text = String::from("x,fhat\n");
    for i in 0..points {
        let x = hi * i as f64 / (points - 1).max(1) as f64;
        text.push_str(&format!("{x},{}\n", f(x)));
    }
    file.write_all(text.as_bytes())
        .map_err(|e| CoreError::input(format!("cannot write {}: {e}", path.display())))
}

pub fn run_estimate(args: &EstimateArgs) -> Result<i32> {
    let start = Instant::now();
    let model = GeneratingModel::poisson(args.mu)?;
    let values = read_positive_csv(&args.input)?;
    let n = values.len();

    let mut sample = Sample::from_observations(&model, values)?;
    if args.ablation.iter().any(|a| a == "no-pileup") {
        let ranks: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        sample = Sample::with_weights(sample.values().to_vec(), ranks)?;
    }
    let ignore_noise = args.ablation.iter().any(|a| a == "no-deconv");

    let noise_model: Option<NoiseModel> = match (&args.noise, ignore_noise) {
        (Some(text), false) => {
            let model = parse_noise(text, args.sigma2)?.to_model()?;
            if let Some(m_size) = model.empirical_size() {
                if m_size < n {
                    eprintln!(
                        "warning: noise sample ({m_size}) is smaller than the data sample ({n})"
                    );
                }
            }
            Some(model)
        }
        _ => None,
    };

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CoreError::input(format!("cannot create {}: {e}", args.out.display())))?;
    let profile = model.weight_profile()?;

    let (selected_m, dropped, estimator_name) = match &noise_model {
        None => {
            let interval = match &args.interval {
                Some(text) => parse_interval(text)?,
                None => default_interval(&sample),
            };
            let est = select_model(&sample, interval, args.kappa, profile.w_square_integral)?;
            write_json(&args.out.join("estimate.json"), &est)?;
            let grid_hi = interval.1;
            let e = est.clone();
            write_density_grid(&args.out.join("density.csv"), grid_hi, args.grid, move |x| {
                e.evaluate(x)
            })?;
            (est.m, est.dropped, "trig")
        }
        Some(noise) => {
            let options = CutoffSelection {
                kappa_prime: args.kappa_prime,
                kappa_double_prime: args.kappa_double_prime,
                fft_size: args.fft_size,
                truncation: None,
            };
            let est = select_cutoff(&sample, noise, &profile, &options)?;
            write_json(&args.out.join("estimate.json"), &est)?;
            let grid_hi = sample.max();
            let e = est.clone();
            write_density_grid(&args.out.join("density.csv"), grid_hi, args.grid, move |x| {
                e.evaluate(x)
            })?;
            (est.m_bar, 0, "sinc")
        }
    };

    let manifest = RunManifest {
        command: "estimate".to_string(),
        input: args.input.display().to_string(),
        n,
        dropped,
        selected_m,
        estimator: estimator_name.to_string(),
        mu: args.mu,
        kappa: args.kappa,
        kappa_prime: args.kappa_prime,
        kappa_double_prime: args.kappa_double_prime,
        sigma2: args.sigma2,
        seed: args.seed,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    println!(
        "estimate: n = {n}, dropped = {dropped}, selected m = {selected_m} ({estimator_name})"
    );
    Ok(0)
}

pub fn run_simulate(args: &SimulateArgs) -> Result<i32> {
    if args.n == 0 {
        return Err(CoreError::config("n must be >= 1".to_string()));
    }
    let target = parse_target(&args.target)?;
    let model = GeneratingModel::poisson(args.mu)?;
    let noise = args
        .noise
        .as_deref()
        .map(|text| parse_noise(text, args.sigma2)?.to_model())
        .transpose()?;
    let mut rng = pileup_core::rng::replicate_rng(args.seed, 0);
    let sample = sample_pileup(target, &model, noise.as_ref(), args.n, &mut rng)?;
    write_value_csv(&args.out, sample.values())?;
    println!("simulate: wrote {} observations to {}", args.n, args.out.display());
    Ok(0)
}

pub fn run_benchmark(args: &BenchmarkArgs) -> Result<i32> {
    benchmark::run(&args.spec, &args.out)
}
