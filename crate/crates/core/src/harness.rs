//! Replicated MISE benchmarks.
//!
//! Draws pile-up samples, fits the configured estimator, and scores each
//! replicate by the integrated squared error against the true target
//! density on a fixed grid. Replicates run in parallel on independent
//! seeded streams; aggregation uses compensated summation so parallel and
//! serial runs produce identical reports.

use crate::deconvolution::{select_cutoff, CutoffSelection, SincEstimate};
use crate::error::{CoreError, Result};
use crate::noise::NoiseModel;
use crate::pileup::GeneratingModel;
use crate::projection::{default_interval, select_model, TrigEstimate};
use crate::rng::{replicate_rng, replicate_seed};
use crate::samplers::{sample_pileup, Sample, TargetDistribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Which estimator the benchmark fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Trig,
    Sinc,
}

/// Noise description inside a simulation config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseSpec {
    Exponential {
        theta: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        sigma2: Option<f64>,
    },
    Biexponential {
        alpha: f64,
        beta: f64,
        nu: f64,
        tau: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        sigma2: Option<f64>,
    },
    Empirical {
        file: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        sigma2: Option<f64>,
    },
}

impl NoiseSpec {
    pub fn sigma2(&self) -> Option<f64> {
        match self {
            NoiseSpec::Exponential { sigma2, .. }
            | NoiseSpec::Biexponential { sigma2, .. }
            | NoiseSpec::Empirical { sigma2, .. } => *sigma2,
        }
    }

    /// Builds the noise model, applying the variance target when given.
    pub fn to_model(&self) -> Result<NoiseModel> {
        let base = match self {
            NoiseSpec::Exponential { theta, .. } => NoiseModel::exponential(*theta)?,
            NoiseSpec::Biexponential {
                alpha,
                beta,
                nu,
                tau,
                ..
            } => NoiseModel::bi_exponential(*alpha, *beta, *nu, *tau)?,
            NoiseSpec::Empirical { file, .. } => {
                let values = crate::io::read_positive_csv(std::path::Path::new(file))?;
                NoiseModel::empirical(values)?
            }
        };
        match self.sigma2() {
            Some(s2) => base.with_variance(s2),
            None => Ok(base),
        }
    }
}

/// Ablation switches for the correction studies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationFlags {
    /// Substitute the plain rank `i/n` for the weight `w(i/n)`.
    #[serde(default)]
    pub no_pileup_correction: bool,
    /// Ignore the noise and fit the trigonometric estimator.
    #[serde(default)]
    pub no_deconvolution: bool,
}

fn default_kappa() -> f64 {
    0.5
}
fn default_kappa_prime() -> f64 {
    1.0
}
fn default_kappa_double_prime() -> f64 {
    0.001
}
fn default_grid_points() -> usize {
    2048
}
fn default_replicates() -> usize {
    25
}

/// One benchmark configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub target: TargetDistribution,
    pub generating: GeneratingModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    pub n: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub estimator: EstimatorKind,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_kappa_prime")]
    pub kappa_prime: f64,
    #[serde(default = "default_kappa_double_prime")]
    pub kappa_double_prime: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub ablation: AblationFlags,
    /// When set, the estimator sees an empirical noise model rebuilt from
    /// this many fresh draws per replicate instead of the exact transform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical_noise_size: Option<usize>,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(CoreError::config("replicates must be >= 1".to_string()));
        }
        if self.n < 2 {
            return Err(CoreError::config("sample size must be >= 2".to_string()));
        }
        if self.grid_points < 2 {
            return Err(CoreError::config("grid needs at least 2 points".to_string()));
        }
        if let Some(noise) = &self.noise {
            if let Some(s2) = noise.sigma2() {
                if !(s2 > 0.0) {
                    return Err(CoreError::config(format!(
                        "sigma2 must be positive when noise is present, got {s2}"
                    )));
                }
            }
        }
        if self.estimator == EstimatorKind::Sinc
            && self.noise.is_none()
            && !self.ablation.no_deconvolution
        {
            return Err(CoreError::config(
                "sinc estimator requires a noise specification".to_string(),
            ));
        }
        self.target.validate()
    }
}

/// Aggregated result of a replicated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiseReport {
    pub per_replicate_ise: Vec<f64>,
    pub mean_mise: f64,
    pub sd_mise: f64,
    pub selected_models: Vec<usize>,
    pub mean_m: f64,
    pub sd_m: f64,
    pub runtime_seconds: f64,
}

/// Trapezoidal integral of `(fhat - ftrue)^2` over `points` equispaced
/// nodes spanning `[lo, hi]`.
pub fn ise(
    fhat: &dyn Fn(f64) -> f64,
    ftrue: &dyn Fn(f64) -> f64,
    grid: (f64, f64, usize),
) -> Result<f64> {
    let (lo, hi, points) = grid;
    if points < 2 {
        return Err(CoreError::domain("grid needs at least 2 points".to_string()));
    }
    if !(hi > lo) {
        return Err(CoreError::domain(format!(
            "grid needs hi > lo, got ({lo}, {hi})"
        )));
    }
    let step = (hi - lo) / (points - 1) as f64;
    let mut total = 0.0;
    for i in 0..points {
        let x = lo + i as f64 * step;
        let d = fhat(x) - ftrue(x);
        let weight = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
        total += weight * d * d;
    }
    Ok(total * step)
}

/// Neumaier compensated summation; keeps aggregation order-independent of
/// thread scheduling.
fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = compensated_sum(values) / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = compensated_sum(&sq) / (k - 1.0);
    (mean, var.sqrt())
}

enum FittedDensity {
    Trig(TrigEstimate),
    Sinc(SincEstimate),
}

impl FittedDensity {
    fn evaluate(&self, x: f64) -> f64 {
        match self {
            FittedDensity::Trig(e) => e.evaluate(x),
            FittedDensity::Sinc(e) => e.evaluate(x),
        }
    }

    fn selected(&self) -> usize {
        match self {
            FittedDensity::Trig(e) => e.m,
            FittedDensity::Sinc(e) => e.m_bar,
        }
    }
}

fn run_one_replicate(config: &SimulationConfig, replicate: u64) -> Result<(f64, usize)> {
    let mut rng = replicate_rng(config.master_seed, replicate);
    let noise_model = config.noise.as_ref().map(|s| s.to_model()).transpose()?;
    let mut sample = sample_pileup(
        config.target,
        &config.generating,
        noise_model.as_ref(),
        config.n,
        &mut rng,
    )?;
    if config.ablation.no_pileup_correction {
        let n = sample.n();
        let ranks: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        sample = Sample::with_weights(sample.values().to_vec(), ranks)?;
    }

    let use_trig =
        config.estimator == EstimatorKind::Trig || config.ablation.no_deconvolution;
    let profile = config.generating.weight_profile()?;
    let fitted = if use_trig {
        let interval = default_interval(&sample);
        FittedDensity::Trig(select_model(
            &sample,
            interval,
            config.kappa,
            profile.w_square_integral,
        )?)
    } else {
        let exact = noise_model
            .as_ref()
            .expect("validated: sinc estimator requires noise");
        let estimator_noise = match config.empirical_noise_size {
            Some(m_size) => {
                // Fresh draws on a salted stream so the data stream is
                // untouched and exact-vs-empirical runs share samples.
                let mut noise_rng =
                    replicate_rng(config.master_seed ^ 0x6e6f_6973_655f_7374, replicate);
                NoiseModel::empirical(exact.sample(m_size, &mut noise_rng)?)?
            }
            None => exact.clone(),
        };
        if let Some(m_size) = config.empirical_noise_size {
            if m_size < config.n {
                // Theory wants the noise sample to dominate the data size;
                // the benchmark protocol intentionally runs below that.
                log_noise_size_warning(m_size, config.n);
            }
        }
        let options = CutoffSelection {
            kappa_prime: config.kappa_prime,
            kappa_double_prime: config.kappa_double_prime,
            ..Default::default()
        };
        FittedDensity::Sinc(select_cutoff(&sample, &estimator_noise, &profile, &options)?)
    };

    let hi = config.target.quantile(0.999)?;
    let target = config.target;
    let value = ise(
        &|x| fitted.evaluate(x),
        &|x| target.pdf(x),
        (0.0, hi, config.grid_points),
    )?;
    Ok((value, fitted.selected()))
}

fn log_noise_size_warning(m_size: usize, n: usize) {
    use std::sync::Once;
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        eprintln!(
            "warning: empirical noise sample ({m_size}) is smaller than the data sample ({n})"
        );
    });
}

/// Runs all replicates of a configuration and aggregates the report.
pub fn run_replicates(config: &SimulationConfig) -> Result<MiseReport> {
    run_replicates_with(config, true)
}

/// As [`run_replicates`], with explicit control over parallel execution.
/// Serial and parallel runs return bitwise-identical reports apart from
/// `runtime_seconds`.
pub fn run_replicates_with(config: &SimulationConfig, parallel: bool) -> Result<MiseReport> {
    config.validate()?;
    let start = Instant::now();
    let indices: Vec<u64> = (0..config.replicates as u64).collect();
    let attach_seed = |r: u64| {
        move |e: CoreError| {
            CoreError::numeric(format!(
                "replicate {r} (stream seed {:#018x}) failed: {e}",
                replicate_seed(config.master_seed, r)
            ))
        }
    };
    let outcomes: Vec<(f64, usize)> = if parallel {
        indices
            .par_iter()
            .map(|&r| run_one_replicate(config, r).map_err(attach_seed(r)))
            .collect::<Result<Vec<_>>>()?
    } else {
        indices
            .iter()
            .map(|&r| run_one_replicate(config, r).map_err(attach_seed(r)))
            .collect::<Result<Vec<_>>>()?
    };

    let per_replicate_ise: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let selected_models: Vec<usize> = outcomes.iter().map(|o| o.1).collect();
    let (mean_mise, sd_mise) = mean_sd(&per_replicate_ise);
    let ms: Vec<f64> = selected_models.iter().map(|m| *m as f64).collect();
    let (mean_m, sd_m) = mean_sd(&ms);
    Ok(MiseReport {
        per_replicate_ise,
        mean_mise,
        sd_mise,
        selected_models,
        mean_m,
        sd_m,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Formats a value to three significant digits in the benchmark-table
/// style: trailing zeros trimmed, leading zero dropped below one.
pub fn format_sig3(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (2 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if let Some(rest) = s.strip_prefix("0.") {
        s = format!(".{rest}");
    } else if let Some(rest) = s.strip_prefix("-0.") {
        s = format!("-.{rest}");
    }
    s
}

/// One row of a benchmark summary: `100 x mean MISE (sd)` plus the mean
/// selected model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub mean_mise_x100: f64,
    pub sd_mise_x100: f64,
    pub cell: String,
    pub mean_m: f64,
    pub sd_m: f64,
}

/// Aligned table of benchmark results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

/// Builds the summary table; labels pair with reports by position.
pub fn summarize(reports: &[MiseReport], labels: &[String]) -> Result<SummaryTable> {
    if reports.is_empty() {
        return Err(CoreError::domain("no reports to summarize".to_string()));
    }
    if reports.len() != labels.len() {
        return Err(CoreError::domain(format!(
            "got {} reports but {} labels",
            reports.len(),
            labels.len()
        )));
    }
    let rows = reports
        .iter()
        .zip(labels)
        .map(|(r, label)| {
            let mean = 100.0 * r.mean_mise;
            let sd = 100.0 * r.sd_mise;
            SummaryRow {
                label: label.clone(),
                mean_mise_x100: mean,
                sd_mise_x100: sd,
                cell: format!("{} ({})", format_sig3(mean), format_sig3(sd)),
                mean_m: r.mean_m,
                sd_m: r.sd_m,
            }
        })
        .collect();
    Ok(SummaryTable { rows })
}

impl SummaryTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,mean_mise_x100,sd_mise_x100,cell,mean_m,sd_m\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},\"{}\",{},{}\n",
                row.label, row.mean_mise_x100, row.sd_mise_x100, row.cell, row.mean_m, row.sd_m
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let label_width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = format!(
            "{:<label_width$}  {:>16}  {:>12}\n",
            "label", "100 x MISE (sd)", "mean m (sd)"
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{:<label_width$}  {:>16}  {:>12}\n",
                row.label,
                row.cell,
                format!("{:.2} ({:.2})", row.mean_m, row.sd_m)
            ));
        }
        out
    }
}
