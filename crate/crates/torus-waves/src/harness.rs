//! Reproducible Monte Carlo experiments across a list of indices.
//!
//! One experiment fixes `(master_seed, n_list, replications, grid_factor,
//! eps)` and, for every index `n`, draws `replications` independent waves,
//! measures each nodal length by streaming marching squares at resolution
//! `M = grid_factor * ceil(sqrt(n))`, computes the chaos statistics, and
//! aggregates:
//!
//! * empirical mean and variance of the length against the predictions
//!   `E L_n = sqrt(E_n) / (2 sqrt(2))` and
//!   `Var L_n ~ (1 + mu_hat_n(4)^2) / 512 * E_n / N_n^2`,
//! * the Kolmogorov-Smirnov distance from the normalized samples to the
//!   limit law `M_{|mu_hat_n(4)|}` (reference table drawn fresh from a
//!   dedicated RNG stream),
//! * how much of the length variance the fourth chaos explains.
//!
//! Records stream to JSON lines plus a CSV summary, flushed after each
//! index. Replications are scheduled with rayon but every stream is keyed
//! by `(master_seed, n, replication)`, so reports are byte-identical for
//! any thread count. Wall-clock runtimes go to stderr only, keeping the
//! report files deterministic.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chaos::ChaosReport;
use crate::field::sample_replication;
use crate::lattice::{ceil_sqrt, enumerate_circle, LatticeError};
use crate::limits::{c_constant, m_eta_empirical_cdf, EmpiricalCdf, LimitsError};
use crate::nodal::{band_length, nodal_length_ms_streaming};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("need at least 2 samples for a KS statistic, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Limits(#[from] LimitsError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputPaths {
    pub report_jsonl: PathBuf,
    pub summary_csv: PathBuf,
}

/// Optional per-index assertions; any violation makes the experiment report
/// a failure (nonzero exit in the CLI).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Thresholds {
    /// Upper bound on the KS distance of normalized lengths to the limit law.
    #[serde(default)]
    pub max_ks_length: Option<f64>,
    /// Lower bound on Var(proj4) / Var(length).
    #[serde(default)]
    pub min_chaos_ratio: Option<f64>,
    /// Allowed |empirical - predicted| mean deviation, as a fraction of the
    /// predicted mean, on top of 3 standard errors.
    #[serde(default)]
    pub max_mean_deviation: Option<f64>,
}

fn default_grid_factor() -> usize {
    16
}

fn default_eps() -> f64 {
    0.05
}

fn default_ks_reference() -> usize {
    1_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_list: Vec<u64>,
    pub replications: usize,
    #[serde(default = "default_grid_factor")]
    pub grid_factor: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub master_seed: u64,
    pub outputs: OutputPaths,
    #[serde(default = "default_ks_reference")]
    pub ks_reference_samples: usize,
    /// Worker threads; unset means the TORUS_WAVES_THREADS variable, then
    /// the rayon default.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.n_list.is_empty() {
            return Err(HarnessError::InvalidConfig("n_list is empty".into()));
        }
        if self.replications < 2 {
            return Err(HarnessError::InvalidConfig(format!(
                "replications = {} but variance needs at least 2",
                self.replications
            )));
        }
        if self.grid_factor < 8 {
            return Err(HarnessError::InvalidConfig(format!(
                "grid_factor = {} below the minimum 8",
                self.grid_factor
            )));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(HarnessError::InvalidConfig(format!("eps = {} not positive", self.eps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BandPoint {
    pub eps: f64,
    pub value: f64,
}

/// Aggregated results for one index.
#[derive(Debug, Clone, Serialize)]
pub struct NRecord {
    pub n: u64,
    pub cardinality: usize,
    pub mu4: f64,
    pub grid_resolution: usize,
    pub replications: usize,
    pub predicted_mean: f64,
    pub empirical_mean: f64,
    pub mean_standard_error: f64,
    pub predicted_variance: f64,
    pub empirical_variance: f64,
    /// `empirical_variance * N^2 / E`, comparable to `(1 + mu4^2) / 512`.
    pub c_empirical: f64,
    pub c_predicted: f64,
    pub proj4_variance: f64,
    /// Var(proj4) / Var(length).
    pub chaos_ratio: f64,
    /// Var(length - proj4) / Var(length).
    pub residual_ratio: f64,
    pub ks_length: f64,
    pub ks_proj4: f64,
    /// Band-estimator convergence sweep on replication 0.
    pub band_sweep: Vec<BandPoint>,
    /// `(length - mean) / sd`, in replication order.
    pub normalized_lengths: Vec<f64>,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub records: Vec<NRecord>,
    /// Human-readable threshold violations; empty means success.
    pub failures: Vec<String>,
}

/// Sample mean and unbiased variance.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// Kolmogorov-Smirnov distance between a sample and a reference CDF,
/// taking the sup over both sides of every sample jump.
pub fn ks_distance(samples: &[f64], reference: &EmpiricalCdf) -> Result<f64, HarnessError> {
    if samples.len() < 2 {
        return Err(HarnessError::TooFewSamples(samples.len()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN samples"));
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let hi = ((i + 1) as f64 / n - reference.value(x)).abs();
        let lo = (i as f64 / n - reference.value_left(x)).abs();
        sup = sup.max(hi).max(lo);
    }
    Ok(sup)
}

/// Variance-domination summary of `(length, proj4)` pairs: the share of
/// length variance carried by the fourth chaos, and the relative variance
/// of the residual after subtracting it.
pub fn variance_domination(pairs: &[(f64, f64)]) -> (f64, f64) {
    let lengths: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let projs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let residuals: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    let (_, var_l) = mean_and_variance(&lengths);
    let (_, var_p) = mean_and_variance(&projs);
    let (_, var_r) = mean_and_variance(&residuals);
    (var_p / var_l, var_r / var_l)
}

struct SampleRow {
    length: f64,
    proj4: f64,
}

fn normalized(xs: &[f64]) -> Vec<f64> {
    let (mean, var) = mean_and_variance(xs);
    let sd = var.sqrt();
    xs.iter().map(|x| (x - mean) / sd).collect()
}

fn run_index(
    config: &ExperimentConfig,
    n: u64,
) -> Result<NRecord, HarnessError> {
    let circle = enumerate_circle(n)?;
    let m = config.grid_factor * ceil_sqrt(n) as usize;
    let rows: Vec<SampleRow> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let coeffs = sample_replication(&circle, config.master_seed, rep);
            let length = nodal_length_ms_streaming(&coeffs, m, 0.0)
                .expect("grid_factor >= 8 keeps the resolution admissible")
                .value;
            let report = ChaosReport::compute(&coeffs);
            SampleRow { length, proj4: report.proj4 }
        })
        .collect();

    let band_sweep: Vec<BandPoint> = {
        let coeffs = sample_replication(&circle, config.master_seed, 0);
        [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&eps| BandPoint {
                eps,
                value: band_length(&coeffs, eps, m)
                    .expect("band bound cannot trip at these resolutions")
                    .value,
            })
            .collect()
    };

    let lengths: Vec<f64> = rows.iter().map(|r| r.length).collect();
    let projs: Vec<f64> = rows.iter().map(|r| r.proj4).collect();
    let (mean_l, var_l) = mean_and_variance(&lengths);
    let (_, var_p) = mean_and_variance(&projs);
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.length, r.proj4)).collect();
    let (chaos_ratio, residual_ratio) = variance_domination(&pairs);

    let mu4 = circle.mu4();
    let energy = circle.energy();
    let nn = circle.cardinality as f64;
    let predicted_mean = energy.sqrt() / (2.0 * 2.0f64.sqrt());
    let c_pred = c_constant(mu4);
    let predicted_variance = c_pred * energy / (nn * nn);

    let mut reference_rng = crate::rng::tagged_rng(config.master_seed, "mref", n);
    let reference =
        m_eta_empirical_cdf(mu4.abs(), config.ks_reference_samples, &mut reference_rng)?;
    let normalized_lengths = normalized(&lengths);
    let normalized_projs = normalized(&projs);
    let ks_length = ks_distance(&normalized_lengths, &reference)?;
    let ks_proj4 = ks_distance(&normalized_projs, &reference)?;

    Ok(NRecord {
        n,
        cardinality: circle.cardinality,
        mu4,
        grid_resolution: m,
        replications: config.replications,
        predicted_mean,
        empirical_mean: mean_l,
        mean_standard_error: (var_l / lengths.len() as f64).sqrt(),
        predicted_variance,
        empirical_variance: var_l,
        c_empirical: var_l * nn * nn / energy,
        c_predicted: c_pred,
        proj4_variance: var_p,
        chaos_ratio,
        residual_ratio,
        ks_length,
        ks_proj4,
        band_sweep,
        normalized_lengths,
    })
}

fn check_thresholds(record: &NRecord, thresholds: &Thresholds, failures: &mut Vec<String>) {
    if let Some(max_ks) = thresholds.max_ks_length {
        if record.ks_length > max_ks {
            failures.push(format!(
                "n = {}: KS(lengths, M_eta) = {:.4} exceeds {max_ks}",
                record.n, record.ks_length
            ));
        }
    }
    if let Some(min_ratio) = thresholds.min_chaos_ratio {
        if record.chaos_ratio < min_ratio {
            failures.push(format!(
                "n = {}: chaos ratio {:.4} below {min_ratio}",
                record.n, record.chaos_ratio
            ));
        }
    }
    if let Some(frac) = thresholds.max_mean_deviation {
        let allowance = 3.0 * record.mean_standard_error + frac * record.predicted_mean;
        let deviation = (record.empirical_mean - record.predicted_mean).abs();
        if deviation > allowance {
            failures.push(format!(
                "n = {}: mean deviation {:.4} exceeds 3 SE + {:.2}% = {:.4}",
                record.n,
                deviation,
                100.0 * frac,
                allowance
            ));
        }
    }
}

/// Run the full experiment, streaming records to the configured outputs.
/// Returns all records plus any threshold violations.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    config.validate()?;
    let threads = config.threads.or_else(|| {
        std::env::var("TORUS_WAVES_THREADS").ok().and_then(|v| v.parse().ok())
    });
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            builder = builder.num_threads(t);
        }
        builder
            .build()
            .map_err(|e| HarnessError::InvalidConfig(format!("thread pool: {e}")))?
    };

    for path in [&config.outputs.report_jsonl, &config.outputs.summary_csv] {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
    }
    let mut jsonl = std::io::BufWriter::new(std::fs::File::create(&config.outputs.report_jsonl)?);
    let mut csv = std::io::BufWriter::new(std::fs::File::create(&config.outputs.summary_csv)?);
    writeln!(
        csv,
        "n,cardinality,mu4,empirical_mean,predicted_mean,empirical_variance,predicted_variance,ks_length,ks_proj4,chaos_ratio,residual_ratio"
    )?;

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for &n in &config.n_list {
        let started = std::time::Instant::now();
        let record = pool.install(|| run_index(config, n))?;
        eprintln!(
            "[torus-waves] n = {n}: {} replications on a {} grid in {:.2} s",
            config.replications,
            record.grid_resolution,
            started.elapsed().as_secs_f64()
        );
        let line = serde_json::to_string(&record).expect("records serialize");
        jsonl.write_all(line.as_bytes())?;
        jsonl.write_all(b"\n")?;
        jsonl.flush()?;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            record.n,
            record.cardinality,
            record.mu4,
            record.empirical_mean,
            record.predicted_mean,
            record.empirical_variance,
            record.predicted_variance,
            record.ks_length,
            record.ks_proj4,
            record.chaos_ratio,
            record.residual_ratio
        )?;
        csv.flush()?;
        check_thresholds(&record, &config.thresholds, &mut failures);
        records.push(record);
    }
    Ok(ExperimentOutcome { records, failures })
}
