//! Command-line front end for the torus-waves library.
//!
//! Every subcommand prints a JSON document to stdout (except `sample`,
//! which additionally writes a grid file) and exits with:
//!
//! * 0 on success,
//! * 1 when a domain assertion fails (index not a sum of two squares,
//!   resolution too low, threshold violated, ...),
//! * 2 on usage errors (unknown flags or subcommands).
//!
//! `--seed` fixes all randomness end to end; the environment variable
//! `TORUS_WAVES_THREADS` caps the worker pool.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use torus_waves::chaos::{proj_quadrature, s4_structure, ChaosReport};
use torus_waves::field::{evaluate_grid, sample_replication};
use torus_waves::harness::{run_experiment, ExperimentConfig};
use torus_waves::hermite::CoefficientTable;
use torus_waves::lattice::{ceil_sqrt, enumerate_circle, fourier_coefficient};
use torus_waves::limits::{limit_variance_check, sample_m_eta, sigma_matrix, LimitLaw};
use torus_waves::nodal::{band_length, nodal_length_ms_streaming};
use torus_waves::rng::tagged_rng;

#[derive(Parser)]
#[command(
    name = "torus-waves",
    version,
    about = "Nodal lengths and chaos projections of random waves on the 2-torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Marching squares on the sampled grid.
    Ms,
    /// Smoothed band (co-area) estimate at level 0.
    Band,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the lattice circle |lambda|^2 = n and its moments.
    Lattice {
        #[arg(long)]
        n: u64,
        /// Also print the k-th Fourier coefficient of the angular measure.
        #[arg(long)]
        fourier: Option<i64>,
    },
    /// Print the chaos-expansion coefficient table up to a given order.
    Coeffs {
        #[arg(long = "max-order")]
        max_order: usize,
    },
    /// Sample one wave and write its grid (value and normalized gradient) as CSV.
    Sample {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure the length of a level set of one sampled wave.
    Nodal {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum)]
        method: Method,
        /// Level for the marching-squares method.
        #[arg(long, default_value_t = 0.0)]
        u: f64,
        /// Band half-width for the band method.
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long)]
        grid: usize,
    },
    /// Chaos statistics of one sampled wave.
    Chaos {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
        /// Also evaluate the order-2q chaos projection by grid quadrature.
        #[arg(long)]
        q: Option<usize>,
        /// Also enumerate the length-4 spectral correlation set.
        #[arg(long)]
        s4: bool,
    },
    /// Monte Carlo summary of the limit law M_eta.
    Limits {
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a full multi-index experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * p).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Pretty-print a JSON document to stdout. A closed pipe (e.g. `| head`)
/// ends the process quietly instead of panicking.
fn emit(doc: &Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(doc).expect("json");
    match writeln!(std::io::stdout(), "{text}") {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(e.to_string()),
    }
}

fn run(command: Command) -> Result<(), String> {
    match command {
        Command::Lattice { n, fourier } => {
            let circle = enumerate_circle(n).map_err(|e| e.to_string())?;
            let mut doc = json!({
                "n": circle.n,
                "cardinality": circle.cardinality,
                "energy": circle.energy(),
                "mu4": circle.mu4(),
                "points": circle.points,
                "half_points": circle.half_points,
            });
            if let Some(k) = fourier {
                let z = fourier_coefficient(&circle, k);
                doc["fourier"] = json!({ "k": k, "re": z.re, "im": z.im });
            }
            emit(&doc)?;
            Ok(())
        }
        Command::Coeffs { max_order } => {
            let table = CoefficientTable::build(max_order);
            let alpha: Vec<Value> = table
                .alpha
                .iter()
                .map(|(&(a, b), &v)| json!({ "a": a, "b": b, "value": v }))
                .collect();
            let beta: Vec<Value> = table
                .beta
                .iter()
                .map(|(&l, &v)| json!({ "l": l, "value": v }))
                .collect();
            let doc = json!({ "max_order": table.max_order, "alpha": alpha, "beta": beta });
            emit(&doc)?;
            Ok(())
        }
        Command::Sample { n, seed, grid, out } => {
            let circle = enumerate_circle(n).map_err(|e| e.to_string())?;
            let coeffs = sample_replication(&circle, seed, 0);
            let field = evaluate_grid(&coeffs, grid).map_err(|e| e.to_string())?;
            let file = std::fs::File::create(&out).map_err(|e| e.to_string())?;
            let mut w = std::io::BufWriter::new(file);
            writeln!(w, "i,j,value,grad1,grad2").map_err(|e| e.to_string())?;
            let m = field.resolution;
            for i in 0..m {
                for j in 0..m {
                    let idx = i * m + j;
                    writeln!(
                        w,
                        "{},{},{},{},{}",
                        i, j, field.values[idx], field.grad1[idx], field.grad2[idx]
                    )
                    .map_err(|e| e.to_string())?;
                }
            }
            w.flush().map_err(|e| e.to_string())?;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut mean = 0.0;
            for &v in &field.values {
                lo = lo.min(v);
                hi = hi.max(v);
                mean += v;
            }
            mean /= (m * m) as f64;
            let doc = json!({
                "n": n, "seed": seed, "grid": m, "out": out,
                "min": lo, "max": hi, "mean": mean,
            });
            emit(&doc)?;
            Ok(())
        }
        Command::Nodal { n, seed, method, u, eps, grid } => {
            let circle = enumerate_circle(n).map_err(|e| e.to_string())?;
            let coeffs = sample_replication(&circle, seed, 0);
            let estimate = match method {
                Method::Ms => {
                    nodal_length_ms_streaming(&coeffs, grid, u).map_err(|e| e.to_string())?
                }
                Method::Band => band_length(&coeffs, eps, grid).map_err(|e| e.to_string())?,
            };
            let mut doc = serde_json::to_value(estimate).expect("json");
            doc["n"] = json!(n);
            doc["seed"] = json!(seed);
            emit(&doc)?;
            Ok(())
        }
        Command::Chaos { n, seed, q, s4 } => {
            let circle = enumerate_circle(n).map_err(|e| e.to_string())?;
            let coeffs = sample_replication(&circle, seed, 0);
            let report = ChaosReport::compute(&coeffs);
            let integrals: Vec<Value> = report
                .hermite_integrals
                .iter()
                .map(|(&(a, b, c), &v)| json!({ "triple": [a, b, c], "value": v }))
                .collect();
            let mut doc = json!({
                "n": n,
                "seed": seed,
                "w": report.w,
                "proj2": report.proj2,
                "proj4": report.proj4,
                "hermite_integrals": integrals,
                "s4_cardinality": report.s4_cardinality,
            });
            if let Some(order) = q {
                let m = 4 * order * ceil_sqrt(n) as usize + 1;
                let value = proj_quadrature(&coeffs, order, m).map_err(|e| e.to_string())?;
                doc["proj_quadrature"] = json!({ "q": order, "grid": m, "value": value });
            }
            if s4 {
                let census = s4_structure(&circle).map_err(|e| e.to_string())?;
                doc["s4"] = serde_json::to_value(census).expect("json");
            }
            emit(&doc)?;
            Ok(())
        }
        Command::Limits { eta, samples, seed } => {
            let mut rng = tagged_rng(seed, "limits-cli", 0);
            let mut draws = Vec::with_capacity(samples);
            for _ in 0..samples {
                draws.push(sample_m_eta(eta, &mut rng).map_err(|e| e.to_string())?);
            }
            draws.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let mean = draws.iter().sum::<f64>() / samples as f64;
            let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                / (samples as f64 - 1.0);
            let law = LimitLaw { eta, support_upper: 1.0 / (1.0 + eta * eta).sqrt(), sample_count: samples };
            let sigma = sigma_matrix(eta);
            let doc = json!({
                "law": law,
                "mean": mean,
                "variance": var,
                "min": draws[0],
                "max": draws[draws.len() - 1],
                "quantiles": {
                    "p01": quantile(&draws, 0.01),
                    "p05": quantile(&draws, 0.05),
                    "p25": quantile(&draws, 0.25),
                    "p50": quantile(&draws, 0.50),
                    "p75": quantile(&draws, 0.75),
                    "p95": quantile(&draws, 0.95),
                    "p99": quantile(&draws, 0.99),
                },
                "quadratic_form_variance": limit_variance_check(eta),
                "sigma_eigenvalues": sigma.eigenvalues,
            });
            emit(&doc)?;
            Ok(())
        }
        Command::Experiment { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| e.to_string())?;
            let config: ExperimentConfig =
                serde_json::from_str(&text).map_err(|e| format!("config parse: {e}"))?;
            let outcome = run_experiment(&config).map_err(|e| e.to_string())?;
            let indices: Vec<Value> = outcome
                .records
                .iter()
                .map(|r| {
                    json!({
                        "n": r.n,
                        "empirical_mean": r.empirical_mean,
                        "predicted_mean": r.predicted_mean,
                        "c_empirical": r.c_empirical,
                        "c_predicted": r.c_predicted,
                        "ks_length": r.ks_length,
                        "chaos_ratio": r.chaos_ratio,
                    })
                })
                .collect();
            let doc = json!({
                "report_jsonl": config.outputs.report_jsonl,
                "summary_csv": config.outputs.summary_csv,
                "indices": indices,
                "failures": outcome.failures,
            });
            emit(&doc)?;
            if outcome.failures.is_empty() {
                Ok(())
            } else {
                Err(format!("{} threshold violation(s)", outcome.failures.len()))
            }
        }
    }
}

fn main() {
    if let Ok(threads) = std::env::var("TORUS_WAVES_THREADS") {
        if let Ok(t) = threads.parse::<usize>() {
            // The experiment harness builds its own pool; this caps everything else.
            let _ = rayon_global_cap(t);
        }
    }
    let cli = Cli::parse();
    if let Err(message) = run(cli.command) {
        eprintln!("error: {message}");
        std::process::exit(1);
    }
}

fn rayon_global_cap(threads: usize) -> Result<(), String> {
    torus_waves::build_global_pool(threads).map_err(|e| e.to_string())
}
