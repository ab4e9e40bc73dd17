//! Sampling and evaluation of arithmetic random waves.
//!
//! A realization is determined by the complex Gaussian coefficients
//! `a_lambda` over one representative per antipodal pair (the Hermitian
//! constraint `a_{-lambda} = conj(a_lambda)` supplies the rest). With
//! `N = N_n` and `e(t) = exp(2 pi i t)`,
//!
//! ```text
//! T_n(x)      = (2 / sqrt(N)) * sum_{lambda in half} Re( a_lambda e(<lambda, x>) ),
//! dtilde_j(x) = -(2 / sqrt(N)) * sqrt(2 / n)
//!               * sum_{lambda in half} lambda_j Im( a_lambda e(<lambda, x>) ),
//! ```
//!
//! where `dtilde_j = (2 pi)^{-1} sqrt(2 / n) * d_j T_n` is the gradient
//! component normalized to unit variance; the raw derivative has variance
//! `E_n / 2 = 2 pi^2 n`. At every fixed `x` the triple `(T_n, dtilde_1,
//! dtilde_2)` is standard Gaussian with independent entries.
//!
//! Grid evaluation never accumulates phase increments in floating point:
//! on an `M x M` grid the phase of `e(<lambda, x_ij>)` is the exact integer
//! `(l1 * i + l2 * j) mod M`, so values come from a single `M`-entry table
//! of roots of unity and stay reproducible across row order and thread
//! count.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{ceil_sqrt, LatticeCircle};
use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("grid resolution {m} too low for index {n}; need at least {min}")]
    ResolutionTooLow { n: u64, m: usize, min: usize },
}

/// Label of the RNG stream a coefficient set was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub n: u64,
    pub replication: u64,
}

/// One realization of the wave: the frequency circle plus one complex
/// Gaussian coefficient per half-lattice representative.
#[derive(Debug, Clone)]
pub struct WaveCoefficients {
    pub circle: LatticeCircle,
    /// `a_lambda` aligned index-for-index with `circle.half_points`.
    pub coeffs: Vec<Complex64>,
    /// Present when the coefficients came from a derived stream.
    pub seed: Option<SeedRecord>,
}

impl WaveCoefficients {
    /// Wrap externally supplied coefficients (tests, deterministic probes).
    pub fn from_half_coefficients(circle: LatticeCircle, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(
            coeffs.len(),
            circle.half_points.len(),
            "one coefficient per half-lattice point"
        );
        WaveCoefficients { circle, coeffs, seed: None }
    }

    /// The constant realization `a_lambda = 1`, useful as a degenerate probe:
    /// all coefficient moduli equal 1 while phases stay aligned.
    pub fn unit(circle: LatticeCircle) -> Self {
        let coeffs = vec![Complex64::new(1.0, 0.0); circle.half_points.len()];
        Self::from_half_coefficients(circle, coeffs)
    }

    /// Translate the wave by `shift`: `a_lambda <- a_lambda e(<lambda, shift>)`.
    /// Stationarity makes this a distribution-preserving map.
    pub fn translated(&self, shift: [f64; 2]) -> Self {
        let coeffs = self
            .circle
            .half_points
            .iter()
            .zip(&self.coeffs)
            .map(|(&(l1, l2), a)| {
                let phase =
                    2.0 * std::f64::consts::PI * (l1 as f64 * shift[0] + l2 as f64 * shift[1]);
                a * Complex64::new(phase.cos(), phase.sin())
            })
            .collect();
        WaveCoefficients { circle: self.circle.clone(), coeffs, seed: None }
    }
}

/// Draw `a_lambda` for every half-lattice point from `rng`: independent
/// complex Gaussians with `E|a|^2 = 1` (real and imaginary parts are
/// `N(0, 1/2)`).
pub fn sample_coefficients(circle: &LatticeCircle, rng: &mut impl Rng) -> WaveCoefficients {
    let coeffs = circle
        .half_points
        .iter()
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect();
    WaveCoefficients { circle: circle.clone(), coeffs, seed: None }
}

/// Draw the coefficients of `replication` under `master_seed`, recording the
/// stream label. This is the entry point the experiment harness uses.
pub fn sample_replication(
    circle: &LatticeCircle,
    master_seed: u64,
    replication: u64,
) -> WaveCoefficients {
    let mut rng = rng::coefficient_rng(master_seed, circle.n, replication);
    let mut coeffs = sample_coefficients(circle, &mut rng);
    coeffs.seed = Some(SeedRecord { master_seed, n: circle.n, replication });
    coeffs
}

/// Evaluate the wave at one point: returns `(T_n(x), [dtilde_1, dtilde_2])`
/// with the unit-variance gradient normalization from the module docs.
pub fn evaluate(coeffs: &WaveCoefficients, x: [f64; 2]) -> (f64, [f64; 2]) {
    let nn = coeffs.circle.cardinality as f64;
    let val_scale = 2.0 / nn.sqrt();
    let grad_scale = -val_scale * (2.0 / coeffs.circle.n as f64).sqrt();
    let (mut t, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for (&(l1, l2), a) in coeffs.circle.half_points.iter().zip(&coeffs.coeffs) {
        let phase = 2.0 * std::f64::consts::PI * (l1 as f64 * x[0] + l2 as f64 * x[1]);
        let z = a * Complex64::new(phase.cos(), phase.sin());
        t += z.re;
        d1 += l1 as f64 * z.im;
        d2 += l2 as f64 * z.im;
    }
    (val_scale * t, [grad_scale * d1, grad_scale * d2])
}

/// Covariance function `r_n(x) = E[T_n(y) T_n(y + x)]
/// = (1 / N) sum_Lambda cos(2 pi <lambda, x>)`.
pub fn covariance(circle: &LatticeCircle, x: [f64; 2]) -> f64 {
    let mut sum = 0.0;
    for &(l1, l2) in &circle.half_points {
        let phase = 2.0 * std::f64::consts::PI * (l1 as f64 * x[0] + l2 as f64 * x[1]);
        sum += phase.cos();
    }
    2.0 * sum / circle.cardinality as f64
}

/// Values and normalized gradient of one realization on the uniform
/// `M x M` torus grid `x_{ij} = (i / M, j / M)`, row-major in `i`.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub resolution: usize,
    pub values: Vec<f64>,
    pub grad1: Vec<f64>,
    pub grad2: Vec<f64>,
}

impl FieldGrid {
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.resolution + j]
    }
}

/// Minimal admissible grid resolution for index `n`.
pub fn min_resolution(n: u64) -> usize {
    2 * ceil_sqrt(n) as usize + 1
}

/// Row synthesizer: shared phase table plus per-frequency stepping state.
pub(crate) struct GridSynth {
    m: usize,
    table: Vec<Complex64>,
    terms: Vec<SynthTerm>,
    val_scale: f64,
    grad_scale: f64,
}

struct SynthTerm {
    a: Complex64,
    l1: f64,
    l2: f64,
    row_step: usize,
    col_step: usize,
}

impl GridSynth {
    pub(crate) fn new(coeffs: &WaveCoefficients, m: usize) -> Self {
        let table: Vec<Complex64> = (0..m)
            .map(|k| {
                let phase = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                Complex64::new(phase.cos(), phase.sin())
            })
            .collect();
        let terms = coeffs
            .circle
            .half_points
            .iter()
            .zip(&coeffs.coeffs)
            .map(|(&(l1, l2), &a)| SynthTerm {
                a,
                l1: l1 as f64,
                l2: l2 as f64,
                row_step: (l1.rem_euclid(m as i64)) as usize,
                col_step: (l2.rem_euclid(m as i64)) as usize,
            })
            .collect();
        let nn = coeffs.circle.cardinality as f64;
        let val_scale = 2.0 / nn.sqrt();
        GridSynth {
            m,
            table,
            terms,
            val_scale,
            grad_scale: -val_scale * (2.0 / coeffs.circle.n as f64).sqrt(),
        }
    }

    /// Fill `out` with `T(i / M, j / M)` for `j = 0..M`.
    pub(crate) fn fill_row_values(&self, i: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.m);
        out.fill(0.0);
        for term in &self.terms {
            let mut p = (term.row_step * i) % self.m;
            let (are, aim) = (term.a.re, term.a.im);
            for slot in out.iter_mut() {
                let w = self.table[p];
                *slot += are * w.re - aim * w.im;
                p += term.col_step;
                if p >= self.m {
                    p -= self.m;
                }
            }
        }
        for slot in out.iter_mut() {
            *slot *= self.val_scale;
        }
    }

    /// Fill one row of values and both normalized gradient components.
    pub(crate) fn fill_row_full(&self, i: usize, val: &mut [f64], g1: &mut [f64], g2: &mut [f64]) {
        debug_assert!(val.len() == self.m && g1.len() == self.m && g2.len() == self.m);
        val.fill(0.0);
        g1.fill(0.0);
        g2.fill(0.0);
        for term in &self.terms {
            let mut p = (term.row_step * i) % self.m;
            let (are, aim) = (term.a.re, term.a.im);
            for j in 0..self.m {
                let w = self.table[p];
                let re = are * w.re - aim * w.im;
                let im = are * w.im + aim * w.re;
                val[j] += re;
                g1[j] += term.l1 * im;
                g2[j] += term.l2 * im;
                p += term.col_step;
                if p >= self.m {
                    p -= self.m;
                }
            }
        }
        for j in 0..self.m {
            val[j] *= self.val_scale;
            g1[j] *= self.grad_scale;
            g2[j] *= self.grad_scale;
        }
    }
}

/// Synthesize the realization on the full `M x M` grid. Requires
/// `M >= 2 ceil(sqrt(n)) + 1` so the highest frequency stays below the
/// grid Nyquist rate and grid means of degree-1 products are exact.
pub fn evaluate_grid(coeffs: &WaveCoefficients, m: usize) -> Result<FieldGrid, FieldError> {
    let min = min_resolution(coeffs.circle.n);
    if m < min {
        return Err(FieldError::ResolutionTooLow { n: coeffs.circle.n, m, min });
    }
    let synth = GridSynth::new(coeffs, m);
    let mut values = vec![0.0; m * m];
    let mut grad1 = vec![0.0; m * m];
    let mut grad2 = vec![0.0; m * m];
    values
        .par_chunks_mut(m)
        .zip(grad1.par_chunks_mut(m))
        .zip(grad2.par_chunks_mut(m))
        .enumerate()
        .for_each(|(i, ((v, g1), g2))| synth.fill_row_full(i, v, g1, g2));
    Ok(FieldGrid { resolution: m, values, grad1, grad2 })
}
