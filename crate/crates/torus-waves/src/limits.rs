//! The non-universal limit laws of normalized nodal-length fluctuations.
//!
//! As `N_n -> infinity` along sequences with `|mu_hat_n(4)| -> eta`, the
//! normalized fourth chaos (hence the normalized length) converges to
//!
//! ```text
//! M_eta = (2 - (1 + eta) X_1^2 - (1 - eta) X_2^2) / (2 sqrt(1 + eta^2)),
//! ```
//!
//! with `X_1, X_2` independent standard Gaussians: mean 0, variance 1,
//! support `(-infinity, 1 / sqrt(1 + eta^2)]`. The sign of `eta` is
//! irrelevant (swap `X_1` with `X_2`), so signed inputs are accepted.
//!
//! Behind `M_eta` sits the Gaussian limit `W` of the spectral statistics
//! [`crate::chaos::w_vector`], with covariance
//!
//! ```text
//!             [ 1        1/2          1/2          0         ]
//! Sigma(eta) =[ 1/2      (3+eta)/8    (1-eta)/8    0         ]
//!             [ 1/2      (1-eta)/8    (3+eta)/8    0         ]
//!             [ 0        0            0            (1-eta)/8 ],
//! ```
//!
//! eigenvalues `{0, 3/2, (1-eta)/8, (1+eta)/4}`. The quadratic form
//! `Z_1^2 - 2 Z_2^2 - 2 Z_3^2 - 4 Z_4^2` under `Z ~ N(0, Sigma(eta))` has
//! variance `1 + eta^2` (the Wick identity `Var = 2 sum c_i c_j Sigma_ij^2`),
//! which is where the variance constant `c(eta) = (1 + eta^2) / 512` comes
//! from. At finite non-square `n`, `Cov(W) = Sigma(mu_hat_n(4))` exactly.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LimitsError {
    #[error("eta = {0} outside [-1, 1]")]
    EtaOutOfRange(f64),
    #[error("need at least {min} samples for a stable empirical CDF, got {got}")]
    TooFewSamples { got: usize, min: usize },
}

/// Identifying data of one limit law `M_eta`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LimitLaw {
    pub eta: f64,
    pub support_upper: f64,
    pub sample_count: usize,
}

fn check_eta(eta: f64) -> Result<f64, LimitsError> {
    if !(-1.0..=1.0).contains(&eta) || !eta.is_finite() {
        return Err(LimitsError::EtaOutOfRange(eta));
    }
    Ok(eta)
}

/// One draw of `M_eta`.
pub fn sample_m_eta(eta: f64, rng: &mut impl Rng) -> Result<f64, LimitsError> {
    check_eta(eta)?;
    Ok(sample_m_eta_unchecked(eta, rng))
}

#[inline]
fn sample_m_eta_unchecked(eta: f64, rng: &mut impl Rng) -> f64 {
    let x1: f64 = rng.sample(StandardNormal);
    let x2: f64 = rng.sample(StandardNormal);
    (2.0 - (1.0 + eta) * x1 * x1 - (1.0 - eta) * x2 * x2)
        / (2.0 * (1.0 + eta * eta).sqrt())
}

/// Sorted empirical distribution of a sample, exposing right-continuous
/// values and left limits for Kolmogorov-Smirnov sups.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
    pub law: Option<LimitLaw>,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        assert!(!samples.is_empty(), "empty sample");
        samples.sort_by(|a, b| a.partial_cmp(b).expect("no NaN samples"));
        EmpiricalCdf { sorted: samples, law: None }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `F(t) = P(X <= t)`.
    pub fn value(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= t) as f64 / self.sorted.len() as f64
    }

    /// Left limit `F(t-) = P(X < t)`.
    pub fn value_left(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&x| x < t) as f64 / self.sorted.len() as f64
    }

    /// Jump points (the sorted sample).
    pub fn support(&self) -> &[f64] {
        &self.sorted
    }

    /// Exact sup-distance between two empirical CDFs, by sweeping the
    /// merged jump set.
    pub fn sup_distance(&self, other: &EmpiricalCdf) -> f64 {
        let (a, b) = (&self.sorted, &other.sorted);
        let (n, m) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j) = (0usize, 0usize);
        let mut sup: f64 = 0.0;
        while i < a.len() || j < b.len() {
            let x = match (a.get(i), b.get(j)) {
                (Some(&u), Some(&v)) => u.min(v),
                (Some(&u), None) => u,
                (None, Some(&v)) => v,
                (None, None) => break,
            };
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            sup = sup.max((i as f64 / n - j as f64 / m).abs());
        }
        sup
    }
}

/// Empirical CDF of `M_eta` from `sample_size` fresh draws. The reference
/// tables behind KS statistics are built here, so a floor of 10^5 samples
/// keeps their own fluctuation (DKW: about `1.22 / sqrt(size)` at 95%)
/// below 0.004.
pub fn m_eta_empirical_cdf(
    eta: f64,
    sample_size: usize,
    rng: &mut impl Rng,
) -> Result<EmpiricalCdf, LimitsError> {
    check_eta(eta)?;
    const MIN: usize = 100_000;
    if sample_size < MIN {
        return Err(LimitsError::TooFewSamples { got: sample_size, min: MIN });
    }
    let samples: Vec<f64> = (0..sample_size)
        .map(|_| sample_m_eta_unchecked(eta, rng))
        .collect();
    let mut cdf = EmpiricalCdf::from_samples(samples);
    cdf.law = Some(LimitLaw {
        eta,
        support_upper: 1.0 / (1.0 + eta * eta).sqrt(),
        sample_count: sample_size,
    });
    Ok(cdf)
}

/// The limit covariance `Sigma(eta)` of the spectral vector `W`, with its
/// spectral decomposition (used both for eigenvalue checks and for drawing
/// `Z ~ N(0, Sigma)` through the eigen square root).
#[derive(Debug, Clone, Serialize)]
pub struct SigmaMatrix {
    pub eta: f64,
    pub matrix: [[f64; 4]; 4],
    /// Ascending.
    pub eigenvalues: [f64; 4],
    /// Columns are unit eigenvectors, aligned with `eigenvalues`.
    pub eigenvectors: [[f64; 4]; 4],
}

/// Build `Sigma(eta)` for signed `eta` (finite-`n` covariances use the
/// signed fourth Fourier coefficient).
pub fn sigma_matrix(eta: f64) -> SigmaMatrix {
    assert!((-1.0..=1.0).contains(&eta), "eta outside [-1, 1]");
    let matrix = [
        [1.0, 0.5, 0.5, 0.0],
        [0.5, (3.0 + eta) / 8.0, (1.0 - eta) / 8.0, 0.0],
        [0.5, (1.0 - eta) / 8.0, (3.0 + eta) / 8.0, 0.0],
        [0.0, 0.0, 0.0, (1.0 - eta) / 8.0],
    ];
    let (eigenvalues, eigenvectors) = jacobi_eigen(matrix);
    SigmaMatrix { eta, matrix, eigenvalues, eigenvectors }
}

impl SigmaMatrix {
    /// Draw `Z ~ N(0, Sigma)` via `V sqrt(diag(lambda)) g`. Eigenvalues are
    /// clamped at zero; anything below `-1e-12` would mean the matrix is
    /// not a covariance and trips an assertion instead.
    pub fn sample_z(&self, rng: &mut impl Rng) -> [f64; 4] {
        let mut scaled = [0.0; 4];
        for (slot, &lam) in scaled.iter_mut().zip(&self.eigenvalues) {
            assert!(lam > -1e-12, "negative eigenvalue {lam}");
            let g: f64 = rng.sample(StandardNormal);
            *slot = lam.max(0.0).sqrt() * g;
        }
        let mut z = [0.0; 4];
        for (entry, row) in z.iter_mut().zip(&self.eigenvectors) {
            for (&e, &s) in row.iter().zip(&scaled) {
                *entry += e * s;
            }
        }
        z
    }
}

/// Wick variance of `Z_1^2 - 2 Z_2^2 - 2 Z_3^2 - 4 Z_4^2` under
/// `N(0, Sigma(eta))`; equals `1 + eta^2` for every admissible `eta`.
pub fn limit_variance_check(eta: f64) -> f64 {
    let sigma = sigma_matrix(eta).matrix;
    let c = [1.0, -2.0, -2.0, -4.0];
    let mut var = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            var += 2.0 * c[i] * c[j] * sigma[i][j] * sigma[i][j];
        }
    }
    var
}

/// Leading variance constant `c(eta) = (1 + eta^2) / 512` of nodal length:
/// `Var(L_n) ~ c(eta) E_n / N_n^2`.
pub fn c_constant(eta: f64) -> f64 {
    (1.0 + eta * eta) / 512.0
}

/// Cyclic Jacobi eigendecomposition of a symmetric 4x4 matrix. Returns
/// ascending eigenvalues and the matching eigenvector columns.
#[allow(clippy::needless_range_loop)]
fn jacobi_eigen(matrix: [[f64; 4]; 4]) -> ([f64; 4], [[f64; 4]; 4]) {
    let mut a = matrix;
    let mut v = [[0.0; 4]; 4];
    for (k, row) in v.iter_mut().enumerate() {
        row[k] = 1.0;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..4 {
            for q in 0..4 {
                if p != q {
                    off += a[p][q] * a[p][q];
                }
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).expect("finite eigenvalues"));
    let mut values = [0.0; 4];
    let mut vectors = [[0.0; 4]; 4];
    for (slot, &src) in order.iter().enumerate() {
        values[slot] = a[src][src];
        for row in 0..4 {
            vectors[row][slot] = v[row][src];
        }
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::tagged_rng;

    fn closed_form_eigs(eta: f64) -> [f64; 4] {
        let mut e = [0.0, 1.5, (1.0 - eta) / 8.0, (1.0 + eta) / 4.0];
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    #[test]
    fn eigenvalues_match_closed_forms() {
        for &eta in &[-1.0, -0.5, 0.0, 0.28, 0.5, 1.0] {
            let sigma = sigma_matrix(eta);
            let want = closed_form_eigs(eta);
            for k in 0..4 {
                assert!(
                    (sigma.eigenvalues[k] - want[k]).abs() < 1e-12,
                    "eta {eta}: {:?} vs {want:?}",
                    sigma.eigenvalues
                );
            }
        }
    }

    #[test]
    fn sigma_examples() {
        let s0 = sigma_matrix(0.0);
        assert_eq!(s0.matrix[1][1], 0.375);
        let want0 = [0.0, 0.125, 0.25, 1.5];
        for (got, want) in s0.eigenvalues.iter().zip(&want0) {
            assert!((got - want).abs() < 1e-13);
        }
        let s1 = sigma_matrix(1.0);
        let want1 = [0.0, 0.0, 0.5, 1.5];
        for (got, want) in s1.eigenvalues.iter().zip(&want1) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn eigenvectors_reconstruct_sigma() {
        for &eta in &[-0.7, 0.0, 0.28, 1.0] {
            let s = sigma_matrix(eta);
            for i in 0..4 {
                for j in 0..4 {
                    let mut rebuilt = 0.0;
                    for k in 0..4 {
                        rebuilt += s.eigenvalues[k] * s.eigenvectors[i][k] * s.eigenvectors[j][k];
                    }
                    assert!(
                        (rebuilt - s.matrix[i][j]).abs() < 1e-12,
                        "eta {eta} entry ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn wick_variance_examples() {
        assert!((limit_variance_check(0.0) - 1.0).abs() < 1e-14);
        assert!((limit_variance_check(1.0) - 2.0).abs() < 1e-14);
        assert!((limit_variance_check(0.5) - 1.25).abs() < 1e-14);
        for &eta in &[-1.0, -0.3, 0.28, 0.9] {
            assert!((limit_variance_check(eta) - (1.0 + eta * eta)).abs() < 1e-13);
        }
    }

    #[test]
    fn c_constant_examples() {
        assert_eq!(c_constant(0.0), 1.0 / 512.0);
        assert_eq!(c_constant(1.0), 2.0 / 512.0);
        assert_eq!(c_constant(-1.0), 2.0 / 512.0);
        assert_eq!(c_constant(0.5), 1.25 / 512.0);
    }

    #[test]
    fn m_eta_rejects_bad_eta() {
        let mut rng = tagged_rng(1, "m", 0);
        assert!(matches!(sample_m_eta(1.5, &mut rng), Err(LimitsError::EtaOutOfRange(_))));
        assert!(matches!(sample_m_eta(f64::NAN, &mut rng), Err(LimitsError::EtaOutOfRange(_))));
        assert!(sample_m_eta(-1.0, &mut rng).is_ok());
    }

    #[test]
    fn m_eta_moments_and_support() {
        for &eta in &[0.0, 0.28, 1.0] {
            let mut rng = tagged_rng(7, "moments", (eta * 100.0) as u64);
            let reps = 200_000;
            let (mut mean, mut var, mut max) = (0.0, 0.0, f64::NEG_INFINITY);
            for _ in 0..reps {
                let x = sample_m_eta_unchecked(eta, &mut rng);
                mean += x;
                var += x * x;
                max = max.max(x);
            }
            mean /= reps as f64;
            var = var / reps as f64 - mean * mean;
            let upper = 1.0 / (1.0 + eta * eta).sqrt();
            assert!(mean.abs() < 0.01, "eta {eta}: mean {mean}");
            assert!((var - 1.0).abs() < 0.025, "eta {eta}: var {var}");
            assert!(max <= upper + 1e-12, "eta {eta}: max {max} above {upper}");
            // The support endpoint is approached.
            assert!(max > upper - 0.05, "eta {eta}: max {max} far from {upper}");
        }
    }

    #[test]
    fn quadratic_form_variance_monte_carlo() {
        let sigma = sigma_matrix(0.5);
        let mut rng = tagged_rng(3, "wick", 0);
        let reps = 400_000;
        let (mut mean, mut second) = (0.0, 0.0);
        for _ in 0..reps {
            let z = sigma.sample_z(&mut rng);
            let q = z[0] * z[0] - 2.0 * z[1] * z[1] - 2.0 * z[2] * z[2] - 4.0 * z[3] * z[3];
            mean += q;
            second += q * q;
        }
        mean /= reps as f64;
        let var = second / reps as f64 - mean * mean;
        assert!((var - 1.25).abs() < 0.02, "MC var {var}");
    }

    #[test]
    fn empirical_cdf_basics() {
        let cdf = EmpiricalCdf::from_samples(vec![3.0, 1.0, 2.0, 2.0]);
        assert_eq!(cdf.value(0.5), 0.0);
        assert_eq!(cdf.value(1.0), 0.25);
        assert_eq!(cdf.value_left(1.0), 0.0);
        assert_eq!(cdf.value(2.0), 0.75);
        assert_eq!(cdf.value_left(2.0), 0.25);
        assert_eq!(cdf.value(10.0), 1.0);
    }

    #[test]
    fn cdf_requires_enough_samples() {
        let mut rng = tagged_rng(1, "cdf", 0);
        assert!(matches!(
            m_eta_empirical_cdf(0.0, 10, &mut rng),
            Err(LimitsError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn cdf_hits_support_and_chi2_oracle() {
        let mut rng = tagged_rng(5, "cdf", 1);
        let cdf = m_eta_empirical_cdf(0.0, 150_000, &mut rng).unwrap();
        let law = cdf.law.unwrap();
        assert_eq!(law.support_upper, 1.0);
        assert_eq!(cdf.value(law.support_upper), 1.0);
        // At eta = 0: P(M_0 <= 0) = P(chi^2_2 >= 2) = exp(-1).
        let want = (-1.0f64).exp();
        assert!(
            (cdf.value(0.0) - want).abs() < 0.005,
            "CDF(0) = {} vs {want}",
            cdf.value(0.0)
        );
    }

    #[test]
    fn sign_of_eta_is_immaterial() {
        let mut rng_a = tagged_rng(11, "sym", 0);
        let mut rng_b = tagged_rng(11, "sym", 1);
        let a = m_eta_empirical_cdf(0.6, 120_000, &mut rng_a).unwrap();
        let b = m_eta_empirical_cdf(-0.6, 120_000, &mut rng_b).unwrap();
        // DKW bound for two independent 1.2e5-size samples at 99%:
        // sqrt(ln(2/0.01)/(2n)) each, roughly 0.0047 + 0.0047.
        assert!(a.sup_distance(&b) < 0.01);
    }

    #[test]
    fn repeated_cdfs_are_close() {
        let mut rng_a = tagged_rng(13, "rep", 0);
        let mut rng_b = tagged_rng(13, "rep", 1);
        let a = m_eta_empirical_cdf(0.28, 150_000, &mut rng_a).unwrap();
        let b = m_eta_empirical_cdf(0.28, 150_000, &mut rng_b).unwrap();
        let d = a.sup_distance(&b);
        assert!(d < 0.008, "sup distance {d}");
        assert!(d > 0.0);
    }

    #[test]
    fn distinct_etas_are_distinguishable() {
        let pairs = [(0.0, 0.28), (0.28, 0.5), (0.5, 1.0), (0.0, 1.0)];
        for &(e1, e2) in &pairs {
            let mut r1 = tagged_rng(17, "dist", (e1 * 100.0) as u64);
            let mut r2 = tagged_rng(19, "dist", (e2 * 100.0) as u64);
            let a = m_eta_empirical_cdf(e1, 200_000, &mut r1).unwrap();
            let b = m_eta_empirical_cdf(e2, 200_000, &mut r2).unwrap();
            let d = a.sup_distance(&b);
            assert!(d >= 0.01, "eta {e1} vs {e2}: KS {d}");
        }
    }
}
