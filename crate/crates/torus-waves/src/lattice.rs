//! Lattice points on circles of radius `sqrt(n)` and their angular spectrum.
//!
//! For an integer `n >= 1` expressible as a sum of two squares,
//!
//! ```text
//! Lambda_n = { (l1, l2) in Z^2 : l1^2 + l2^2 = n },    N_n = |Lambda_n|.
//! ```
//!
//! Projecting `Lambda_n / sqrt(n)` to the unit circle gives a probability
//! measure `mu_n` whose Fourier coefficients
//!
//! ```text
//! mu_hat_n(k) = (1 / N_n) * sum_{lambda in Lambda_n} (lambda / sqrt(n))^{-k}
//! ```
//!
//! (points read as unit complex numbers) are real, vanish unless `4 | k`,
//! and satisfy `|mu_hat_n(k)| <= 1`. The fourth coefficient `mu_hat_n(4)`
//! is the only arithmetic input to the nodal-length variance, so it gets a
//! dedicated exact-integer evaluation: with `P = sum l1^4 + l2^4` and
//! `Q = sum l1^2 l2^2` over `Lambda_n`,
//!
//! ```text
//! mu_hat_n(4) = (P - 6 Q) / (n^2 N_n),
//! ```
//! an exact ratio of integers.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("n = {0} is not a sum of two integer squares")]
    NotSumOfTwoSquares(u64),
    #[error("target must lie in [0, 1], got {0}")]
    InvalidTarget(f64),
}

/// Frequency set of the index-`n` eigenspace.
///
/// `points` holds all of `Lambda_n` in lexicographic order. `half_points`
/// holds one representative per antipodal pair `{lambda, -lambda}`, namely
/// those with `l2 > 0`, or `l2 == 0` and `l1 > 0`.
#[derive(Debug, Clone, Serialize)]
pub struct LatticeCircle {
    pub n: u64,
    pub points: Vec<(i64, i64)>,
    pub cardinality: usize,
    pub half_points: Vec<(i64, i64)>,
}

impl LatticeCircle {
    /// Laplace eigenvalue `E_n = 4 pi^2 n`.
    pub fn energy(&self) -> f64 {
        4.0 * std::f64::consts::PI * std::f64::consts::PI * self.n as f64
    }

    /// Exact integer numerator and denominator of `mu_hat_n(4)`:
    /// `(P - 6 Q, n^2 N_n)` with `P, Q` as in the module docs.
    pub fn mu4_exact(&self) -> (i128, i128) {
        let mut num: i128 = 0;
        for &(l1, l2) in &self.points {
            let (a, b) = (l1 as i128, l2 as i128);
            let (a2, b2) = (a * a, b * b);
            num += a2 * a2 + b2 * b2 - 6 * a2 * b2;
        }
        let n = self.n as i128;
        (num, n * n * self.cardinality as i128)
    }

    /// `mu_hat_n(4)` as a float, from the exact integer ratio.
    pub fn mu4(&self) -> f64 {
        let (num, den) = self.mu4_exact();
        num as f64 / den as f64
    }

    /// Exact integer pair `(P, Q) = (sum l1^4 + l2^4, sum l1^2 l2^2)` over
    /// the full circle. These satisfy `2 (P + Q) = n^2 N_n` and give the
    /// closed forms `P = n^2 N (3 + mu4) / 4` and `Q = n^2 N (1 - mu4) / 8`.
    pub fn quartic_sums(&self) -> (i128, i128) {
        let (mut p, mut q) = (0i128, 0i128);
        for &(l1, l2) in &self.points {
            let (a2, b2) = ((l1 as i128) * (l1 as i128), (l2 as i128) * (l2 as i128));
            p += a2 * a2 + b2 * b2;
            q += a2 * b2;
        }
        (p, q)
    }
}

/// Integer square root, exact for all `u64`.
pub(crate) fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut s = (n as f64).sqrt() as u64;
    while s.saturating_mul(s) > n {
        s -= 1;
    }
    while (s + 1).saturating_mul(s + 1) <= n {
        s += 1;
    }
    s
}

/// Smallest integer `>= sqrt(n)`, used to size grids against the bandwidth.
pub fn ceil_sqrt(n: u64) -> u64 {
    let s = isqrt(n);
    if s * s == n {
        s
    } else {
        s + 1
    }
}

/// Enumerate `Lambda_n` by scanning `0 <= a <= sqrt(n)` for `n - a^2` a
/// perfect square, then closing under sign changes and coordinate swap.
///
/// Errors with [`LatticeError::NotSumOfTwoSquares`] when the circle is empty.
pub fn enumerate_circle(n: u64) -> Result<LatticeCircle, LatticeError> {
    let mut set = std::collections::BTreeSet::new();
    for a in 0..=isqrt(n) {
        let rem = n - a * a;
        let b = isqrt(rem);
        if b * b == rem {
            let (a, b) = (a as i64, b as i64);
            for &(x, y) in &[(a, b), (b, a)] {
                set.insert((x, y));
                set.insert((-x, y));
                set.insert((x, -y));
                set.insert((-x, -y));
            }
        }
    }
    if set.is_empty() {
        return Err(LatticeError::NotSumOfTwoSquares(n));
    }
    let points: Vec<(i64, i64)> = set.into_iter().collect();
    let half_points: Vec<(i64, i64)> = points
        .iter()
        .copied()
        .filter(|&(l1, l2)| l2 > 0 || (l2 == 0 && l1 > 0))
        .collect();
    Ok(LatticeCircle {
        n,
        cardinality: points.len(),
        points,
        half_points,
    })
}

/// `mu_hat_n(k)`: the `k`-th Fourier coefficient of the angular measure of
/// `circle`, reading each lattice point as the unit complex number
/// `(l1 + i l2) / sqrt(n)` and averaging its `(-k)`-th power.
pub fn fourier_coefficient(circle: &LatticeCircle, k: i64) -> Complex64 {
    let inv_r = 1.0 / (circle.n as f64).sqrt();
    let mut sum = Complex64::new(0.0, 0.0);
    for &(l1, l2) in &circle.points {
        let z = Complex64::new(l1 as f64 * inv_r, l2 as f64 * inv_r);
        // z^{-k} = conj(z)^k on the unit circle.
        let base = if k >= 0 { z.conj() } else { z };
        sum += base.powu(k.unsigned_abs() as u32);
    }
    sum / circle.cardinality as f64
}

/// Scan `n in [n_min, n_max]` for indices whose `|mu_hat_n(4)|` lies within
/// `tolerance` of `target`. Returns `(n, mu_hat_n(4))` pairs in increasing
/// `n`; indices not representable as sums of two squares are skipped.
pub fn search_eta(
    target: f64,
    n_min: u64,
    n_max: u64,
    tolerance: f64,
) -> Result<Vec<(u64, f64)>, LatticeError> {
    if !(0.0..=1.0).contains(&target) || !target.is_finite() {
        return Err(LatticeError::InvalidTarget(target));
    }
    let mut hits = Vec::new();
    for n in n_min.max(1)..=n_max {
        if let Ok(circle) = enumerate_circle(n) {
            let mu4 = circle.mu4();
            if (mu4.abs() - target).abs() <= tolerance {
                hits.push((n, mu4));
            }
        }
    }
    Ok(hits)
}
