//! Wiener chaos projections of nodal length, evaluated two independent ways.
//!
//! The length of `{ T_n = 0 }` expands as `sqrt(E_n / 2)` times a series in
//! Hermite products `H_a(T) H_b(dtilde_1) H_c(dtilde_2)` weighted by the
//! `alpha`, `beta` coefficients of [`crate::hermite`]. The projection onto
//! chaos order `2q` is
//!
//! ```text
//! L[2q] = sqrt(E_n / 2) * sum_{u=0}^{q} sum_{k=0}^{u}
//!         alpha_{2k, 2u-2k} beta_{2q-2u} / ((2k)! (2u-2k)! (2q-2u)!)
//!         * integral H_{2q-2u}(T) H_{2k}(dtilde_1) H_{2u-2k}(dtilde_2).
//! ```
//!
//! Orthogonality of the torus exponentials collapses each of those
//! integrals to polynomials in a handful of lattice sums. Writing
//! `S = sum_Lambda |a|^2`, `S4 = sum_Lambda |a|^4`, `P_j = sum lambda_j^2
//! |a|^2`, `X = sum lambda_1 lambda_2 |a|^2`, `F_j = sum lambda_j^4 |a|^4`,
//! `G_j = sum lambda_j^2 |a|^4`, `Q = sum lambda_1^2 lambda_2^2 |a|^4`
//! (all over the full circle), the order-4 building blocks are
//!
//! ```text
//! int H_4(T)                   = (3/N^2) (S^2 - S4) - (6/N) S + 3
//! int H_4(dtilde_j)            = (12/(n^2 N^2)) (P_j^2 - F_j) - (12/(n N)) P_j + 3
//! int H_2(T) H_2(dtilde_j)     = (2/(n N^2)) (S P_j - G_j) - S/N - (2/(n N)) P_j + 1
//! int H_2(dtilde_1) H_2(dt_2)  = (4/(n^2 N^2)) (P_1 P_2 + 2 X^2 - 3 Q)
//!                                - (2/(n N)) (P_1 + P_2) + 1
//! ```
//!
//! derived by enumerating the spectral quadruples `lambda + mu + nu + rho
//! = 0` on the circle: every solution splits into two antipodal pairs, so
//! the three possible pairings overcount pairwise on the `|a|^4` diagonal
//! and inclusion-exclusion gives the correction terms. (Odd-weight sums
//! such as `sum lambda_1 |a|^2` vanish identically because `|a_{-lambda}|
//! = |a_lambda|`.) The second-order blocks are `int H_2(T) = S/N - 1` and
//! `int H_2(dtilde_j) = 2 P_j / (n N) - 1`.
//!
//! `proj_quadrature` evaluates the same projections by brute-force grid
//! averaging, which is exact (up to rounding) once the grid beats the
//! bandwidth of the degree-`2q` integrand; agreement of the two routes is
//! the strongest internal consistency check in the crate.

use serde::Serialize;
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

use crate::field::{evaluate_grid, WaveCoefficients};
use crate::hermite::{alpha_coefficient, beta_coefficient, hermite};
use crate::lattice::{ceil_sqrt, LatticeCircle};

#[derive(Debug, Error, PartialEq)]
pub enum ChaosError {
    #[error("Hermite integral triple ({0}, {1}, {2}) is not one of the six order-4 products")]
    UnsupportedTriple(usize, usize, usize),
    #[error("grid {m} too low for chaos order {q} at index {n}; need at least {min}")]
    ResolutionTooLow { n: u64, q: usize, m: usize, min: usize },
    #[error("chaos projections start at order 2q = 4; got q = {0}")]
    OrderTooLow(usize),
    #[error("quadruple enumeration is cubic in the circle size; N = {0} exceeds 256")]
    CircleTooLarge(usize),
}

/// Full-circle moment sums of one realization, the raw material for every
/// closed-form integral. Half-lattice sums are doubled, which is exact
/// because every weight below has even degree in `lambda`.
struct LatticeSums {
    n: f64,
    nn: f64,
    s2: f64,
    s4: f64,
    p1: f64,
    p2: f64,
    x12: f64,
    f1: f64,
    f2: f64,
    g1: f64,
    g2: f64,
    q12: f64,
}

fn lattice_sums(coeffs: &WaveCoefficients) -> LatticeSums {
    let mut s = LatticeSums {
        n: coeffs.circle.n as f64,
        nn: coeffs.circle.cardinality as f64,
        s2: 0.0,
        s4: 0.0,
        p1: 0.0,
        p2: 0.0,
        x12: 0.0,
        f1: 0.0,
        f2: 0.0,
        g1: 0.0,
        g2: 0.0,
        q12: 0.0,
    };
    for (&(l1, l2), a) in coeffs.circle.half_points.iter().zip(&coeffs.coeffs) {
        let (u, v) = (l1 as f64, l2 as f64);
        let (u2, v2) = (u * u, v * v);
        let m2 = a.norm_sqr();
        let m4 = m2 * m2;
        s.s2 += m2;
        s.s4 += m4;
        s.p1 += u2 * m2;
        s.p2 += v2 * m2;
        s.x12 += u * v * m2;
        s.f1 += u2 * u2 * m4;
        s.f2 += v2 * v2 * m4;
        s.g1 += u2 * m4;
        s.g2 += v2 * m4;
        s.q12 += u2 * v2 * m4;
    }
    for field in [
        &mut s.s2, &mut s.s4, &mut s.p1, &mut s.p2, &mut s.x12, &mut s.f1, &mut s.f2, &mut s.g1,
        &mut s.g2, &mut s.q12,
    ] {
        *field *= 2.0;
    }
    s
}

impl LatticeSums {
    fn integral(&self, triple: (usize, usize, usize)) -> Option<f64> {
        let (n, nn) = (self.n, self.nn);
        let nn2 = nn * nn;
        match triple {
            (4, 0, 0) => {
                Some(3.0 / nn2 * (self.s2 * self.s2 - self.s4) - 6.0 / nn * self.s2 + 3.0)
            }
            (0, 4, 0) => Some(
                12.0 / (n * n * nn2) * (self.p1 * self.p1 - self.f1)
                    - 12.0 / (n * nn) * self.p1
                    + 3.0,
            ),
            (0, 0, 4) => Some(
                12.0 / (n * n * nn2) * (self.p2 * self.p2 - self.f2)
                    - 12.0 / (n * nn) * self.p2
                    + 3.0,
            ),
            (2, 2, 0) => Some(
                2.0 / (n * nn2) * (self.s2 * self.p1 - self.g1)
                    - self.s2 / nn
                    - 2.0 / (n * nn) * self.p1
                    + 1.0,
            ),
            (2, 0, 2) => Some(
                2.0 / (n * nn2) * (self.s2 * self.p2 - self.g2)
                    - self.s2 / nn
                    - 2.0 / (n * nn) * self.p2
                    + 1.0,
            ),
            (0, 2, 2) => Some(
                4.0 / (n * n * nn2)
                    * (self.p1 * self.p2 + 2.0 * self.x12 * self.x12 - 3.0 * self.q12)
                    - 2.0 / (n * nn) * (self.p1 + self.p2)
                    + 1.0,
            ),
            _ => None,
        }
    }

    fn h2_t(&self) -> f64 {
        (self.s2 - self.nn) / self.nn
    }

    fn h2_d(&self, which: usize) -> f64 {
        let p = if which == 1 { self.p1 } else { self.p2 };
        2.0 * p / (self.n * self.nn) - 1.0
    }
}

/// Exact value of `int H_a(T) H_b(dtilde_1) H_c(dtilde_2)` for the six
/// order-4 triples; anything else is rejected.
pub fn hermite_integral(
    coeffs: &WaveCoefficients,
    triple: (usize, usize, usize),
) -> Result<f64, ChaosError> {
    lattice_sums(coeffs)
        .integral(triple)
        .ok_or(ChaosError::UnsupportedTriple(triple.0, triple.1, triple.2))
}

/// Grid-quadrature oracle for the same product integrals (any small even
/// triple): the plain average of `H_a(T) H_b(dtilde_1) H_c(dtilde_2)` over
/// an `M x M` grid, exact once `M > (a+b+c) sqrt(n)`.
pub fn hermite_integral_quadrature(
    coeffs: &WaveCoefficients,
    triple: (usize, usize, usize),
    m: usize,
) -> Result<f64, ChaosError> {
    let n = coeffs.circle.n;
    let degree = triple.0 + triple.1 + triple.2;
    let min = degree * ceil_sqrt(n) as usize + 1;
    if m < min.max(crate::field::min_resolution(n)) {
        return Err(ChaosError::ResolutionTooLow {
            n,
            q: degree / 2,
            m,
            min: min.max(crate::field::min_resolution(n)),
        });
    }
    let grid = evaluate_grid(coeffs, m).expect("resolution already checked");
    let mut sum = 0.0;
    for k in 0..m * m {
        sum += hermite(triple.0, grid.values[k])
            * hermite(triple.1, grid.grad1[k])
            * hermite(triple.2, grid.grad2[k]);
    }
    Ok(sum / (m * m) as f64)
}

/// Second-chaos projection of nodal length, assembled term by term:
///
/// ```text
/// L[2] = sqrt(E/2) [ (alpha_00 beta_2 / 2) int H_2(T)
///                  + (alpha_20 beta_0 / 2) int H_2(dtilde_1)
///                  + (alpha_02 beta_0 / 2) int H_2(dtilde_2) ].
/// ```
///
/// The coefficient identity `alpha_00 beta_2 + 2 alpha_02 beta_0 = 0`
/// makes this vanish identically; it is computed literally (not hardwired
/// to zero) so the cancellation is exercised on every sample.
pub fn proj2(coeffs: &WaveCoefficients) -> f64 {
    proj2_with_beta2(coeffs, beta_coefficient(2).expect("even index"))
}

/// Same assembly with an injectable `beta_2`, so tests can perturb the
/// coefficient and watch the cancellation degrade proportionally.
pub fn proj2_with_beta2(coeffs: &WaveCoefficients, beta2: f64) -> f64 {
    let s = lattice_sums(coeffs);
    let scale = (coeffs.circle.energy() / 2.0).sqrt();
    let a00 = alpha_coefficient(0, 0);
    let a20 = alpha_coefficient(2, 0);
    let a02 = alpha_coefficient(0, 2);
    let b0 = beta_coefficient(0).expect("even index");
    scale
        * (a00 * beta2 / 2.0 * s.h2_t()
            + a20 * b0 / 2.0 * s.h2_d(1)
            + a02 * b0 / 2.0 * s.h2_d(2))
}

/// Second-chaos projection of the length of the level set `{ T_n = u }`:
///
/// ```text
/// L_u[2] = sqrt(E/2) * sqrt(pi/8) * gauss(u) * u^2 * (1/N) sum_Lambda (|a|^2 - 1),
/// ```
///
/// nonzero for `u != 0` because the Berry cancellation is specific to the
/// nodal level.
pub fn proj2_level(coeffs: &WaveCoefficients, u: f64) -> f64 {
    let s = lattice_sums(coeffs);
    let scale = (coeffs.circle.energy() / 2.0).sqrt();
    let gauss_u = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    scale * (std::f64::consts::PI / 8.0).sqrt() * gauss_u * u * u * s.h2_t()
}

/// Fourth-chaos projection from the exact lattice sums.
pub fn proj4_exact(coeffs: &WaveCoefficients) -> f64 {
    let s = lattice_sums(coeffs);
    let scale = (coeffs.circle.energy() / 2.0).sqrt();
    let b0 = beta_coefficient(0).expect("even index");
    let b2 = beta_coefficient(2).expect("even index");
    let b4 = beta_coefficient(4).expect("even index");
    let term = |a: usize, b: usize, triple, w: f64, beta: f64| -> f64 {
        alpha_coefficient(a, b) * beta / w * s.integral(triple).expect("supported triple")
    };
    scale
        * (term(0, 0, (4, 0, 0), 24.0, b4)
            + term(4, 0, (0, 4, 0), 24.0, b0)
            + term(0, 4, (0, 0, 4), 24.0, b0)
            + term(2, 0, (2, 2, 0), 4.0, b2)
            + term(0, 2, (2, 0, 2), 4.0, b2)
            + term(2, 2, (0, 2, 2), 4.0, b0))
}

/// The normalized spectral statistics driving the fourth chaos:
///
/// ```text
/// W_k = (1 / (n sqrt(N/2))) * sum_{half} (|a_lambda|^2 - 1)
///       * (n, lambda_1^2, lambda_2^2, lambda_1 lambda_2)_k,
/// ```
///
/// with `W_2 + W_3 = W_1` identically since `lambda_1^2 + lambda_2^2 = n`.
pub fn w_vector(coeffs: &WaveCoefficients) -> [f64; 4] {
    let n = coeffs.circle.n as f64;
    let norm = 1.0 / (n * (coeffs.circle.cardinality as f64 / 2.0).sqrt());
    let mut w = [0.0; 4];
    for (&(l1, l2), a) in coeffs.circle.half_points.iter().zip(&coeffs.coeffs) {
        let centred = a.norm_sqr() - 1.0;
        let (u, v) = (l1 as f64, l2 as f64);
        w[0] += centred * n;
        w[1] += centred * u * u;
        w[2] += centred * v * v;
        w[3] += centred * u * v;
    }
    for entry in &mut w {
        *entry *= norm;
    }
    w
}

/// Large-`N` form of the fourth projection,
/// `sqrt(E / (512 N^2)) * (1 + W_1^2 - 2 W_2^2 - 2 W_3^2 - 4 W_4^2)`.
/// It differs from [`proj4_exact`] per sample by exactly
/// `sqrt(E / (512 N^2)) * (sum_Lambda |a|^4 / (2N) - 1)`, a diagonal term
/// whose mean vanishes and whose spread decays like `sqrt(10 / N)`.
pub fn proj4_asymptotic(coeffs: &WaveCoefficients) -> f64 {
    let w = w_vector(coeffs);
    let nn = coeffs.circle.cardinality as f64;
    let v = (coeffs.circle.energy() / (512.0 * nn * nn)).sqrt();
    v * (1.0 + w[0] * w[0] - 2.0 * w[1] * w[1] - 2.0 * w[2] * w[2] - 4.0 * w[3] * w[3])
}

/// Chaos projection of order `2q` by plain grid quadrature. Exact (up to
/// rounding) once `M >= 4 q ceil(sqrt(n)) + 1`, since the integrand is a
/// trigonometric polynomial of degree `2q sqrt(n)` in each coordinate.
pub fn proj_quadrature(coeffs: &WaveCoefficients, q: usize, m: usize) -> Result<f64, ChaosError> {
    if q < 2 {
        return Err(ChaosError::OrderTooLow(q));
    }
    let n = coeffs.circle.n;
    let min = 4 * q * ceil_sqrt(n) as usize + 1;
    if m < min {
        return Err(ChaosError::ResolutionTooLow { n, q, m, min });
    }
    let grid = evaluate_grid(coeffs, m).expect("resolution already checked");
    let factorial = |k: usize| -> f64 { (1..=k).map(|j| j as f64).product::<f64>().max(1.0) };
    let mut total = 0.0;
    for u in 0..=q {
        for k in 0..=u {
            let (a, b, c) = (2 * q - 2 * u, 2 * k, 2 * u - 2 * k);
            let coeff = alpha_coefficient(b, c) * beta_coefficient(a).expect("even index")
                / (factorial(a) * factorial(b) * factorial(c));
            if coeff == 0.0 {
                continue;
            }
            let mut mean = 0.0;
            for idx in 0..m * m {
                mean += hermite(a, grid.values[idx])
                    * hermite(b, grid.grad1[idx])
                    * hermite(c, grid.grad2[idx]);
            }
            total += coeff * mean / (m * m) as f64;
        }
    }
    Ok((coeffs.circle.energy() / 2.0).sqrt() * total)
}

/// Census of the spectral quadruples `S_n(4) = { (l, m, n, r) in Lambda^4 :
/// l + m + n + r = 0 }`, by brute force.
#[derive(Debug, Clone, Serialize)]
pub struct S4Structure {
    pub cardinality: u64,
    /// Tuples supported on a single antipodal pair `{p, -p}`.
    pub degenerate_count: u64,
    pub sample_tuples: Vec<[(i64, i64); 4]>,
}

/// Enumerate `S_n(4)` and verify that every quadruple splits into two
/// antipodal pairs. Cubic in `N`, so circles beyond `N = 256` are refused.
pub fn s4_structure(circle: &LatticeCircle) -> Result<S4Structure, ChaosError> {
    let nn = circle.cardinality;
    if nn > 256 {
        return Err(ChaosError::CircleTooLarge(nn));
    }
    let set: HashSet<(i64, i64)> = circle.points.iter().copied().collect();
    let mut cardinality = 0u64;
    let mut degenerate = 0u64;
    let mut samples = Vec::new();
    for &l in &circle.points {
        for &m in &circle.points {
            for &nu in &circle.points {
                let rho = (-(l.0 + m.0 + nu.0), -(l.1 + m.1 + nu.1));
                if !set.contains(&rho) {
                    continue;
                }
                let pairs = (m == (-l.0, -l.1) && rho == (-nu.0, -nu.1))
                    || (nu == (-l.0, -l.1) && rho == (-m.0, -m.1))
                    || (rho == (-l.0, -l.1) && nu == (-m.0, -m.1));
                assert!(pairs, "quadruple {l:?},{m:?},{nu:?},{rho:?} has no pair split");
                cardinality += 1;
                let anti = (-l.0, -l.1);
                let on_one_pair = [m, nu, rho].iter().all(|&p| p == l || p == anti);
                if on_one_pair {
                    degenerate += 1;
                }
                if samples.len() < 12 {
                    samples.push([l, m, nu, rho]);
                }
            }
        }
    }
    Ok(S4Structure { cardinality, degenerate_count: degenerate, sample_tuples: samples })
}

/// All chaos statistics of one realization in a single pass.
#[derive(Debug, Clone)]
pub struct ChaosReport {
    pub w: [f64; 4],
    pub proj2: f64,
    pub proj4: f64,
    pub hermite_integrals: BTreeMap<(usize, usize, usize), f64>,
    /// `|S_n(4)| = 3 N (N - 1)`, the closed form verified by [`s4_structure`].
    pub s4_cardinality: u64,
}

impl ChaosReport {
    pub fn compute(coeffs: &WaveCoefficients) -> Self {
        let sums = lattice_sums(coeffs);
        let mut integrals = BTreeMap::new();
        for triple in [(4, 0, 0), (0, 4, 0), (0, 0, 4), (2, 2, 0), (2, 0, 2), (0, 2, 2)] {
            integrals.insert(triple, sums.integral(triple).expect("supported triple"));
        }
        let nn = coeffs.circle.cardinality as u64;
        ChaosReport {
            w: w_vector(coeffs),
            proj2: proj2(coeffs),
            proj4: proj4_exact(coeffs),
            hermite_integrals: integrals,
            s4_cardinality: 3 * nn * (nn - 1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample_replication;
    use crate::lattice::enumerate_circle;

    #[test]
    fn degenerate_realization_golden_values() {
        let circle = enumerate_circle(5).unwrap();
        let coeffs = WaveCoefficients::unit(circle);
        let i400 = hermite_integral(&coeffs, (4, 0, 0)).unwrap();
        assert!((i400 + 3.0 / 8.0).abs() < 1e-13, "{i400}");
        let mu = coeffs.circle.mu4();
        let i040 = hermite_integral(&coeffs, (0, 4, 0)).unwrap();
        assert!((i040 + 3.0 * (3.0 + mu) / 16.0).abs() < 1e-13);
        let i022 = hermite_integral(&coeffs, (0, 2, 2)).unwrap();
        assert!((i022 + 3.0 * (1.0 - mu) / 16.0).abs() < 1e-13);
        let i220 = hermite_integral(&coeffs, (2, 2, 0)).unwrap();
        assert!((i220 + 1.0 / 8.0).abs() < 1e-13);

        // proj4 at unit moduli collapses to sqrt(E/2) / (32 N), independent
        // of mu_hat_n(4); at n = 5 that is pi sqrt(10) / 256.
        let p4 = proj4_exact(&coeffs);
        let want = std::f64::consts::PI * 10f64.sqrt() / 256.0;
        assert!((p4 - want).abs() < 1e-13, "{p4} vs {want}");
        assert_eq!(w_vector(&coeffs), [0.0; 4]);
        assert_eq!(proj2(&coeffs), 0.0);
        assert_eq!(proj2_level(&coeffs, 1.3), 0.0);
        // Asymptotic form at W = 0 is the bare prefactor.
        let v = (coeffs.circle.energy() / (512.0 * 64.0)).sqrt();
        assert!((proj4_asymptotic(&coeffs) - v).abs() < 1e-15);
    }

    #[test]
    fn proj2_vanishes_on_samples() {
        for n in [2u64, 5, 9, 25, 325, 1105] {
            let circle = enumerate_circle(n).unwrap();
            for rep in 0..20 {
                let coeffs = sample_replication(&circle, 77, rep);
                let p2 = proj2(&coeffs);
                assert!(p2.abs() < 1e-12, "n = {n}, rep {rep}: proj2 = {p2}");
            }
        }
    }

    #[test]
    fn perturbed_beta2_breaks_cancellation_linearly() {
        let circle = enumerate_circle(25).unwrap();
        let coeffs = sample_replication(&circle, 3, 0);
        let b2 = crate::hermite::beta_coefficient(2).unwrap();
        let delta = 1e-3;
        let broken = proj2_with_beta2(&coeffs, b2 + delta);
        // Only the alpha_00 beta_2 term moves, so the output is delta times
        // a known multiplier.
        let s2_term = hermite_integral_quadrature(&coeffs, (2, 0, 0), 21).unwrap();
        let expected = (coeffs.circle.energy() / 2.0).sqrt()
            * crate::hermite::alpha_coefficient(0, 0)
            * delta
            / 2.0
            * s2_term;
        assert!(
            (broken - expected).abs() <= 1e-12 + 1e-10 * expected.abs(),
            "{broken} vs {expected}"
        );
        assert!(broken.abs() > 1e-8, "perturbation should be visible");
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for n in [5u64, 25] {
            let circle = enumerate_circle(n).unwrap();
            let m = 8 * ceil_sqrt(n) as usize + 1;
            for rep in 0..5 {
                let coeffs = sample_replication(&circle, 13, rep);
                for triple in [(4, 0, 0), (0, 4, 0), (0, 0, 4), (2, 2, 0), (2, 0, 2), (0, 2, 2)] {
                    let exact = hermite_integral(&coeffs, triple).unwrap();
                    let quad = hermite_integral_quadrature(&coeffs, triple, m).unwrap();
                    assert!(
                        (exact - quad).abs() <= 1e-9,
                        "n={n} rep={rep} {triple:?}: {exact} vs {quad}"
                    );
                }
            }
        }
    }

    #[test]
    fn h2_integrals_match_quadrature() {
        let circle = enumerate_circle(25).unwrap();
        let coeffs = sample_replication(&circle, 5, 1);
        let s = lattice_sums(&coeffs);
        let m = 4 * 5 + 1;
        let q_t = hermite_integral_quadrature(&coeffs, (2, 0, 0), m).unwrap();
        let q_1 = hermite_integral_quadrature(&coeffs, (0, 2, 0), m).unwrap();
        let q_2 = hermite_integral_quadrature(&coeffs, (0, 0, 2), m).unwrap();
        assert!((s.h2_t() - q_t).abs() < 1e-10);
        assert!((s.h2_d(1) - q_1).abs() < 1e-10);
        assert!((s.h2_d(2) - q_2).abs() < 1e-10);
    }

    #[test]
    fn unsupported_triples_are_rejected() {
        let circle = enumerate_circle(5).unwrap();
        let coeffs = sample_replication(&circle, 1, 0);
        for bad in [(2, 0, 0), (6, 0, 0), (1, 2, 1), (0, 0, 0)] {
            assert_eq!(
                hermite_integral(&coeffs, bad).unwrap_err(),
                ChaosError::UnsupportedTriple(bad.0, bad.1, bad.2)
            );
        }
    }

    #[test]
    fn w_identity_and_normalization() {
        for n in [5u64, 25, 325] {
            let circle = enumerate_circle(n).unwrap();
            for rep in 0..10 {
                let coeffs = sample_replication(&circle, 19, rep);
                let w = w_vector(&coeffs);
                assert!(
                    (w[1] + w[2] - w[0]).abs() <= 1e-12 * w[0].abs().max(1.0),
                    "n={n}: {w:?}"
                );
            }
        }
    }

    #[test]
    fn exact_minus_asymptotic_is_the_diagonal_term() {
        for n in [5u64, 25, 325] {
            let circle = enumerate_circle(n).unwrap();
            let nn = circle.cardinality as f64;
            for rep in 0..10 {
                let coeffs = sample_replication(&circle, 29, rep);
                let s = lattice_sums(&coeffs);
                let v = (circle.energy() / (512.0 * nn * nn)).sqrt();
                let predicted_gap = v * (s.s4 / (2.0 * nn) - 1.0);
                let gap = proj4_exact(&coeffs) - proj4_asymptotic(&coeffs);
                let tol = 1e-12 * (1.0 + circle.energy().sqrt());
                assert!(
                    (gap - predicted_gap).abs() <= tol,
                    "n={n} rep={rep}: {gap} vs {predicted_gap}"
                );
            }
        }
    }

    #[test]
    fn quadrature_projection_agrees_with_exact_fourth_chaos() {
        let circle = enumerate_circle(25).unwrap();
        let min = 4 * 2 * 5 + 1;
        for rep in 0..3 {
            let coeffs = sample_replication(&circle, 7, rep);
            let quad = proj_quadrature(&coeffs, 2, min).unwrap();
            let exact = proj4_exact(&coeffs);
            assert!((quad - exact).abs() <= 1e-8, "rep {rep}: {quad} vs {exact}");
        }
    }

    #[test]
    fn quadrature_projection_preconditions() {
        let circle = enumerate_circle(25).unwrap();
        let coeffs = sample_replication(&circle, 7, 0);
        assert_eq!(proj_quadrature(&coeffs, 1, 100).unwrap_err(), ChaosError::OrderTooLow(1));
        assert!(matches!(
            proj_quadrature(&coeffs, 2, 40).unwrap_err(),
            ChaosError::ResolutionTooLow { min: 41, .. }
        ));
    }

    #[test]
    fn s4_census_examples() {
        let c1 = enumerate_circle(1).unwrap();
        let s1 = s4_structure(&c1).unwrap();
        assert_eq!(s1.cardinality, 36);
        assert_eq!(s1.degenerate_count, 3 * 4);
        let c5 = enumerate_circle(5).unwrap();
        let s5 = s4_structure(&c5).unwrap();
        assert_eq!(s5.cardinality, 168);
        assert_eq!(s5.degenerate_count, 3 * 8);
        assert_eq!(s5.sample_tuples.len(), 12);
        for n in [25u64, 325] {
            let c = enumerate_circle(n).unwrap();
            let s = s4_structure(&c).unwrap();
            let nn = c.cardinality as u64;
            assert_eq!(s.cardinality, 3 * nn * (nn - 1));
        }
    }

    #[test]
    fn s4_refuses_giant_circles() {
        // Seven distinct primes = 1 mod 4 give N = 512.
        let n = 5u64 * 13 * 17 * 29 * 37 * 41 * 53;
        let c = enumerate_circle(n).unwrap();
        assert_eq!(c.cardinality, 512);
        assert_eq!(s4_structure(&c).unwrap_err(), ChaosError::CircleTooLarge(512));
    }

    #[test]
    fn chaos_report_is_internally_consistent() {
        let circle = enumerate_circle(25).unwrap();
        let coeffs = sample_replication(&circle, 21, 4);
        let report = ChaosReport::compute(&coeffs);
        assert_eq!(report.proj4, proj4_exact(&coeffs));
        assert_eq!(report.proj2, proj2(&coeffs));
        assert_eq!(report.w, w_vector(&coeffs));
        assert_eq!(report.s4_cardinality, 3 * 12 * 11);
        assert_eq!(report.hermite_integrals.len(), 6);
        assert_eq!(
            report.hermite_integrals[&(4, 0, 0)],
            hermite_integral(&coeffs, (4, 0, 0)).unwrap()
        );
    }

    #[test]
    fn proj2_level_scaling() {
        let circle = enumerate_circle(25).unwrap();
        let coeffs = sample_replication(&circle, 2, 0);
        assert_eq!(proj2_level(&coeffs, 0.0), 0.0);
        // Known shape in u: gauss(u) u^2 against the same lattice sum.
        let base = proj2_level(&coeffs, 1.0);
        let at2 = proj2_level(&coeffs, 2.0);
        let ratio = (at2 / base) - (4.0 * (-2.0f64).exp()) / (1.0 * (-0.5f64).exp());
        assert!(ratio.abs() < 1e-12, "u-shape off by {ratio}");
    }

    #[test]
    fn proj2_level_variance_constant() {
        // Var(L_n[2](u)) = exp(-u^2) u^4 / 16 * E_n / N_n: the level-u second
        // chaos is c(u) (S/N - 1) with c(u) = sqrt(E/2) sqrt(pi/8) gauss(u) u^2
        // and Var(S/N - 1) = 2/N, which assembles to the 1/16 constant.
        let circle = enumerate_circle(325).unwrap();
        let r = 100_000u64;
        let samples: Vec<f64> = (0..r)
            .map(|rep| proj2_level(&sample_replication(&circle, 19, rep), 1.0))
            .collect();
        let mean = samples.iter().sum::<f64>() / r as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (r as f64 - 1.0);
        let predicted =
            (-1.0f64).exp() / 16.0 * circle.energy() / circle.cardinality as f64;
        let ratio = var / predicted;
        assert!((ratio - 1.0).abs() < 0.04, "variance ratio {ratio}");
    }
}
