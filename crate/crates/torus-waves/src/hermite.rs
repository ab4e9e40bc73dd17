//! Probabilists' Hermite polynomials and the chaos coefficients of nodal
//! length.
//!
//! The length functional factors through two families of Hermite
//! coefficients. Writing `gauss(t)` for the standard normal density and
//! `H_k` for the probabilists' polynomials (`H_0 = 1`, `H_1 = t`,
//! `H_k = t H_{k-1} - (k-1) H_{k-2}`):
//!
//! * `beta_l = H_l(0) * gauss(0)` are the formal Hermite coefficients of the
//!   Dirac delta at zero, so `beta_l = 0` for odd `l` and
//!   `beta_{2l} = H_{2l}(0) / sqrt(2 pi)`.
//! * `alpha_{a,b} = E[ ||V|| H_a(V_1) H_b(V_2) ]` for a standard Gaussian
//!   pair `V`, nonzero only for `a, b` both even, with the closed form
//!
//!   ```text
//!   alpha_{2n,2m} = sqrt(pi/2) * ((2n)! (2m)!) / (n! m!) * 2^{-(n+m)}
//!                   * p_{n+m}(1/4),
//!   p_N(x) = sum_{j=0}^N (-1)^j (-1)^N binom(N, j) ((2j+1)! / (j!)^2) x^j,
//!   ```
//!
//!   evaluated in exact rational arithmetic before the single `sqrt(pi/2)`
//!   rounding. That keeps identities such as `2 alpha_{0,2} = alpha_{0,0}`
//!   exact in floating point, and with them the second-chaos cancellation
//!   `alpha_{0,0} beta_2 + 2 alpha_{0,2} beta_0 = 0`.
//!
//! `beta_eps` gives the band-smoothed variants: the Hermite coefficients of
//! the normalized indicator `1_{[-eps, eps]} / (2 eps)`, which converge to
//! `beta_l` as `eps -> 0`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::quad;

#[derive(Debug, Error, PartialEq)]
pub enum HermiteError {
    #[error("beta_{0} is defined for even indices only")]
    OddIndex(usize),
}

/// Probabilists' Hermite polynomial `H_k(t)` by the three-term recurrence.
pub fn hermite(k: usize, t: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => t,
        _ => {
            let (mut prev, mut cur) = (1.0, t);
            for j in 2..=k {
                let next = t * cur - (j as f64 - 1.0) * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `H_l(0)`: zero for odd `l`, `(-1)^m (2m - 1)!!` for `l = 2m`. Exact in
/// `f64` as long as the double factorial stays below `2^53`.
pub fn hermite_at_zero(l: usize) -> f64 {
    if l % 2 == 1 {
        return 0.0;
    }
    let mut h = 1.0f64;
    let mut j = 2usize;
    while j <= l {
        h *= -(j as f64 - 1.0);
        j += 2;
    }
    h
}

fn inv_sqrt_2pi() -> f64 {
    (2.0 * std::f64::consts::PI).sqrt().recip()
}

/// `beta_l = H_l(0) / sqrt(2 pi)` for even `l`; odd indices are rejected
/// rather than silently zeroed because they never enter the expansion.
pub fn beta_coefficient(l: usize) -> Result<f64, HermiteError> {
    if l % 2 == 1 {
        return Err(HermiteError::OddIndex(l));
    }
    Ok(hermite_at_zero(l) * inv_sqrt_2pi())
}

/// Hermite coefficients of the normalized band indicator
/// `1_{[-eps, eps]} / (2 eps)`:
///
/// ```text
/// beta_0(eps)  = (1 / (2 eps)) * integral_{-eps}^{eps} gauss(t) dt,
/// beta_l(eps)  = -(1 / (2 eps)) * gauss(eps) * (H_{l-1}(eps) - H_{l-1}(-eps)),  l >= 1,
/// ```
///
/// which vanishes for odd `l` and tends to `beta_l` as `eps -> 0`.
pub fn beta_eps(l: usize, eps: f64) -> f64 {
    assert!(eps > 0.0 && eps.is_finite(), "band half-width must be positive");
    if l % 2 == 1 {
        return 0.0;
    }
    if l == 0 {
        // The Gaussian tail beyond 12 is below 2e-33, irrelevant at f64 scale.
        let upper = eps.min(12.0);
        let rule = quad::gauss_legendre(16);
        let breaks: Vec<f64> = (0..=8).map(|k| upper * k as f64 / 8.0).collect();
        let gauss = |t: f64| (-0.5 * t * t).exp() * inv_sqrt_2pi();
        return quad::integrate_panels(&gauss, &breaks, &rule) / eps;
    }
    let gauss_eps = (-0.5 * eps * eps).exp() * inv_sqrt_2pi();
    -(0.5 / eps) * gauss_eps * (hermite(l - 1, eps) - hermite(l - 1, -eps))
}

fn factorial(k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for j in 2..=k {
        acc *= BigInt::from(j);
    }
    acc
}

fn binomial(n: usize, k: usize) -> BigInt {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `p_N(x)` from the module docs, exact over the rationals.
fn p_polynomial(big_n: usize, x: &BigRational) -> BigRational {
    let mut sum = BigRational::zero();
    let mut x_pow = BigRational::one();
    for j in 0..=big_n {
        let s = factorial(2 * j + 1) / (factorial(j) * factorial(j));
        let mut term = BigRational::from(binomial(big_n, j) * s) * &x_pow;
        if (j + big_n) % 2 == 1 {
            term = -term;
        }
        sum += term;
        x_pow *= x;
    }
    sum
}

/// Exact rational part of `alpha_{a,b}`, i.e. `alpha_{a,b} / sqrt(pi/2)`.
pub(crate) fn alpha_rational(a: usize, b: usize) -> BigRational {
    assert!(a.is_multiple_of(2) && b.is_multiple_of(2), "alpha indices must be even");
    let (n, m) = (a / 2, b / 2);
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    let combinatorial = BigRational::from(factorial(a) * factorial(b))
        / BigRational::from(factorial(n) * factorial(m));
    let scale = BigRational::new(BigInt::one(), BigInt::from(2u8).pow((n + m) as u32));
    combinatorial * scale * p_polynomial(n + m, &quarter)
}

/// `alpha_{a,b} = E[ ||V|| H_a(V_1) H_b(V_2) ]` via the exact closed form.
/// Requires `a`, `b` even; supported comfortably up to `a + b = 64`.
pub fn alpha_coefficient(a: usize, b: usize) -> f64 {
    assert!(a + b <= 64, "alpha closed form capped at total order 64");
    let rational = alpha_rational(a, b).to_f64().expect("alpha rational in f64 range");
    (std::f64::consts::PI / 2.0).sqrt() * rational
}

/// Independent quadrature oracle for `alpha_{a,b}`: the defining Gaussian
/// integral on `[0, 12]^2` (unfolded by even symmetry), with panels refined
/// geometrically toward the Lipschitz corner of `||v||` at the origin.
/// Absolute accuracy around 1e-12, far inside the 1e-8 target.
pub fn alpha_quadrature_oracle(a: usize, b: usize) -> f64 {
    assert!(a.is_multiple_of(2) && b.is_multiple_of(2), "alpha indices must be even");
    assert!(a + b <= 12, "oracle is tuned for total order <= 12");
    let rule = quad::gauss_legendre(16);
    let breaks = quad::geometric_breaks(12.0, 24);
    let axis = |order: usize| -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for w in breaks.windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[0] + w[1]);
            for (x, wt) in rule.0.iter().zip(&rule.1) {
                let t = mid + half * x;
                xs.push(t);
                ws.push(half * wt * hermite(order, t) * (-0.5 * t * t).exp() * inv_sqrt_2pi());
            }
        }
        (xs, ws)
    };
    let (ya, wa) = axis(a);
    let (yb, wb) = axis(b);
    let mut sum = 0.0;
    for (yi, wi) in ya.iter().zip(&wa) {
        let mut inner = 0.0;
        for (zj, wj) in yb.iter().zip(&wb) {
            inner += wj * (yi * yi + zj * zj).sqrt();
        }
        sum += wi * inner;
    }
    4.0 * sum
}

/// All `alpha` and `beta` coefficients needed for chaos projections up to
/// order `2 * max_order`.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    /// `alpha_{a,b}` for even `a, b` with `a + b <= 2 * max_order`.
    pub alpha: std::collections::BTreeMap<(usize, usize), f64>,
    /// `beta_l` for even `l <= 2 * max_order`.
    pub beta: std::collections::BTreeMap<usize, f64>,
    pub max_order: usize,
}

impl CoefficientTable {
    pub fn build(max_order: usize) -> Self {
        let top = 2 * max_order;
        let mut alpha = std::collections::BTreeMap::new();
        let mut beta = std::collections::BTreeMap::new();
        for l in (0..=top).step_by(2) {
            beta.insert(l, beta_coefficient(l).expect("even index"));
        }
        for a in (0..=top).step_by(2) {
            for b in (0..=(top - a)).step_by(2) {
                alpha.insert((a, b), alpha_coefficient(a, b));
            }
        }
        CoefficientTable { alpha, beta, max_order }
    }
}
