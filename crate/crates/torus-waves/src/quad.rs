//! Gauss-Legendre quadrature with composite panels.
//!
//! Used for the one-dimensional band-coefficient integrals and as the
//! independent oracle for the closed-form `alpha` coefficients, where the
//! integrand `|y| H_a H_b gauss` is smooth away from the origin but only
//! Lipschitz at it; geometric panel refinement toward the singular point
//! restores spectral accuracy.

/// Nodes and weights of the `m`-point Gauss-Legendre rule on `[-1, 1]`,
/// found by Newton iteration on Legendre polynomials from the Chebyshev
/// initial guess.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_m and P_m' by the three-term recurrence.
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Integrate `f` over `[a, b]` with a single mapped Gauss-Legendre panel.
pub fn integrate_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (nodes, weights) = rule;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        sum += w * f(mid + half * x);
    }
    half * sum
}

/// Integrate `f` over consecutive panels delimited by `breaks`.
pub fn integrate_panels(
    f: &dyn Fn(f64) -> f64,
    breaks: &[f64],
    rule: &(Vec<f64>, Vec<f64>),
) -> f64 {
    breaks
        .windows(2)
        .map(|w| integrate_panel(f, w[0], w[1], rule))
        .sum()
}

/// Panel breakpoints on `[0, upper]` refined geometrically toward 0:
/// `0, upper * 2^{-levels}, ..., upper / 2, upper`.
pub fn geometric_breaks(upper: f64, levels: u32) -> Vec<f64> {
    let mut breaks = Vec::with_capacity(levels as usize + 2);
    breaks.push(0.0);
    for k in (0..=levels).rev() {
        breaks.push(upper * (0.5f64).powi(k as i32));
    }
    breaks
}
