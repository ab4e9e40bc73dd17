//! Level-set length estimators for sampled waves.
//!
//! Two estimators of `length({ T_n = u })` on the unit torus:
//!
//! * marching squares on the `M x M` grid: each cell contributes the
//!   straight segments of the linearly interpolated level set, with the
//!   saddle configurations (two opposite corners above the level)
//!   disambiguated by the sign of the cell-center average, the value the
//!   bilinear interpolant takes at the center;
//! * a smoothed band (co-area) estimate at `u = 0`,
//!
//!   ```text
//!   (1 / (2 eps)) * (1 / M^2) * sum_{grid} 1_{|T| <= eps} ||grad T||,
//!   ```
//!
//!   which converges to the nodal length as `eps -> 0` after the grid
//!   resolves the band. `||grad T||` is exact up to rounding here, so the
//!   deterministic bound `length <= 12 sqrt(E_n)` should never trip; it is
//!   checked anyway and reported as an error rather than a silent clamp.
//!
//! Both estimators stream the grid two rows at a time, so memory stays
//! `O(M)` per realization even for the large grids used at high energy.

use serde::Serialize;
use thiserror::Error;

use crate::field::{evaluate_grid, FieldError, FieldGrid, GridSynth, WaveCoefficients};
use crate::lattice::ceil_sqrt;

#[derive(Debug, Error, PartialEq)]
pub enum NodalError {
    #[error("band estimate {value} exceeds the deterministic bound {bound}")]
    BoundViolation { value: f64, bound: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthMethod {
    MarchingSquares,
    EpsBand,
}

/// A length measurement together with how it was produced.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LengthEstimate {
    pub value: f64,
    pub method: LengthMethod,
    pub resolution: usize,
    pub eps: Option<f64>,
}

/// Default grid resolution `16 ceil(sqrt(n))` for length work at index `n`.
pub fn default_resolution(n: u64) -> usize {
    16 * ceil_sqrt(n) as usize
}

/// Coarsest resolution accepted by the band estimator.
pub fn band_min_resolution(n: u64) -> usize {
    8 * ceil_sqrt(n) as usize
}

#[inline]
fn segment(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let (dx, dy) = (x1 - x0, y1 - y0);
    (dx * dx + dy * dy).sqrt()
}

/// Level-set length inside one grid cell with corner values
/// `a = T(i, j)`, `b = T(i+1, j)`, `c = T(i, j+1)`, `d = T(i+1, j+1)`,
/// placed at local coordinates `(0,0)`, `(h,0)`, `(0,h)`, `(h,h)`.
#[inline]
pub(crate) fn cell_length(a: f64, b: f64, c: f64, d: f64, u: f64, h: f64) -> f64 {
    let mask = (a > u) as usize | ((b > u) as usize) << 1 | ((c > u) as usize) << 2
        | ((d > u) as usize) << 3;
    if mask == 0 || mask == 15 {
        return 0.0;
    }
    // Crossing offsets along each cell edge, valid only when that edge
    // actually changes side (guaranteed nonzero denominators below).
    let bottom = || h * (u - a) / (b - a);
    let top = || h * (u - c) / (d - c);
    let left = || h * (u - a) / (c - a);
    let right = || h * (u - b) / (d - b);
    match mask {
        1 | 14 => segment(bottom(), 0.0, 0.0, left()),
        2 | 13 => segment(bottom(), 0.0, h, right()),
        4 | 11 => segment(top(), h, 0.0, left()),
        8 | 7 => segment(top(), h, h, right()),
        3 | 12 => segment(0.0, left(), h, right()),
        5 | 10 => segment(bottom(), 0.0, top(), h),
        6 | 9 => {
            let center_above = (a + b + c + d) / 4.0 > u;
            if center_above != (mask == 6) {
                segment(bottom(), 0.0, h, right()) + segment(0.0, left(), top(), h)
            } else {
                segment(bottom(), 0.0, 0.0, left()) + segment(top(), h, h, right())
            }
        }
        _ => unreachable!(),
    }
}

/// Marching-squares length of `{ T_n = u }` from a fully materialized grid.
pub fn nodal_length_ms(grid: &FieldGrid, u: f64) -> LengthEstimate {
    let m = grid.resolution;
    let h = 1.0 / m as f64;
    let mut total = 0.0;
    for i in 0..m {
        let inext = if i + 1 == m { 0 } else { i + 1 };
        for j in 0..m {
            let jnext = if j + 1 == m { 0 } else { j + 1 };
            total += cell_length(
                grid.values[i * m + j],
                grid.values[inext * m + j],
                grid.values[i * m + jnext],
                grid.values[inext * m + jnext],
                u,
                h,
            );
        }
    }
    LengthEstimate { value: total, method: LengthMethod::MarchingSquares, resolution: m, eps: None }
}

/// Marching squares without materializing the grid: rows are synthesized in
/// a rolling pair of buffers. Produces bit-identical results to
/// [`nodal_length_ms`] on the same realization and resolution.
pub fn nodal_length_ms_streaming(
    coeffs: &WaveCoefficients,
    m: usize,
    u: f64,
) -> Result<LengthEstimate, FieldError> {
    let min = crate::field::min_resolution(coeffs.circle.n);
    if m < min {
        return Err(FieldError::ResolutionTooLow { n: coeffs.circle.n, m, min });
    }
    let synth = GridSynth::new(coeffs, m);
    let mut row0 = vec![0.0; m];
    synth.fill_row_values(0, &mut row0);
    let mut cur = row0.clone();
    let mut next = vec![0.0; m];
    let h = 1.0 / m as f64;
    let mut total = 0.0;
    for i in 0..m {
        if i + 1 < m {
            synth.fill_row_values(i + 1, &mut next);
        } else {
            next.copy_from_slice(&row0);
        }
        for j in 0..m {
            let jnext = if j + 1 == m { 0 } else { j + 1 };
            total += cell_length(cur[j], next[j], cur[jnext], next[jnext], u, h);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(LengthEstimate { value: total, method: LengthMethod::MarchingSquares, resolution: m, eps: None })
}

/// Smoothed nodal-length estimate through the band `{ |T_n| <= eps }`.
/// Requires `eps > 0` and `M >= 8 ceil(sqrt(n))` so the band is resolved.
pub fn band_length(
    coeffs: &WaveCoefficients,
    eps: f64,
    m: usize,
) -> Result<LengthEstimate, NodalError> {
    assert!(eps > 0.0 && eps.is_finite(), "band half-width must be positive");
    assert!(
        m >= band_min_resolution(coeffs.circle.n),
        "band estimator needs M >= 8 ceil(sqrt(n))"
    );
    let synth = GridSynth::new(coeffs, m);
    let mut val = vec![0.0; m];
    let mut g1 = vec![0.0; m];
    let mut g2 = vec![0.0; m];
    // ||grad T|| = sqrt(E_n / 2) * ||(dtilde_1, dtilde_2)||.
    let grad_norm = (coeffs.circle.energy() / 2.0).sqrt();
    let mut total = 0.0;
    for i in 0..m {
        synth.fill_row_full(i, &mut val, &mut g1, &mut g2);
        for j in 0..m {
            if val[j].abs() <= eps {
                total += (g1[j] * g1[j] + g2[j] * g2[j]).sqrt();
            }
        }
    }
    let value = grad_norm * total / (2.0 * eps * (m * m) as f64);
    let bound = 12.0 * coeffs.circle.energy().sqrt();
    if value > bound {
        return Err(NodalError::BoundViolation { value, bound });
    }
    Ok(LengthEstimate { value, method: LengthMethod::EpsBand, resolution: m, eps: Some(eps) })
}

/// Convenience wrapper: marching squares at the default resolution.
pub fn nodal_length_default(coeffs: &WaveCoefficients, u: f64) -> LengthEstimate {
    let m = default_resolution(coeffs.circle.n);
    let grid = evaluate_grid(coeffs, m).expect("default resolution is admissible");
    nodal_length_ms(&grid, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{evaluate_grid, sample_replication, WaveCoefficients};
    use crate::lattice::enumerate_circle;
    use num_complex::Complex64;

    fn planar_wave() -> WaveCoefficients {
        let circle = enumerate_circle(1).unwrap();
        let coeffs = circle
            .half_points
            .iter()
            .map(|&p| {
                if p == (1, 0) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        WaveCoefficients::from_half_coefficients(circle, coeffs)
    }

    #[test]
    fn constant_grid_has_no_level_set() {
        let m = 12;
        let grid = FieldGrid {
            resolution: m,
            values: vec![0.7; m * m],
            grad1: vec![0.0; m * m],
            grad2: vec![0.0; m * m],
        };
        let est = nodal_length_ms(&grid, 0.0);
        assert_eq!(est.value, 0.0);
        assert_eq!(est.method, LengthMethod::MarchingSquares);
    }

    #[test]
    fn planar_wave_nodal_length_is_two() {
        let coeffs = planar_wave();
        for m in [16usize, 32, 50] {
            let grid = evaluate_grid(&coeffs, m).unwrap();
            let est = nodal_length_ms(&grid, 0.0);
            assert!(
                (est.value - 2.0).abs() <= 2.0 / m as f64,
                "M = {m}: length {}",
                est.value
            );
        }
    }

    #[test]
    fn streaming_matches_materialized_grid_exactly() {
        let circle = enumerate_circle(25).unwrap();
        let coeffs = sample_replication(&circle, 17, 2);
        for &u in &[0.0, 0.4] {
            let grid = evaluate_grid(&coeffs, 48).unwrap();
            let a = nodal_length_ms(&grid, u);
            let b = nodal_length_ms_streaming(&coeffs, 48, u).unwrap();
            assert_eq!(a.value, b.value, "u = {u}");
        }
    }

    #[test]
    fn streaming_rejects_low_resolution() {
        let circle = enumerate_circle(25).unwrap();
        let coeffs = sample_replication(&circle, 1, 0);
        assert!(nodal_length_ms_streaming(&coeffs, 10, 0.0).is_err());
    }

    #[test]
    fn refinement_changes_length_little() {
        let circle = enumerate_circle(25).unwrap();
        for rep in 0..3 {
            let coeffs = sample_replication(&circle, 23, rep);
            let coarse = nodal_length_ms_streaming(&coeffs, 40, 0.0).unwrap().value;
            let fine = nodal_length_ms_streaming(&coeffs, 80, 0.0).unwrap().value;
            assert!(
                (coarse - fine).abs() <= 0.01 * fine,
                "rep {rep}: {coarse} vs {fine}"
            );
        }
    }

    #[test]
    fn band_estimate_tracks_marching_squares() {
        // The band has typical width 2 eps / ||grad T|| ~ 2 eps / sqrt(E_n),
        // so the grid must resolve it: with eps = 0.1 at n = 25 the strip is
        // about 0.007 wide and M = 640 puts four to five cells across it.
        let circle = enumerate_circle(25).unwrap();
        let m = 640;
        for rep in 0..3 {
            let coeffs = sample_replication(&circle, 31, rep);
            let ms = nodal_length_ms_streaming(&coeffs, m, 0.0).unwrap().value;
            let band = band_length(&coeffs, 0.1, m).unwrap();
            assert_eq!(band.method, LengthMethod::EpsBand);
            assert_eq!(band.eps, Some(0.1));
            assert!(
                (band.value - ms).abs() <= 0.05 * ms,
                "rep {rep}: band {} vs ms {ms}",
                band.value
            );
        }
    }

    #[test]
    fn wide_band_underestimates() {
        let circle = enumerate_circle(25).unwrap();
        let coeffs = sample_replication(&circle, 31, 0);
        let ms = nodal_length_ms_streaming(&coeffs, 80, 0.0).unwrap().value;
        let wide = band_length(&coeffs, 5.0, 80).unwrap().value;
        assert!(wide < 0.5 * ms, "wide band {wide} vs ms {ms}");
    }

    #[test]
    fn translation_leaves_length_nearly_fixed() {
        let circle = enumerate_circle(25).unwrap();
        let coeffs = sample_replication(&circle, 41, 1);
        let base = nodal_length_ms_streaming(&coeffs, 80, 0.0).unwrap().value;
        for shift in [[0.31, 0.17], [0.05, 0.83]] {
            let moved = nodal_length_ms_streaming(&coeffs.translated(shift), 80, 0.0)
                .unwrap()
                .value;
            assert!(
                (moved - base).abs() <= 0.01 * base,
                "shift {shift:?}: {moved} vs {base}"
            );
        }
    }

    #[test]
    fn saddle_cells_count_both_segments() {
        // A hand-built saddle: corners a, d above, b, c below, center below.
        let len = cell_length(1.0, -1.0, -1.0, 0.5, 0.0, 1.0);
        // Two segments hug the positive corners a and d.
        let expect = segment(0.5, 0.0, 0.0, 0.5) + segment(2.0 / 3.0, 1.0, 1.0, 2.0 / 3.0);
        assert!((len - expect).abs() < 1e-14);
        // Raising the center flips the connection.
        let len_hi = cell_length(1.0, -0.2, -0.2, 1.0, 0.0, 1.0);
        let t = 1.0 / 1.2;
        let expect_hi = segment(t, 0.0, 1.0, 1.0 - t) + segment(0.0, t, 1.0 - t, 1.0);
        assert!((len_hi - expect_hi).abs() < 1e-14);
    }
}
