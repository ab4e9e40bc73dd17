//! Monte Carlo sanity checks that tie sampled waves back to the model.

use torus_waves::chaos::proj4_exact;
use torus_waves::field::{covariance, evaluate, sample_replication};
use torus_waves::harness::mean_and_variance;
use torus_waves::lattice::enumerate_circle;
use torus_waves::nodal::nodal_length_ms_streaming;
use torus_waves::rng::tagged_rng;

use rand::Rng;

#[test]
fn empirical_covariance_matches_spectral_form() {
    // E[T(x) T(0)] = r_n(x) = (2/N) sum_{half} cos(2 pi <lambda, x>).
    let circle = enumerate_circle(25).unwrap();
    let mut point_rng = tagged_rng(5, "cov-points", 0);
    let points: Vec<[f64; 2]> = (0..20)
        .map(|_| [point_rng.gen::<f64>(), point_rng.gen::<f64>()])
        .collect();
    let reps = 20_000u64;
    let mut products = vec![Vec::with_capacity(reps as usize); points.len()];
    for rep in 0..reps {
        let coeffs = sample_replication(&circle, 5, rep);
        let (at_zero, _) = evaluate(&coeffs, [0.0, 0.0]);
        for (k, &x) in points.iter().enumerate() {
            let (value, _) = evaluate(&coeffs, x);
            products[k].push(value * at_zero);
        }
    }
    for (k, &x) in points.iter().enumerate() {
        let (mean, var) = mean_and_variance(&products[k]);
        let se = (var / reps as f64).sqrt();
        let predicted = covariance(&circle, x);
        let dev = (mean - predicted).abs();
        assert!(
            dev <= 4.0 * se,
            "point {k} at {x:?}: empirical {mean:.5} vs r_n {predicted:.5} ({:.2} se)",
            dev / se
        );
    }
}

#[test]
fn fourth_chaos_is_centered() {
    let circle = enumerate_circle(1105).unwrap();
    let reps = 5000u64;
    let samples: Vec<f64> = (0..reps)
        .map(|rep| proj4_exact(&sample_replication(&circle, 31, rep)))
        .collect();
    let (mean, var) = mean_and_variance(&samples);
    let se = (var / reps as f64).sqrt();
    assert!(mean.abs() <= 4.0 * se, "proj4 mean {mean:.5} vs se {se:.5}");
}

#[test]
fn nodal_length_mean_tracks_prediction_at_small_n() {
    let circle = enumerate_circle(25).unwrap();
    let reps = 400u64;
    let lengths: Vec<f64> = (0..reps)
        .map(|rep| {
            let coeffs = sample_replication(&circle, 7, rep);
            nodal_length_ms_streaming(&coeffs, 80, 0.0).unwrap().value
        })
        .collect();
    let (mean, var) = mean_and_variance(&lengths);
    let se = (var / reps as f64).sqrt();
    let predicted = (circle.energy() / 8.0).sqrt();
    let allowance = 3.0 * se + 0.01 * predicted;
    assert!(
        (mean - predicted).abs() <= allowance,
        "mean {mean:.4} vs {predicted:.4}, allowance {allowance:.4}"
    );
}
