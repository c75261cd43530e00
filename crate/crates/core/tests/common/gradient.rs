//! Finite-difference check of the OLS optimality condition.

use mlsysml::interpreter::ols::least_squares;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Squared error of `b` on `(x, y)`.
fn sse(x: &[Vec<f64>], y: &[f64], b: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(r, t)| {
            let p: f64 = r.iter().zip(b).map(|(a, c)| a * c).sum();
            (p - t) * (p - t)
        })
        .sum()
}

fn central_difference(x: &[Vec<f64>], y: &[f64], b: &[f64], i: usize) -> f64 {
    let h = 1e-3 * b[i].abs().max(1.0);
    let (mut up, mut down) = (b.to_vec(), b.to_vec());
    up[i] += h;
    down[i] -= h;
    (sse(x, y, &up) - sse(x, y, &down)) / (2.0 * h)
}

fn analytic_gradient(x: &[Vec<f64>], y: &[f64], b: &[f64], i: usize) -> f64 {
    x.iter()
        .zip(y)
        .map(|(r, t)| {
            let p: f64 = r.iter().zip(b).map(|(a, c)| a * c).sum();
            2.0 * (p - t) * r[i]
        })
        .sum()
}

/// Worst relative gradient component of the OLS solution over random 20×3
/// designs (plus intercept), measured against the natural gradient scale
/// `2‖xᵢ‖‖y‖`.
pub fn gradient_check(trials: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                std::iter::once(1.0)
                    .chain((0..3).map(|_| rng.gen_range(-10.0..10.0)))
                    .collect()
            })
            .collect();
        let y: Vec<f64> = (0..20).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let b = least_squares(&x, &y).unwrap();
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for i in 0..b.len() {
            let col_norm = x.iter().map(|r| r[i] * r[i]).sum::<f64>().sqrt();
            let scale = 2.0 * col_norm * y_norm;
            worst = worst.max(central_difference(&x, &y, &b, i).abs() / scale);
            // The finite differences themselves track the analytic gradient
            // away from the optimum.
            let off: Vec<f64> = b.iter().map(|v| v + 0.5).collect();
            let (fd, an) = (central_difference(&x, &y, &off, i), analytic_gradient(&x, &y, &off, i));
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fd} vs {an}");
        }
    }
    worst
}

