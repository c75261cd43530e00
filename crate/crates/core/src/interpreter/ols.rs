//! Ordinary least squares through a Householder QR factorization.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OlsError {
    #[error("design matrix is rank deficient ({rows} rows, {cols} columns)")]
    SingularDesign { rows: usize, cols: usize },
    #[error("design has {rows} rows but {targets} targets")]
    ShapeMismatch { rows: usize, targets: usize },
}

/// Minimizes `‖Xβ − y‖²` for a row-major design `x`. Fails when `x` does not
/// have full column rank.
pub fn least_squares(x: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>, OlsError> {
    let m = x.len();
    let n = x.first().map_or(0, Vec::len);
    if m != y.len() {
        return Err(OlsError::ShapeMismatch { rows: m, targets: y.len() });
    }
    let singular = OlsError::SingularDesign { rows: m, cols: n };
    if n == 0 || m < n {
        return Err(singular);
    }
    // Column-major working copy.
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| x.iter().map(|r| r[j]).collect()).collect();
    let mut b = y.to_vec();
    let scale = a
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let tol = scale * (m.max(n) as f64) * f64::EPSILON * 16.0;
    for k in 0..n {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= tol {
            return Err(singular);
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(k) {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(p, q)| p * q).sum();
                let f = 2.0 * dot / vnorm2;
                for (c, vi) in col[k..].iter_mut().zip(&v) {
                    *c -= f * vi;
                }
            }
            let dot: f64 = v.iter().zip(&b[k..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in b[k..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        if a[k][k].abs() <= tol {
            return Err(singular);
        }
    }
    let mut beta = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[j][i] * beta[j]).sum();
        beta[i] = (b[i] - s) / a[i][i];
    }
    Ok(beta)
}
