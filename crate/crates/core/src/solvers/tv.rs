//! Periodic finite differences for the total-variation curvature term.
//!
//! The gradient uses forward differences and the divergence backward
//! differences, so `div = -grad^T`.

use crate::array::Image;

/// Forward differences `(d/dcol, d/drow)` with wrap-around.
pub fn gradient(f: &Image) -> (Vec<f64>, Vec<f64>) {
    let (rows, cols) = f.shape();
    let x = f.as_slice();
    let mut dx = vec![0.0; rows * cols];
    let mut dy = vec![0.0; rows * cols];
    for r in 0..rows {
        let down = (r + 1) % rows;
        for c in 0..cols {
            let right = (c + 1) % cols;
            let i = r * cols + c;
            dx[i] = x[r * cols + right] - x[i];
            dy[i] = x[down * cols + c] - x[i];
        }
    }
    (dx, dy)
}

/// Backward-difference divergence of the field `(px, py)`.
pub fn divergence(px: &[f64], py: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        let up = (r + rows - 1) % rows;
        for c in 0..cols {
            let left = (c + cols - 1) % cols;
            let i = r * cols + c;
            out[i] = px[i] - px[r * cols + left] + py[i] - py[up * cols + c];
        }
    }
    out
}

/// `div(grad f / max(|grad f|, eps))`.
pub fn curvature(f: &Image, eps: f64) -> Vec<f64> {
    let (mut dx, mut dy) = gradient(f);
    for (a, b) in dx.iter_mut().zip(dy.iter_mut()) {
        let mag = (*a * *a + *b * *b).sqrt().max(eps);
        *a /= mag;
        *b /= mag;
    }
    divergence(&dx, &dy, f.rows(), f.cols())
}

/// Isotropic total variation `sum |grad f|`.
pub fn total_variation(f: &Image) -> f64 {
    let (dx, dy) = gradient(f);
    dx.iter().zip(&dy).map(|(a, b)| (a * a + b * b).sqrt()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense forward-difference matrices `Dx`, `Dy` (rows of the operator).
    fn dense_gradient(rows: usize, cols: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = rows * cols;
        let mut dx = vec![vec![0.0; n]; n];
        let mut dy = vec![vec![0.0; n]; n];
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                dx[i][i] -= 1.0;
                dx[i][r * cols + (c + 1) % cols] += 1.0;
                dy[i][i] -= 1.0;
                dy[i][((r + 1) % rows) * cols + c] += 1.0;
            }
        }
        (dx, dy)
    }

    #[test]
    fn divergence_is_negative_gradient_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (rows, cols) = (8, 8);
        let n = rows * cols;
        let (dx, dy) = dense_gradient(rows, cols);
        let f = Image::from_fn(rows, cols, |_, _| rng.random::<f64>()).unwrap();
        let (gx, gy) = gradient(&f);
        for i in 0..n {
            let ex: f64 = dx[i].iter().zip(f.as_slice()).map(|(a, b)| a * b).sum();
            let ey: f64 = dy[i].iter().zip(f.as_slice()).map(|(a, b)| a * b).sum();
            assert!((gx[i] - ex).abs() < 1e-12 && (gy[i] - ey).abs() < 1e-12);
        }
        let px: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let py: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let div = divergence(&px, &py, rows, cols);
        for k in 0..n {
            let expected: f64 = -(0..n).map(|i| dx[i][k] * px[i] + dy[i][k] * py[i]).sum::<f64>();
            assert!((div[k] - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_image_has_zero_curvature() {
        let f = Image::filled(6, 5, 3.0);
        assert!(curvature(&f, 1e-8).iter().all(|v| *v == 0.0));
        assert_eq!(total_variation(&f), 0.0);
    }

    #[test]
    fn column_signal_has_no_horizontal_gradient() {
        let f = Image::signal(vec![1.0, 3.0, 2.0]).unwrap();
        let (dx, dy) = gradient(&f);
        assert!(dx.iter().all(|v| *v == 0.0));
        assert_eq!(dy, vec![2.0, -1.0, -1.0]);
    }
}
