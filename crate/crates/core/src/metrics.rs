//! Reconstruction quality measures and trial averaging.

use crate::array::Image;
use crate::error::{Error, Result};

/// Side of the square SSIM window.
pub const SSIM_WINDOW: usize = 8;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// `||f - f_hat||_F^2 / ||f||_F^2`.
pub fn nmse(truth: &Image, estimate: &Image) -> Result<f64> {
    if truth.shape() != estimate.shape() {
        return Err(Error::ShapeMismatch {
            left: format!("{:?}", truth.shape()),
            right: format!("{:?}", estimate.shape()),
        });
    }
    let energy: f64 = truth.as_slice().iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(Error::ZeroReference);
    }
    let err: f64 = truth
        .as_slice()
        .iter()
        .zip(estimate.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(err / energy)
}

/// Mean SSIM over all `8 x 8` windows (stride 1, population moments).
///
/// The dynamic range `L` is the maximum over both images, with
/// `C1 = (0.01 L)^2` and `C2 = (0.03 L)^2`. Column signals (`N x 1`) use
/// `8 x 1` windows.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            left: format!("{:?}", a.shape()),
            right: format!("{:?}", b.shape()),
        });
    }
    let (rows, cols) = a.shape();
    let extent = |dim: usize| if dim == 1 { 1 } else { SSIM_WINDOW };
    let (wr, wc) = (extent(rows), extent(cols));
    if rows < wr || cols < wc {
        return Err(Error::ImageTooSmall {
            rows,
            cols,
            window: SSIM_WINDOW,
        });
    }
    let range = a.max().max(b.max());
    if range == 0.0 {
        return Ok(1.0);
    }
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);
    let n = (wr * wc) as f64;
    let (xa, xb) = (a.as_slice(), b.as_slice());
    let mut total = 0.0;
    let mut count = 0usize;
    for r0 in 0..=rows - wr {
        for c0 in 0..=cols - wc {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for r in r0..r0 + wr {
                for i in r * cols + c0..r * cols + c0 + wc {
                    let (x, y) = (xa[i], xb[i]);
                    sa += x;
                    sb += y;
                    saa += x * x;
                    sbb += y * y;
                    sab += x * y;
                }
            }
            let (ma, mb) = (sa / n, sb / n);
            let va = (saa / n - ma * ma).max(0.0);
            let vb = (sbb / n - mb * mb).max(0.0);
            let cov = sab / n - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Sample mean and standard error of the mean.
pub fn average_trials(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Neumaier summation.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Trial-averaged quality of one reconstruction method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub nmse_mean: f64,
    pub nmse_stderr: f64,
    pub ssim_mean: f64,
    pub ssim_stderr: f64,
    pub n_trials: usize,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "method,n_trials,nmse_mean,nmse_stderr,ssim_mean,ssim_stderr,oracle";

    pub fn from_trials(nmse: &[f64], ssim: &[f64]) -> Result<Self> {
        if nmse.len() != ssim.len() {
            return Err(Error::ShapeMismatch {
                left: format!("{} NMSE values", nmse.len()),
                right: format!("{} SSIM values", ssim.len()),
            });
        }
        let (nmse_mean, nmse_stderr) = average_trials(nmse)?;
        let (ssim_mean, ssim_stderr) = average_trials(ssim)?;
        Ok(Self {
            nmse_mean,
            nmse_stderr,
            ssim_mean,
            ssim_stderr,
            n_trials: nmse.len(),
        })
    }

    /// One line matching [`Self::CSV_HEADER`] (without newline).
    pub fn csv_row(&self, method: &str, oracle: bool) -> String {
        format!(
            "{method},{},{:.12e},{:.12e},{:.12e},{:.12e},{oracle}",
            self.n_trials, self.nmse_mean, self.nmse_stderr, self.ssim_mean, self.ssim_stderr
        )
    }
}
