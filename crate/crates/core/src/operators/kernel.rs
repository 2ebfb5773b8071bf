//! Convolution kernels and the circular blur operator.

use crate::array::Image;
use crate::error::{Error, Result};

/// Nonnegative convolution mask with odd extent, centred on its middle tap.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvKernel {
    rows: usize,
    cols: usize,
    taps: Vec<f64>,
    normalized: bool,
}

impl ConvKernel {
    pub fn new(rows: usize, cols: usize, taps: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows.is_multiple_of(2) || cols.is_multiple_of(2) {
            return Err(Error::InvalidKernel(format!("extent {rows}x{cols} must be odd and positive")));
        }
        if taps.len() != rows * cols {
            return Err(Error::DataLength {
                len: taps.len(),
                expected: rows * cols,
            });
        }
        if let Some(v) = taps.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidKernel(format!("tap {v} is not a nonnegative real")));
        }
        if taps.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidKernel("all taps are zero".into()));
        }
        let normalized = (taps.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
        Ok(Self {
            rows,
            cols,
            taps,
            normalized,
        })
    }

    /// Column kernel for `N x 1` signals.
    pub fn from_taps_1d(taps: Vec<f64>) -> Result<Self> {
        Self::new(taps.len(), 1, taps)
    }

    /// The identity kernel.
    pub fn delta() -> Self {
        Self {
            rows: 1,
            cols: 1,
            taps: vec![1.0],
            normalized: true,
        }
    }

    /// Rescales the taps to sum to one.
    pub fn normalize(mut self) -> Self {
        let total: f64 = self.taps.iter().sum();
        for t in &mut self.taps {
            *t /= total;
        }
        self.normalized = true;
        self
    }

    /// Normalized Gaussian whose -3 dB cut-off frequency is `cutoff` rad/sample.
    ///
    /// `sigma = sqrt(ln 2) / cutoff`; the taps are truncated at `ceil(4 sigma)`
    /// and renormalized.
    pub fn gaussian_1d(cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff < std::f64::consts::PI) {
            return Err(Error::InvalidParameter(format!("cut-off {cutoff} must lie in (0, pi)")));
        }
        let sigma = gaussian_sigma(cutoff);
        let half = (4.0 * sigma).ceil() as i64;
        let taps = (-half..=half)
            .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        Ok(Self::from_taps_1d(taps)?.normalize())
    }

    /// `h[i, j] = 1 / (i^2 + j^2 + 1)` for `|i|, |j| <= half`, unnormalized.
    pub fn inverse_quadratic(half: usize) -> Self {
        let n = 2 * half + 1;
        let h = half as i64;
        let mut taps = Vec::with_capacity(n * n);
        for i in -h..=h {
            for j in -h..=h {
                taps.push(1.0 / ((i * i + j * j + 1) as f64));
            }
        }
        Self {
            rows: n,
            cols: n,
            taps,
            normalized: false,
        }
    }

    /// The normalized 15x15 inverse-quadratic blur used by the 2-D experiments.
    pub fn inverse_quadratic_2d() -> Self {
        Self::inverse_quadratic(7).normalize()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn half_width(&self) -> (usize, usize) {
        (self.rows / 2, self.cols / 2)
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Row-major taps.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Tap at signed offset `(i, j)` from the centre.
    pub fn tap(&self, i: i64, j: i64) -> f64 {
        let (hr, hc) = self.half_width();
        let r = i + hr as i64;
        let c = j + hc as i64;
        if r < 0 || c < 0 || r >= self.rows as i64 || c >= self.cols as i64 {
            0.0
        } else {
            self.taps[r as usize * self.cols + c as usize]
        }
    }

    /// The spatially reversed kernel, `h[-i, -j]`.
    pub fn reversed(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            taps: self.taps.iter().rev().copied().collect(),
            normalized: self.normalized,
        }
    }

    fn check_fits(&self, image: &Image) -> Result<()> {
        if self.rows > image.rows() || self.cols > image.cols() {
            return Err(Error::KernelTooLarge {
                kernel_rows: self.rows,
                kernel_cols: self.cols,
                rows: image.rows(),
                cols: image.cols(),
            });
        }
        Ok(())
    }

    /// Circular convolution `y[n, m] = sum h[i, j] x[n - i, m - j]`.
    pub fn conv_forward(&self, x: &Image) -> Result<Image> {
        self.check_fits(x)?;
        let reversed: Vec<f64> = self.taps.iter().rev().copied().collect();
        Ok(correlate_circular(x, &reversed, self.rows, self.cols))
    }

    /// Adjoint of [`conv_forward`](Self::conv_forward): circular correlation
    /// `y[n, m] = sum h[i, j] x[n + i, m + j]`.
    pub fn conv_adjoint(&self, y: &Image) -> Result<Image> {
        self.check_fits(y)?;
        Ok(correlate_circular(y, &self.taps, self.rows, self.cols))
    }
}

pub fn gaussian_sigma(cutoff: f64) -> f64 {
    std::f64::consts::LN_2.sqrt() / cutoff
}

/// `out[n, m] = sum_{a, b} w[a, b] x[(n + a - hr) mod N, (m + b - hc) mod M]`.
fn correlate_circular(x: &Image, weights: &[f64], krows: usize, kcols: usize) -> Image {
    let (n, m) = x.shape();
    let (hr, hc) = (krows / 2, kcols / 2);
    let pw = m + 2 * hc;
    let ph = n + 2 * hr;
    let src = x.as_slice();
    let mut padded = vec![0.0; ph * pw];
    for a in 0..ph {
        let r = (a + n * (hr / n + 1) - hr) % n;
        let row = &src[r * m..(r + 1) * m];
        for b in 0..pw {
            padded[a * pw + b] = row[(b + m * (hc / m + 1) - hc) % m];
        }
    }
    let mut out = vec![0.0; n * m];
    for r in 0..n {
        let dst = &mut out[r * m..(r + 1) * m];
        for a in 0..krows {
            let prow = &padded[(r + a) * pw..(r + a + 1) * pw];
            for b in 0..kcols {
                let w = weights[a * kcols + b];
                if w == 0.0 {
                    continue;
                }
                for (d, s) in dst.iter_mut().zip(&prow[b..b + m]) {
                    *d += w * s;
                }
            }
        }
    }
    Image::from_vec_unchecked(n, m, out)
}
