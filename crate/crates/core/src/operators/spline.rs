//! Multiresolution dictionary of integer-shifted, dyadically scaled cubic
//! B-splines under periodic boundary conditions.
//!
//! Level `j` uses the separable kernel `B_j = b_j (x) b_j`, where `b_j` holds
//! the integral values of the cubic B-spline dilated by `2^j`
//! (`M_j = 2^{j+2} - 1` taps), normalized to unit l2 norm. Synthesis is
//! `f = sum_j c_j (*) B_j` and the adjoint is `{ f (*) B_j }_j`; both run as a
//! row pass followed by a column pass.

use crate::array::{CoeffLayout, CoeffStack, Image};
use crate::error::{Error, Result};

/// Integral samples of the cubic B-spline.
const CUBIC_SAMPLES: [f64; 3] = [1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0];

fn full_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (k, y) in b.iter().enumerate() {
            out[i + k] += x * y;
        }
    }
    out
}

/// Unnormalized `b_j = 2^{-3j} (1_{2^j} * 1_{2^j} * 1_{2^j} * 1_{2^j}) * b`.
pub fn spline_generator_raw(level: u32) -> Vec<f64> {
    let ones = vec![1.0; 1 << level];
    let mut acc = vec![1.0];
    for _ in 0..4 {
        acc = full_convolution(&acc, &ones);
    }
    let scale = (-3.0 * level as f64).exp2();
    full_convolution(&acc, &CUBIC_SAMPLES).into_iter().map(|v| v * scale).collect()
}

/// Unit-norm generators `b_0, ..., b_{levels-1}`.
pub fn spline_generators(levels: usize) -> Vec<Vec<f64>> {
    (0..levels as u32)
        .map(|j| {
            let raw = spline_generator_raw(j);
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            raw.into_iter().map(|v| v / norm).collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplineDictionary {
    rows: usize,
    cols: usize,
    generators: Vec<Vec<f64>>,
}

impl SplineDictionary {
    pub fn new(rows: usize, cols: usize, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidDictionary("spline dictionary needs at least one level".into()));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions { rows, cols });
        }
        Ok(Self {
            rows,
            cols,
            generators: spline_generators(levels),
        })
    }

    pub fn levels(&self) -> usize {
        self.generators.len()
    }

    pub fn image_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn layout(&self) -> CoeffLayout {
        CoeffLayout::Planes {
            levels: self.levels(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    pub fn synthesize(&self, c: &CoeffStack) -> Result<Image> {
        if c.layout() != self.layout() {
            return Err(Error::LayoutMismatch {
                expected: self.layout(),
                found: c.layout(),
            });
        }
        let mut out = vec![0.0; self.rows * self.cols];
        for (j, taps) in self.generators.iter().enumerate() {
            let filtered = separable_filter(c.plane(j), self.rows, self.cols, taps);
            for (o, v) in out.iter_mut().zip(filtered) {
                *o += v;
            }
        }
        Ok(Image::from_vec_unchecked(self.rows, self.cols, out))
    }

    pub fn adjoint(&self, f: &Image) -> Result<CoeffStack> {
        if f.shape() != (self.rows, self.cols) {
            return Err(Error::ShapeMismatch {
                left: format!("{:?}", (self.rows, self.cols)),
                right: format!("{:?}", f.shape()),
            });
        }
        let mut out = Vec::with_capacity(self.layout().len());
        for taps in &self.generators {
            out.extend(separable_filter(f.as_slice(), self.rows, self.cols, taps));
        }
        Ok(CoeffStack::from_vec_unchecked(self.layout(), out))
    }
}

/// Circular filtering with the symmetric centred kernel `taps (x) taps`.
fn separable_filter(x: &[f64], rows: usize, cols: usize, taps: &[f64]) -> Vec<f64> {
    let half = taps.len() / 2;
    let mut tmp = vec![0.0; rows * cols];
    let mut line = vec![0.0; cols.max(rows) + 2 * half];
    // along each row
    for r in 0..rows {
        let src = &x[r * cols..(r + 1) * cols];
        for (b, slot) in line[..cols + 2 * half].iter_mut().enumerate() {
            *slot = src[(b + cols * (half / cols + 1) - half) % cols];
        }
        let dst = &mut tmp[r * cols..(r + 1) * cols];
        for (k, &w) in taps.iter().enumerate() {
            for (d, s) in dst.iter_mut().zip(&line[k..k + cols]) {
                *d += w * s;
            }
        }
    }
    // along each column
    let mut out = vec![0.0; rows * cols];
    for c in 0..cols {
        for (a, slot) in line[..rows + 2 * half].iter_mut().enumerate() {
            *slot = tmp[((a + rows * (half / rows + 1) - half) % rows) * cols + c];
        }
        for r in 0..rows {
            let mut acc = 0.0;
            for (k, &w) in taps.iter().enumerate() {
                acc += w * line[r + k];
            }
            out[r * cols + c] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Full 2-D circular convolution with `B[n, m] = b[n] b[m]`.
    fn conv2_oracle(x: &[f64], rows: usize, cols: usize, b: &[f64]) -> Vec<f64> {
        let h = (b.len() / 2) as i64;
        let mut out = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let mut acc = 0.0;
                for i in -h..=h {
                    for j in -h..=h {
                        let rr = (r as i64 - i).rem_euclid(rows as i64) as usize;
                        let cc = (c as i64 - j).rem_euclid(cols as i64) as usize;
                        acc += b[(i + h) as usize] * b[(j + h) as usize] * x[rr * cols + cc];
                    }
                }
                out[r * cols + c] = acc;
            }
        }
        out
    }

    #[test]
    fn generator_lengths_and_mass() {
        for j in 0..4u32 {
            let raw = spline_generator_raw(j);
            assert_eq!(raw.len(), (1 << (j + 2)) - 1);
            // brute-force mass: each box sums to 2^j, the cubic samples sum to 1
            let mass: f64 = raw.iter().sum();
            assert!((mass - (1u64 << j) as f64).abs() < 1e-12);
            for k in 0..raw.len() {
                assert!((raw[k] - raw[raw.len() - 1 - k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn level_zero_is_normalized_cubic() {
        let b = spline_generators(1);
        let norm = (1.0f64 + 16.0 + 1.0).sqrt();
        let expected = [1.0 / norm, 4.0 / norm, 1.0 / norm];
        for (a, e) in b[0].iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
        for g in spline_generators(4) {
            assert!((g.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficient_count() {
        let d = SplineDictionary::new(16, 24, 3).unwrap();
        assert_eq!(d.layout().len(), 3 * 16 * 24);
    }

    #[test]
    fn impulse_response_is_tensor_kernel() {
        let (rows, cols) = (32, 32);
        let d = SplineDictionary::new(rows, cols, 3).unwrap();
        for j in 0..3 {
            let mut c = CoeffStack::zeros(d.layout());
            c.set(j * rows * cols + 16 * cols + 16, 1.0).unwrap();
            let f = d.synthesize(&c).unwrap();
            let b = &d.generators()[j];
            let h = b.len() / 2;
            for r in 0..rows {
                for col in 0..cols {
                    let (di, dj) = (r as i64 - 16 + h as i64, col as i64 - 16 + h as i64);
                    let expected = if (0..b.len() as i64).contains(&di) && (0..b.len() as i64).contains(&dj) {
                        b[di as usize] * b[dj as usize]
                    } else {
                        0.0
                    };
                    assert!((f.get(r, col) - expected).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn separable_matches_full_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (rows, cols, levels) in [(16, 16, 3), (32, 32, 4), (8, 12, 3)] {
            let d = SplineDictionary::new(rows, cols, levels).unwrap();
            let x: Vec<f64> = (0..rows * cols).map(|_| rng.random::<f64>()).collect();
            for (j, b) in d.generators().iter().enumerate() {
                let fast = separable_filter(&x, rows, cols, b);
                let slow = conv2_oracle(&x, rows, cols, b);
                let scale = slow.iter().map(|v| v * v).sum::<f64>().sqrt();
                for (a, s) in fast.iter().zip(&slow) {
                    assert!((a - s).abs() < 1e-10 * scale, "level {j}");
                }
            }
        }
    }

    #[test]
    fn adjoint_identity_against_dense_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = SplineDictionary::new(16, 16, 3).unwrap();
        let c = CoeffStack::new(d.layout(), (0..d.layout().len()).map(|_| rng.random()).collect()).unwrap();
        let y = Image::from_fn(16, 16, |_, _| rng.random()).unwrap();
        let lhs = d.synthesize(&c).unwrap().inner(&y).unwrap();
        let rhs = c.inner(&d.adjoint(&y).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs());
    }

    #[test]
    fn wrong_plane_count_is_error() {
        let d = SplineDictionary::new(8, 8, 3).unwrap();
        let other = SplineDictionary::new(8, 8, 2).unwrap();
        assert!(matches!(
            d.synthesize(&CoeffStack::zeros(other.layout())),
            Err(Error::LayoutMismatch { .. })
        ));
        assert!(SplineDictionary::new(8, 8, 0).is_err());
    }
}
