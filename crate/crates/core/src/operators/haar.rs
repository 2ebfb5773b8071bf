//! Shift-invariant dictionary of unit-norm Haar boxes on a circular 1-D grid.

use crate::array::{CoeffLayout, CoeffStack, Image};
use crate::error::{Error, Result};

/// Levels used by the 1-D experiments.
pub const DEFAULT_HAAR_LEVELS: [u32; 4] = [2, 3, 4, 5];

/// Atoms `phi_{k,j}`: a box of width `2^j` and height `2^{-j/2}` starting at
/// sample `k` (wrapping around). Coefficients are stored level-major, so
/// index `l * N + k` belongs to level `levels[l]` and shift `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarDictionary {
    len: usize,
    levels: Vec<u32>,
}

impl HaarDictionary {
    pub fn new(len: usize, levels: &[u32]) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidDictionary(format!("signal length {len} is too short")));
        }
        if levels.is_empty() {
            return Err(Error::InvalidDictionary("no Haar levels".into()));
        }
        let max_level = len.ilog2() - 1;
        if let Some(j) = levels.iter().find(|&&j| j > max_level) {
            return Err(Error::InvalidDictionary(format!(
                "Haar level {j} outside 0..={max_level} for N = {len}"
            )));
        }
        Ok(Self {
            len,
            levels: levels.to_vec(),
        })
    }

    pub fn signal_len(&self) -> usize {
        self.len
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn layout(&self) -> CoeffLayout {
        CoeffLayout::Flat(self.len * self.levels.len())
    }

    /// Samples of the unshifted atom at `level`.
    pub fn atom(&self, level: u32) -> Vec<f64> {
        let width = 1usize << level;
        let height = (-(level as f64) / 2.0).exp2();
        (0..self.len).map(|n| if n < width { height } else { 0.0 }).collect()
    }

    pub fn synthesize(&self, c: &CoeffStack) -> Result<Image> {
        if c.layout() != self.layout() {
            return Err(Error::LayoutMismatch {
                expected: self.layout(),
                found: c.layout(),
            });
        }
        let n = self.len;
        let coeffs = c.as_slice();
        let mut out = vec![0.0; n];
        for (l, &j) in self.levels.iter().enumerate() {
            let width = 1usize << j;
            let height = (-(j as f64) / 2.0).exp2();
            let plane = &coeffs[l * n..(l + 1) * n];
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for d in 0..width {
                    acc += plane[(i + n - d) % n];
                }
                *o += height * acc;
            }
        }
        Ok(Image::from_vec_unchecked(n, 1, out))
    }

    pub fn adjoint(&self, f: &Image) -> Result<CoeffStack> {
        if f.shape() != (self.len, 1) {
            return Err(Error::ShapeMismatch {
                left: format!("({}, 1)", self.len),
                right: format!("{:?}", f.shape()),
            });
        }
        let n = self.len;
        let x = f.as_slice();
        let mut out = Vec::with_capacity(n * self.levels.len());
        for &j in &self.levels {
            let width = 1usize << j;
            let height = (-(j as f64) / 2.0).exp2();
            for k in 0..n {
                let mut acc = 0.0;
                for d in 0..width {
                    acc += x[(k + d) % n];
                }
                out.push(height * acc);
            }
        }
        Ok(CoeffStack::from_vec_unchecked(self.layout(), out))
    }
}
