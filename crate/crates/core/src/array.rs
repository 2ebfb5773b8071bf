//! Nonnegative arrays: images and representation coefficients.
//!
//! Both [`Image`] and [`CoeffStack`] reject negative or non-finite entries on
//! construction, so every value of these types lies in the nonnegative
//! orthant. Elementwise arithmetic that can leave the orthant (the logarithm)
//! returns a plain `Vec<f64>` instead.

use std::fmt;

use crate::error::{Error, Result};

/// Floor applied to a zero denominator when the numerator is positive.
pub const EPS_DIV: f64 = 1e-12;

/// Division with the `0/0 = 0` convention and a floored denominator for
/// positive numerators.
#[inline]
pub fn floored_div(num: f64, den: f64, eps: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den.max(eps)
    }
}

fn check_nonneg(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        Some(index) => Err(Error::NotNonNegative {
            index,
            value: data[index],
        }),
        None => Ok(()),
    }
}

/// Row-major nonnegative intensity array. One-dimensional signals are stored
/// as `N x 1` images.
#[derive(Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Image")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

impl Image {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::DataLength {
                len: data.len(),
                expected: rows * cols,
            });
        }
        check_nonneg(&data)?;
        Ok(Self { rows, cols, data })
    }

    /// A column signal of length `data.len()`.
    pub fn signal(data: Vec<f64>) -> Result<Self> {
        Self::new(data.len(), 1, data)
    }

    /// # Panics
    /// If either dimension is zero or `value` is negative.
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(rows > 0 && cols > 0, "image dimensions must be positive");
        assert!(value.is_finite() && value >= 0.0, "fill value must be nonnegative");
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 1.0)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Caller guarantees the length matches and every entry is nonnegative.
    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        debug_assert!(data.iter().all(|v| *v >= 0.0), "negative entry in image");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    fn shape_key(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn rebuild(&self, data: Vec<f64>) -> Self {
        Self::from_vec_unchecked(self.rows, self.cols, data)
    }
}

/// How a coefficient vector is organized for a particular dictionary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffLayout {
    /// A flat vector (Haar dictionary, identity dictionary).
    Flat(usize),
    /// One `rows x cols` plane per resolution level (spline dictionary).
    Planes { levels: usize, rows: usize, cols: usize },
    /// One row of atom weights per patch position (patch dictionary).
    Patches { patches: usize, atoms: usize },
}

impl CoeffLayout {
    pub fn len(&self) -> usize {
        match *self {
            CoeffLayout::Flat(n) => n,
            CoeffLayout::Planes { levels, rows, cols } => levels * rows * cols,
            CoeffLayout::Patches { patches, atoms } => patches * atoms,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Nonnegative representation coefficients.
#[derive(Clone, PartialEq)]
pub struct CoeffStack {
    layout: CoeffLayout,
    data: Vec<f64>,
}

impl fmt::Debug for CoeffStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoeffStack")
            .field("layout", &self.layout)
            .finish_non_exhaustive()
    }
}

impl CoeffStack {
    pub fn new(layout: CoeffLayout, data: Vec<f64>) -> Result<Self> {
        if data.len() != layout.len() {
            return Err(Error::DataLength {
                len: data.len(),
                expected: layout.len(),
            });
        }
        check_nonneg(&data)?;
        Ok(Self { layout, data })
    }

    /// # Panics
    /// If `value` is negative or not finite.
    pub fn filled(layout: CoeffLayout, value: f64) -> Self {
        assert!(value.is_finite() && value >= 0.0, "fill value must be nonnegative");
        Self {
            layout,
            data: vec![value; layout.len()],
        }
    }

    pub fn zeros(layout: CoeffLayout) -> Self {
        Self::filled(layout, 0.0)
    }

    pub fn ones(layout: CoeffLayout) -> Self {
        Self::filled(layout, 1.0)
    }

    pub(crate) fn from_vec_unchecked(layout: CoeffLayout, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), layout.len());
        debug_assert!(data.iter().all(|v| *v >= 0.0), "negative coefficient");
        Self { layout, data }
    }

    pub fn layout(&self) -> CoeffLayout {
        self.layout
    }

    /// Plane `level` of a [`CoeffLayout::Planes`] stack, or the whole vector otherwise.
    pub fn plane(&self, level: usize) -> &[f64] {
        match self.layout {
            CoeffLayout::Planes { rows, cols, .. } => &self.data[level * rows * cols..(level + 1) * rows * cols],
            _ => &self.data,
        }
    }

    /// Sum of coefficients, i.e. the l1 norm of a nonnegative vector.
    pub fn l1_norm(&self) -> f64 {
        self.sum()
    }

    /// `sum_i w_i c_i`.
    pub fn weighted_l1(&self, weights: &CoeffStack) -> Result<f64> {
        self.inner(weights)
    }

    /// Replaces the coefficient at `index`; used to pin entries to zero.
    pub fn set(&mut self, index: usize, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::NotNonNegative { index, value });
        }
        self.data[index] = value;
        Ok(())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    fn shape_key(&self) -> CoeffLayout {
        self.layout
    }

    fn rebuild(&self, data: Vec<f64>) -> Self {
        Self::from_vec_unchecked(self.layout, data)
    }
}

macro_rules! elementwise_ops {
    ($ty:ty) => {
        impl $ty {
            pub fn as_slice(&self) -> &[f64] {
                &self.data
            }

            pub fn len(&self) -> usize {
                self.data.len()
            }

            pub fn is_empty(&self) -> bool {
                self.data.is_empty()
            }

            fn check_same(&self, other: &Self) -> Result<()> {
                if self.shape_key() == other.shape_key() {
                    Ok(())
                } else {
                    Err(Error::ShapeMismatch {
                        left: format!("{:?}", self.shape_key()),
                        right: format!("{:?}", other.shape_key()),
                    })
                }
            }

            fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
                self.check_same(other)?;
                let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
                Ok(self.rebuild(data))
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, |a, b| a + b)
            }

            pub fn mul(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, |a, b| a * b)
            }

            /// Elementwise quotient with `0/0 = 0` and zero denominators floored at [`EPS_DIV`].
            pub fn div(&self, other: &Self) -> Result<Self> {
                self.div_floored(other, EPS_DIV)
            }

            pub fn div_floored(&self, other: &Self, eps: f64) -> Result<Self> {
                self.zip_with(other, |a, b| floored_div(a, b, eps))
            }

            pub fn scale(&self, factor: f64) -> Result<Self> {
                if !(factor.is_finite() && factor >= 0.0) {
                    return Err(Error::InvalidParameter(format!("scale factor {factor} must be nonnegative")));
                }
                Ok(self.rebuild(self.data.iter().map(|v| v * factor).collect()))
            }

            /// Natural logarithm; any zero entry is an error.
            pub fn ln(&self) -> Result<Vec<f64>> {
                self.data
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| if v > 0.0 { Ok(v.ln()) } else { Err(Error::LogOfZero(i)) })
                    .collect()
            }

            /// Natural logarithm where entries paired with a zero weight map to
            /// zero (the `0 log 0 = 0` convention).
            pub fn ln_masked(&self, weights: &Self) -> Result<Vec<f64>> {
                self.check_same(weights)?;
                self.data
                    .iter()
                    .zip(&weights.data)
                    .enumerate()
                    .map(|(i, (&v, &w))| {
                        if w == 0.0 {
                            Ok(0.0)
                        } else if v > 0.0 {
                            Ok(v.ln())
                        } else {
                            Err(Error::LogOfZero(i))
                        }
                    })
                    .collect()
            }

            pub fn inner(&self, other: &Self) -> Result<f64> {
                self.check_same(other)?;
                Ok(dot(&self.data, &other.data))
            }

            pub fn sum(&self) -> f64 {
                self.data.iter().sum()
            }

            /// Euclidean (Frobenius) norm.
            pub fn norm2(&self) -> f64 {
                dot(&self.data, &self.data).sqrt()
            }
        }
    };
}

elementwise_ops!(Image);
elementwise_ops!(CoeffStack);

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `||a - b||_2` for equal-length slices.
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
