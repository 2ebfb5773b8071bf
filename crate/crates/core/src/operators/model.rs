use crate::array::{CoeffLayout, CoeffStack, Image};
use crate::error::{Error, Result};

use super::haar::HaarDictionary;
use super::kernel::ConvKernel;
use super::patch::PatchDictionary;
use super::spline::SplineDictionary;

/// A synthesis operator mapping nonnegative coefficients to an image.
#[derive(Clone, Debug, PartialEq)]
pub enum Dictionary {
    /// Pixels are their own coefficients.
    Identity { rows: usize, cols: usize },
    Haar(HaarDictionary),
    Spline(SplineDictionary),
    Patch(PatchDictionary),
}

impl Dictionary {
    pub fn layout(&self) -> CoeffLayout {
        match self {
            Dictionary::Identity { rows, cols } => CoeffLayout::Flat(rows * cols),
            Dictionary::Haar(d) => d.layout(),
            Dictionary::Spline(d) => d.layout(),
            Dictionary::Patch(d) => d.layout(),
        }
    }

    pub fn image_shape(&self) -> (usize, usize) {
        match self {
            Dictionary::Identity { rows, cols } => (*rows, *cols),
            Dictionary::Haar(d) => (d.signal_len(), 1),
            Dictionary::Spline(d) => d.image_shape(),
            Dictionary::Patch(d) => d.image_shape(),
        }
    }

    pub fn synthesize(&self, c: &CoeffStack) -> Result<Image> {
        match self {
            Dictionary::Identity { rows, cols } => {
                if c.layout() != self.layout() {
                    return Err(Error::LayoutMismatch {
                        expected: self.layout(),
                        found: c.layout(),
                    });
                }
                Ok(Image::from_vec_unchecked(*rows, *cols, c.as_slice().to_vec()))
            }
            Dictionary::Haar(d) => d.synthesize(c),
            Dictionary::Spline(d) => d.synthesize(c),
            Dictionary::Patch(d) => d.synthesize(c),
        }
    }

    pub fn adjoint(&self, f: &Image) -> Result<CoeffStack> {
        match self {
            Dictionary::Identity { rows, cols } => {
                if f.shape() != (*rows, *cols) {
                    return Err(Error::ShapeMismatch {
                        left: format!("{:?}", (rows, cols)),
                        right: format!("{:?}", f.shape()),
                    });
                }
                Ok(CoeffStack::from_vec_unchecked(self.layout(), f.as_slice().to_vec()))
            }
            Dictionary::Haar(d) => d.adjoint(f),
            Dictionary::Spline(d) => d.adjoint(f),
            Dictionary::Patch(d) => d.adjoint(f),
        }
    }
}

/// The composed operator `A = H o Phi` together with `v = A*{1}`.
#[derive(Clone, Debug)]
pub struct ForwardModel {
    kernel: ConvKernel,
    dictionary: Dictionary,
    column_sums: CoeffStack,
}

impl ForwardModel {
    pub fn new(kernel: ConvKernel, dictionary: Dictionary) -> Result<Self> {
        let (rows, cols) = dictionary.image_shape();
        let ones = Image::ones(rows, cols);
        let column_sums = dictionary.adjoint(&kernel.conv_adjoint(&ones)?)?;
        Ok(Self {
            kernel,
            dictionary,
            column_sums,
        })
    }

    pub fn kernel(&self) -> &ConvKernel {
        &self.kernel
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    /// `v = A*{1}`.
    pub fn column_sums(&self) -> &CoeffStack {
        &self.column_sums
    }

    pub fn layout(&self) -> CoeffLayout {
        self.dictionary.layout()
    }

    pub fn image_shape(&self) -> (usize, usize) {
        self.dictionary.image_shape()
    }

    /// `A c = H{Phi c}`.
    pub fn forward(&self, c: &CoeffStack) -> Result<Image> {
        Ok(self.forward_parts(c)?.1)
    }

    /// Returns `(Phi c, H{Phi c})`.
    pub fn forward_parts(&self, c: &CoeffStack) -> Result<(Image, Image)> {
        let synth = self.dictionary.synthesize(c)?;
        let blurred = self.kernel.conv_forward(&synth)?;
        Ok((synth, blurred))
    }

    /// `A* y = Phi*{H* y}`.
    pub fn adjoint(&self, y: &Image) -> Result<CoeffStack> {
        self.dictionary.adjoint(&self.kernel.conv_adjoint(y)?)
    }
}
