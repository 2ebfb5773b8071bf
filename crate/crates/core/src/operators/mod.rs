//! Blur operator, synthesis dictionaries and the composed forward model.

mod haar;
mod kernel;
mod model;
mod patch;
mod spline;

pub use haar::{HaarDictionary, DEFAULT_HAAR_LEVELS};
pub use kernel::{gaussian_sigma, ConvKernel};
pub use model::{Dictionary, ForwardModel};
pub use patch::{PatchAtoms, PatchDictionary};
pub use spline::{spline_generator_raw, spline_generators, SplineDictionary};
