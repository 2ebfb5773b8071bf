//! Fixtures shared by the benchmarks.

use poisson_deconv::operators::{ConvKernel, Dictionary, ForwardModel, HaarDictionary, PatchAtoms, PatchDictionary, SplineDictionary, DEFAULT_HAAR_LEVELS};
use poisson_deconv::simulate::{phantom, poisson_sample, rng_for_trial, scale_to_snr};
use poisson_deconv::Image;

pub const SEED: u64 = 0x5eed;

/// Phantom blurred by the 15x15 kernel and scaled to 15 dB, with one noisy draw.
pub fn noisy_phantom(size: usize) -> (ConvKernel, Image, Image) {
    let h = ConvKernel::inverse_quadratic_2d();
    let truth = phantom(size, size);
    let (mean, _) = scale_to_snr(&h.conv_forward(&truth).unwrap(), 15.0).unwrap();
    let g = poisson_sample(&mean, &mut rng_for_trial(SEED, 0));
    (h, truth, g)
}

pub fn haar_model() -> ForwardModel {
    let h = ConvKernel::gaussian_1d(0.2 * std::f64::consts::PI).unwrap();
    ForwardModel::new(h, Dictionary::Haar(HaarDictionary::new(128, &DEFAULT_HAAR_LEVELS).unwrap())).unwrap()
}

pub fn spline_model(size: usize, levels: usize) -> ForwardModel {
    let d = SplineDictionary::new(size, size, levels).unwrap();
    ForwardModel::new(ConvKernel::inverse_quadratic_2d(), Dictionary::Spline(d)).unwrap()
}

pub fn patch_dictionary(size: usize) -> PatchDictionary {
    let atoms = PatchAtoms::synthetic(16, 16, 512, 8, &mut rng_for_trial(SEED, 1)).unwrap();
    PatchDictionary::new(atoms, size, size).unwrap()
}
