//! Synthetic ground truth, blurring, intensity scaling and Poisson sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array::{CoeffStack, Image};
use crate::error::{Error, Result};
use crate::operators::{ConvKernel, HaarDictionary};

/// Random stream owned by one trial.
pub type TrialRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// `hash64(seed, trial)`, the seed of the trial's stream.
pub fn stream_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(seed ^ splitmix64(trial))
}

pub fn rng_for_trial(seed: u64, trial: u64) -> TrialRng {
    TrialRng::seed_from_u64(stream_seed(seed, trial))
}

/// `ln(k!)`.
fn ln_factorial(k: u64) -> f64 {
    if k < 16 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64 + 1.0;
    let x2 = x * x;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x * x2)
        + 1.0 / (1260.0 * x * x2 * x2)
        - 1.0 / (1680.0 * x * x2 * x2 * x2)
}

/// Means below this use sequential inversion; larger means use transformed rejection.
const INVERSION_LIMIT: f64 = 30.0;

/// One Poisson variate with the given mean.
///
/// Small means are sampled by inversion with a sequential search of the CDF.
/// Larger means use Hörmann's transformed rejection with squeeze (PTRS),
/// which is exact.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < INVERSION_LIMIT {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            // guards against rounding leaving cdf just below u far in the tail
            if p < f64::MIN_POSITIVE && k as f64 > mean {
                break;
            }
        }
        return k;
    }
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln() <= -mean + k * loglam - ln_factorial(k as u64) {
            return k as u64;
        }
    }
}

/// Independent Poisson draws with per-pixel mean `intensity`.
pub fn poisson_sample<R: Rng + ?Sized>(intensity: &Image, rng: &mut R) -> Image {
    let data = intensity.as_slice().iter().map(|&m| sample_poisson(m, rng) as f64).collect();
    Image::from_vec_unchecked(intensity.rows(), intensity.cols(), data)
}

/// SNR in dB of Poisson data with mean `f`: `10 log10(sum f^2 / sum f)`.
pub fn poisson_snr_db(f: &Image) -> f64 {
    let power: f64 = f.as_slice().iter().map(|v| v * v).sum();
    10.0 * (power / f.sum()).log10()
}

/// Scales `f` so that Poisson data with mean `alpha f` has the target SNR.
/// Returns the scaled image and `alpha`.
///
/// SNR is linear in `alpha` on the power scale (signal power `alpha^2 sum f^2`,
/// noise power `alpha sum f`), so the factor is found in closed form.
pub fn scale_to_snr(f: &Image, target_snr_db: f64) -> Result<(Image, f64)> {
    let total = f.sum();
    if total == 0.0 {
        return Err(Error::ZeroReference);
    }
    if !target_snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!("target SNR {target_snr_db} dB")));
    }
    let power: f64 = f.as_slice().iter().map(|v| v * v).sum();
    let alpha = 10f64.powf(target_snr_db / 10.0) * total / power;
    Ok((f.scale(alpha)?, alpha))
}

/// Which signal the peak intensity refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeakTarget {
    /// The blurred signal `H f` (the measured intensity).
    Blurred,
    /// The unblurred ground truth `f`.
    Signal,
}

/// Parameters of the sparse 1-D test signals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialSpec {
    pub seed: u64,
    pub n_trials: usize,
    /// Range of the fraction of nonzero coefficients, drawn uniformly per trial.
    pub sparsity: (f64, f64),
    pub peak: f64,
    pub peak_on: PeakTarget,
}

impl TrialSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.sparsity;
        if !(lo > 0.0 && lo <= hi && hi <= 0.1) {
            return Err(Error::InvalidParameter(format!("sparsity range ({lo}, {hi}) must lie in (0, 0.1]")));
        }
        if !(self.peak > 0.0 && self.peak.is_finite()) {
            return Err(Error::InvalidParameter(format!("peak {} must be positive", self.peak)));
        }
        if self.n_trials == 0 {
            return Err(Error::InvalidParameter("n_trials must be positive".into()));
        }
        Ok(())
    }

    pub fn draw_sparsity<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.sparsity;
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        }
    }
}

/// Draws `round(fraction * dim)` coefficients uniform on `(0, 1]` at distinct
/// random positions, synthesizes the signal, and rescales so the peak
/// (of `H f` or `f`, per `peak_on`) equals `peak`. Returns `(c, Phi c)`.
pub fn synth_sparse_signal<R: Rng + ?Sized>(
    fraction: f64,
    peak: f64,
    peak_on: PeakTarget,
    dict: &HaarDictionary,
    kernel: &ConvKernel,
    rng: &mut R,
) -> Result<(CoeffStack, Image)> {
    let layout = dict.layout();
    let dim = layout.len();
    let k = (fraction * dim as f64).round() as usize;
    if k == 0 || k > dim {
        return Err(Error::InvalidParameter(format!(
            "sparsity {fraction} gives {k} nonzeros out of {dim}"
        )));
    }
    let mut data = vec![0.0; dim];
    for i in rand::seq::index::sample(rng, dim, k) {
        data[i] = 1.0 - rng.random::<f64>();
    }
    let c = CoeffStack::new(layout, data)?;
    let f = dict.synthesize(&c)?;
    let reference = match peak_on {
        PeakTarget::Blurred => kernel.conv_forward(&f)?,
        PeakTarget::Signal => f,
    };
    let c = c.scale(peak / reference.max())?;
    let f = dict.synthesize(&c)?;
    Ok((c, f))
}

const PHANTOM_SUPERSAMPLE: usize = 4;

/// Piecewise-smooth test image, area-sampled per pixel: an elliptical head with a bright rim,
/// smoothly shaded interior, dark cavities and a few bright inclusions.
pub fn phantom(rows: usize, cols: usize) -> Image {
    struct Ellipse {
        cy: f64,
        cx: f64,
        ry: f64,
        rx: f64,
        angle: f64,
        value: f64,
    }
    let inside = |e: &Ellipse, y: f64, x: f64| {
        let (s, c) = e.angle.sin_cos();
        let (dy, dx) = (y - e.cy, x - e.cx);
        let u = (c * dx + s * dy) / e.rx;
        let v = (-s * dx + c * dy) / e.ry;
        u * u + v * v <= 1.0
    };
    let head = Ellipse { cy: 0.5, cx: 0.5, ry: 0.44, rx: 0.36, angle: 0.0, value: 0.9 };
    let brain = Ellipse { cy: 0.5, cx: 0.5, ry: 0.39, rx: 0.31, angle: 0.0, value: 0.0 };
    let features = [
        Ellipse { cy: 0.44, cx: 0.41, ry: 0.10, rx: 0.04, angle: 0.25, value: 0.08 },
        Ellipse { cy: 0.44, cx: 0.59, ry: 0.10, rx: 0.04, angle: -0.25, value: 0.08 },
        Ellipse { cy: 0.68, cx: 0.50, ry: 0.05, rx: 0.08, angle: 0.0, value: 0.75 },
        Ellipse { cy: 0.28, cx: 0.46, ry: 0.035, rx: 0.035, angle: 0.0, value: 0.85 },
        Ellipse { cy: 0.58, cx: 0.36, ry: 0.03, rx: 0.05, angle: 0.6, value: 0.7 },
    ];
    let value_at = |y: f64, x: f64| {
        if inside(&brain, y, x) {
            for e in &features {
                if inside(e, y, x) {
                    return e.value;
                }
            }
            // smooth grey-matter shading
            0.45 + 0.12 * (6.0 * x).cos() * (5.0 * y).sin() + 0.1 * (-((x - 0.5).powi(2) + (y - 0.55).powi(2)) / 0.02).exp()
        } else if inside(&head, y, x) {
            head.value
        } else {
            0.02
        }
    };
    // each pixel integrates the continuous scene over its area
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for sr in 0..PHANTOM_SUPERSAMPLE {
                for sc in 0..PHANTOM_SUPERSAMPLE {
                    let y = (r as f64 + (sr as f64 + 0.5) / PHANTOM_SUPERSAMPLE as f64) / rows as f64;
                    let x = (c as f64 + (sc as f64 + 0.5) / PHANTOM_SUPERSAMPLE as f64) / cols as f64;
                    acc += value_at(y, x);
                }
            }
            data.push(acc / (PHANTOM_SUPERSAMPLE * PHANTOM_SUPERSAMPLE) as f64);
        }
    }
    Image::from_vec_unchecked(rows, cols, data)
}
